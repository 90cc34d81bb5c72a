"""Recurrent chunking over long documents: Python surface of the C++ core."""

from rcm._core import (
    accumulated_rewards,
    evaluate,
    gen_data,
    lr_schedule,
    spearman,
    trace,
    train,
    word_f1,
)

__all__ = [
    "accumulated_rewards",
    "evaluate",
    "gen_data",
    "lr_schedule",
    "spearman",
    "trace",
    "train",
    "word_f1",
]
