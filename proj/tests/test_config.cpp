#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "rcm/config.hpp"

using namespace rcm;

namespace {

struct TempConfig {
  std::string path;
  explicit TempConfig(const std::string& text)
      : path("tmp_config_" + std::to_string(counter++) + ".cfg") {
    std::ofstream out(path);
    out << text;
  }
  ~TempConfig() { std::remove(path.c_str()); }
  static int counter;
};

int TempConfig::counter = 0;

}  // namespace

TEST_CASE("an empty config file keeps the documented defaults") {
  TempConfig f("# all defaults\n\n   \n# another comment\n");
  RunConfig cfg = RunConfig::load(f.path);
  CHECK(cfg.n_examples == 2000);
  CHECK(cfg.synth.vocab_size == 200);
  CHECK(cfg.synth.doc_len_min == 150);
  CHECK(cfg.synth.doc_len_max == 300);
  CHECK(cfg.synth.unanswerable_fraction == 0.0);
  CHECK(cfg.d_model == 64);
  CHECK(cfg.n_layers == 2);
  CHECK(cfg.max_seq_len == 48);
  CHECK(cfg.train.peak_lr == 3e-3);
  CHECK(cfg.train.total_steps == 600);
  CHECK(cfg.train.actions == (std::vector<int>{-8, 8, 16, 32, 64}));
  CHECK(cfg.train.recurrence == Recurrence::gated);
  CHECK_FALSE(cfg.action_space_set);
  CHECK(cfg.max_answer_len == 30);
  CHECK(cfg.bucket_width == 16);
}

TEST_CASE("every key lands in its field") {
  TempConfig f(
      "n_examples = 50\n"
      "vocab_size = 100\n"
      "doc_len_min = 80\n"
      "doc_len_max = 120\n"
      "question_len = 4\n"
      "answer_len_min = 1\n"
      "answer_len_max = 3\n"
      "answer_pos_min = 20\n"
      "answer_pos_max = 60\n"
      "distractor_rate = 0.1\n"
      "unanswerable_fraction = 0.25\n"
      "d_model = 32\n"
      "n_layers = 1\n"
      "n_heads = 4\n"
      "d_ff = 64\n"
      "max_seq_len = 32\n"
      "dropout = 0.1\n"
      "peak_lr = 0.001\n"
      "warmup_steps = 5\n"
      "total_steps = 50\n"
      "batch_size = 4\n"
      "segments = 2\n"
      "action_space = -4, 4, 8\n"
      "recurrence = lstm\n"
      "grad_clip = 0.5\n"
      "baseline_stride = 8\n"
      "checkpoint_every = 10\n"
      "question_budget = 8\n"
      "seed = 123\n"
      "max_answer_len = 5\n"
      "bucket_width = 8\n");
  RunConfig cfg = RunConfig::load(f.path);
  CHECK(cfg.n_examples == 50);
  CHECK(cfg.synth.vocab_size == 100);
  CHECK(cfg.synth.doc_len_min == 80);
  CHECK(cfg.synth.doc_len_max == 120);
  CHECK(cfg.synth.question_len == 4);
  CHECK(cfg.synth.answer_len_min == 1);
  CHECK(cfg.synth.answer_len_max == 3);
  CHECK(cfg.synth.answer_pos_min == 20);
  CHECK(cfg.synth.answer_pos_max == 60);
  CHECK(cfg.synth.distractor_rate == 0.1);
  CHECK(cfg.synth.unanswerable_fraction == 0.25);
  CHECK(cfg.d_model == 32);
  CHECK(cfg.n_layers == 1);
  CHECK(cfg.n_heads == 4);
  CHECK(cfg.d_ff == 64);
  CHECK(cfg.max_seq_len == 32);
  CHECK(cfg.dropout == 0.1);
  CHECK(cfg.train.peak_lr == 0.001);
  CHECK(cfg.train.warmup_steps == 5);
  CHECK(cfg.train.total_steps == 50);
  CHECK(cfg.train.batch_size == 4);
  CHECK(cfg.train.segments == 2);
  CHECK(cfg.train.actions == (std::vector<int>{-4, 4, 8}));
  CHECK(cfg.action_space_set);
  CHECK(cfg.train.recurrence == Recurrence::lstm);
  CHECK(cfg.train.grad_clip == 0.5);
  CHECK(cfg.train.baseline_stride == 8);
  CHECK(cfg.train.checkpoint_every == 10);
  CHECK(cfg.train.question_budget == 8);
  CHECK(cfg.train.seed == 123);
  CHECK(cfg.max_answer_len == 5);
  CHECK(cfg.bucket_width == 8);

  EncoderConfig enc = cfg.encoder_config();
  CHECK(enc.vocab_size == 100 + kNumSpecials);
  CHECK(enc.d_model == 32);
  CHECK(enc.max_seq_len == 32);
  CHECK(enc.dropout == 0.1);
}

TEST_CASE("whitespace around keys and values is ignored") {
  TempConfig f("  d_model\t=  32  \nn_heads = 4\r\n");
  RunConfig cfg = RunConfig::load(f.path);
  CHECK(cfg.d_model == 32);
  CHECK(cfg.n_heads == 4);
}

TEST_CASE("unknown keys report the line number") {
  TempConfig f("d_model = 32\nn_headz = 4\n");
  CHECK_THROWS_WITH_AS(RunConfig::load(f.path), doctest::Contains("line 2"),
                       std::invalid_argument);
  TempConfig g("\n\nn_headz = 4\n");
  CHECK_THROWS_WITH_AS(RunConfig::load(g.path),
                       doctest::Contains("unknown key 'n_headz'"),
                       std::invalid_argument);
}

TEST_CASE("typed parse errors name the key and the value") {
  CHECK_THROWS_WITH_AS(RunConfig::load(TempConfig("d_model = abc\n").path),
                       doctest::Contains("key 'd_model' needs an integer, got 'abc'"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(RunConfig::load(TempConfig("peak_lr = 1.2.3\n").path),
                       doctest::Contains("needs a number"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(RunConfig::load(TempConfig("seed = x\n").path),
                       doctest::Contains("non-negative integer"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(RunConfig::load(TempConfig("action_space = ,\n").path),
                       doctest::Contains("comma-separated list"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(RunConfig::load(TempConfig("recurrence = gru\n").path),
                       doctest::Contains("gru"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(RunConfig::load(TempConfig("d_model 32\n").path),
                       doctest::Contains("expected 'key = value'"),
                       std::invalid_argument);
}

TEST_CASE("loading validates the combined configuration") {
  CHECK_THROWS_WITH_AS(
      RunConfig::load(TempConfig("d_model = 30\nn_heads = 4\n").path),
      doctest::Contains("not divisible"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(RunConfig::load(TempConfig("max_seq_len = 16\n").path),
                       doctest::Contains("question_budget + 4"),
                       std::invalid_argument);
  CHECK_THROWS_WITH_AS(RunConfig::load(TempConfig("doc_len_min = 400\n").path),
                       doctest::Contains("doc length"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      RunConfig::load(TempConfig("unanswerable_fraction = 1.5\n").path),
      doctest::Contains("unanswerable_fraction"), std::invalid_argument);
}

TEST_CASE("a missing config file is reported by path") {
  CHECK_THROWS_WITH_AS(RunConfig::load("no_such_file.cfg"),
                       doctest::Contains("no_such_file.cfg"), std::runtime_error);
}
