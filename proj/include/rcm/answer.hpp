#pragma once

#include <random>
#include <utility>
#include <vector>

#include "rcm/episode.hpp"
#include "rcm/tensor.hpp"

namespace rcm {

struct HeadParams {
  Tensor w_s;  // {d_model}
  Tensor w_e;
};

HeadParams init_heads(int d_model, std::mt19937_64& rng);

// Per-token start/end distributions over window positions plus UNK; specials
// and question positions carry exactly zero probability.
std::pair<Tensor, Tensor> span_distributions(const Tensor& h,
                                             const SegmentInput& input,
                                             const HeadParams& p);

// Sum of start/end cross-entropies over y=1 segments. Episodes that are
// answerable but hit no labeled segment contribute zero and bump *skipped.
Tensor answer_loss(const std::vector<Episode>& episodes, int* skipped = nullptr);

// Binary cross-entropy of q against y over all segments.
Tensor scorer_loss(const std::vector<Episode>& episodes);

struct AnswerPrediction {
  int segment = 0;
  int start = 0;  // ids coordinates
  int end = 0;
  int doc_start = -1;  // document coordinates; -1 when unanswerable
  int doc_end = -1;
  double score = 0.0;
  bool unanswerable = false;
};

// argmax over start_probs[i] * end_probs[j] * q_c with i <= j < i +
// max_answer_len, plus UNK as a unit span; ties break to (earlier segment,
// smaller start, smaller end).
AnswerPrediction decode_best_span(const Episode& ep, int max_answer_len);

// Baseline ensemble: same search without the q_c factor.
AnswerPrediction decode_maxpool(const Episode& ep, int max_answer_len);

}  // namespace rcm
