#pragma once

#include <cstdint>
#include <vector>

#include "rcm/episode.hpp"
#include "rcm/model.hpp"

namespace rcm {

struct RolloutOptions {
  int max_segments = 3;       // C
  bool train = false;         // sample actions, compute rewards, keep graphs
  std::uint64_t rng_seed = 0; // all episode randomness derives from this
  int fixed_stride = 0;       // > 0 bypasses the policy (no-RL ablation)
  int question_budget = 16;
};

// One adaptive read: C segments (1 if the document fits one window); actions
// sampled in train mode, argmax otherwise.
Episode rollout(const ModelParams& m, const QAExample& ex, const RolloutOptions& opt);

// Fixed-stride left-to-right scan covering the whole document (baseline eval
// and hit-rate accounting).
Episode baseline_scan(const ModelParams& m, const QAExample& ex, int question_budget,
                      int stride, int max_segments = 0);

// One window as a standalone segment (baseline training pairs).
SegmentState make_segment(const ModelParams& m, const QAExample& ex,
                          int question_budget, int doc_start,
                          std::mt19937_64* dropout_rng = nullptr);

// Scan starts for the baseline: 0, stride, 2*stride, ... until a window
// reaches the document end.
std::vector<int> scan_starts(int doc_len, int window_cap, int stride, int max_segments = 0);

}  // namespace rcm
