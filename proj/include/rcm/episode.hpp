#pragma once

#include <cstdint>
#include <vector>

#include "rcm/data.hpp"
#include "rcm/encoder.hpp"
#include "rcm/tensor.hpp"

namespace rcm {

struct SegmentState {
  SegmentInput input;
  Tensor v;        // encoder CLS representation
  Tensor v_tilde;  // enriched representation
  Tensor q;        // {1} containment probability
  Tensor start_probs, end_probs;  // {input len}, masked to legal span positions
  int y = 0;
  int gold_start = -1;  // ids coordinates when y == 1
  int gold_end = -1;
  int action = 0;          // stride applied after this segment
  int action_index = -1;   // -1 on the last segment
  Tensor action_prob;      // {1}; graph-connected in train mode
  double reward = 0.0;     // r_c, a constant for the policy gradient
};

struct Episode {
  std::vector<SegmentState> segments;
  std::vector<double> acc_rewards;  // R_c, train mode only
  std::uint64_t example_id = 0;
  bool answerable = true;
};

// clamp(doc_start + action, 0, max(0, doc_len - window_len)).
int apply_action(int doc_start, int action, int window_len, int doc_len);

struct GoldLocal {
  int y = 0;
  int start = -1;  // ids coordinates
  int end = -1;
};

// y=1 iff the full span lies inside the window; unanswerable examples target
// the UNK position in every segment.
GoldLocal localize_gold(const QAExample& ex, const SegmentInput& input);

// r_c = start_probs[i*] * end_probs[j*] when y=1, else 0; plain double.
double segment_reward(const SegmentState& s);

}  // namespace rcm
