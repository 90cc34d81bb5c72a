#include "rcm/episode.hpp"

#include <algorithm>
#include <stdexcept>

namespace rcm {

int apply_action(int doc_start, int action, int window_len, int doc_len) {
  if (window_len < 1 || doc_len < 1)
    throw std::invalid_argument("apply_action: window_len and doc_len must be positive");
  int hi = std::max(0, doc_len - window_len);
  return std::clamp(doc_start + action, 0, hi);
}

GoldLocal localize_gold(const QAExample& ex, const SegmentInput& input) {
  GoldLocal g;
  if (!ex.answerable) {
    g.y = 1;
    g.start = g.end = input.unk_index;
    return g;
  }
  if (ex.answer_start < 0 || ex.answer_end < ex.answer_start ||
      ex.answer_end >= static_cast<int>(ex.doc.size()))
    throw std::invalid_argument("localize_gold: invalid gold span");
  int lo = input.doc_start;
  int hi = input.doc_start + input.window_len;  // exclusive
  if (ex.answer_start >= lo && ex.answer_end < hi) {
    g.y = 1;
    g.start = input.window_begin + (ex.answer_start - lo);
    g.end = input.window_begin + (ex.answer_end - lo);
  }
  return g;
}

double segment_reward(const SegmentState& s) {
  if (s.y == 0) return 0.0;
  if (s.gold_start < 0 || s.gold_end < 0)
    throw std::logic_error("segment_reward: labeled segment without local gold");
  return s.start_probs.data()[s.gold_start] * s.end_probs.data()[s.gold_end];
}

}  // namespace rcm
