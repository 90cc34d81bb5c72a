#include "rcm/answer.hpp"

#include <deque>
#include <stdexcept>

#include "rcm/encoder.hpp"

namespace rcm {

HeadParams init_heads(int d_model, std::mt19937_64& rng) {
  std::size_t d = static_cast<std::size_t>(d_model);
  return {xavier({d}, rng), xavier({d}, rng)};
}

std::pair<Tensor, Tensor> span_distributions(const Tensor& h,
                                             const SegmentInput& input,
                                             const HeadParams& p) {
  if (h.rank() != 2 || h.shape()[0] != input.ids.size())
    throw std::invalid_argument("span_distributions: representation shape " +
                                shape_to_string(h.shape()) + " vs input length " +
                                std::to_string(input.ids.size()));
  Tensor l_start = matvec(h, p.w_s);
  Tensor l_end = matvec(h, p.w_e);
  return {masked_softmax(l_start, input.span_mask),
          masked_softmax(l_end, input.span_mask)};
}

Tensor answer_loss(const std::vector<Episode>& episodes, int* skipped) {
  Tensor loss;
  for (const Episode& ep : episodes) {
    bool labeled = false;
    for (const SegmentState& s : ep.segments) {
      if (s.y != 1) continue;
      labeled = true;
      if (s.gold_start < 0 || s.gold_end < 0)
        throw std::logic_error("answer_loss: labeled segment without local gold");
      Tensor term = add(cross_entropy_pick(s.start_probs, s.gold_start),
                        cross_entropy_pick(s.end_probs, s.gold_end));
      loss = loss.defined() ? add(loss, term) : term;
    }
    if (!labeled && ep.answerable && skipped) ++*skipped;
  }
  return loss.defined() ? loss : constant(0.0);
}

Tensor scorer_loss(const std::vector<Episode>& episodes) {
  Tensor loss;
  for (const Episode& ep : episodes)
    for (const SegmentState& s : ep.segments) {
      // -log q for y=1, -log(1-q) for y=0
      Tensor prob = s.y == 1 ? s.q : affine(s.q, -1.0, 1.0);
      Tensor term = affine(log_op(prob), -1.0, 0.0);
      loss = loss.defined() ? add(loss, term) : term;
    }
  return loss.defined() ? loss : constant(0.0);
}

namespace {

AnswerPrediction decode(const Episode& ep, int max_answer_len, bool use_q) {
  if (ep.segments.empty())
    throw std::invalid_argument("decode: episode has no segments");
  if (max_answer_len < 1)
    throw std::invalid_argument("decode: max_answer_len must be positive");
  AnswerPrediction best;
  bool have = false;
  auto better = [&](double score, int c, int i, int j) {
    if (!have || score > best.score) return true;
    if (score < best.score) return false;
    if (c != best.segment) return c < best.segment;
    if (i != best.start) return i < best.start;
    return j < best.end;
  };
  for (std::size_t c = 0; c < ep.segments.size(); ++c) {
    const SegmentState& s = ep.segments[c];
    const auto& ps = s.start_probs.data();
    const auto& pe = s.end_probs.data();
    double qv = use_q ? s.q.value() : 1.0;
    int w0 = s.input.window_begin;
    int w1 = w0 + s.input.window_len;  // exclusive
    // Sliding-window max over start probabilities; equal values keep the
    // earlier index so ties resolve to the smaller start.
    std::deque<int> dq;
    for (int j = w0; j < w1; ++j) {
      while (!dq.empty() && ps[dq.back()] < ps[j]) dq.pop_back();
      dq.push_back(j);
      while (dq.front() < j - max_answer_len + 1) dq.pop_front();
      int i = dq.front();
      double score = ps[i] * pe[j] * qv;
      if (better(score, static_cast<int>(c), i, j)) {
        best = {static_cast<int>(c), i, j, s.input.doc_pos[i], s.input.doc_pos[j],
                score, false};
        have = true;
      }
    }
    int u = s.input.unk_index;
    double uscore = ps[u] * pe[u] * qv;
    if (better(uscore, static_cast<int>(c), u, u)) {
      best = {static_cast<int>(c), u, u, -1, -1, uscore, true};
      have = true;
    }
  }
  return best;
}

}  // namespace

AnswerPrediction decode_best_span(const Episode& ep, int max_answer_len) {
  return decode(ep, max_answer_len, true);
}

AnswerPrediction decode_maxpool(const Episode& ep, int max_answer_len) {
  return decode(ep, max_answer_len, false);
}

}  // namespace rcm
