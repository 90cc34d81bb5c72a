#include "rcm/rollout.hpp"

#include <stdexcept>

#include "rcm/rng.hpp"

namespace rcm {

namespace {

// Encode one window and fill everything that does not depend on the policy.
SegmentState encode_segment(const ModelParams& m, const QAExample& ex,
                            int question_budget, int doc_start,
                            std::mt19937_64* dropout_rng) {
  SegmentState s;
  s.input = build_input(ex, doc_start, m.enc_cfg.max_seq_len, question_budget);
  EncodeResult enc = encode(s.input, m.encoder, m.enc_cfg, dropout_rng);
  s.v = enc.v;
  auto dists = span_distributions(enc.h, s.input, m.heads);
  s.start_probs = dists.first;
  s.end_probs = dists.second;
  GoldLocal gold = localize_gold(ex, s.input);
  s.y = gold.y;
  s.gold_start = gold.start;
  s.gold_end = gold.end;
  return s;
}

}  // namespace

SegmentState make_segment(const ModelParams& m, const QAExample& ex,
                          int question_budget, int doc_start,
                          std::mt19937_64* dropout_rng) {
  SegmentState s = encode_segment(m, ex, question_budget, doc_start, dropout_rng);
  s.v_tilde = s.v;
  s.q = chunk_score(s.v_tilde, m.scorer);
  return s;
}

Episode rollout(const ModelParams& m, const QAExample& ex, const RolloutOptions& opt) {
  if (opt.max_segments < 1)
    throw std::invalid_argument("rollout: max_segments must be positive");
  if (!mode_uses_policy(m.mode) && opt.fixed_stride <= 0 && opt.max_segments > 1)
    throw std::invalid_argument("rollout: mode " + to_string(m.mode) +
                                " needs a fixed stride");
  int doc_len = static_cast<int>(ex.doc.size());
  int qlen = static_cast<int>(ex.question.size());
  int cap = window_capacity(m.enc_cfg.max_seq_len, qlen, opt.question_budget);
  int n_segments = doc_len <= cap ? 1 : opt.max_segments;

  auto rng = make_rng(mix64(opt.rng_seed, 0x5e9ULL));
  std::mt19937_64* dropout_rng =
      opt.train && m.enc_cfg.dropout > 0.0 ? &rng : nullptr;

  Episode ep;
  ep.example_id = ex.id;
  ep.answerable = ex.answerable;
  int d = m.enc_cfg.d_model;
  Tensor v_prev = zeros({static_cast<std::size_t>(d)});
  LstmState lstm_state{zeros({static_cast<std::size_t>(d)}),
                       zeros({static_cast<std::size_t>(d)})};
  int doc_start = 0;
  for (int c = 0; c < n_segments; ++c) {
    SegmentState s = encode_segment(m, ex, opt.question_budget, doc_start, dropout_rng);
    if (m.recurrence == Recurrence::lstm) {
      lstm_state = recur_lstm(s.v, lstm_state, m.lstm);
      s.v_tilde = lstm_state.h;
    } else {
      s.v_tilde = recur_gated(s.v, v_prev, m.gated);
      v_prev = s.v_tilde;
    }
    s.q = chunk_score(s.v_tilde, m.scorer);
    if (opt.train) s.reward = segment_reward(s);

    if (c + 1 < n_segments) {
      if (opt.fixed_stride > 0) {
        s.action = opt.fixed_stride;
      } else {
        Tensor dist = policy_dist(s.v_tilde, m.policy);
        std::size_t idx = choose_action(
            dist.data(), opt.train ? ActionMode::sample : ActionMode::argmax, rng);
        s.action_index = static_cast<int>(idx);
        s.action = m.policy.actions[idx];
        s.action_prob = pick(dist, idx);
      }
      doc_start = apply_action(doc_start, s.action, cap, doc_len);
    }
    ep.segments.push_back(std::move(s));
  }
  if (opt.train) {
    std::vector<double> q(ep.segments.size()), r(ep.segments.size());
    for (std::size_t i = 0; i < ep.segments.size(); ++i) {
      q[i] = ep.segments[i].q.value();
      r[i] = ep.segments[i].reward;
    }
    ep.acc_rewards = accumulated_rewards(q, r);
  }
  return ep;
}

std::vector<int> scan_starts(int doc_len, int window_cap, int stride, int max_segments) {
  if (stride < 1) throw std::invalid_argument("scan_starts: stride must be positive");
  if (doc_len < 1 || window_cap < 1)
    throw std::invalid_argument("scan_starts: empty document or window");
  std::vector<int> starts;
  for (int p = 0;; p += stride) {
    // A stride wider than the window can step past the end of a short document.
    if (p >= doc_len) break;
    starts.push_back(p);
    if (p + window_cap >= doc_len) break;
    if (max_segments > 0 && static_cast<int>(starts.size()) >= max_segments) break;
  }
  return starts;
}

Episode baseline_scan(const ModelParams& m, const QAExample& ex, int question_budget,
                      int stride, int max_segments) {
  int doc_len = static_cast<int>(ex.doc.size());
  int qlen = static_cast<int>(ex.question.size());
  int cap = window_capacity(m.enc_cfg.max_seq_len, qlen, question_budget);
  Episode ep;
  ep.example_id = ex.id;
  ep.answerable = ex.answerable;
  for (int p : scan_starts(doc_len, cap, stride, max_segments))
    ep.segments.push_back(make_segment(m, ex, question_budget, p));
  return ep;
}

}  // namespace rcm
