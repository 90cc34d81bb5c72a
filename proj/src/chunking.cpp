#include "rcm/chunking.hpp"

#include <algorithm>
#include <stdexcept>

#include "rcm/encoder.hpp"
#include "rcm/rng.hpp"

namespace rcm {

Recurrence recurrence_from_string(const std::string& name) {
  if (name == "gated") return Recurrence::gated;
  if (name == "lstm") return Recurrence::lstm;
  throw std::invalid_argument("recurrence: unknown mode '" + name +
                              "' (expected gated or lstm)");
}

std::string to_string(Recurrence r) {
  return r == Recurrence::gated ? "gated" : "lstm";
}

void PolicyParams::validate() const {
  if (actions.size() < 2)
    throw std::invalid_argument("policy: need at least 2 actions");
  bool any_positive = false;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i] > 0) any_positive = true;
    for (std::size_t j = i + 1; j < actions.size(); ++j)
      if (actions[i] == actions[j])
        throw std::invalid_argument("policy: duplicate stride " +
                                    std::to_string(actions[i]));
  }
  if (!any_positive)
    throw std::invalid_argument("policy: need at least one positive stride");
}

GatedParams init_gated(int d_model, std::mt19937_64& rng) {
  std::size_t d2 = 2 * static_cast<std::size_t>(d_model);
  return {xavier({d2}, rng), xavier({d2}, rng)};
}

LstmParams init_lstm(int d_model, std::mt19937_64& rng) {
  std::size_t d = static_cast<std::size_t>(d_model), d2 = 2 * d;
  auto zero = [&] { return param({d}, std::vector<double>(d, 0.0)); };
  LstmParams p;
  p.wi = xavier({d, d2}, rng);
  p.bi = zero();
  p.wf = xavier({d, d2}, rng);
  p.bf = zero();
  p.wo = xavier({d, d2}, rng);
  p.bo = zero();
  p.wg = xavier({d, d2}, rng);
  p.bg = zero();
  return p;
}

ScorerParams init_scorer(int d_model, std::mt19937_64& rng) {
  return {xavier({1, static_cast<std::size_t>(d_model)}, rng),
          param({1}, {0.0})};
}

PolicyParams init_policy(int d_model, std::vector<int> actions, std::mt19937_64& rng) {
  PolicyParams p;
  p.weight = xavier({actions.size(), static_cast<std::size_t>(d_model)}, rng);
  p.bias = param({actions.size()}, std::vector<double>(actions.size(), 0.0));
  p.actions = std::move(actions);
  p.validate();
  return p;
}

Tensor recur_gated(const Tensor& v, const Tensor& v_prev, const GatedParams& p) {
  if (v.shape() != v_prev.shape())
    throw std::invalid_argument("recur_gated: shape mismatch " +
                                shape_to_string(v.shape()) + " vs " +
                                shape_to_string(v_prev.shape()));
  Tensor cat = concat(v, v_prev);
  Tensor logits = concat(sum(mul(p.alpha_w, cat)), sum(mul(p.beta_w, cat)));
  Tensor ab = softmax_rows(logits);
  return add(smul(pick(ab, 0), v), smul(pick(ab, 1), v_prev));
}

LstmState recur_lstm(const Tensor& v, const LstmState& prev, const LstmParams& p) {
  if (v.shape() != prev.h.shape() || v.shape() != prev.c.shape())
    throw std::invalid_argument("recur_lstm: shape mismatch " +
                                shape_to_string(v.shape()) + " vs " +
                                shape_to_string(prev.h.shape()));
  Tensor x = concat(v, prev.h);
  Tensor i = sigmoid(add(matvec(p.wi, x), p.bi));
  Tensor f = sigmoid(add(matvec(p.wf, x), p.bf));
  Tensor o = sigmoid(add(matvec(p.wo, x), p.bo));
  Tensor g = tanh_op(add(matvec(p.wg, x), p.bg));
  Tensor c = add(mul(f, prev.c), mul(i, g));
  return {mul(o, tanh_op(c)), c};
}

Tensor chunk_score(const Tensor& v_tilde, const ScorerParams& p) {
  return sigmoid(add(matvec(p.weight, v_tilde), p.bias));
}

Tensor policy_dist(const Tensor& v_tilde, const PolicyParams& p) {
  return softmax_rows(add(matvec(p.weight, v_tilde), p.bias));
}

std::size_t choose_action(const std::vector<double>& dist, ActionMode mode,
                          std::mt19937_64& rng) {
  if (dist.empty()) throw std::invalid_argument("choose_action: empty distribution");
  if (mode == ActionMode::sample) return sample_categorical(rng, dist);
  std::size_t best = 0;
  for (std::size_t i = 1; i < dist.size(); ++i)
    if (dist[i] > dist[best]) best = i;
  return best;
}

std::vector<double> accumulated_rewards(const std::vector<double>& q,
                                        const std::vector<double>& r) {
  if (q.size() != r.size())
    throw std::invalid_argument("accumulated_rewards: length mismatch " +
                                std::to_string(q.size()) + " vs " +
                                std::to_string(r.size()));
  if (q.empty()) throw std::invalid_argument("accumulated_rewards: empty input");
  for (double x : q)
    if (!(x >= 0.0 && x <= 1.0))
      throw std::invalid_argument("accumulated_rewards: q outside [0,1]");
  for (double x : r)
    if (!(x >= 0.0 && x <= 1.0))
      throw std::invalid_argument("accumulated_rewards: r outside [0,1]");
  std::size_t n = q.size();
  std::vector<double> big_r(n);
  big_r[n - 1] = q[n - 1] * r[n - 1];
  for (std::size_t c = n - 1; c-- > 0;)
    big_r[c] = q[c] * r[c] + (1.0 - q[c]) * big_r[c + 1];
  return big_r;
}

}  // namespace rcm
