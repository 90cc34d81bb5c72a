#pragma once

#include <random>
#include <vector>

#include "rcm/tensor.hpp"

namespace rcm {

enum class Recurrence { gated, lstm };

Recurrence recurrence_from_string(const std::string& name);
std::string to_string(Recurrence r);

// Gated mode blends v_c with the previous enriched state using a two-way
// softmax over two scalar logits.
struct GatedParams {
  Tensor alpha_w;  // {2*d_model}
  Tensor beta_w;   // {2*d_model}
};

struct LstmParams {
  Tensor wi, bi;  // {d_model, 2*d_model}, {d_model}
  Tensor wf, bf;
  Tensor wo, bo;
  Tensor wg, bg;
};

struct ScorerParams {
  Tensor weight;  // {1, d_model}
  Tensor bias;    // {1}
};

struct PolicyParams {
  Tensor weight;             // {|A|, d_model}
  Tensor bias;               // {|A|}
  std::vector<int> actions;  // signed strides, ordered

  void validate() const;
};

GatedParams init_gated(int d_model, std::mt19937_64& rng);
LstmParams init_lstm(int d_model, std::mt19937_64& rng);
ScorerParams init_scorer(int d_model, std::mt19937_64& rng);
PolicyParams init_policy(int d_model, std::vector<int> actions, std::mt19937_64& rng);

Tensor recur_gated(const Tensor& v, const Tensor& v_prev, const GatedParams& p);

struct LstmState {
  Tensor h;  // doubles as the enriched representation
  Tensor c;
};
LstmState recur_lstm(const Tensor& v, const LstmState& prev, const LstmParams& p);

// q_c = sigmoid(W ṽ + b), shape {1}.
Tensor chunk_score(const Tensor& v_tilde, const ScorerParams& p);

// softmax(W ṽ + b) over the action space, shape {|A|}.
Tensor policy_dist(const Tensor& v_tilde, const PolicyParams& p);

enum class ActionMode { sample, argmax };

// Returns the chosen action-space index; argmax ties break to the smallest
// index.
std::size_t choose_action(const std::vector<double>& dist, ActionMode mode,
                          std::mt19937_64& rng);

// R_C = q_C r_C; R_c = q_c r_c + (1-q_c) R_{c+1}. Plain doubles: rewards are
// constants for the policy gradient.
std::vector<double> accumulated_rewards(const std::vector<double>& q,
                                        const std::vector<double>& r);

}  // namespace rcm
