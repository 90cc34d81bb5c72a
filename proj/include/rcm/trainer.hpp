#pragma once

#include <string>
#include <vector>

#include "rcm/checkpoint.hpp"
#include "rcm/model.hpp"
#include "rcm/rollout.hpp"

namespace rcm {

struct TrainConfig {
  double peak_lr = 3e-3;
  int warmup_steps = 60;
  int total_steps = 600;
  int batch_size = 8;
  int segments = 3;  // C
  std::vector<int> actions = {-8, 8, 16, 32, 64};
  Recurrence recurrence = Recurrence::gated;
  std::uint64_t seed = 7;
  double grad_clip = 1.0;
  int baseline_stride = 16;
  int checkpoint_every = 100;
  int question_budget = 16;

  void validate() const;
};

// Linear warmup to peak at warmup_steps, then linear decay to 0 at
// total_steps; step is 1-based.
double lr_schedule(int step, double peak, int warmup, int total);

class Adam {
 public:
  explicit Adam(std::vector<std::pair<std::string, Tensor>> params,
                double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void zero_grad();
  // Scales gradients to the global-norm clip, then applies one bias-corrected
  // update at the given learning rate.
  void step(double lr, double clip);
  int steps_taken() const { return t_; }

  void save(Checkpoint& into) const;
  void load(const Checkpoint& from);

 private:
  std::vector<std::pair<std::string, Tensor>> params_;
  std::vector<std::vector<double>> m_, v_;
  double beta1_, beta2_, eps_;
  int t_ = 0;
};

// L_cp = -sum log pi(a|s) * R(s,a); R comes from acc_rewards as a constant.
Tensor policy_loss(const std::vector<Episode>& episodes);

struct LossBreakdown {
  Tensor total, ans, cs, cp;
  double mean_reward = 0.0;
  int skipped_answerable = 0;
};

// Per-mode loss assembly; throws naming the term on non-finite values.
LossBreakdown compute_losses(const std::vector<Episode>& episodes, ModelMode mode);

// Runs steps start_step+1..total_steps, appending one metrics row per step to
// <out_dir>/metrics.csv and checkpointing periodically. Deterministic in
// (cfg.seed, start_step): resuming reproduces the uninterrupted run.
void train(ModelParams& model, Adam& adam, const std::vector<QAExample>& data,
           const TrainConfig& cfg, const std::string& out_dir, int start_step = 0);

}  // namespace rcm
