#include "rcm/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "rcm/rng.hpp"

namespace rcm {

void TrainConfig::validate() const {
  if (!(peak_lr > 0.0)) throw std::invalid_argument("train: peak_lr must be positive");
  if (warmup_steps < 0 || total_steps < 1 || warmup_steps > total_steps)
    throw std::invalid_argument("train: need 0 <= warmup_steps <= total_steps");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be positive");
  if (segments < 1) throw std::invalid_argument("train: segments must be positive");
  if (grad_clip < 0.0) throw std::invalid_argument("train: grad_clip must be >= 0");
  if (baseline_stride < 1)
    throw std::invalid_argument("train: baseline_stride must be positive");
  if (checkpoint_every < 1)
    throw std::invalid_argument("train: checkpoint_every must be positive");
  if (question_budget < 1)
    throw std::invalid_argument("train: question_budget must be positive");
}

double lr_schedule(int step, double peak, int warmup, int total) {
  if (step < 1) throw std::invalid_argument("lr_schedule: step must be >= 1");
  if (warmup > 0 && step <= warmup)
    return peak * static_cast<double>(step) / static_cast<double>(warmup);
  if (total <= warmup) return peak;
  double rest = static_cast<double>(total - step) / static_cast<double>(total - warmup);
  return peak * std::max(0.0, rest);
}

Adam::Adam(std::vector<std::pair<std::string, Tensor>> params, double beta1,
           double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (const auto& [name, p] : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

void Adam::step(double lr, double clip) {
  ++t_;
  double sq = 0.0;
  for (auto& [name, p] : params_)
    for (double g : p.grad()) sq += g * g;
  double norm = std::sqrt(sq);
  double scale = (clip > 0.0 && norm > clip) ? clip / norm : 1.0;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& data = params_[i].second.data();
    const auto& grad = params_[i].second.grad();
    for (std::size_t j = 0; j < data.size(); ++j) {
      double g = grad[j] * scale;
      m_[i][j] = beta1_ * m_[i][j] + (1.0 - beta1_) * g;
      v_[i][j] = beta2_ * v_[i][j] + (1.0 - beta2_) * g * g;
      double mhat = m_[i][j] / bc1;
      double vhat = v_[i][j] / bc2;
      data[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

void Adam::save(Checkpoint& into) const {
  into.meta.emplace_back("adam_step", std::to_string(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Shape& s = params_[i].second.shape();
    into.tensors.emplace_back("adam_m." + params_[i].first, from_data(s, m_[i]));
    into.tensors.emplace_back("adam_v." + params_[i].first, from_data(s, v_[i]));
  }
}

void Adam::load(const Checkpoint& from) {
  t_ = static_cast<int>(from.meta_int("adam_step"));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    bool found_m = false, found_v = false;
    for (const auto& [name, t] : from.tensors) {
      if (name == "adam_m." + params_[i].first) {
        if (t.numel() != m_[i].size())
          throw std::runtime_error("optimizer: size mismatch for " + name);
        m_[i] = t.data();
        found_m = true;
      } else if (name == "adam_v." + params_[i].first) {
        if (t.numel() != v_[i].size())
          throw std::runtime_error("optimizer: size mismatch for " + name);
        v_[i] = t.data();
        found_v = true;
      }
    }
    if (!found_m || !found_v)
      throw std::runtime_error("optimizer: missing state for " + params_[i].first);
  }
}

Tensor policy_loss(const std::vector<Episode>& episodes) {
  Tensor loss;
  for (const Episode& ep : episodes) {
    for (std::size_t c = 0; c < ep.segments.size(); ++c) {
      const SegmentState& s = ep.segments[c];
      if (s.action_index < 0 || !s.action_prob.defined()) continue;
      if (c >= ep.acc_rewards.size())
        throw std::logic_error("policy_loss: episode missing accumulated rewards");
      Tensor term = affine(log_op(s.action_prob), -ep.acc_rewards[c], 0.0);
      loss = loss.defined() ? add(loss, term) : term;
    }
  }
  return loss.defined() ? loss : constant(0.0);
}

LossBreakdown compute_losses(const std::vector<Episode>& episodes, ModelMode mode) {
  LossBreakdown out;
  out.ans = answer_loss(episodes, &out.skipped_answerable);
  out.cs = mode == ModelMode::baseline ? constant(0.0) : scorer_loss(episodes);
  out.cp = mode_uses_policy(mode) ? policy_loss(episodes) : constant(0.0);
  double r = 0.0;
  std::size_t n = 0;
  for (const Episode& ep : episodes)
    if (!ep.acc_rewards.empty()) {
      r += ep.acc_rewards[0];
      ++n;
    }
  out.mean_reward = n ? r / static_cast<double>(n) : 0.0;
  auto check = [](const Tensor& t, const char* name) {
    if (!std::isfinite(t.value()))
      throw std::runtime_error(std::string("train: non-finite ") + name);
  };
  check(out.ans, "L_ans");
  check(out.cs, "L_cs");
  check(out.cp, "L_cp");
  out.total = add(add(out.ans, out.cs), out.cp);
  return out;
}

namespace {

std::vector<std::size_t> epoch_permutation(std::size_t n, std::uint64_t seed,
                                           std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto rng = make_rng(mix64(seed, 0xE90C4ULL, epoch));
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[uniform_int(rng, 0, static_cast<std::int64_t>(i) - 1)]);
  return order;
}

std::string format_row(int step, double lr, const LossBreakdown& l) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g,%.10g,%.10g", step, lr,
                l.ans.value(), l.cs.value(), l.cp.value(), l.mean_reward);
  return buf;
}

void save_train_state(const ModelParams& model, const Adam& adam,
                      const TrainConfig& cfg, const std::string& out_dir, int step) {
  // Rollout knobs ride along so evaluation can replay the training geometry.
  save_model(out_dir + "/checkpoint.bin", model,
             {{"step", std::to_string(step)},
              {"segments", std::to_string(cfg.segments)},
              {"baseline_stride", std::to_string(cfg.baseline_stride)},
              {"question_budget", std::to_string(cfg.question_budget)}});
  Checkpoint opt;
  adam.save(opt);
  save_checkpoint(out_dir + "/optimizer.bin", opt);
}

}  // namespace

void train(ModelParams& model, Adam& adam, const std::vector<QAExample>& data,
           const TrainConfig& cfg, const std::string& out_dir, int start_step) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");

  // Baseline training streams (example, window) pairs labeled y=1; the other
  // modes stream whole episodes.
  std::vector<std::pair<std::size_t, int>> baseline_pairs;
  if (model.mode == ModelMode::baseline) {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const QAExample& ex = data[i];
      int cap = window_capacity(model.enc_cfg.max_seq_len,
                                static_cast<int>(ex.question.size()),
                                cfg.question_budget);
      for (int p : scan_starts(static_cast<int>(ex.doc.size()), cap,
                               cfg.baseline_stride)) {
        SegmentInput in = build_input(ex, p, model.enc_cfg.max_seq_len,
                                      cfg.question_budget);
        if (localize_gold(ex, in).y == 1) baseline_pairs.emplace_back(i, p);
      }
    }
    if (baseline_pairs.empty())
      throw std::runtime_error("train: no answer-bearing windows for the baseline");
  }
  std::size_t stream_size =
      model.mode == ModelMode::baseline ? baseline_pairs.size() : data.size();

  std::ofstream metrics(out_dir + "/metrics.csv",
                        start_step > 0 ? std::ios::app : std::ios::out);
  if (!metrics) throw std::runtime_error("train: cannot write metrics.csv in " + out_dir);
  if (start_step == 0) metrics << "step,lr,L_ans,L_cs,L_cp,mean_R\n";

  std::vector<std::size_t> order;
  std::uint64_t order_epoch = ~0ULL;
  int warned_skipped = 0;
  for (int step = start_step + 1; step <= cfg.total_steps; ++step) {
    std::vector<Episode> episodes;
    episodes.reserve(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      std::uint64_t cursor =
          (static_cast<std::uint64_t>(step - 1) * cfg.batch_size + b);
      std::uint64_t epoch = cursor / stream_size;
      if (epoch != order_epoch) {
        order = epoch_permutation(stream_size, cfg.seed, epoch);
        order_epoch = epoch;
      }
      std::size_t pos = order[cursor % stream_size];
      if (model.mode == ModelMode::baseline) {
        auto [ex_idx, doc_start] = baseline_pairs[pos];
        Episode ep;
        ep.example_id = data[ex_idx].id;
        ep.answerable = data[ex_idx].answerable;
        ep.segments.push_back(
            make_segment(model, data[ex_idx], cfg.question_budget, doc_start));
        episodes.push_back(std::move(ep));
      } else {
        const QAExample& ex = data[pos];
        RolloutOptions opt;
        opt.max_segments = cfg.segments;
        opt.train = true;
        opt.rng_seed = mix64(cfg.seed, static_cast<std::uint64_t>(step), ex.id);
        opt.question_budget = cfg.question_budget;
        if (model.mode == ModelMode::rcm_no_rl) opt.fixed_stride = cfg.baseline_stride;
        episodes.push_back(rollout(model, ex, opt));
      }
    }
    LossBreakdown losses = compute_losses(episodes, model.mode);
    if (losses.skipped_answerable > 0 && warned_skipped < 5) {
      std::cerr << "train: step " << step << ": " << losses.skipped_answerable
                << " answerable episode(s) hit no labeled segment\n";
      ++warned_skipped;
    }
    adam.zero_grad();
    backward(losses.total);
    double lr = lr_schedule(step, cfg.peak_lr, cfg.warmup_steps, cfg.total_steps);
    adam.step(lr, cfg.grad_clip);
    metrics << format_row(step, lr, losses) << '\n';
    if (step % cfg.checkpoint_every == 0 && step < cfg.total_steps)
      save_train_state(model, adam, cfg, out_dir, step);
  }
  metrics.flush();
  save_train_state(model, adam, cfg, out_dir, cfg.total_steps);
}

}  // namespace rcm
