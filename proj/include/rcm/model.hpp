#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rcm/answer.hpp"
#include "rcm/chunking.hpp"
#include "rcm/encoder.hpp"

namespace rcm {

enum class ModelMode { rcm_gated, rcm_lstm, rcm_no_rl, baseline };

ModelMode mode_from_string(const std::string& name);
std::string to_string(ModelMode m);
bool mode_uses_policy(ModelMode m);
bool mode_uses_recurrence(ModelMode m);

// All parameter groups exist in every mode so checkpoints stay uniform;
// modes differ only in which parts the rollout and losses touch.
struct ModelParams {
  EncoderConfig enc_cfg;
  ModelMode mode = ModelMode::rcm_gated;
  Recurrence recurrence = Recurrence::gated;
  EncoderParams encoder;
  HeadParams heads;
  ScorerParams scorer;
  PolicyParams policy;
  GatedParams gated;
  LstmParams lstm;

  // Fixed, documented ordering; checkpoint tensors and Adam state follow it.
  std::vector<std::pair<std::string, Tensor>> named_params() const;
};

ModelParams init_model(const EncoderConfig& cfg, ModelMode mode, Recurrence rec,
                       std::vector<int> actions, std::uint64_t seed);

// Checkpoint round-trip; extra_meta rides along (step count, etc).
void save_model(const std::string& path, const ModelParams& m,
                const std::vector<std::pair<std::string, std::string>>& extra_meta = {});
struct LoadedModel {
  ModelParams model;
  std::vector<std::pair<std::string, std::string>> meta;
};
LoadedModel load_model(const std::string& path);

}  // namespace rcm
