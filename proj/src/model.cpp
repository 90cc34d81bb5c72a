#include "rcm/model.hpp"

#include <sstream>
#include <stdexcept>

#include "rcm/checkpoint.hpp"
#include "rcm/rng.hpp"

namespace rcm {

ModelMode mode_from_string(const std::string& name) {
  if (name == "rcm-gated") return ModelMode::rcm_gated;
  if (name == "rcm-lstm") return ModelMode::rcm_lstm;
  if (name == "rcm-no-rl") return ModelMode::rcm_no_rl;
  if (name == "baseline") return ModelMode::baseline;
  throw std::invalid_argument("mode: unknown mode '" + name +
                              "' (expected rcm-gated, rcm-lstm, rcm-no-rl, baseline)");
}

std::string to_string(ModelMode m) {
  switch (m) {
    case ModelMode::rcm_gated: return "rcm-gated";
    case ModelMode::rcm_lstm: return "rcm-lstm";
    case ModelMode::rcm_no_rl: return "rcm-no-rl";
    case ModelMode::baseline: return "baseline";
  }
  throw std::logic_error("mode: invalid enum value");
}

bool mode_uses_policy(ModelMode m) {
  return m == ModelMode::rcm_gated || m == ModelMode::rcm_lstm;
}

bool mode_uses_recurrence(ModelMode m) { return m != ModelMode::baseline; }

std::vector<std::pair<std::string, Tensor>> ModelParams::named_params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("tok_emb", encoder.tok_emb);
  out.emplace_back("pos_emb", encoder.pos_emb);
  for (std::size_t l = 0; l < encoder.blocks.size(); ++l) {
    const BlockParams& b = encoder.blocks[l];
    std::string p = "block" + std::to_string(l) + ".";
    out.emplace_back(p + "ln1_g", b.ln1_g);
    out.emplace_back(p + "ln1_b", b.ln1_b);
    out.emplace_back(p + "wq", b.wq);
    out.emplace_back(p + "bq", b.bq);
    out.emplace_back(p + "wk", b.wk);
    out.emplace_back(p + "bk", b.bk);
    out.emplace_back(p + "wv", b.wv);
    out.emplace_back(p + "bv", b.bv);
    out.emplace_back(p + "wo", b.wo);
    out.emplace_back(p + "bo", b.bo);
    out.emplace_back(p + "ln2_g", b.ln2_g);
    out.emplace_back(p + "ln2_b", b.ln2_b);
    out.emplace_back(p + "w1", b.w1);
    out.emplace_back(p + "b1", b.b1);
    out.emplace_back(p + "w2", b.w2);
    out.emplace_back(p + "b2", b.b2);
  }
  out.emplace_back("lnf_g", encoder.lnf_g);
  out.emplace_back("lnf_b", encoder.lnf_b);
  out.emplace_back("head_start", heads.w_s);
  out.emplace_back("head_end", heads.w_e);
  out.emplace_back("scorer_w", scorer.weight);
  out.emplace_back("scorer_b", scorer.bias);
  out.emplace_back("policy_w", policy.weight);
  out.emplace_back("policy_b", policy.bias);
  out.emplace_back("gated_alpha", gated.alpha_w);
  out.emplace_back("gated_beta", gated.beta_w);
  out.emplace_back("lstm_wi", lstm.wi);
  out.emplace_back("lstm_bi", lstm.bi);
  out.emplace_back("lstm_wf", lstm.wf);
  out.emplace_back("lstm_bf", lstm.bf);
  out.emplace_back("lstm_wo", lstm.wo);
  out.emplace_back("lstm_bo", lstm.bo);
  out.emplace_back("lstm_wg", lstm.wg);
  out.emplace_back("lstm_bg", lstm.bg);
  return out;
}

ModelParams init_model(const EncoderConfig& cfg, ModelMode mode, Recurrence rec,
                       std::vector<int> actions, std::uint64_t seed) {
  cfg.validate();
  auto rng = make_rng(mix64(seed, 0xC0DEULL));
  ModelParams m;
  m.enc_cfg = cfg;
  m.mode = mode;
  m.recurrence = rec;
  m.encoder = init_encoder(cfg, rng);
  m.heads = init_heads(cfg.d_model, rng);
  m.scorer = init_scorer(cfg.d_model, rng);
  m.policy = init_policy(cfg.d_model, std::move(actions), rng);
  m.gated = init_gated(cfg.d_model, rng);
  m.lstm = init_lstm(cfg.d_model, rng);
  return m;
}

namespace {

std::string actions_to_string(const std::vector<int>& actions) {
  std::string s;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(actions[i]);
  }
  return s;
}

std::vector<int> actions_from_string(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoi(item));
  }
  return out;
}

}  // namespace

void save_model(const std::string& path, const ModelParams& m,
                const std::vector<std::pair<std::string, std::string>>& extra_meta) {
  Checkpoint c;
  c.meta.emplace_back("mode", to_string(m.mode));
  c.meta.emplace_back("recurrence", to_string(m.recurrence));
  c.meta.emplace_back("vocab_size", std::to_string(m.enc_cfg.vocab_size));
  c.meta.emplace_back("d_model", std::to_string(m.enc_cfg.d_model));
  c.meta.emplace_back("n_layers", std::to_string(m.enc_cfg.n_layers));
  c.meta.emplace_back("n_heads", std::to_string(m.enc_cfg.n_heads));
  c.meta.emplace_back("d_ff", std::to_string(m.enc_cfg.d_ff));
  c.meta.emplace_back("max_seq_len", std::to_string(m.enc_cfg.max_seq_len));
  c.meta.emplace_back("dropout", std::to_string(m.enc_cfg.dropout));
  c.meta.emplace_back("actions", actions_to_string(m.policy.actions));
  for (const auto& kv : extra_meta) c.meta.push_back(kv);
  c.tensors = m.named_params();
  save_checkpoint(path, c);
}

LoadedModel load_model(const std::string& path) {
  Checkpoint c = load_checkpoint(path);
  EncoderConfig cfg;
  cfg.vocab_size = static_cast<int>(c.meta_int("vocab_size"));
  cfg.d_model = static_cast<int>(c.meta_int("d_model"));
  cfg.n_layers = static_cast<int>(c.meta_int("n_layers"));
  cfg.n_heads = static_cast<int>(c.meta_int("n_heads"));
  cfg.d_ff = static_cast<int>(c.meta_int("d_ff"));
  cfg.max_seq_len = static_cast<int>(c.meta_int("max_seq_len"));
  cfg.dropout = c.meta_double("dropout");
  ModelMode mode = mode_from_string(c.meta_value("mode"));
  Recurrence rec = recurrence_from_string(c.meta_value("recurrence"));
  std::vector<int> actions = actions_from_string(c.meta_value("actions"));

  ModelParams m = init_model(cfg, mode, rec, actions, 0);
  auto named = m.named_params();
  if (named.size() != c.tensors.size())
    throw std::runtime_error("checkpoint: expected " + std::to_string(named.size()) +
                             " tensors, found " + std::to_string(c.tensors.size()));
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto& [name, dst] = named[i];
    auto& [cname, src] = c.tensors[i];
    if (name != cname)
      throw std::runtime_error("checkpoint: tensor order mismatch at '" + cname +
                               "' (expected '" + name + "')");
    if (dst.shape() != src.shape())
      throw std::runtime_error("checkpoint: tensor " + name + " has shape " +
                               shape_to_string(src.shape()) + ", expected " +
                               shape_to_string(dst.shape()));
    dst.data() = src.data();
  }
  LoadedModel out{std::move(m), std::move(c.meta)};
  return out;
}

}  // namespace rcm
