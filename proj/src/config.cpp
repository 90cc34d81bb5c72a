#include "rcm/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace rcm {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    int v = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' needs an integer, got '" +
                                value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key + "' needs a number, got '" +
                                value + "'");
  }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_int(key, item));
  }
  if (out.empty())
    throw std::invalid_argument("config: key '" + key + "' needs a comma-separated list");
  return out;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot read " + path);
  RunConfig cfg;
  auto set_int = [](int& field) {
    return [&field](const std::string& key, const std::string& v) {
      field = parse_int(key, v);
    };
  };
  // Key table: name -> typed setter.
  std::map<std::string,
           std::function<void(const std::string&, const std::string&)>>
      keys;
  keys["n_examples"] = set_int(cfg.n_examples);
  keys["vocab_size"] = set_int(cfg.synth.vocab_size);
  keys["doc_len_min"] = set_int(cfg.synth.doc_len_min);
  keys["doc_len_max"] = set_int(cfg.synth.doc_len_max);
  keys["question_len"] = set_int(cfg.synth.question_len);
  keys["answer_len_min"] = set_int(cfg.synth.answer_len_min);
  keys["answer_len_max"] = set_int(cfg.synth.answer_len_max);
  keys["answer_pos_min"] = set_int(cfg.synth.answer_pos_min);
  keys["answer_pos_max"] = set_int(cfg.synth.answer_pos_max);
  keys["distractor_rate"] = [&](const std::string& k, const std::string& v) {
    cfg.synth.distractor_rate = parse_double(k, v);
  };
  keys["unanswerable_fraction"] = [&](const std::string& k, const std::string& v) {
    cfg.synth.unanswerable_fraction = parse_double(k, v);
  };
  keys["d_model"] = set_int(cfg.d_model);
  keys["n_layers"] = set_int(cfg.n_layers);
  keys["n_heads"] = set_int(cfg.n_heads);
  keys["d_ff"] = set_int(cfg.d_ff);
  keys["max_seq_len"] = set_int(cfg.max_seq_len);
  keys["dropout"] = [&](const std::string& k, const std::string& v) {
    cfg.dropout = parse_double(k, v);
  };
  keys["peak_lr"] = [&](const std::string& k, const std::string& v) {
    cfg.train.peak_lr = parse_double(k, v);
  };
  keys["warmup_steps"] = set_int(cfg.train.warmup_steps);
  keys["total_steps"] = set_int(cfg.train.total_steps);
  keys["batch_size"] = set_int(cfg.train.batch_size);
  keys["segments"] = set_int(cfg.train.segments);
  keys["action_space"] = [&](const std::string& k, const std::string& v) {
    cfg.train.actions = parse_int_list(k, v);
    cfg.action_space_set = true;
  };
  keys["recurrence"] = [&](const std::string&, const std::string& v) {
    cfg.train.recurrence = recurrence_from_string(v);
  };
  keys["grad_clip"] = [&](const std::string& k, const std::string& v) {
    cfg.train.grad_clip = parse_double(k, v);
  };
  keys["baseline_stride"] = set_int(cfg.train.baseline_stride);
  keys["checkpoint_every"] = set_int(cfg.train.checkpoint_every);
  keys["question_budget"] = set_int(cfg.train.question_budget);
  keys["seed"] = [&](const std::string& k, const std::string& v) {
    try {
      std::size_t used = 0;
      cfg.train.seed = std::stoull(v, &used);
      if (used != v.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::invalid_argument("config: key '" + k +
                                  "' needs a non-negative integer, got '" + v + "'");
    }
  };
  keys["max_answer_len"] = set_int(cfg.max_answer_len);
  keys["bucket_width"] = set_int(cfg.bucket_width);

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + s + "'");
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    auto it = keys.find(key);
    if (it == keys.end())
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    it->second(key, value);
  }
  cfg.validate();
  return cfg;
}

void RunConfig::validate() const {
  synth.validate();
  encoder_config().validate();
  train.validate();
  if (max_answer_len < 1)
    throw std::invalid_argument("config: max_answer_len must be positive");
  if (bucket_width < 1)
    throw std::invalid_argument("config: bucket_width must be positive");
  if (max_seq_len < train.question_budget + 4)
    throw std::invalid_argument("config: max_seq_len must be at least question_budget + 4");
}

EncoderConfig RunConfig::encoder_config() const {
  EncoderConfig e;
  e.vocab_size = total_vocab();
  e.d_model = d_model;
  e.n_layers = n_layers;
  e.n_heads = n_heads;
  e.d_ff = d_ff;
  e.max_seq_len = max_seq_len;
  e.dropout = dropout;
  return e;
}

}  // namespace rcm
