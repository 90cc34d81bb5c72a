#include "rcm/data.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"
#include "rcm/rng.hpp"

namespace rcm {

Vocab Vocab::synthetic(int content_words) {
  if (content_words < 2)
    throw std::invalid_argument("vocab: need at least 2 content words, got " +
                                std::to_string(content_words));
  Vocab v;
  v.tokens = {"[PAD]", "[CLS]", "[SEP]", "[UNK]"};
  v.tokens.push_back("mk");
  for (int i = 1; i < content_words; ++i) v.tokens.push_back("w" + std::to_string(i));
  return v;
}

int Vocab::lookup(const std::string& word) const {
  for (int i = 0; i < size(); ++i)
    if (tokens[i] == word) return i;
  return kUnk;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::vector<int> tokenize(const Vocab& v, const std::string& text) {
  // Linear lookup per word would make dataset loading quadratic; index once.
  std::unordered_map<std::string, int> index;
  index.reserve(v.tokens.size());
  for (int i = 0; i < v.size(); ++i) index.emplace(v.tokens[i], i);
  std::vector<int> ids;
  for (const std::string& w : split_words(text)) {
    auto it = index.find(w);
    ids.push_back(it == index.end() ? kUnk : it->second);
  }
  return ids;
}

std::string detokenize(const Vocab& v, const std::vector<int>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= v.size())
      throw std::invalid_argument("detokenize: id " + std::to_string(ids[i]) +
                                  " out of vocab size " + std::to_string(v.size()));
    if (i) out += ' ';
    out += v.tokens[ids[i]];
  }
  return out;
}

void SynthConfig::validate() const {
  if (vocab_size < 8)
    throw std::invalid_argument("synth: vocab_size must be at least 8");
  if (doc_len_min < 1 || doc_len_min > doc_len_max)
    throw std::invalid_argument("synth: doc length range invalid");
  if (question_len < 1)
    throw std::invalid_argument("synth: question_len must be positive");
  if (answer_len_min < 1 || answer_len_min > answer_len_max)
    throw std::invalid_argument("synth: answer length range invalid");
  if (answer_len_max > doc_len_min)
    throw std::invalid_argument("synth: answer length exceeds document length");
  if (answer_pos_min < 0 || answer_pos_min > answer_pos_max)
    throw std::invalid_argument("synth: answer position range invalid");
  if (distractor_rate < 0.0 || distractor_rate > 1.0)
    throw std::invalid_argument("synth: distractor_rate outside [0,1]");
  if (unanswerable_fraction < 0.0 || unanswerable_fraction > 1.0)
    throw std::invalid_argument("synth: unanswerable_fraction outside [0,1]");
  if (question_len + 1 + answer_len_max + 2 > doc_len_min)
    throw std::invalid_argument("synth: documents too short for key+marker+answer");
}

namespace {

int random_word(std::mt19937_64& rng, const Vocab& v) {
  // Content words excluding the marker.
  return static_cast<int>(uniform_int(rng, kNumSpecials + 1, v.size() - 1));
}

int count_occurrences(const std::vector<int>& doc, const std::vector<int>& key) {
  if (key.empty() || doc.size() < key.size()) return 0;
  int count = 0;
  for (std::size_t i = 0; i + key.size() <= doc.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < key.size(); ++j)
      if (doc[i + j] != key[j]) {
        match = false;
        break;
      }
    if (match) ++count;
  }
  return count;
}

}  // namespace

QAExample make_example(const SynthConfig& cfg, const Vocab& v, std::uint64_t seed,
                       std::uint64_t index) {
  cfg.validate();
  auto rng = make_rng(mix64(seed, index));
  QAExample ex;
  ex.id = index;
  int doc_len = static_cast<int>(uniform_int(rng, cfg.doc_len_min, cfg.doc_len_max));
  ex.answerable = !(uniform01(rng) < cfg.unanswerable_fraction);

  std::vector<int> key(cfg.question_len);
  for (int& t : key) t = random_word(rng, v);
  ex.question = key;

  int answer_len = static_cast<int>(uniform_int(rng, cfg.answer_len_min, cfg.answer_len_max));
  // The planted block is "key marker answer"; the answer span must leave room
  // for the key prefix.
  int block_len = cfg.question_len + 1 + answer_len;

  for (int attempt = 0;; ++attempt) {
    if (attempt >= 200)
      throw std::runtime_error("synth: could not generate a clean document after 200 tries");
    ex.doc.assign(doc_len, 0);
    for (int& t : ex.doc) t = random_word(rng, v);

    int answer_block_start = -1, answer_block_end = -1;
    if (ex.answerable) {
      int lo = std::max(cfg.answer_pos_min, cfg.question_len + 1);
      int hi = std::min(cfg.answer_pos_max, doc_len - answer_len);
      if (hi < lo)
        throw std::invalid_argument("synth: empty answer position range [" +
                                    std::to_string(lo) + ", " + std::to_string(hi) +
                                    "] for doc length " + std::to_string(doc_len));
      ex.answer_start = static_cast<int>(uniform_int(rng, lo, hi));
      ex.answer_end = ex.answer_start + answer_len - 1;
      answer_block_start = ex.answer_start - cfg.question_len - 1;
      answer_block_end = ex.answer_start + answer_len;
      for (int j = 0; j < cfg.question_len; ++j)
        ex.doc[answer_block_start + j] = key[j];
      ex.doc[ex.answer_start - 1] = v.marker();
      for (int j = 0; j < answer_len; ++j)
        ex.doc[ex.answer_start + j] = random_word(rng, v);
    }

    if (uniform01(rng) < cfg.distractor_rate && doc_len > block_len) {
      int corrupted = random_word(rng, v);
      while (corrupted == key.back()) corrupted = random_word(rng, v);
      for (int tries = 0; tries < 20; ++tries) {
        int pos = static_cast<int>(uniform_int(rng, 0, doc_len - block_len));
        bool overlaps = ex.answerable && pos < answer_block_end &&
                        pos + block_len > answer_block_start;
        if (overlaps) continue;
        for (int j = 0; j + 1 < cfg.question_len; ++j) ex.doc[pos + j] = key[j];
        ex.doc[pos + cfg.question_len - 1] = corrupted;
        ex.doc[pos + cfg.question_len] = v.marker();
        for (int j = 0; j < answer_len; ++j)
          ex.doc[pos + cfg.question_len + 1 + j] = random_word(rng, v);
        break;
      }
    }

    if (count_occurrences(ex.doc, key) == (ex.answerable ? 1 : 0)) break;
  }

  if (ex.answerable) {
    std::vector<int> answer(ex.doc.begin() + ex.answer_start,
                            ex.doc.begin() + ex.answer_end + 1);
    ex.refs = {detokenize(v, answer)};
  }
  return ex;
}

std::vector<QAExample> generate_synthetic(const SynthConfig& cfg, const Vocab& v,
                                          std::uint64_t seed, std::size_t count) {
  std::vector<QAExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(make_example(cfg, v, seed, i));
  return out;
}

void save_dataset(const std::string& path, const Vocab& v,
                  const std::vector<QAExample>& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dataset: cannot write " + path);
  for (const QAExample& ex : data) {
    nlohmann::json j;
    j["doc"] = detokenize(v, ex.doc);
    j["question"] = detokenize(v, ex.question);
    j["answer_start"] = ex.answer_start;
    j["answer_end"] = ex.answer_end;
    j["answerable"] = ex.answerable;
    j["refs"] = ex.refs;
    out << j.dump() << '\n';
  }
}

std::vector<QAExample> load_dataset(const std::string& path, const Vocab& v) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("dataset: cannot read " + path);
  std::vector<QAExample> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("dataset: line " + std::to_string(lineno) +
                               ": malformed record: " + e.what());
    }
    for (const char* field :
         {"doc", "question", "answer_start", "answer_end", "answerable", "refs"})
      if (!j.contains(field))
        throw std::runtime_error("dataset: line " + std::to_string(lineno) +
                                 ": missing field '" + field + "'");
    QAExample ex;
    ex.id = out.size();
    ex.doc = tokenize(v, j["doc"].get<std::string>());
    ex.question = tokenize(v, j["question"].get<std::string>());
    ex.answer_start = j["answer_start"].get<int>();
    ex.answer_end = j["answer_end"].get<int>();
    ex.answerable = j["answerable"].get<bool>();
    ex.refs = j["refs"].get<std::vector<std::string>>();
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace rcm
