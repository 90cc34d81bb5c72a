#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rcm {

// Reserved token ids; content ids start at kNumSpecials.
constexpr int kPad = 0;
constexpr int kCls = 1;
constexpr int kSep = 2;
constexpr int kUnk = 3;
constexpr int kNumSpecials = 4;

struct Vocab {
  std::vector<std::string> tokens;  // id -> string

  // Specials plus content_words synthetic words; the first content word is
  // the generator's marker token.
  static Vocab synthetic(int content_words);

  int size() const { return static_cast<int>(tokens.size()); }
  int marker() const { return kNumSpecials; }
  int lookup(const std::string& word) const;  // kUnk when absent
};

std::vector<std::string> split_words(const std::string& text);
std::vector<int> tokenize(const Vocab& v, const std::string& text);
std::string detokenize(const Vocab& v, const std::vector<int>& ids);

struct QAExample {
  std::vector<int> doc;
  std::vector<int> question;
  int answer_start = -1;  // inclusive token offsets into doc; -1 when unanswerable
  int answer_end = -1;
  bool answerable = false;
  std::vector<std::string> refs;
  std::uint64_t id = 0;

  bool operator==(const QAExample& other) const = default;
};

struct SynthConfig {
  int vocab_size = 200;  // content words
  int doc_len_min = 150;
  int doc_len_max = 300;
  int question_len = 5;
  int answer_len_min = 2;
  int answer_len_max = 4;
  // Absolute token range for the answer start; keeps gold spans deep in the
  // document so single-window readers must move.
  int answer_pos_min = 60;
  int answer_pos_max = 200;
  double distractor_rate = 0.2;
  double unanswerable_fraction = 0.0;

  void validate() const;
};

// Deterministic in (seed, index): the question is a key-token pattern that
// precedes "marker answer" in the document exactly once (answerable) or never
// (unanswerable). Distractors reuse the key with a corrupted last token.
QAExample make_example(const SynthConfig& cfg, const Vocab& v, std::uint64_t seed,
                       std::uint64_t index);
std::vector<QAExample> generate_synthetic(const SynthConfig& cfg, const Vocab& v,
                                          std::uint64_t seed, std::size_t count);

// Line-delimited JSON records {doc, question, answer_start, answer_end,
// answerable, refs}; text fields are detokenized with the vocab.
void save_dataset(const std::string& path, const Vocab& v,
                  const std::vector<QAExample>& data);
std::vector<QAExample> load_dataset(const std::string& path, const Vocab& v);

}  // namespace rcm
