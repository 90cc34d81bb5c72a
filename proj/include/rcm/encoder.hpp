#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "rcm/data.hpp"
#include "rcm/tensor.hpp"

namespace rcm {

// One encoder window: [CLS] question [SEP] doc-window [UNK].
struct SegmentInput {
  std::vector<int> ids;
  int doc_start = 0;    // document offset of the first window token
  int window_len = 0;   // document tokens in this window
  int window_begin = 0; // index of the first window token in ids
  int unk_index = 0;    // always ids.size() - 1
  int question_len = 0; // kept question tokens
  std::vector<int> doc_pos;              // ids index -> document offset, -1 elsewhere
  std::vector<unsigned char> span_mask;  // legal answer positions: window + UNK
};

// Window capacity for a question of this length under the given budget.
int window_capacity(int max_seq_len, int question_len, int question_budget);

// Keeps the question tail under the budget; window truncated at document end.
SegmentInput build_input(const QAExample& ex, int doc_start, int max_seq_len,
                         int question_budget);

struct EncoderConfig {
  int vocab_size = 204;  // total ids, specials included
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 2;
  int d_ff = 128;
  int max_seq_len = 48;
  double dropout = 0.0;

  void validate() const;
};

struct BlockParams {
  Tensor ln1_g, ln1_b;
  Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor ln2_g, ln2_b;
  Tensor w1, b1, w2, b2;
};

struct EncoderParams {
  Tensor tok_emb;  // {vocab, d_model}
  Tensor pos_emb;  // {max_seq_len, d_model}
  std::vector<BlockParams> blocks;
  Tensor lnf_g, lnf_b;
};

EncoderParams init_encoder(const EncoderConfig& cfg, std::mt19937_64& rng);

struct EncodeResult {
  Tensor h;  // {len, d_model}
  Tensor v;  // row 0 of h
};

// Per-head attention rows, captured for tests when a trace is passed.
struct EncodeTrace {
  std::vector<Tensor> attention;  // one {len, len} tensor per (layer, head)
};

EncodeResult encode(const SegmentInput& input, const EncoderParams& params,
                    const EncoderConfig& cfg, std::mt19937_64* dropout_rng = nullptr,
                    EncodeTrace* trace = nullptr);

// Xavier-uniform init over the two dimensions (fan += 1 for vectors).
Tensor xavier(const Shape& shape, std::mt19937_64& rng);

}  // namespace rcm
