#include "rcm/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "rcm/rng.hpp"

namespace rcm {

int window_capacity(int max_seq_len, int question_len, int question_budget) {
  int kept = std::min(question_len, question_budget);
  int cap = max_seq_len - kept - 3;
  if (cap < 1)
    throw std::invalid_argument("build_input: max_seq_len " + std::to_string(max_seq_len) +
                                " leaves no room for document tokens");
  return cap;
}

SegmentInput build_input(const QAExample& ex, int doc_start, int max_seq_len,
                         int question_budget) {
  int doc_len = static_cast<int>(ex.doc.size());
  if (doc_start < 0 || doc_start >= doc_len)
    throw std::invalid_argument("build_input: doc_start " + std::to_string(doc_start) +
                                " outside document of length " + std::to_string(doc_len));
  int qlen = static_cast<int>(ex.question.size());
  int kept = std::min(qlen, question_budget);
  int cap = window_capacity(max_seq_len, qlen, question_budget);
  SegmentInput in;
  in.doc_start = doc_start;
  in.window_len = std::min(cap, doc_len - doc_start);
  in.question_len = kept;
  in.window_begin = 2 + kept;
  in.ids.reserve(in.window_begin + in.window_len + 1);
  in.ids.push_back(kCls);
  // Tail of the question survives truncation.
  for (int i = qlen - kept; i < qlen; ++i) in.ids.push_back(ex.question[i]);
  in.ids.push_back(kSep);
  for (int i = 0; i < in.window_len; ++i) in.ids.push_back(ex.doc[doc_start + i]);
  in.ids.push_back(kUnk);
  in.unk_index = static_cast<int>(in.ids.size()) - 1;
  in.doc_pos.assign(in.ids.size(), -1);
  in.span_mask.assign(in.ids.size(), 0);
  for (int i = 0; i < in.window_len; ++i) {
    in.doc_pos[in.window_begin + i] = doc_start + i;
    in.span_mask[in.window_begin + i] = 1;
  }
  in.span_mask[in.unk_index] = 1;
  return in;
}

void EncoderConfig::validate() const {
  if (vocab_size < kNumSpecials + 1)
    throw std::invalid_argument("encoder: vocab_size too small");
  if (d_model < 1 || n_layers < 1 || n_heads < 1 || d_ff < 1)
    throw std::invalid_argument("encoder: dimensions must be positive");
  if (d_model % n_heads != 0)
    throw std::invalid_argument("encoder: d_model " + std::to_string(d_model) +
                                " not divisible by n_heads " + std::to_string(n_heads));
  if (max_seq_len < 5)
    throw std::invalid_argument("encoder: max_seq_len must be at least 5");
  if (dropout < 0.0 || dropout >= 1.0)
    throw std::invalid_argument("encoder: dropout outside [0, 1)");
}

Tensor xavier(const Shape& shape, std::mt19937_64& rng) {
  double fan = 0.0;
  for (std::size_t d : shape) fan += static_cast<double>(d);
  if (shape.size() == 1) fan += 1.0;
  double limit = std::sqrt(6.0 / fan);
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  std::vector<double> v(n);
  for (double& x : v) x = (2.0 * uniform01(rng) - 1.0) * limit;
  return param(shape, std::move(v));
}

namespace {

Tensor ones_param(std::size_t n) { return param({n}, std::vector<double>(n, 1.0)); }
Tensor zeros_param(std::size_t n) { return param({n}, std::vector<double>(n, 0.0)); }

}  // namespace

EncoderParams init_encoder(const EncoderConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  std::size_t d = static_cast<std::size_t>(cfg.d_model);
  std::size_t ff = static_cast<std::size_t>(cfg.d_ff);
  EncoderParams p;
  p.tok_emb = xavier({static_cast<std::size_t>(cfg.vocab_size), d}, rng);
  p.pos_emb = xavier({static_cast<std::size_t>(cfg.max_seq_len), d}, rng);
  for (int l = 0; l < cfg.n_layers; ++l) {
    BlockParams b;
    b.ln1_g = ones_param(d);
    b.ln1_b = zeros_param(d);
    b.wq = xavier({d, d}, rng);
    b.bq = zeros_param(d);
    b.wk = xavier({d, d}, rng);
    b.bk = zeros_param(d);
    b.wv = xavier({d, d}, rng);
    b.bv = zeros_param(d);
    b.wo = xavier({d, d}, rng);
    b.bo = zeros_param(d);
    b.ln2_g = ones_param(d);
    b.ln2_b = zeros_param(d);
    b.w1 = xavier({d, ff}, rng);
    b.b1 = zeros_param(ff);
    b.w2 = xavier({ff, d}, rng);
    b.b2 = zeros_param(d);
    p.blocks.push_back(std::move(b));
  }
  p.lnf_g = ones_param(d);
  p.lnf_b = zeros_param(d);
  return p;
}

EncodeResult encode(const SegmentInput& input, const EncoderParams& params,
                    const EncoderConfig& cfg, std::mt19937_64* dropout_rng,
                    EncodeTrace* trace) {
  int len = static_cast<int>(input.ids.size());
  if (len < 3)
    throw std::invalid_argument("encode: input length " + std::to_string(len) +
                                " below the minimal [CLS] q [SEP] d [UNK] layout");
  if (len > cfg.max_seq_len)
    throw std::invalid_argument("encode: input length " + std::to_string(len) +
                                " exceeds max_seq_len " + std::to_string(cfg.max_seq_len));
  std::vector<int> positions(len);
  for (int i = 0; i < len; ++i) positions[i] = i;

  Tensor x = add(embedding(params.tok_emb, input.ids),
                 embedding(params.pos_emb, positions));
  bool use_dropout = cfg.dropout > 0.0 && dropout_rng != nullptr;
  if (use_dropout) x = dropout(x, cfg.dropout, *dropout_rng);

  int dh = cfg.d_model / cfg.n_heads;
  double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const BlockParams& b : params.blocks) {
    Tensor ln1 = layer_norm(x, b.ln1_g, b.ln1_b);
    Tensor q = add_bias(matmul(ln1, b.wq), b.bq);
    Tensor k = add_bias(matmul(ln1, b.wk), b.bk);
    Tensor v = add_bias(matmul(ln1, b.wv), b.bv);
    Tensor ctx;
    for (int h = 0; h < cfg.n_heads; ++h) {
      Tensor qh = slice_cols(q, static_cast<std::size_t>(h) * dh, dh);
      Tensor kh = slice_cols(k, static_cast<std::size_t>(h) * dh, dh);
      Tensor vh = slice_cols(v, static_cast<std::size_t>(h) * dh, dh);
      Tensor att = softmax_rows(affine(matmul(qh, transpose(kh)), scale, 0.0));
      if (trace) trace->attention.push_back(att);
      Tensor ch = matmul(att, vh);
      ctx = h == 0 ? ch : concat_cols(ctx, ch);
    }
    Tensor attn_out = add_bias(matmul(ctx, b.wo), b.bo);
    if (use_dropout) attn_out = dropout(attn_out, cfg.dropout, *dropout_rng);
    x = add(x, attn_out);
    Tensor ln2 = layer_norm(x, b.ln2_g, b.ln2_b);
    Tensor ff = add_bias(matmul(gelu(add_bias(matmul(ln2, b.w1), b.b1)), b.w2), b.b2);
    if (use_dropout) ff = dropout(ff, cfg.dropout, *dropout_rng);
    x = add(x, ff);
  }
  Tensor h = layer_norm(x, params.lnf_g, params.lnf_b);
  return {h, row(h, 0)};
}

}  // namespace rcm
