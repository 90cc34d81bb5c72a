#include "rcm/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "rcm/answer.hpp"
#include "rcm/rng.hpp"
#include "rcm/rollout.hpp"
#include "rcm/trainer.hpp"

namespace rcm {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void check_encoder_match(const EncoderConfig& ck, const EncoderConfig& cfg,
                         const std::string& op) {
  auto bad = [&](const char* field, int a, int b) {
    throw std::runtime_error(op + ": checkpoint " + field + " " + std::to_string(a) +
                             " does not match config " + field + " " +
                             std::to_string(b));
  };
  if (ck.d_model != cfg.d_model) bad("d_model", ck.d_model, cfg.d_model);
  if (ck.vocab_size != cfg.vocab_size) bad("vocab_size", ck.vocab_size, cfg.vocab_size);
  if (ck.n_layers != cfg.n_layers) bad("n_layers", ck.n_layers, cfg.n_layers);
  if (ck.n_heads != cfg.n_heads) bad("n_heads", ck.n_heads, cfg.n_heads);
  if (ck.d_ff != cfg.d_ff) bad("d_ff", ck.d_ff, cfg.d_ff);
  if (ck.max_seq_len != cfg.max_seq_len) bad("max_seq_len", ck.max_seq_len, cfg.max_seq_len);
}

long long meta_or(const std::vector<std::pair<std::string, std::string>>& meta,
                  const std::string& key, long long fallback) {
  for (const auto& [k, v] : meta)
    if (k == key) return std::stoll(v);
  return fallback;
}

// Keeps the header and rows with step <= start_step so a resumed run appends
// exactly the rows the uninterrupted run would have written.
void truncate_metrics(const std::string& out_dir, int start_step) {
  std::string path = out_dir + "/metrics.csv";
  std::vector<std::string> kept;
  std::ifstream in(path);
  std::string line;
  if (in && std::getline(in, line)) {
    kept.push_back(line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      int step = std::atoi(line.c_str());
      if (step <= start_step) kept.push_back(line);
    }
  } else {
    kept.push_back("step,lr,L_ans,L_cs,L_cp,mean_R");
  }
  in.close();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("train: cannot rewrite " + path);
  for (const std::string& row : kept) out << row << '\n';
}

struct EvalContext {
  const ModelParams& model;
  int segments = 3;
  int question_budget = 16;
  int no_rl_stride = 16;    // training geometry, from the checkpoint
  int baseline_stride = 16; // prediction-time scan stride, from the config
};

Episode build_episode(const EvalContext& ctx, const QAExample& ex) {
  if (ctx.model.mode == ModelMode::baseline)
    return baseline_scan(ctx.model, ex, ctx.question_budget, ctx.baseline_stride);
  RolloutOptions opt;
  opt.max_segments = ctx.segments;
  opt.train = false;
  opt.question_budget = ctx.question_budget;
  if (ctx.model.mode == ModelMode::rcm_no_rl) opt.fixed_stride = ctx.no_rl_stride;
  return rollout(ctx.model, ex, opt);
}

AnswerPrediction decode_for_mode(const EvalContext& ctx, const Episode& ep,
                                 int max_answer_len) {
  if (ctx.model.mode == ModelMode::baseline) return decode_maxpool(ep, max_answer_len);
  return decode_best_span(ep, max_answer_len);
}

EvalContext make_eval_context(const ModelParams& model,
                              const std::vector<std::pair<std::string, std::string>>& meta,
                              const RunConfig& cfg) {
  EvalContext ctx{model};
  ctx.segments = static_cast<int>(meta_or(meta, "segments", cfg.train.segments));
  ctx.question_budget =
      static_cast<int>(meta_or(meta, "question_budget", cfg.train.question_budget));
  ctx.no_rl_stride =
      static_cast<int>(meta_or(meta, "baseline_stride", cfg.train.baseline_stride));
  ctx.baseline_stride = cfg.train.baseline_stride;
  return ctx;
}

EvalSummary eval_core(const EvalContext& ctx, const std::vector<QAExample>& data,
                      const Vocab& vocab, const RunConfig& cfg,
                      const std::string& out_dir) {
  if (data.empty()) throw std::runtime_error("eval: empty dataset");
  std::filesystem::create_directories(out_dir);

  std::ofstream preds(out_dir + "/predictions.jsonl", std::ios::trunc);
  if (!preds) throw std::runtime_error("eval: cannot write predictions.jsonl in " + out_dir);

  EvalSummary s;
  std::vector<Episode> episodes;
  episodes.reserve(data.size());
  std::vector<double> f1s;
  f1s.reserve(data.size());
  std::vector<std::pair<double, double>> distance_f1;  // answerable winners
  double f1_sum = 0.0, ans_f1_sum = 0.0;
  std::size_t unk_hits = 0;

  NoGradGuard eval_guard;
  for (const QAExample& ex : data) {
    Episode ep = build_episode(ctx, ex);
    AnswerPrediction pred = decode_for_mode(ctx, ep, cfg.max_answer_len);
    double f1 = example_f1(pred, ex, vocab);
    f1_sum += f1;
    f1s.push_back(f1);

    std::string text;
    if (!pred.unanswerable) {
      std::vector<int> span(ex.doc.begin() + pred.doc_start,
                            ex.doc.begin() + pred.doc_end + 1);
      text = detokenize(vocab, span);
    }
    nlohmann::json row;
    row["example_id"] = ex.id;
    row["answer_text"] = text;
    row["doc_start"] = pred.doc_start;
    row["doc_end"] = pred.doc_end;
    row["score"] = pred.score;
    row["unanswerable"] = pred.unanswerable;
    preds << row.dump() << '\n';

    if (ex.answerable) {
      ++s.n_answerable;
      ans_f1_sum += f1;
      s.n_segments += ep.segments.size();
      distance_f1.emplace_back(
          window_center_distance(ex, ep.segments.at(pred.segment)), f1);
    } else {
      ++s.n_unanswerable;
      if (pred.unanswerable) ++unk_hits;
    }
    episodes.push_back(std::move(ep));
  }
  preds.close();

  s.n_examples = data.size();
  s.mean_f1 = f1_sum / static_cast<double>(data.size());
  if (s.n_answerable > 0) {
    s.answerable_f1 = ans_f1_sum / static_cast<double>(s.n_answerable);
    s.hit = hit_rate(episodes);
  }
  if (s.n_unanswerable > 0)
    s.unanswerable_detection =
        static_cast<double>(unk_hits) / static_cast<double>(s.n_unanswerable);
  s.distances = center_distances(episodes, data);
  s.buckets = distance_bucket_f1(distance_f1, cfg.bucket_width);

  std::ofstream f1csv(out_dir + "/f1.csv", std::ios::trunc);
  f1csv << "metric,value\n";
  f1csv << "mean_f1," << fmt(s.mean_f1) << '\n';
  if (s.n_answerable > 0) f1csv << "answerable_f1," << fmt(s.answerable_f1) << '\n';
  if (s.n_unanswerable > 0)
    f1csv << "unanswerable_detection," << fmt(s.unanswerable_detection) << '\n';
  f1csv << "n_examples," << s.n_examples << '\n';

  std::ofstream hitcsv(out_dir + "/hit_rate.csv", std::ios::trunc);
  hitcsv << "metric,value\n";
  hitcsv << "hit_rate," << fmt(s.hit) << '\n';
  hitcsv << "n_segments," << s.n_segments << '\n';

  std::ofstream distcsv(out_dir + "/center_distances.csv", std::ios::trunc);
  distcsv << "segment_index,mean_distance,count\n";
  for (std::size_t i = 0; i < s.distances.size(); ++i)
    distcsv << (i + 1) << ',' << fmt(s.distances[i].mean) << ','
            << s.distances[i].count << '\n';

  std::ofstream bucketcsv(out_dir + "/distance_bucket_f1.csv", std::ios::trunc);
  bucketcsv << "bucket_lo,mean_f1,count\n";
  for (const BucketRow& b : s.buckets)
    bucketcsv << b.lo << ',' << fmt(b.mean_f1) << ',' << b.count << '\n';

  return s;
}

void train_core(const RunConfig& cfg, ModelMode mode, std::uint64_t seed,
                const std::vector<QAExample>& data, const std::string& out_dir,
                std::ostream& log) {
  std::filesystem::create_directories(out_dir);
  TrainConfig tcfg = cfg.train;
  tcfg.seed = seed;
  if (mode == ModelMode::baseline && cfg.action_space_set)
    log << "train: baseline ignores action_space\n";
  ModelParams model =
      init_model(cfg.encoder_config(), mode, tcfg.recurrence, tcfg.actions, seed);
  Adam adam(model.named_params());
  train(model, adam, data, tcfg, out_dir, 0);
}

std::vector<QAExample> load_data(const std::string& path,
                                 const Vocab& vocab) {
  std::vector<QAExample> data = load_dataset(path, vocab);
  if (data.empty()) throw std::runtime_error("dataset: " + path + " holds no examples");
  return data;
}

}  // namespace

void run_gen_data(const RunConfig& cfg, std::uint64_t seed, const std::string& out_path,
                  std::ostream& log) {
  Vocab vocab = Vocab::synthetic(cfg.synth.vocab_size);
  std::vector<QAExample> data;
  data.reserve(cfg.n_examples);
  for (int i = 0; i < cfg.n_examples; ++i)
    data.push_back(make_example(cfg.synth, vocab, seed, static_cast<std::uint64_t>(i)));
  save_dataset(out_path, vocab, data);

  std::size_t total_len = 0, max_len = 0, answerable = 0;
  for (const QAExample& ex : data) {
    total_len += ex.doc.size();
    max_len = std::max(max_len, ex.doc.size());
    answerable += ex.answerable ? 1 : 0;
  }
  log << "wrote " << data.size() << " examples to " << out_path << '\n';
  log << "mean doc length " << fmt(static_cast<double>(total_len) / data.size())
      << ", max " << max_len << ", answerable " << answerable << "/" << data.size()
      << '\n';
}

void run_train(const RunConfig& cfg, const std::string& mode_name, std::uint64_t seed,
               const std::string& data_path, const std::string& out_dir, bool resume,
               std::ostream& log) {
  Vocab vocab = Vocab::synthetic(cfg.synth.vocab_size);
  std::vector<QAExample> data = load_data(data_path, vocab);

  if (!resume) {
    ModelMode mode = mode_from_string(mode_name.empty() ? "rcm-gated" : mode_name);
    train_core(cfg, mode, seed, data, out_dir, log);
    log << "trained " << to_string(mode) << " for " << cfg.train.total_steps
        << " steps into " << out_dir << '\n';
    return;
  }

  LoadedModel lm = load_model(out_dir + "/checkpoint.bin");
  check_encoder_match(lm.model.enc_cfg, cfg.encoder_config(), "train");
  if (!mode_name.empty() && mode_from_string(mode_name) != lm.model.mode)
    throw std::runtime_error("train: requested mode " + mode_name +
                             " does not match checkpoint mode " +
                             to_string(lm.model.mode));
  if (lm.model.mode != ModelMode::baseline &&
      lm.model.policy.actions != cfg.train.actions)
    throw std::runtime_error("train: checkpoint action space does not match config");
  int start_step = static_cast<int>(meta_or(lm.meta, "step", 0));

  TrainConfig tcfg = cfg.train;
  tcfg.seed = seed;
  tcfg.recurrence = lm.model.recurrence;
  Adam adam(lm.model.named_params());
  Checkpoint opt = load_checkpoint(out_dir + "/optimizer.bin");
  adam.load(opt);
  truncate_metrics(out_dir, start_step);
  log << "resuming " << to_string(lm.model.mode) << " from step " << start_step << '\n';
  train(lm.model, adam, data, tcfg, out_dir, start_step);
  log << "trained " << to_string(lm.model.mode) << " for " << tcfg.total_steps
      << " steps into " << out_dir << '\n';
}

EvalSummary run_eval(const RunConfig& cfg, const std::string& run_dir,
                     const std::string& data_path, std::ostream& log) {
  Vocab vocab = Vocab::synthetic(cfg.synth.vocab_size);
  std::vector<QAExample> data = load_data(data_path, vocab);
  LoadedModel lm = load_model(run_dir + "/checkpoint.bin");
  check_encoder_match(lm.model.enc_cfg, cfg.encoder_config(), "eval");

  EvalContext ctx = make_eval_context(lm.model, lm.meta, cfg);
  EvalSummary s = eval_core(ctx, data, vocab, cfg, run_dir);
  log << "evaluated " << s.n_examples << " examples: mean F1 " << fmt(100.0 * s.mean_f1)
      << ", hit rate " << fmt(s.hit) << '\n';
  if (s.n_unanswerable > 0)
    log << "unanswerable detection " << fmt(s.unanswerable_detection) << " over "
        << s.n_unanswerable << " examples\n";
  return s;
}

void run_sweep(const RunConfig& cfg, std::uint64_t seed, const std::string& data_path,
               const std::vector<int>& train_strides,
               const std::vector<int>& pred_strides, const std::string& out_dir,
               std::ostream& log) {
  if (train_strides.empty() || pred_strides.empty())
    throw std::invalid_argument("sweep: stride lists must be non-empty");
  for (int s : train_strides)
    if (s < 1) throw std::invalid_argument("sweep: strides must be positive");
  for (int s : pred_strides)
    if (s < 1) throw std::invalid_argument("sweep: strides must be positive");

  Vocab vocab = Vocab::synthetic(cfg.synth.vocab_size);
  std::vector<QAExample> data = load_data(data_path, vocab);
  std::size_t n_train = data.size() * 8 / 10;
  if (n_train == 0 || n_train == data.size())
    throw std::runtime_error("sweep: dataset too small for an 80/20 split");
  std::vector<QAExample> train_set(data.begin(), data.begin() + n_train);
  std::vector<QAExample> eval_set(data.begin() + n_train, data.end());

  std::filesystem::create_directories(out_dir);
  std::ofstream grid(out_dir + "/sweep.csv", std::ios::trunc);
  if (!grid) throw std::runtime_error("sweep: cannot write sweep.csv in " + out_dir);
  grid << "train_stride,pred_stride,f1\n";

  for (int ts : train_strides) {
    RunConfig cell = cfg;
    cell.train.baseline_stride = ts;
    std::string cell_dir = out_dir + "/train_stride_" + std::to_string(ts);
    log << "sweep: training baseline with stride " << ts << '\n';
    train_core(cell, ModelMode::baseline, seed, train_set, cell_dir, log);
    LoadedModel lm = load_model(cell_dir + "/checkpoint.bin");
    for (int ps : pred_strides) {
      RunConfig pcfg = cell;
      pcfg.train.baseline_stride = ps;
      EvalContext ctx = make_eval_context(lm.model, lm.meta, pcfg);
      EvalSummary s = eval_core(ctx, eval_set, vocab, pcfg,
                                cell_dir + "/pred_stride_" + std::to_string(ps));
      grid << ts << ',' << ps << ',' << fmt(100.0 * s.mean_f1) << '\n';
      log << "sweep: train " << ts << " pred " << ps << " F1 "
          << fmt(100.0 * s.mean_f1) << '\n';
    }
  }
}

void run_trace(const RunConfig& cfg, const std::string& run_dir,
               const std::string& data_path, const std::vector<std::uint64_t>& ids,
               std::ostream& log) {
  if (ids.empty()) throw std::invalid_argument("trace: no example ids given");
  Vocab vocab = Vocab::synthetic(cfg.synth.vocab_size);
  std::vector<QAExample> data = load_data(data_path, vocab);
  LoadedModel lm = load_model(run_dir + "/checkpoint.bin");
  check_encoder_match(lm.model.enc_cfg, cfg.encoder_config(), "trace");
  EvalContext ctx = make_eval_context(lm.model, lm.meta, cfg);

  std::filesystem::create_directories(run_dir);
  std::ofstream out(run_dir + "/trace.txt", std::ios::trunc);
  if (!out) throw std::runtime_error("trace: cannot write trace.txt in " + run_dir);

  char buf[256];
  NoGradGuard trace_guard;
  for (std::uint64_t id : ids) {
    auto it = std::find_if(data.begin(), data.end(),
                           [&](const QAExample& ex) { return ex.id == id; });
    if (it == data.end())
      throw std::runtime_error("trace: unknown example id " + std::to_string(id));
    const QAExample& ex = *it;
    Episode ep = build_episode(ctx, ex);
    out << "example " << id << " answerable=" << (ex.answerable ? 1 : 0) << '\n';
    for (std::size_t c = 0; c < ep.segments.size(); ++c) {
      const SegmentState& seg = ep.segments[c];
      // Best local span (no q factor): the per-segment read the scorer rates.
      Episode solo;
      solo.segments.push_back(seg);
      AnswerPrediction local = decode_maxpool(solo, cfg.max_answer_len);
      std::string span = local.unanswerable
                             ? std::string("UNK")
                             : "[" + std::to_string(local.doc_start) + "," +
                                   std::to_string(local.doc_end) + "]";
      std::snprintf(buf, sizeof(buf), "  segment %zu: doc_start=%d q=%.6f span=%s score=%.6f",
                    c + 1, seg.input.doc_start, seg.q.value(), span.c_str(),
                    local.score);
      out << buf;
      // Scan episodes carry no recorded moves; rollouts do, except on the
      // final segment.
      if (ctx.model.mode != ModelMode::baseline && c + 1 < ep.segments.size())
        out << " action=" << seg.action;
      out << '\n';
    }
    AnswerPrediction pred = decode_for_mode(ctx, ep, cfg.max_answer_len);
    if (pred.unanswerable) {
      std::snprintf(buf, sizeof(buf), "best: segment %d UNANSWERABLE score=%.6f",
                    pred.segment + 1, pred.score);
      out << buf << '\n';
    } else {
      std::vector<int> span(ex.doc.begin() + pred.doc_start,
                            ex.doc.begin() + pred.doc_end + 1);
      std::snprintf(buf, sizeof(buf), "best: segment %d span=[%d,%d] text=\"%s\" score=%.6f",
                    pred.segment + 1, pred.doc_start, pred.doc_end,
                    detokenize(vocab, span).c_str(), pred.score);
      out << buf << '\n';
    }
  }
  log << "traced " << ids.size() << " example(s) into " << run_dir << "/trace.txt\n";
}

}  // namespace rcm
