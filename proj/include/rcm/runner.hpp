#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rcm/config.hpp"
#include "rcm/metrics.hpp"
#include "rcm/model.hpp"

namespace rcm {

// Generates cfg.n_examples synthetic examples and writes them to out_path;
// logs count and document-length stats.
void run_gen_data(const RunConfig& cfg, std::uint64_t seed, const std::string& out_path,
                  std::ostream& log);

// Trains into out_dir (checkpoint.bin, optimizer.bin, metrics.csv). mode_name
// empty means rcm-gated, or the checkpoint's mode when resuming. Resume picks
// up from out_dir's checkpoint and reproduces the uninterrupted run.
void run_train(const RunConfig& cfg, const std::string& mode_name, std::uint64_t seed,
               const std::string& data_path, const std::string& out_dir, bool resume,
               std::ostream& log);

struct EvalSummary {
  double mean_f1 = 0.0;
  double answerable_f1 = 0.0;           // over answerable examples
  double unanswerable_detection = 0.0;  // share of unanswerable predicted UNANSWERABLE
  double hit = 0.0;                     // segment hit rate, answerable episodes
  std::size_t n_examples = 0;
  std::size_t n_answerable = 0;
  std::size_t n_unanswerable = 0;
  std::size_t n_segments = 0;  // segments of answerable episodes
  std::vector<SegmentDistance> distances;  // per segment index
  std::vector<BucketRow> buckets;          // winner-distance buckets
};

// Evaluates run_dir/checkpoint.bin on the dataset with argmax decoding;
// writes predictions.jsonl, f1.csv, hit_rate.csv, center_distances.csv and
// distance_bucket_f1.csv under run_dir. Errors when the checkpoint and config
// disagree on encoder dimensions.
EvalSummary run_eval(const RunConfig& cfg, const std::string& run_dir,
                     const std::string& data_path, std::ostream& log);

// Trains one fixed-stride baseline per train stride on the first 80% of the
// dataset and evaluates each prediction stride on the held-out 20%; writes the
// F1 grid to out_dir/sweep.csv with per-cell run directories underneath.
void run_sweep(const RunConfig& cfg, std::uint64_t seed, const std::string& data_path,
               const std::vector<int>& train_strides,
               const std::vector<int>& pred_strides, const std::string& out_dir,
               std::ostream& log);

// Writes per-segment read traces (doc_start, action, q, best local span) for
// the given example ids to run_dir/trace.txt using run_dir/checkpoint.bin.
void run_trace(const RunConfig& cfg, const std::string& run_dir,
               const std::string& data_path, const std::vector<std::uint64_t>& ids,
               std::ostream& log);

}  // namespace rcm
