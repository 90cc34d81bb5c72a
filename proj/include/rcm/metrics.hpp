#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "rcm/answer.hpp"
#include "rcm/data.hpp"
#include "rcm/episode.hpp"

namespace rcm {

// Word-level F1 with multiset intersection; returns the max over references.
double word_f1(const std::vector<std::string>& pred,
               const std::vector<std::vector<std::string>>& refs);

// Full scoring rule including UNANSWERABLE: an unanswerable prediction scores
// 1 iff the example is unanswerable; a span prediction on an unanswerable
// example scores 0.
double example_f1(const AnswerPrediction& pred, const QAExample& ex, const Vocab& v);

// Share of segments whose window contains the complete answer, over the
// answerable episodes.
double hit_rate(const std::vector<Episode>& episodes);

struct SegmentDistance {
  double mean = 0.0;
  std::size_t count = 0;
};

// Mean |answer center - window center| per segment index, in document tokens,
// over answerable episodes. episodes[i] must correspond to examples[i].
std::vector<SegmentDistance> center_distances(const std::vector<Episode>& episodes,
                                              const std::vector<QAExample>& examples);

double window_center_distance(const QAExample& ex, const SegmentState& s);

struct BucketRow {
  int lo = 0;  // bucket start in tokens; covers [lo, lo + width)
  double mean_f1 = 0.0;
  std::size_t count = 0;
};

// Buckets (distance, f1) pairs by distance; empty buckets are omitted, rows
// sorted by lo.
std::vector<BucketRow> distance_bucket_f1(
    const std::vector<std::pair<double, double>>& distance_f1, int bucket_width);

// Spearman rank correlation with average ranks on ties; 0 when either side
// has no variance.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace rcm
