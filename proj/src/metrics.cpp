#include "rcm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace rcm {

namespace {

double f1_single(const std::vector<std::string>& pred,
                 const std::vector<std::string>& ref) {
  if (pred.empty() || ref.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : ref) ++counts[t];
  int common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  double p = static_cast<double>(common) / static_cast<double>(pred.size());
  double r = static_cast<double>(common) / static_cast<double>(ref.size());
  return 2.0 * p * r / (p + r);
}

}  // namespace

double word_f1(const std::vector<std::string>& pred,
               const std::vector<std::vector<std::string>>& refs) {
  if (refs.empty()) throw std::invalid_argument("word_f1: no references");
  double best = 0.0;
  for (const auto& ref : refs) best = std::max(best, f1_single(pred, ref));
  return best;
}

double example_f1(const AnswerPrediction& pred, const QAExample& ex, const Vocab& v) {
  if (pred.unanswerable || !ex.answerable)
    return (pred.unanswerable && !ex.answerable) ? 1.0 : 0.0;
  if (pred.doc_start < 0 || pred.doc_end < pred.doc_start ||
      pred.doc_end >= static_cast<int>(ex.doc.size()))
    throw std::invalid_argument("example_f1: prediction span outside document");
  std::vector<std::string> pred_tokens;
  for (int i = pred.doc_start; i <= pred.doc_end; ++i)
    pred_tokens.push_back(v.tokens.at(ex.doc[i]));
  std::vector<std::vector<std::string>> refs;
  for (const std::string& r : ex.refs) refs.push_back(split_words(r));
  return word_f1(pred_tokens, refs);
}

double hit_rate(const std::vector<Episode>& episodes) {
  std::size_t hits = 0, total = 0;
  for (const Episode& ep : episodes) {
    if (!ep.answerable) continue;
    for (const SegmentState& s : ep.segments) {
      ++total;
      hits += s.y == 1;
    }
  }
  return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
}

double window_center_distance(const QAExample& ex, const SegmentState& s) {
  if (!ex.answerable)
    throw std::invalid_argument("center distance: unanswerable example");
  double answer_center = (ex.answer_start + ex.answer_end) / 2.0;
  double window_center = s.input.doc_start + s.input.window_len / 2.0;
  return std::abs(answer_center - window_center);
}

std::vector<SegmentDistance> center_distances(const std::vector<Episode>& episodes,
                                              const std::vector<QAExample>& examples) {
  if (episodes.size() != examples.size())
    throw std::invalid_argument("center_distances: episodes and examples differ in size");
  std::vector<double> sums;
  std::vector<std::size_t> counts;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const Episode& ep = episodes[e];
    if (!ep.answerable) continue;
    for (std::size_t c = 0; c < ep.segments.size(); ++c) {
      if (sums.size() <= c) {
        sums.resize(c + 1, 0.0);
        counts.resize(c + 1, 0);
      }
      // answer center is the reference point even when the segment missed it
      sums[c] += window_center_distance(examples[e], ep.segments[c]);
      ++counts[c];
    }
  }
  std::vector<SegmentDistance> out(sums.size());
  for (std::size_t c = 0; c < sums.size(); ++c)
    out[c] = {counts[c] ? sums[c] / static_cast<double>(counts[c]) : 0.0, counts[c]};
  return out;
}

std::vector<BucketRow> distance_bucket_f1(
    const std::vector<std::pair<double, double>>& distance_f1, int bucket_width) {
  if (bucket_width < 1)
    throw std::invalid_argument("distance_bucket_f1: bucket width must be positive");
  std::map<int, std::pair<double, std::size_t>> buckets;
  for (const auto& [dist, f1] : distance_f1) {
    int lo = static_cast<int>(std::floor(dist / bucket_width)) * bucket_width;
    auto& [sum, count] = buckets[lo];
    sum += f1;
    ++count;
  }
  std::vector<BucketRow> rows;
  for (const auto& [lo, agg] : buckets)
    rows.push_back({lo, agg.first / static_cast<double>(agg.second), agg.second});
  return rows;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
    double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 2) throw std::invalid_argument("spearman: need at least 2 points");
  std::vector<double> ra = average_ranks(a), rb = average_ranks(b);
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= static_cast<double>(ra.size());
  mb /= static_cast<double>(rb.size());
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

}  // namespace rcm
