// Exact-equivalence criteria: the sliding-window span decoder against
// exhaustive enumeration, and the reward recursion against its closed form.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "report.hpp"
#include "rcm/answer.hpp"
#include "rcm/chunking.hpp"
#include "rcm/episode.hpp"
#include "rcm/rng.hpp"

namespace {

bool same_prediction(const rcm::AnswerPrediction& a, const rcm::AnswerPrediction& b) {
  return a.segment == b.segment && a.start == b.start && a.end == b.end &&
         a.doc_start == b.doc_start && a.doc_end == b.doc_end && a.score == b.score &&
         a.unanswerable == b.unanswerable;
}

}  // namespace

TEST_CASE("acceptance_01_span_decode_matches_brute_force") {
  auto rng = rcm::make_rng(20260818);
  const int kEpisodes = 1000;
  int mismatches = 0;
  for (int t = 0; t < kEpisodes; ++t) {
    rcm::Episode ep = oracle::random_episode(rng, 3, 12);
    // Caps both shorter and longer than the widest window.
    int cap = 1 + static_cast<int>(rcm::uniform_int(rng, 0, 13));
    bool ok_q = same_prediction(rcm::decode_best_span(ep, cap),
                                oracle::brute_force_decode(ep, cap, true));
    bool ok_max = same_prediction(rcm::decode_maxpool(ep, cap),
                                  oracle::brute_force_decode(ep, cap, false));
    if (!ok_q || !ok_max) ++mismatches;
    CHECK(ok_q);
    CHECK(ok_max);
  }
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%d random episodes (max 3 segments, 12 tokens), q-weighted and "
                "max-pooled decode, exact span and score; %d mismatches",
                kEpisodes, mismatches);
  acc::report("criterion 01 span decode equals brute force", mismatches == 0, detail);
}

TEST_CASE("acceptance_02_reward_recursion_matches_closed_form") {
  auto rng = rcm::make_rng(40512);
  const int kVectors = 10000;
  double worst = 0.0;
  for (int t = 0; t < kVectors; ++t) {
    std::size_t n = static_cast<std::size_t>(1 + rcm::uniform_int(rng, 0, 7));
    std::vector<double> q(n), r(n);
    for (double& x : q) x = rcm::uniform01(rng);
    for (double& x : r) x = 4.0 * rcm::uniform01(rng) - 2.0;
    // Hit the stop-probability extremes now and then.
    if (t % 5 == 0) {
      std::size_t i = static_cast<std::size_t>(
          rcm::uniform_int(rng, 0, static_cast<std::int64_t>(n) - 1));
      q[i] = (t % 10 == 0) ? 0.0 : 1.0;
    }
    std::vector<double> acc = rcm::accumulated_rewards(q, r);
    REQUIRE(acc.size() == n);
    for (std::size_t c = 0; c < n; ++c)
      worst = std::max(worst, std::abs(acc[c] - oracle::closed_form_reward(q, r, c)));
  }
  bool ok = worst <= 1e-12;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "%d random (q, r) vectors of length 1-8, every suffix index; "
                "max abs err %.3e (tol 1e-12)",
                kVectors, worst);
  acc::report("criterion 02 reward recursion equals closed form", ok, detail);
  CHECK(ok);
}
