#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "rcm/chunking.hpp"
#include "rcm/episode.hpp"
#include "rcm/rng.hpp"
#include "rcm/tensor.hpp"

using namespace rcm;

namespace {

std::vector<double> rand_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * (2.0 * uniform01(rng) - 1.0);
  return v;
}

LstmParams zero_lstm(std::size_t d) {
  auto zv = [](const Shape& s) {
    std::size_t n = 1;
    for (std::size_t x : s) n *= x;
    return param(s, std::vector<double>(n, 0.0));
  };
  LstmParams p;
  p.wi = zv({d, 2 * d});
  p.bi = zv({d});
  p.wf = zv({d, 2 * d});
  p.bf = zv({d});
  p.wo = zv({d, 2 * d});
  p.bo = zv({d});
  p.wg = zv({d, 2 * d});
  p.bg = zv({d});
  return p;
}

}  // namespace

TEST_CASE("gated blend with zero logit weights is the exact mean") {
  auto rng = make_rng(31);
  std::size_t d = 4;
  Tensor v = param({d}, rand_vec(rng, d));
  Tensor vp = param({d}, rand_vec(rng, d));
  GatedParams p{param({2 * d}, std::vector<double>(2 * d, 0.0)),
                param({2 * d}, std::vector<double>(2 * d, 0.0))};
  Tensor out = recur_gated(v, vp, p);
  for (std::size_t i = 0; i < d; ++i)
    CHECK(out.data()[i] == 0.5 * v.data()[i] + 0.5 * vp.data()[i]);
}

TEST_CASE("gated blend saturates toward the dominant logit") {
  Tensor v = param({1}, {2.0});
  Tensor vp = param({1}, {-3.0});
  GatedParams p{param({2}, {20.0, 0.0}), param({2}, {-20.0, 0.0})};
  CHECK(std::abs(recur_gated(v, vp, p).value() - 2.0) < 1e-12);
}

TEST_CASE("gated blend matches the scalar recomputation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto rng = make_rng(100 + seed);
    std::size_t d = 1 + seed % 6;
    std::vector<double> vd = rand_vec(rng, d), vpd = rand_vec(rng, d);
    std::vector<double> aw = rand_vec(rng, 2 * d), bw = rand_vec(rng, 2 * d);
    Tensor out = recur_gated(param({d}, vd), param({d}, vpd),
                             {param({2 * d}, aw), param({2 * d}, bw)});
    std::vector<double> want = oracle::gated_blend(vd, vpd, aw, bw);
    for (std::size_t i = 0; i < d; ++i)
      CHECK(std::abs(out.data()[i] - want[i]) < 1e-12);
  }
}

TEST_CASE("gated blend rejects mismatched shapes") {
  auto rng = make_rng(1);
  GatedParams p = init_gated(4, rng);
  CHECK_THROWS(recur_gated(param({4}, rand_vec(rng, 4)),
                           param({3}, rand_vec(rng, 3)), p));
}

TEST_CASE("lstm cell with zero parameters zeroes the hidden state") {
  std::size_t d = 3;
  LstmParams p = zero_lstm(d);
  LstmState prev{param({d}, std::vector<double>(d, 0.0)),
                 param({d}, std::vector<double>(d, 0.0))};
  auto rng = make_rng(32);
  LstmState out = recur_lstm(param({d}, rand_vec(rng, d)), prev, p);
  for (std::size_t i = 0; i < d; ++i) {
    CHECK(out.h.data()[i] == 0.0);
    CHECK(out.c.data()[i] == 0.0);
  }
}

TEST_CASE("lstm cell with zero parameters halves the carried cell") {
  std::size_t d = 3;
  LstmParams p = zero_lstm(d);
  auto rng = make_rng(33);
  std::vector<double> carried = rand_vec(rng, d);
  LstmState prev{param({d}, std::vector<double>(d, 0.0)), param({d}, carried)};
  LstmState out = recur_lstm(param({d}, rand_vec(rng, d)), prev, p);
  for (std::size_t i = 0; i < d; ++i)
    CHECK(out.c.data()[i] == 0.5 * carried[i]);
}

TEST_CASE("lstm cell matches the scalar recomputation") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto rng = make_rng(200 + seed);
    std::size_t d = 1 + seed % 5;
    std::vector<double> vd = rand_vec(rng, d), hd = rand_vec(rng, d),
                        cd = rand_vec(rng, d);
    std::vector<double> wi = rand_vec(rng, 2 * d * d), bi = rand_vec(rng, d);
    std::vector<double> wf = rand_vec(rng, 2 * d * d), bf = rand_vec(rng, d);
    std::vector<double> wo = rand_vec(rng, 2 * d * d), bo = rand_vec(rng, d);
    std::vector<double> wg = rand_vec(rng, 2 * d * d), bg = rand_vec(rng, d);
    LstmParams p{param({d, 2 * d}, wi), param({d}, bi), param({d, 2 * d}, wf),
                 param({d}, bf),         param({d, 2 * d}, wo), param({d}, bo),
                 param({d, 2 * d}, wg), param({d}, bg)};
    LstmState out =
        recur_lstm(param({d}, vd), {param({d}, hd), param({d}, cd)}, p);
    oracle::LstmOut want = oracle::lstm_step(vd, hd, cd, wi, bi, wf, bf, wo, bo, wg, bg);
    for (std::size_t i = 0; i < d; ++i) {
      CHECK(std::abs(out.h.data()[i] - want.h[i]) < 1e-12);
      CHECK(std::abs(out.c.data()[i] - want.c[i]) < 1e-12);
    }
  }
}

TEST_CASE("chunk score is a sigmoid of the linear projection") {
  std::size_t d = 4;
  auto rng = make_rng(34);
  std::vector<double> vt = rand_vec(rng, d);
  ScorerParams zero{param({1, d}, std::vector<double>(d, 0.0)), param({1}, {0.0})};
  CHECK(chunk_score(param({d}, vt), zero).value() == 0.5);

  ScorerParams biased{param({1, d}, std::vector<double>(d, 0.0)), param({1}, {10.0})};
  CHECK(std::abs(chunk_score(param({d}, vt), biased).value() -
                 1.0 / (1.0 + std::exp(-10.0))) < 1e-15);

  std::vector<double> w = rand_vec(rng, d);
  double b = uniform01(rng) - 0.5;
  double logit = b;
  for (std::size_t i = 0; i < d; ++i) logit += w[i] * vt[i];
  ScorerParams p{param({1, d}, w), param({1}, {b})};
  CHECK(std::abs(chunk_score(param({d}, vt), p).value() - oracle::sigmoid(logit)) <
        1e-12);
}

TEST_CASE("policy distribution over equal logits is uniform") {
  std::size_t d = 4, na = 5;
  auto rng = make_rng(35);
  PolicyParams p;
  p.weight = param({na, d}, std::vector<double>(na * d, 0.0));
  p.bias = param({na}, std::vector<double>(na, 0.0));
  p.actions = {-8, 8, 16, 32, 64};
  Tensor dist = policy_dist(param({d}, rand_vec(rng, d)), p);
  REQUIRE(dist.numel() == na);
  for (std::size_t i = 0; i < na; ++i) CHECK(dist.data()[i] == 0.2);
}

TEST_CASE("policy distribution saturates on a dominant bias") {
  std::size_t d = 3, na = 3;
  PolicyParams p;
  p.weight = param({na, d}, std::vector<double>(na * d, 0.0));
  p.bias = param({na}, {0.0, 30.0, 0.0});
  p.actions = {-4, 4, 8};
  auto rng = make_rng(36);
  Tensor dist = policy_dist(param({d}, rand_vec(rng, d)), p);
  CHECK(dist.data()[1] > 0.999999);
  double s = 0.0;
  for (std::size_t i = 0; i < na; ++i) s += dist.data()[i];
  CHECK(std::abs(s - 1.0) < 1e-12);
}

TEST_CASE("policy gradients match finite differences") {
  auto rng = make_rng(37);
  std::size_t d = 4;
  PolicyParams p = init_policy(static_cast<int>(d), {-4, 4, 8}, rng);
  Tensor vt = param({d}, rand_vec(rng, d));
  auto f = [&] { return log_op(pick(policy_dist(vt, p), 1)); };
  CHECK(grad_check(f, {p.weight, p.bias, vt}) < 1e-4);
}

TEST_CASE("choose_action follows the stated selection rules") {
  auto rng = make_rng(38);
  for (int i = 0; i < 50; ++i)
    CHECK(choose_action({1.0, 0.0, 0.0}, ActionMode::sample, rng) == 0);
  CHECK(choose_action({0.2, 0.5, 0.3}, ActionMode::argmax, rng) == 1);
  // Ties break to the smallest index.
  CHECK(choose_action({0.4, 0.4, 0.2}, ActionMode::argmax, rng) == 0);
  CHECK_THROWS(choose_action({}, ActionMode::argmax, rng));
}

TEST_CASE("sampled action frequencies track the distribution") {
  std::vector<double> dist = {0.1, 0.2, 0.3, 0.4};
  std::vector<int> counts(4, 0);
  auto rng = make_rng(39);
  const int n = 100000;
  for (int i = 0; i < n; ++i)
    ++counts[choose_action(dist, ActionMode::sample, rng)];
  for (std::size_t i = 0; i < dist.size(); ++i)
    CHECK(std::abs(static_cast<double>(counts[i]) / n - dist[i]) < 0.01);
}

TEST_CASE("argmax choice is invariant to logit temperature") {
  auto rng = make_rng(40);
  auto softmax = [](const std::vector<double>& l) {
    double m = l[0];
    for (double x : l) m = std::max(m, x);
    std::vector<double> p(l.size());
    double z = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) z += p[i] = std::exp(l[i] - m);
    for (double& x : p) x /= z;
    return p;
  };
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> logits = rand_vec(rng, 5, 2.0);
    std::vector<double> scaled = logits;
    for (double& x : scaled) x *= 3.0;
    CHECK(choose_action(softmax(logits), ActionMode::argmax, rng) ==
          choose_action(softmax(scaled), ActionMode::argmax, rng));
  }
}

TEST_CASE("accumulated rewards match the hand-unrolled recursion") {
  std::vector<double> one = accumulated_rewards({1.0}, {0.3});
  REQUIRE(one.size() == 1);
  CHECK(one[0] == 0.3);

  std::vector<double> two = accumulated_rewards({0.5, 1.0}, {0.2, 0.4});
  REQUIRE(two.size() == 2);
  CHECK(two[1] == 0.4);
  CHECK(two[0] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("accumulated rewards equal the closed-form survival sum") {
  auto rng = make_rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    std::size_t n = 1 + static_cast<std::size_t>(uniform_int(rng, 0, 7));
    std::vector<double> q(n), r(n);
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = uniform01(rng);
      r[i] = uniform01(rng);
    }
    std::vector<double> big_r = accumulated_rewards(q, r);
    for (std::size_t c = 0; c < n; ++c) {
      CHECK(std::abs(big_r[c] - oracle::closed_form_reward(q, r, c)) < 1e-12);
      CHECK(big_r[c] >= 0.0);
      CHECK(big_r[c] <= 1.0);
    }
  }
}

TEST_CASE("a certain segment absorbs the reward recursion") {
  std::vector<double> q = {0.3, 0.6, 1.0, 0.4};
  std::vector<double> r1 = {0.2, 0.5, 0.7, 0.1};
  std::vector<double> r2 = r1;
  r2[3] = 0.9;  // only beyond the absorbing segment
  std::vector<double> a = accumulated_rewards(q, r1);
  std::vector<double> b = accumulated_rewards(q, r2);
  CHECK(a[2] == r1[2]);
  for (std::size_t c = 0; c <= 2; ++c) CHECK(a[c] == b[c]);
}

TEST_CASE("accumulated rewards validate their inputs") {
  CHECK_THROWS(accumulated_rewards({0.5}, {0.1, 0.2}));
  CHECK_THROWS(accumulated_rewards({}, {}));
  CHECK_THROWS(accumulated_rewards({1.5}, {0.1}));
  CHECK_THROWS(accumulated_rewards({0.5}, {-0.1}));
}

TEST_CASE("segment reward multiplies the gold start and end probabilities") {
  SegmentState s;
  s.y = 0;
  CHECK(segment_reward(s) == 0.0);

  std::size_t n = 6;
  s.y = 1;
  s.gold_start = 1;
  s.gold_end = 3;
  s.start_probs = from_data({n}, std::vector<double>(n, 1.0 / 6.0));
  s.end_probs = from_data({n}, std::vector<double>(n, 1.0 / 6.0));
  CHECK(segment_reward(s) == (1.0 / 6.0) * (1.0 / 6.0));

  std::vector<double> st(n, 0.0), en(n, 0.0);
  st[1] = 1.0;
  en[3] = 1.0;
  s.start_probs = from_data({n}, st);
  s.end_probs = from_data({n}, en);
  CHECK(segment_reward(s) == 1.0);

  s.gold_start = -1;
  CHECK_THROWS(segment_reward(s));
}

TEST_CASE("recurrence names round-trip") {
  CHECK(recurrence_from_string("gated") == Recurrence::gated);
  CHECK(recurrence_from_string("lstm") == Recurrence::lstm);
  CHECK(to_string(Recurrence::lstm) == "lstm");
  CHECK_THROWS_WITH_AS(recurrence_from_string("gru"), doctest::Contains("gru"),
                       std::invalid_argument);
}

TEST_CASE("policy params validation rejects degenerate action spaces") {
  PolicyParams p;
  p.actions = {8};
  CHECK_THROWS(p.validate());
  p.actions = {8, 8};
  CHECK_THROWS(p.validate());
  p.actions = {-8, -16};
  CHECK_THROWS(p.validate());
  p.actions = {-8, 16};
  CHECK_NOTHROW(p.validate());
}
