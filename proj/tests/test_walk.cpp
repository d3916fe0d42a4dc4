#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>

#include "soslab/walk.hpp"

using namespace soslab;

namespace {

StepDistribution skewed_step() {
  // centred in y, asymmetric, with longer x jumps
  return StepDistribution::from_pairs({{{1, -1}, 0.3}, {{1, 0}, 0.2}, {{2, 1}, 0.15}, {{1, 2}, 0.1}, {{3, 0}, 0.05},
                                       {{2, -2}, 0.05}, {{1, 1}, 0.15}});
}

// Independent hitting probability: enumerate every step word.
double brute_hitting(const StepDistribution& st, Site u, Site v) {
  std::function<double(Site)> go = [&](Site at) -> double {
    if (at == v) return 1.0;
    if (at.x >= v.x) return 0.0;
    double p = 0.0;
    for (std::size_t k = 0; k < st.steps.size(); ++k) {
      const Site n = at + st.steps[k];
      if (n.y >= 0) p += st.probs[k] * go(n);
    }
    return p;
  };
  return go(u);
}

}  // namespace

TEST_CASE("step distribution basics") {
  const auto s = uniform_step3();
  CHECK(s.mass() == doctest::Approx(1.0));
  CHECK(s.mean_x() == doctest::Approx(1.0));
  CHECK(s.mean_y() == doctest::Approx(0.0));
  CHECK(s.var_y() == doctest::Approx(2.0 / 3));
  CHECK(s.sigma_sq() == doctest::Approx(2.0 / 3));
  CHECK_THROWS_AS(StepDistribution::from_pairs({{{0, 1}, 1.0}}), std::invalid_argument);
  const auto d = StepDistribution::from_pairs({{{1, 0}, 0.2}, {{1, 0}, 0.3}});
  CHECK(d.steps.size() == 1);
  CHECK(d.probs[0] == doctest::Approx(0.5));
}

TEST_CASE("simulate") {
  Rng rng(1);
  const auto s = uniform_step3();
  CHECK(simulate(s, {2, 3}, 0, rng).positions == std::vector<Site>{{2, 3}});
  const auto point = StepDistribution::from_pairs({{{1, 0}, 1.0}});
  const auto w = simulate(point, {0, 0}, 5, rng);
  for (int i = 0; i <= 5; ++i) CHECK(w.positions[static_cast<std::size_t>(i)] == Site{i, 0});

  const auto sk = skewed_step();
  const int n = 100000;
  const auto p = simulate(sk, {0, 0}, n, rng);
  for (std::size_t i = 0; i < p.steps.size(); ++i) REQUIRE(p.positions[i + 1] - p.positions[i] == p.steps[i]);
  const double mx = static_cast<double>(p.positions.back().x) / n, my = static_cast<double>(p.positions.back().y) / n;
  CHECK(std::abs(mx - sk.mean_x()) <= 3 * std::sqrt(sk.var_x() / n));
  CHECK(std::abs(my - sk.mean_y()) <= 3 * std::sqrt(sk.var_y() / n));

  Rng a(9), b(9);
  CHECK(simulate(sk, {0, 0}, 50, a).positions == simulate(sk, {0, 0}, 50, b).positions);
}

TEST_CASE("hitting probability small cases") {
  const auto s = uniform_step3();
  CHECK(hitting_probability_dp(s, {0, 1}, {1, 1}) == doctest::Approx(1.0 / 3));
  // (0,0), (+1,-1), (-1,+1): all stay at heights >= 0
  CHECK(hitting_probability_dp(s, {0, 1}, {2, 1}) == doctest::Approx(1.0 / 3));
  CHECK(hitting_probability_dp(s, {0, 0}, {2, 0}) == doctest::Approx(2.0 / 9));
  CHECK(hitting_probability_dp(s, {0, 1}, {0, 1}) == 0.0);
  const auto sk = skewed_step();
  for (Site u : {Site{0, 0}, Site{0, 2}})
    for (Site v : {Site{4, 0}, Site{5, 3}, Site{6, 1}})
      CHECK(hitting_probability_dp(sk, u, v) == doctest::Approx(brute_hitting(sk, u, v)).epsilon(1e-12));
}

TEST_CASE("hitting probability against Monte Carlo") {
  const auto sk = skewed_step();
  Rng rng(4);
  const Site u{0, 1}, v{12, 2};
  const double p = hitting_probability_dp(sk, u, v);
  const int n = 100000;
  int hits = 0;
  std::discrete_distribution<std::size_t> pick(sk.probs.begin(), sk.probs.end());
  for (int i = 0; i < n; ++i) {
    Site at = u;
    while (at.x < v.x && at.y >= 0) at = at + sk.steps[pick(rng)];
    hits += at == v;
  }
  CHECK(std::abs(static_cast<double>(hits) / n - p) <= 3 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("hitting column matches pointwise DP") {
  const auto sk = skewed_step();
  const int cap = dp_height_cap(sk, {0, 10}, {30, 10});
  const auto col = hitting_column(sk, 30, 4, cap);
  for (int a : {0, 1, 5, 9})
    CHECK(col[static_cast<std::size_t>(a)] == doctest::Approx(hitting_probability_dp(sk, {0, a}, {30, 4})).epsilon(1e-9));
}

TEST_CASE("DP guard") {
  CHECK_THROWS_AS(hitting_probability_dp(uniform_step3(), {0, 0}, {10000, 0}, 1e4), GuardError);
}

TEST_CASE("survival curve") {
  // SSRW from height 0 killed below 0: P(H > 2) = P(first step up) = 1/2
  const auto c = survival_curve(ssrw_step(), 0, 4);
  CHECK(c[0] == 1.0);
  CHECK(c[1] == doctest::Approx(0.5));
  CHECK(c[2] == doctest::Approx(0.5));
  CHECK(c[3] == doctest::Approx(0.375));
  for (std::size_t k = 1; k < c.size(); ++k) CHECK(c[k] <= c[k - 1]);
}

TEST_CASE("local profile") {
  const auto s = uniform_step3();
  const auto lp = local_profile(s, 1, 1, 3);
  // unit x steps: a single column at N = 3
  REQUIRE(lp.p.size() == 1);
  CHECK(lp.n0 == 3);
  const auto sk = skewed_step();
  const auto q = local_profile(sk, 1, 1, 200);
  CHECK(q.variance() / (200 * sk.var_x()) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(q.mean() / (200 * sk.mean_x()) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("harmonic function of simple walks is the identity") {
  for (const auto& step : {std::map<int, double>{{-1, 0.5}, {1, 0.5}}, std::map<int, double>{{-1, 1.0}, {0, 1.0}, {1, 1.0}}}) {
    const auto V = doney_V1(step, 50);
    for (int a = 1; a <= 50; ++a) {
      CHECK(V.values[static_cast<std::size_t>(a)] == doctest::Approx(a).epsilon(1e-14));
      CHECK(std::abs(V.residuals[static_cast<std::size_t>(a)]) <= 1e-12);
    }
  }
}

TEST_CASE("harmonic function of a geometric-tail step") {
  // centred, asymmetric, exponential tails on both sides
  std::map<int, double> step;
  for (int k = 1; k <= 30; ++k) step[k] = std::pow(0.5, k);
  double neg = 0.0;
  for (const auto& [k, p] : step) neg += k * p;
  step[-2] = neg / 2 * 0.5;
  step[-1] = neg * 0.5 - 2 * step[-2] + neg / 2;  // keeps the mean zero
  double mean = 0.0;
  for (const auto& [k, p] : step) mean += k * p;
  REQUIRE(std::abs(mean) < 1e-12);

  const auto V = doney_V1(step, 200);
  CHECK(V.max_residual() <= 1e-6);
  for (int a = 2; a <= 200; ++a) CHECK(V.values[static_cast<std::size_t>(a)] >= V.values[static_cast<std::size_t>(a - 1)]);
  CHECK(V.values[200] / 200 == doctest::Approx(1.0).epsilon(0.1));
  // V(a) - a settles to a constant
  CHECK(std::abs((V.values[200] - 200) - (V.values[150] - 150)) <= 1e-6);

  const auto R = doney_V1_reversed(step, 200);
  CHECK(R.reversed);
  CHECK(R.max_residual() <= 1e-6);
}

TEST_CASE("a slightly drifting step is centred before solving") {
  std::map<int, double> step{{-2, 0.1}, {-1, 0.3}, {0, 0.2}, {1, 0.3}, {2, 0.1 + 1e-4}};
  const auto V = doney_V1(step, 100);
  CHECK(V.tilt < 0.0);
  CHECK(V.max_residual() <= 1e-12);
  CHECK(V.values[100] - V.values[99] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("bridge sampler likelihood matches enumeration") {
  const auto sk = skewed_step();
  const Site u{0, 1}, v{6, 2};
  BridgeSampler bs(sk, u, v);
  CHECK(bs.probability() == doctest::Approx(brute_hitting(sk, u, v)).epsilon(1e-12));
  // enumerate all paths, compare the conditional law
  double total = 0.0;
  std::vector<Site> stack;
  std::function<void(Site, double)> go = [&](Site at, double p) {
    if (at == v) {
      WalkPath w{u, stack, {u}};
      for (const Site& s : stack) w.positions.push_back(w.positions.back() + s);
      CHECK(bs.log_likelihood(w) == doctest::Approx(std::log(p / bs.probability())).epsilon(1e-12));
      total += std::exp(bs.log_likelihood(w));
      return;
    }
    if (at.x >= v.x) return;
    for (std::size_t k = 0; k < sk.steps.size(); ++k) {
      const Site n = at + sk.steps[k];
      if (n.y < 0) continue;
      stack.push_back(sk.steps[k]);
      go(n, p * sk.probs[k]);
      stack.pop_back();
    }
  };
  go(u, 1.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // empirical path frequencies
  Rng rng(2);
  std::map<std::vector<Site>, int> freq;
  const int n = 50000;
  for (int i = 0; i < n; ++i) freq[bs.sample(rng).steps] += 1;
  for (const auto& [steps, c] : freq) {
    WalkPath w{u, steps, {u}};
    for (const Site& s : steps) w.positions.push_back(w.positions.back() + s);
    const double p = std::exp(bs.log_likelihood(w));
    CHECK(std::abs(static_cast<double>(c) / n - p) <= 5 * std::sqrt(p / n) + 1e-4);
  }
}

TEST_CASE("bridge contract and degenerate bridge") {
  Rng rng(5);
  const auto s = uniform_step3();
  const auto one = conditioned_bridge(s, {0, 1}, {1, 2}, rng);
  CHECK(one.steps == std::vector<Site>{{1, 1}});
  for (int i = 0; i < 200; ++i) {
    const auto w = conditioned_bridge(s, {0, 1}, {40, 1}, rng);
    CHECK(w.positions.back() == Site{40, 1});
    for (const Site& q : w.positions) CHECK(q.y >= 0);
  }
  CHECK_THROWS(conditioned_bridge(s, {0, 1}, {1, 5}, rng));
}

TEST_CASE("rejection and DP bridges agree in law") {
  Rng rng(8);
  const auto s = uniform_step3();
  const Site u{0, 1}, v{30, 1};
  std::vector<double> a, b;
  for (int i = 0; i < 10000; ++i) {
    a.push_back(static_cast<double>(conditioned_bridge(s, u, v, rng).positions[15].y));
    b.push_back(static_cast<double>(conditioned_bridge(s, u, v, rng, BridgeMethod::rejection).positions[15].y));
  }
  // KS critical value at p = 0.01 for two samples of 10^4
  CHECK(ks_distance(a, 0, b, 0) <= 1.63 * std::sqrt(2.0 / 10000));
}

TEST_CASE("midpoint height grows like sqrt N") {
  Rng rng(12);
  const auto s = uniform_step3();
  std::vector<double> ns, means;
  for (int N : {64, 256, 1024}) {
    BridgeSampler bs(s, {0, 1}, {N, 1});
    double m = 0.0;
    const int reps = 2000;
    for (int i = 0; i < reps; ++i) m += static_cast<double>(bs.sample(rng).positions[static_cast<std::size_t>(N / 2)].y);
    ns.push_back(N);
    means.push_back(m / reps);
  }
  CHECK(loglog_slope(ns, means, "midpoint").estimate == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("rescale") {
  WalkPath flat{{3, 0}, {}, {}};
  for (int i = 0; i <= 10; ++i) flat.positions.push_back({3 + i, 0});
  const auto r = rescale(flat, 1.0);
  CHECK(r.times.front() == 0.0);
  CHECK(r.times.back() == 1.0);
  for (double y : r.values) CHECK(y == 0.0);

  WalkPath w{{0, 0}, {}, {{0, 0}, {1, 2}, {2, 4}}};
  CHECK(rescale(w, 1.0, 4).values[2] == doctest::Approx(rescale(w, 1.0, 1).values[2] / 2));
  CHECK(rescale(w, 2.0).values[1] == doctest::Approx(rescale(w, 1.0).values[1] / 2));
  CHECK(rescale(w, 1.0).at(0.25) == doctest::Approx(0.5 * 2 / std::sqrt(2.0)));
  // a vertical shift of the path shifts the curve by shift / (sigma sqrt n)
  WalkPath up = w;
  for (Site& q : up.positions) q.y += 3;
  CHECK(rescale(up, 1.0).values[1] - rescale(w, 1.0).values[1] == doctest::Approx(3 / std::sqrt(2.0)));
  CHECK(rescale(up, 1.0, -1, 3.0).values[1] == doctest::Approx(rescale(w, 1.0).values[1]));
}

TEST_CASE("excursion reference") {
  Rng rng(3);
  const auto ex = excursion_reference(8, {0.0, 0.5, 1.0}, 2000, rng);
  for (double x : ex[0]) CHECK(x == 0.0);
  for (double x : ex[2]) CHECK(x == 0.0);
  for (double x : ex[1]) {
    CHECK(x > 0.0);
    // heights are positive and have the parity of the midpoint
    CHECK(static_cast<long>(std::lround(x * 4)) % 2 == 0);
  }
  // mean midpoint of the Brownian excursion: sqrt(pi/2) * ... = 2 sqrt(2/pi) * 1/2
  const auto big = excursion_reference(1 << 12, {0.5}, 20000, rng);
  const double m = std::accumulate(big[0].begin(), big[0].end(), 0.0) / static_cast<double>(big[0].size());
  CHECK(m == doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(0.02));
}

TEST_CASE("KS distance") {
  Rng rng(6);
  std::normal_distribution<double> g;
  std::vector<double> a, b;
  for (int i = 0; i < 4000; ++i) {
    a.push_back(g(rng));
    b.push_back(g(rng));
  }
  CHECK(ks_distance(a, 0, a, 0) == 0.0);
  CHECK(ks_distance(a, 0, b, 0) <= 1.63 * std::sqrt(2.0 / 4000));
  std::vector<double> shifted = b;
  for (double& x : shifted) x += 1.0;
  CHECK(ks_distance(a, 0, shifted, 0) > 0.3);
  // degenerate: point masses
  CHECK(ks_distance({0, 0, 0}, 0, {0, 0}, 0) == 0.0);
  CHECK(ks_distance({0, 0}, 0, {1, 1}, 0) == 1.0);
  // lattice data against continuous data with the continuity correction
  std::vector<double> lat;
  std::uniform_real_distribution<double> u01(0, 1);
  for (int i = 0; i < 4000; ++i) lat.push_back(std::floor(u01(rng) * 10) / 10 + 0.05);
  std::vector<double> cont;
  for (int i = 0; i < 4000; ++i) cont.push_back(u01(rng));
  CHECK(lattice_spacing(lat) == doctest::Approx(0.1));
  CHECK(ks_distance(lat, 0.1, cont, 0) <= 1.63 * std::sqrt(2.0 / 4000));
  CHECK(ks_distance(lat, 0, cont, 0) >= 0.04);
}

TEST_CASE("log-log slope") {
  std::vector<double> x{1, 2, 4, 8}, y;
  for (double v : x) y.push_back(3 * std::pow(v, -1.5));
  const auto f = loglog_slope(x, y, "q");
  CHECK(f.estimate == doctest::Approx(-1.5));
  CHECK(f.stderr_ <= 1e-10);
  CHECK(f.window == "[1,8]");
}

TEST_CASE("ballot exponents for the lazy walk") {
  BallotOptions opt;
  opt.k_grid = {64, 128, 256, 512};
  opt.n_grid = {64, 128, 256, 512};
  opt.profile_k = 256;
  opt.grid_max = 4;
  opt.grid_n = 512;
  const auto r = ballot_check(uniform_step3(), skewed_step(), opt);
  CHECK(r.survival_slope.estimate == doctest::Approx(-0.5).epsilon(0.1));
  CHECK(r.hitting_slope.estimate == doctest::Approx(-1.5).epsilon(0.05));
  CHECK(r.profile_variance_ratio.estimate == doctest::Approx(1.0).epsilon(0.1));
  CHECK(r.v1_spread.estimate <= 0.1);
  // the factorization defect is of order (u^2 + v^2)/N
  opt.grid_n = 1024;
  const double half = ballot_check(uniform_step3(), skewed_step(), opt).v1_spread.estimate;
  CHECK(half / r.v1_spread.estimate == doctest::Approx(0.5).epsilon(0.1));
}

TEST_CASE("dip frequency") {
  WalkPath low{{0, 0}, {}, {}}, high{{0, 0}, {}, {}};
  for (int i = 0; i <= 100; ++i) {
    low.positions.push_back({i, 0});
    high.positions.push_back({i, 50});
  }
  CHECK(dip_frequency({low, high}, 100, 0.2) == doctest::Approx(0.5));
  // delta near 1/4: the window [N^{4 delta}, N - N^{4 delta}] is empty
  CHECK(dip_frequency({low, high}, 100, 0.249) == 0.0);
}
