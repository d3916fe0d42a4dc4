#include <cmath>
#include <map>

#include "doctest.h"
#include "soslab/sos.hpp"

using namespace soslab;

namespace {

// Brute force over all height assignments of a small box.
double brute_log_z(const Box& box, const BoundaryCondition& bc, bool floor, double beta, int hmax,
                   std::vector<std::vector<double>>* marg = nullptr) {
  HeightField f(box, bc, floor, beta, 0);
  std::vector<Site> sites;
  for (i64 y = box.origin.y; y < box.origin.y + box.height; ++y)
    for (i64 x = box.origin.x; x < box.origin.x + box.width; ++x) sites.push_back({x, y});
  const int lo = floor ? 0 : -hmax;
  const int range = hmax - lo + 1;
  std::vector<int> h(sites.size(), lo);
  double z = 0.0;
  if (marg) marg->assign(sites.size(), std::vector<double>(static_cast<std::size_t>(range), 0.0));
  while (true) {
    for (std::size_t i = 0; i < sites.size(); ++i) f.set(sites[i], h[i]);
    const double w = std::exp(-beta * static_cast<double>(hamiltonian(f)));
    z += w;
    if (marg)
      for (std::size_t i = 0; i < sites.size(); ++i) (*marg)[i][static_cast<std::size_t>(h[i] - lo)] += w;
    std::size_t k = 0;
    while (k < h.size() && ++h[k] > hmax) h[k++] = lo;
    if (k == h.size()) break;
  }
  if (marg)
    for (auto& m : *marg)
      for (double& v : m) v /= z;
  return std::log(z);
}

}  // namespace

TEST_CASE("hamiltonian examples") {
  const Box b(3, 3);
  HeightField f(b, BoundaryCondition::constant(0), true, 1.0, 0);
  CHECK(hamiltonian(f) == 0);
  f.set({2, 2}, 1);
  CHECK(hamiltonian(f) == 4);

  HeightField g(Box(2, 2), BoundaryCondition::constant(0), true, 1.0, 0);
  g.set({1, 1}, 1);
  g.set({2, 1}, 1);
  g.set({1, 2}, 2);
  g.set({2, 2}, 2);
  // internal: 0 + 0 + 1 + 1; boundary: bottom 1+1, sides 1+1+2+2, top 2+2
  CHECK(hamiltonian(g) == 14);

  HeightField c(Box(4, 2), BoundaryCondition::constant(3), false, 1.0, 3);
  CHECK(hamiltonian(c) == 0);
}

TEST_CASE("heat bath conditional probabilities") {
  for (double beta : {0.3, 1.0, 2.0}) {
    const HeatBath hb(beta);
    const double r = std::exp(-4 * beta);
    const int zero[4] = {0, 0, 0, 0};
    CHECK(hb.probability(0, zero, true) == doctest::Approx(1 - r).epsilon(1e-12));
    CHECK(hb.probability(0, zero, false) == doctest::Approx((1 - r) / (1 + r)).epsilon(1e-12));
    // against direct normalisation over a wide window
    for (auto nb : {std::array<int, 4>{0, 1, 3, 2}, std::array<int, 4>{5, 5, 0, 1}, std::array<int, 4>{-2, 4, 4, 0},
                    std::array<int, 4>{2, 2, 2, 7}}) {
      for (bool floor : {true, false}) {
        double z = 0;
        for (int h = -80; h <= 80; ++h) {
          if (floor && h < 0) continue;
          z += std::exp(-beta * (std::abs(h - nb[0]) + std::abs(h - nb[1]) + std::abs(h - nb[2]) + std::abs(h - nb[3])));
        }
        for (int h = -3; h <= 8; ++h) {
          double p = (floor && h < 0) ? 0.0
                                      : std::exp(-beta * (std::abs(h - nb[0]) + std::abs(h - nb[1]) +
                                                          std::abs(h - nb[2]) + std::abs(h - nb[3]))) / z;
          CHECK(hb.probability(h, nb.data(), floor) == doctest::Approx(p).epsilon(1e-10));
        }
      }
    }
  }
}

TEST_CASE("heat bath sampler frequencies") {
  const double beta = 0.4;
  const HeatBath hb(beta);
  Rng rng(7);
  const int nb[4] = {1, 0, 3, 1};
  for (bool floor : {true, false}) {
    std::map<int, int> counts;
    const int n = 200000;
    for (int i = 0; i < n; ++i) counts[hb.sample(nb, floor, rng)]++;
    for (int h = -2; h <= 6; ++h) {
      const double p = hb.probability(h, nb, floor);
      const double se = std::sqrt(p * (1 - p) / n) + 1e-12;
      CHECK(std::abs(counts[h] / double(n) - p) < 5 * se + 1e-9);
    }
    if (floor) CHECK(counts[-1] + counts[-2] == 0);
  }
}

TEST_CASE("zero temperature limit") {
  const HeatBath hb(30.0);
  Rng rng(1);
  const int nb[4] = {2, 2, 2, 5};
  for (int i = 0; i < 100; ++i) CHECK(hb.sample(nb, true, rng) == 2);
}

TEST_CASE("detailed balance on a tiny box") {
  // heat bath P(phi -> phi') = pi(phi') / sum_h pi(phi^h), so pi(phi)P(phi->phi') is symmetric
  const double beta = 0.7;
  const Box b(2, 1);
  HeightField f(b, BoundaryCondition::constant(1), true, beta, 0);
  const HeatBath hb(beta);
  for (int a = 0; a < 4; ++a)
    for (int x = 0; x < 4; ++x)
      for (int y = 0; y < 4; ++y) {
        f.set({1, 1}, a);
        f.set({2, 1}, x);
        const double pix = std::exp(-beta * hamiltonian(f));
        f.set({2, 1}, y);
        const double piy = std::exp(-beta * hamiltonian(f));
        const int nb[4] = {f.at({1, 1}), f.at({3, 1}), f.at({2, 0}), f.at({2, 2})};
        CHECK(pix * hb.probability(y, nb, true) == doctest::Approx(piy * hb.probability(x, nb, true)).epsilon(1e-12));
      }
}

TEST_CASE("run_chain plumbing") {
  const Box b(4, 4);
  Observable sum = [](const HeightField& f) {
    double s = 0;
    for (i64 y = 1; y <= 4; ++y)
      for (i64 x = 1; x <= 4; ++x) s += f.at({x, y});
    return s;
  };
  HeightField f1(b, BoundaryCondition::constant(0), true, 1.0);
  Rng r1(42);
  CHECK(run_chain(f1, 0, r1, {sum}).empty());
  HeightField a(b, BoundaryCondition::constant(0), true, 1.0), c(b, BoundaryCondition::constant(0), true, 1.0);
  Rng ra(5), rc(5);
  const auto sa = run_chain(a, 50, ra, {sum, sum});
  const auto sc = run_chain(c, 50, rc, {sum, sum});
  CHECK(sa.size() == 50);
  CHECK(sa == sc);
  CHECK_THROWS(run_chain(a, -1, ra, {}));
}

TEST_CASE("exact enumeration: single site geometric series") {
  for (double beta : {0.5, 1.0, 2.0}) {
    const double r = std::exp(-4 * beta);
    const auto fl = exact_enumerate(Box(1, 1), BoundaryCondition::constant(0), true, beta, 6);
    double z = 0;
    for (int h = 0; h <= 6; ++h) z += std::pow(r, h);
    CHECK(fl.log_z == doctest::Approx(std::log(z)).epsilon(1e-13));
    const auto big = exact_enumerate(Box(1, 1), BoundaryCondition::constant(0), true, beta, 200, false);
    CHECK(big.log_z == doctest::Approx(-std::log1p(-r)).epsilon(1e-12));
    const auto nf = exact_enumerate(Box(1, 1), BoundaryCondition::constant(0), false, beta, 200, false);
    CHECK(nf.log_z == doctest::Approx(std::log((1 + r) / (1 - r))).epsilon(1e-12));
  }
}

TEST_CASE("exact enumeration matches brute force") {
  struct Case {
    Box box;
    BoundaryCondition bc;
    bool floor;
    int hmax;
  };
  std::unordered_map<Site, int, SiteHash> m{{{0, 1}, 3}, {{1, 3}, 2}};
  const std::vector<Case> cases = {
      {Box(2, 2), BoundaryCondition::constant(0), true, 4},
      {Box(3, 2), BoundaryCondition::constant(1), true, 3},
      {Box(2, 3), BoundaryCondition::dobrushin_0111(), false, 2},
      {Box(3, 2), BoundaryCondition::legs(2, 1, 2, 3), true, 3},
      {Box(2, 2), BoundaryCondition::explicit_heights(m, 1), false, 2},
  };
  for (const auto& c : cases) {
    for (double beta : {0.4, 1.3}) {
      std::vector<std::vector<double>> marg;
      const double lz = brute_log_z(c.box, c.bc, c.floor, beta, c.hmax, &marg);
      const auto ex = exact_enumerate(c.box, c.bc, c.floor, beta, c.hmax);
      CHECK(ex.log_z == doctest::Approx(lz).epsilon(1e-12));
      for (std::size_t i = 0; i < marg.size(); ++i)
        for (std::size_t k = 0; k < marg[i].size(); ++k) CHECK(ex.marginals[i][k] == doctest::Approx(marg[i][k]).epsilon(1e-10));
    }
  }
}

TEST_CASE("exact enumeration truncation behaviour") {
  const double beta = 0.6;
  double prev = -1e300;
  std::vector<double> lz;
  for (int hmax = 0; hmax <= 8; ++hmax) {
    const auto r = exact_enumerate(Box(2, 2), BoundaryCondition::constant(0), true, beta, hmax, false);
    CHECK(r.log_z > prev);
    prev = r.log_z;
    lz.push_back(r.log_z);
  }
  // successive increments shrink at rate about e^{-4 beta}
  for (std::size_t k = 2; k + 1 < lz.size(); ++k) {
    const double ratio = (lz[k + 1] - lz[k]) / (lz[k] - lz[k - 1]);
    CHECK(ratio < 1.5 * std::exp(-4 * beta));
  }
  const auto d = exact_enumerate(Box(2, 2), BoundaryCondition::constant(0), true, beta);
  CHECK(d.h_hi == default_hmax(beta));
  CHECK(d.tail_bound < 1e-15);
}

TEST_CASE("beta to infinity concentrates on the boundary height") {
  const auto r = exact_enumerate(Box(2, 2), BoundaryCondition::constant(3), true, 12.0, 6);
  for (const auto& m : r.marginals) CHECK(m[3] > 1 - 1e-15);
}

TEST_CASE("stochastic monotonicity in the boundary height") {
  const double beta = 0.5;
  for (int j = 0; j < 3; ++j) {
    const auto lo = exact_enumerate(Box(2, 2), BoundaryCondition::constant(j), true, beta, 8);
    std::unordered_map<Site, int, SiteHash> raised{{{0, 1}, j + 2}, {{1, 3}, j + 1}};
    const auto hi = exact_enumerate(Box(2, 2), BoundaryCondition::explicit_heights(raised, j), true, beta, 8);
    for (std::size_t i = 0; i < lo.marginals.size(); ++i) {
      double clo = 0, chi = 0;
      for (std::size_t k = 0; k < lo.marginals[i].size(); ++k) {
        clo += lo.marginals[i][k];
        chi += hi.marginals[i][k];
        CHECK(chi <= clo + 1e-12);
      }
    }
  }
}

TEST_CASE("guard") {
  CHECK_THROWS_AS(exact_enumerate(Box(6, 6), BoundaryCondition::constant(0), false, 0.2, 30, false, 1e6), GuardError);
}

TEST_CASE("cluster boundary size d") {
  CHECK(cluster_d({{0, 0}}) == 4);
  CHECK(cluster_d({{0, 0}, {1, 0}}) == 7);
  CHECK(cluster_d({{0, 0}, {1, 0}, {0, 1}}) == 9);
  CHECK(cluster_d({{0, 0}, {1, 0}, {2, 0}}) == 10);
  CHECK(cluster_d({{0, 0}, {1, 0}, {0, 1}, {1, 1}}) == 11);
  std::vector<Site> block;
  for (i64 x = 0; x < 3; ++x)
    for (i64 y = 0; y < 3; ++y) block.push_back({x, y});
  CHECK(cluster_d(block) == 19);
  // d is at least the number of boundary bonds and invariant under symmetries
  CHECK(cluster_d({{0, 0}, {0, 1}, {0, 2}}) == 10);
  CHECK(cluster_d({{5, -2}, {6, -2}, {5, -1}}) == 9);
}

TEST_CASE("f_U: single site and disconnected clusters") {
  for (double beta : {1.0, 2.0}) {
    const double r = std::exp(-4 * beta);
    const auto cw = cluster_weight_fU({{0, 0}}, {}, beta, 60);
    CHECK(cw.value == doctest::Approx(std::log((1 + r) / (1 - r))).epsilon(1e-12));
    CHECK(cw.d_value == 4);
    const auto cu = cluster_weight_fU({{0, 0}}, {{0, 0}}, beta, 60);
    CHECK(cu.value == doctest::Approx(-std::log1p(-r)).epsilon(1e-12));
    const auto far = cluster_weight_fU({{0, 0}, {2, 0}}, {}, beta);
    CHECK(std::abs(far.value) < 1e-10);
    const auto diag = cluster_weight_fU({{0, 0}, {1, 1}, {3, 0}}, {{1, 1}}, beta);
    CHECK(std::abs(diag.value) < 1e-10);
  }
}

TEST_CASE("f_U: domino against a double sum") {
  const double beta = 2.0;
  const int H = 20;
  auto single = [&](bool pos) {
    double z = 0;
    for (int h = pos ? 0 : -H; h <= H; ++h) z += std::exp(-4 * beta * std::abs(h));
    return std::log(z);
  };
  auto pair = [&](bool p1, bool p2) {
    double z = 0;
    for (int a = p1 ? 0 : -H; a <= H; ++a)
      for (int b = p2 ? 0 : -H; b <= H; ++b)
        z += std::exp(-beta * (3 * std::abs(a) + 3 * std::abs(b) + std::abs(a - b)));
    return std::log(z);
  };
  const double f0 = pair(false, false) - 2 * single(false);
  const auto cw = cluster_weight_fU({{0, 0}, {1, 0}}, {}, beta, H);
  CHECK(cw.value == doctest::Approx(f0).epsilon(1e-10));
  CHECK(cw.d_value == 7);
  CHECK(std::abs(cw.value) <= std::exp(-(beta - 1) * cw.d_value));
  const double f1 = pair(true, false) - single(true) - single(false);
  CHECK(cluster_weight_fU({{0, 0}, {1, 0}}, {{0, 0}}, beta, H).value == doctest::Approx(f1).epsilon(1e-10));
  // translation covariance and independence of U outside V
  CHECK(cluster_weight_fU({{4, 7}, {5, 7}}, {{4, 7}, {9, 9}}, beta, H).value == doctest::Approx(f1).epsilon(1e-10));
}

TEST_CASE("f_U: expansion reproduces log Z on small regions") {
  const double beta = 1.5;
  ClusterExpansion ce(beta);
  const std::vector<Site> region{{0, 0}, {1, 0}, {0, 1}, {1, 1}, {2, 0}};
  const std::vector<Site> u{{0, 0}, {2, 0}};
  double sum = 0;
  for (std::uint32_t mask = 1; mask < (1u << region.size()); ++mask) {
    std::vector<Site> v;
    for (std::size_t i = 0; i < region.size(); ++i)
      if (mask & (1u << i)) v.push_back(region[i]);
    sum += ce.f(v, u).value;
  }
  CHECK(sum == doctest::Approx(ce.log_z_hat(region, u)).epsilon(1e-11));
}

TEST_CASE("area tilt weight") {
  CHECK(area_tilt_weight(0, 50, 1.0, 0) == 1.0);
  const double w1 = area_tilt_weight(7, 50, 1.0, 1, 0.7), w2 = area_tilt_weight(14, 50, 1.0, 1, 0.7);
  CHECK(w2 == doctest::Approx(w1 * w1).epsilon(1e-13));
  const double beta = 1.25, L = std::exp(4 * beta);
  CHECK(area_tilt_weight(9, L, beta, 0) == doctest::Approx(std::exp(-(1 - std::exp(-4 * beta)) * 9 / L)).epsilon(1e-12));
  CHECK(area_tilt_lambda(L, beta, 2) == doctest::Approx((1 - std::exp(-4 * beta)) * std::exp(8 * beta)).epsilon(1e-12));
}
