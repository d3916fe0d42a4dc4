#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "soslab/cone.hpp"

using namespace soslab;

namespace {

Path walk_path(Site start, const std::vector<int>& dirs) {
  Path p{start};
  for (int d : dirs) p.push_back(p.back() + dir_step(d));
  return p;
}

std::vector<Cluster> sorted_clusters(std::vector<Cluster> cs) {
  std::sort(cs.begin(), cs.end());
  return cs;
}

// All admissible open paths from the origin of length <= max_len ending at a once-visited vertex.
void all_paths(PathBuilder& b, int max_len, std::vector<Path>& out) {
  if (b.length() > 0 && b.visits(b.head()) == 1) out.push_back(b.vertices());
  if (b.length() == max_len) return;
  for (int d = 0; d < 4; ++d)
    if (b.can_step(d)) {
      b.step(d);
      all_paths(b, max_len, out);
      b.undo();
    }
}

}  // namespace

TEST_CASE("cone points of simple paths") {
  const Path straight = walk_path({0, 0}, {kEast, kEast, kEast, kEast, kEast});
  CHECK(contour_cone_points(straight).size() == 6);
  CHECK(cone_points(Animal{straight, {}}).size() == 6);

  const Path rur = walk_path({0, 0}, {kEast, kNorth, kEast});
  CHECK(contour_cone_points(rur) == std::vector<std::size_t>{0, 3});
}

TEST_CASE("a cluster above the middle removes interior cone points") {
  // cell (3,2) has corners (3..4, 2..3): inside the forward cone of (0,0) and the backward
  // cone of (7,0), outside the double cone of every vertex in between
  const Path p = walk_path({0, 0}, std::vector<int>(7, kEast));
  const Animal a{p, {{{3, 2}}}};
  CHECK(contour_cone_points(p).size() == 8);
  CHECK(cone_points(a) == std::vector<std::size_t>{0, 7});
  CHECK(cell_in_forward_cone({0, 0}, {3, 2}));
  CHECK(cell_in_backward_cone({7, 0}, {3, 2}));
  CHECK_FALSE(cell_in_backward_cone({6, 0}, {3, 2}));
  CHECK_FALSE(cell_in_forward_cone({1, 0}, {3, 2}));
}

TEST_CASE("cells at the apex are in neither cone") {
  for (Cell c : {Cell{0, 0}, Cell{0, -1}, Cell{-1, 0}, Cell{-1, -1}}) {
    CHECK_FALSE(cell_in_forward_cone({0, 0}, c));
    CHECK_FALSE(cell_in_backward_cone({0, 0}, c));
  }
  CHECK(cell_in_forward_cone({0, 0}, {1, 0}));
  CHECK(cell_in_forward_cone({0, 0}, {1, -1}));
  CHECK_FALSE(cell_in_forward_cone({0, 0}, {1, 1}));
}

TEST_CASE("decomposition of simple paths") {
  const double beta = 2.0;
  const auto t = positive_transform(zero_decoration(), beta);

  const Animal straight{walk_path({5, 2}, {kEast, kEast, kEast}), {}};
  const auto d = decompose(straight);
  CHECK(d.splittable);
  CHECK(d.left.contour.size() == 1);
  CHECK(d.right.contour.size() == 1);
  REQUIRE(d.middle.size() == 3);
  double sum = piece_log_weight(d.left, t) + piece_log_weight(d.right, t);
  for (const auto& m : d.middle) {
    CHECK(m.contour == Path{{0, 0}, {1, 0}});
    sum += piece_log_weight(m, t);
  }
  CHECK(sum == doctest::Approx(-3 * beta));
  CHECK(d.reconstruct({5, 2}).contour == straight.contour);

  const Animal rur{walk_path({0, 0}, {kEast, kNorth, kEast}), {}};
  const auto e = decompose(rur);
  CHECK(e.splittable);
  CHECK(e.left.contour.size() == 1);
  CHECK(e.right.contour.size() == 1);
  REQUIRE(e.middle.size() == 1);
  CHECK(e.middle[0].contour == rur.contour);

  const Animal up{walk_path({0, 0}, {kNorth, kNorth}), {}};
  const auto f = decompose(up);
  CHECK_FALSE(f.splittable);
  CHECK(f.left.contour == up.contour);
}

TEST_CASE("random decorated animals factorize exactly") {
  std::mt19937_64 rng(7);
  const double beta = 2.0;
  const auto phi = synthetic_decoration(beta, 1.0, 1.0, 11);
  const auto t = positive_transform(phi, beta);
  int splittable = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Animal a = random_animal(rng, 40, 6.0, 0.05);
    const auto d = decompose(a);
    splittable += d.splittable;
    const Animal r = d.reconstruct(a.contour.front());
    REQUIRE(r.contour == a.contour);
    REQUIRE(sorted_clusters(r.clusters) == sorted_clusters(a.clusters));
    for (std::size_t i = 1; i < d.cone_points.size(); ++i) CHECK(d.cone_points[i].x > d.cone_points[i - 1].x);

    double sum = piece_log_weight(d.left, t) + piece_log_weight(d.right, t);
    for (const auto& m : d.middle) {
      sum += piece_log_weight(m, t);
      CHECK(is_irreducible(m));
    }
    worst = std::max(worst, std::abs(sum - animal_weight(a, t)));

    // every animal cone point is a contour cone point
    const auto ac = cone_points(a), cc = contour_cone_points(a.contour);
    CHECK(std::includes(cc.begin(), cc.end(), ac.begin(), ac.end()));
  }
  CHECK(worst <= 1e-9);
  CHECK(splittable > 500);
}

TEST_CASE("middle pieces decompose to themselves") {
  std::mt19937_64 rng(3);
  int seen = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto d = decompose(random_animal(rng, 30, 5.0, 0.05));
    for (const auto& m : d.middle) {
      const auto e = decompose(m);
      CHECK(e.left.contour.size() == 1);
      CHECK(e.right.contour.size() == 1);
      REQUIRE(e.middle.size() == 1);
      CHECK(e.middle[0].contour == m.contour);
      CHECK(sorted_clusters(e.middle[0].clusters) == sorted_clusters(m.clusters));
      ++seen;
    }
  }
  CHECK(seen > 100);
}

TEST_CASE("irreducible enumeration small cases") {
  const double beta = 2.0;
  IrreducibleOptions opt;
  opt.keep_paths = true;
  const auto one = enumerate_irreducible(beta, zero_decoration(), 1, opt);
  REQUIRE(one.classes.size() == 1);
  CHECK(one.classes[0].displacement == Site{1, 0});
  CHECK(one.classes[0].log_weight == doctest::Approx(-beta));

  const auto three = enumerate_irreducible(beta, zero_decoration(), 3, opt);
  std::set<Path> paths;
  for (const auto& it : three.items) paths.insert(it.contour);
  CHECK(paths.count(walk_path({0, 0}, {kEast, kNorth, kEast})) == 1);
  CHECK(paths.count(walk_path({0, 0}, {kEast, kNorth})) == 0);
  CHECK(paths.count(walk_path({0, 0}, {kEast, kEast})) == 0);
  for (const auto& c : three.classes) {
    CHECK(in_forward_cone(c.displacement));
    CHECK(c.displacement.x >= 1);
  }
}

TEST_CASE("irreducible enumeration matches a brute-force filter") {
  const int L = 7;
  for (auto kind : {IrreducibleKind::irreducible, IrreducibleKind::left, IrreducibleKind::right}) {
    IrreducibleOptions opt;
    opt.keep_paths = true;
    opt.kind = kind;
    opt.prefix_depth = 3;
    const auto s = enumerate_irreducible(2.0, zero_decoration(), L, opt);
    std::set<Path> got;
    for (const auto& it : s.items) {
      CHECK(it.log_weight == doctest::Approx(-2.0 * static_cast<double>(it.contour.size() - 1)));
      got.insert(it.contour);
    }
    CHECK(got.size() == s.items.size());
    CHECK(s.count() == s.items.size());

    PathBuilder b(L);
    std::vector<Path> all;
    all_paths(b, L, all);
    std::set<Path> want;
    for (const Path& p : all)
      if (is_irreducible(Animal{p, {}}, kind)) want.insert(p);
    CHECK(got == want);
  }
}

TEST_CASE("decorated irreducible weights resum over cluster subsets") {
  const double beta = 2.0;
  const int d_max = 4;  // single cells
  const auto phi = synthetic_decoration(beta, 1.0, 1.0, 5);
  const auto t = positive_transform(phi, beta, d_max);
  IrreducibleOptions opt;
  opt.keep_paths = true;
  opt.d_max = d_max;
  const auto s = enumerate_irreducible(beta, phi, 4, opt);
  int checked = 0;
  for (const auto& it : s.items) {
    const auto cands = nabla_clusters(it.contour, d_max);
    if (cands.size() > 18) continue;
    double total = 0.0;
    for (std::uint32_t m = 0; m < (1u << cands.size()); ++m) {
      Animal a{it.contour, {}};
      for (std::size_t k = 0; k < cands.size(); ++k)
        if (m >> k & 1u) a.clusters.push_back(cands[k]);
      if (is_irreducible(a)) total += std::exp(animal_weight(a, t));
    }
    CHECK(it.log_weight == doctest::Approx(std::log(total)).epsilon(1e-10));
    ++checked;
  }
  CHECK(checked >= 3);
}

TEST_CASE("serial and parallel enumeration agree") {
  IrreducibleOptions a, b;
  a.prefix_depth = 1;
  b.prefix_depth = 6;
  const auto x = enumerate_irreducible(2.0, zero_decoration(), 12, a);
  const auto y = enumerate_irreducible(2.0, zero_decoration(), 12, b);
  REQUIRE(x.classes.size() == y.classes.size());
  for (std::size_t i = 0; i < x.classes.size(); ++i) {
    CHECK(x.classes[i].count == y.classes[i].count);
    CHECK(x.classes[i].log_weight == doctest::Approx(y.classes[i].log_weight).epsilon(1e-13));
  }
}

TEST_CASE("enumeration guard") {
  IrreducibleOptions opt;
  opt.guard = 1000;
  CHECK_THROWS_AS(enumerate_irreducible(2.0, zero_decoration(), 14, opt), GuardError);
}

TEST_CASE("tilted step law is normalised and colinear") {
  const auto s = enumerate_irreducible(2.0, zero_decoration(), 12);
  for (Site y : {Site{1, 0}, Site{2, 1}, Site{3, -1}}) {
    const Tilt h = oz_tilt(s, y);
    CHECK(oz_mass(s, h) == doctest::Approx(1.0).epsilon(1e-10));
    const auto st = step_distribution(s, h);
    const double n = std::hypot(static_cast<double>(y.x), static_cast<double>(y.y));
    const double along = (st.mean_x() * y.x + st.mean_y() * y.y) / n;
    const double across = (-st.mean_x() * y.y + st.mean_y() * y.x) / n;
    CHECK(std::abs(across) <= 1e-6 * along);
    CHECK(oz_tau(s, y) == doctest::Approx((h.h1 * y.x + h.h2 * y.y) / n).epsilon(1e-9));
  }
}

TEST_CASE("renewal tension converges to the column transfer value") {
  // tau decreases with the cutoff; e1 value near beta - log((1+r)/(1-r)), corrections e^{-4 beta}
  const double beta = 2.0, r = std::exp(-beta);
  double prev = INFINITY;
  for (int L : {8, 10, 12, 14}) {
    const double tau = oz_tau(enumerate_irreducible(beta, zero_decoration(), L), {1, 0});
    CHECK(tau < prev);
    prev = tau;
  }
  CHECK(std::abs(prev - (beta - std::log((1 + r) / (1 - r)))) <= 3e-3);
}

TEST_CASE("large beta concentrates the step on the unit edge") {
  // next steps are (2,+-1) of length 3, relative weight e^{-beta} each
  for (double beta : {6.0, 10.0}) {
    const auto s = enumerate_irreducible(beta, zero_decoration(), 8);
    const auto st = step_distribution(s, oz_tilt(s, {1, 0})).normalized();
    const auto it = std::find(st.steps.begin(), st.steps.end(), Site{1, 0});
    const double p = st.probs[static_cast<std::size_t>(it - st.steps.begin())];
    CHECK(1 - p <= 2.5 * std::exp(-beta));
    CHECK(1 - p >= 1.5 * std::exp(-beta));
  }
}

TEST_CASE("hitting identity") {
  IrreducibleOptions opt;
  opt.keep_paths = true;
  const auto s = enumerate_irreducible(2.0, zero_decoration(), 10, opt);
  const Tilt h = oz_tilt(s, {1, 0});
  const auto c = hitting_identity_check({0, 1}, {2, 1}, s, h);
  CHECK(c.dp > 0.0);
  CHECK(std::abs(c.dp - c.animal_sum) <= 1e-10);
  for (Site u : {Site{0, 0}, Site{0, 2}, Site{3, 1}})
    for (Site dv : {Site{1, 0}, Site{2, 2}, Site{3, -1}, Site{4, 0}}) {
      const Site v = u + dv;
      if (v.y < 0) continue;
      const auto k = hitting_identity_check(u, v, s, h);
      CHECK(std::abs(k.dp - k.animal_sum) <= 1e-10);
    }
  // degenerate target: no steps, both zero
  const auto z = hitting_identity_check({1, 1}, {1, 1}, s, h);
  CHECK(z.dp == 0.0);
  CHECK(z.animal_sum == 0.0);
  // moving the start up helps
  const auto st = step_distribution(s, h);
  double last = 0.0;
  for (int y = 0; y <= 4; ++y) {
    const double p = hitting_probability_dp(st, {0, y}, {6, 4});
    CHECK(p >= last);
    last = p;
  }
}

TEST_CASE("mass gap profile decays geometrically") {
  for (auto kind : {IrreducibleKind::irreducible, IrreducibleKind::left, IrreducibleKind::right}) {
    IrreducibleOptions opt;
    opt.kind = kind;
    const auto s = enumerate_irreducible(2.0, zero_decoration(), 12, opt);
    const auto g = mass_gap_profile(s, Tilt{1.73, 0.0});
    for (std::size_t k = 4; k + 2 < g.size(); k += 2) CHECK(g[k + 2] < 0.8 * g[k]);
  }
}

TEST_CASE("step distribution csv") {
  auto st = ssrw_step();
  st.beta = 2;
  st.cutoff = 12;
  std::ostringstream os;
  st.write_csv(os);
  CHECK(os.str().find("vx,vy,mass") != std::string::npos);
  CHECK(os.str().find("1,-1,0.5") != std::string::npos);
}
