#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "soslab/lattice.hpp"

namespace soslab {

using Rng = std::mt19937_64;

// Raised when an exhaustive computation would exceed its state or work budget.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BoundaryCondition {
  enum class Kind { constant, dobrushin_0111, legs, explicit_map };

  Kind kind = Kind::constant;
  int value = 0;      // constant
  int h_high = 1;     // legs
  int h_low = 0;
  i64 x_left = 0;
  i64 x_right = -1;
  std::unordered_map<Site, int, SiteHash> map;  // explicit_map; missing sites read `value`

  static BoundaryCondition constant(int j);
  // Bottom side 0, the other three sides 1.
  static BoundaryCondition dobrushin_0111();
  // h_low on the bottom exterior row for x in [xl, xr], h_high elsewhere.
  static BoundaryCondition legs(int h_high, int h_low, i64 xl, i64 xr);
  static BoundaryCondition explicit_heights(std::unordered_map<Site, int, SiteHash> m, int fallback = 0);

  // Height of an exterior site of `box`.
  int height_at(const Box& box, const Site& s) const;
  void validate(const Box& box) const;
};

// Height function on a box plus a one-site frame carrying the boundary values.
class HeightField {
 public:
  HeightField(const Box& box, BoundaryCondition bc, bool floor, double beta);
  HeightField(const Box& box, BoundaryCondition bc, bool floor, double beta, int init);

  const Box& box() const { return box_; }
  const BoundaryCondition& boundary() const { return bc_; }
  bool floor() const { return floor_; }
  double beta() const { return beta_; }

  // Valid on the box and its frame.
  int at(const Site& s) const { return data_[index(s)]; }
  void set(const Site& s, int h);
  bool interior(const Site& s) const { return box_.contains(s); }

  // Raw padded storage, row-major, stride box.width + 2.
  std::size_t stride() const { return static_cast<std::size_t>(box_.width + 2); }
  int* raw() { return data_.data(); }
  const int* raw() const { return data_.data(); }
  std::size_t index(const Site& s) const {
    return static_cast<std::size_t>(s.y - box_.origin.y + 1) * stride() +
           static_cast<std::size_t>(s.x - box_.origin.x + 1);
  }

 private:
  Box box_;
  BoundaryCondition bc_;
  bool floor_;
  double beta_;
  std::vector<int> data_;
};

// Sum of |phi_x - phi_y| over adjacent pairs with at least one interior site.
i64 hamiltonian(const HeightField& field);

// Exact sampler of the single-site conditional law.
class HeatBath {
 public:
  explicit HeatBath(double beta);
  int sample(const int nbr[4], bool floor, Rng& rng) const;
  // Conditional probability of height h given the neighbours; used by tests.
  double probability(int h, const int nbr[4], bool floor) const;
  double beta() const { return beta_; }

 private:
  double weight(i64 energy_excess) const;
  double beta_;
  double r_;  // e^{-4 beta}
  std::vector<double> table_;
};

void heat_bath_update(HeightField& field, const Site& site, Rng& rng);
void heat_bath_update(HeightField& field, const Site& site, Rng& rng, const HeatBath& hb);
// One raster sweep over the interior.
void sweep(HeightField& field, Rng& rng, const HeatBath& hb);

using Observable = std::function<double(const HeightField&)>;

// One row per sweep, one column per observable.
std::vector<std::vector<double>> run_chain(HeightField& field, int sweeps, Rng& rng,
                                           const std::vector<Observable>& observables);

struct ExactResult {
  double log_z = 0.0;
  std::vector<Site> sites;                     // raster order
  int h_lo = 0;
  int h_hi = 0;
  std::vector<std::vector<double>> marginals;  // marginals[i][h - h_lo]
  double tail_bound = 0.0;
};

int default_hmax(double beta);

// Exact partition function and single-site marginals by a row transfer matrix.
// hmax < 0 selects default_hmax(beta).
ExactResult exact_enumerate(const Box& box, const BoundaryCondition& bc, bool floor, double beta, int hmax = -1,
                            bool with_marginals = true, double guard = 1e8);

// Exact log partition function on an arbitrary finite site set. Sites outside
// `sites` are frozen at outside(s); site i ranges over [lo[i], hi[i]].
double exact_log_z(const std::vector<Site>& sites, const std::vector<int>& lo, const std::vector<int>& hi,
                   const std::function<int(const Site&)>& outside, double beta, double guard = 1e8);

// Smallest connected set of Z^2 bonds containing every boundary bond of the cluster.
int cluster_d(const std::vector<Site>& cluster);
bool is_connected(const std::vector<Site>& sites);

struct ClusterWeight {
  std::vector<Site> cluster;
  std::vector<Site> context;  // U restricted to the cluster
  double value = 0.0;
  int d_value = 0;
};

// Cached Moebius inversion of log Z_{W,U}; heights in [-hmax, hmax], zero outside,
// sites of U conditioned to be >= 0.
class ClusterExpansion {
 public:
  ClusterExpansion(double beta, int hmax = -1);
  double log_z_hat(const std::vector<Site>& w, const std::vector<Site>& u);
  ClusterWeight f(const std::vector<Site>& v, const std::vector<Site>& u);
  double beta() const { return beta_; }
  int hmax() const { return hmax_; }

 private:
  double log_z_connected(std::vector<Site> w, std::vector<Site> u);
  double beta_;
  int hmax_;
  std::map<std::pair<std::vector<Site>, std::vector<Site>>, double> cache_;
};

ClusterWeight cluster_weight_fU(const std::vector<Site>& v, const std::vector<Site>& u, double beta, int hmax = -1);

double area_tilt_lambda(double L, double beta, int n, double c_inf = 1.0);
double area_tilt_weight(i64 area, double L, double beta, int n, double c_inf = 1.0);
double area_tilt_log_weight(i64 area, double L, double beta, int n, double c_inf = 1.0);

}  // namespace soslab
