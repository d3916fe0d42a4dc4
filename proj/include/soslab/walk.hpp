#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "soslab/lattice.hpp"
#include "soslab/sos.hpp"

namespace soslab {

// Step law on Z^2 with positive first coordinate. Masses may sum to less
// than one (truncation deficit).
struct StepDistribution {
  std::vector<Site> steps;  // sorted, unique
  std::vector<double> probs;
  double beta = 0.0;
  int cutoff = 0;

  static StepDistribution from_pairs(std::vector<std::pair<Site, double>> pairs);
  double mass() const;
  StepDistribution normalized() const;
  double mean_x() const;  // of the normalised law
  double mean_y() const;
  double var_x() const;
  double var_y() const;
  // sigma^2 = var_y / mean_x, the diffusive constant of the height process per unit x
  double sigma_sq() const { return var_y() / mean_x(); }
  std::map<int, double> marginal_y() const;
  i64 max_dx() const;
  i64 max_abs_dy() const;
  void write_csv(std::ostream& os) const;
};

StepDistribution uniform_step3();  // {(1,-1),(1,0),(1,1)}
StepDistribution ssrw_step();      // {(1,-1),(1,1)}

struct WalkPath {
  Site start;
  std::vector<Site> steps;
  std::vector<Site> positions;
  double deficit = 0.0;  // truncation mass renormalised away
};

WalkPath simulate(const StepDistribution& step, const Site& start, int n, Rng& rng);

// Half-plane H = {y >= 0}; the walk is killed on entering y < 0.
// P_u(H_v < H_{H-}) by a column DP. Heights are capped where the excursion
// mass above the cap is negligible; guard bounds columns * heights.
double hitting_probability_dp(const StepDistribution& step, const Site& u, const Site& v, double guard = 5e8);
int dp_height_cap(const StepDistribution& step, const Site& u, const Site& v);

// P(H_{H-} > k) from height u for k = 0..kmax (first coordinates ignored).
std::vector<double> survival_curve(const StepDistribution& step, int u, int kmax);
// N -> P(S(k) = (N, v), H_{H-} > k), starting at (0, u), for the normalised law.
struct LocalProfile {
  i64 n0 = 0;  // first coordinate of p[0]
  std::vector<double> p;
  double mean() const;
  double variance() const;
};
LocalProfile local_profile(const StepDistribution& step, int u, int v, int k, double guard = 5e9);

// P_{(0,a)}(H_{(N,v)} < H_{H-}) for a = 0..cap.
std::vector<double> hitting_column(const StepDistribution& step, i64 N, int v, int cap, double guard = 5e8);

struct HarmonicProfile {
  std::vector<double> values;     // values[a] = V(a), a = 0..range_max, V(0) = 0
  std::vector<double> residuals;  // E[V(a+X); a+X > 0] - V(a)
  bool reversed = false;
  double tilt = 0.0;              // exponential tilt applied to centre the step
  double max_residual() const;
};

// Positive harmonic function of a centred walk on Z killed at or below zero,
// normalised by V(a)/a -> 1. Solved on [1, range_max + pad] with slope-one extension.
// A step with a small drift is first tilted to mean zero; residuals refer to the tilted step.
HarmonicProfile doney_V1(const std::map<int, double>& step, int range_max, int pad = -1);
// Same for the walk -S.
HarmonicProfile doney_V1_reversed(const std::map<int, double>& step, int range_max, int pad = -1);

enum class BridgeMethod { dp_backward, rejection };

// Exact sampler of the walk conditioned on H_v < H_{H-}, started at u.
class BridgeSampler {
 public:
  BridgeSampler(const StepDistribution& step, const Site& u, const Site& v, double guard = 5e8);
  WalkPath sample(Rng& rng) const;
  double probability() const { return p_; }
  // log P(path | H_v < H_{H-}) under the walk law
  double log_likelihood(const WalkPath& p) const;

 private:
  double h(i64 x, i64 y) const;  // P_{(x,y)}(H_v < H_{H-})
  StepDistribution step_;
  Site u_, v_;
  int cap_;
  std::vector<std::vector<double>> table_;  // [v.x - x][y]
  double p_;
};

WalkPath conditioned_bridge(const StepDistribution& step, const Site& u, const Site& v, Rng& rng,
                            BridgeMethod method = BridgeMethod::dp_backward, long max_tries = 100000000);

struct RescaledPath {
  std::vector<double> times;
  std::vector<double> values;
  double sigma = 1.0;
  i64 n = 0;
  double at(double t) const;  // linear interpolation
};

// t = (x - x0)/n, value = (y - y_ref)/(sigma sqrt n).
RescaledPath rescale(const WalkPath& p, double sigma, i64 n = -1, double y_ref = 0.0);

// Heights at times t_list of exact SSRW excursions with 2*half_len steps, rescaled by sqrt(2*half_len).
std::vector<std::vector<double>> excursion_reference(int half_len, const std::vector<double>& t_list, int samples,
                                                     Rng& rng);

// Smallest positive gap between distinct values (0 if fewer than two).
double lattice_spacing(std::vector<double> v);

// Two-sample KS distance; each sample is spread uniformly over a cell of the given
// width (continuity correction for lattice-valued data; width 0 gives the plain statistic).
double ks_distance(std::vector<double> a, double width_a, std::vector<double> b, double width_b);

struct FitResult {
  std::string quantity;
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::string window;
};

// Least squares slope of log y against log x.
FitResult loglog_slope(const std::vector<double>& x, const std::vector<double>& y, const std::string& name);

struct BallotReport {
  FitResult survival_slope;
  FitResult hitting_slope;
  FitResult profile_variance_ratio;  // fitted variance / (k sigma_1^2)
  FitResult v1_spread;               // (max - min)/mean of P(u,v)/(V(u)V'(v))
};

struct BallotOptions {
  std::vector<int> k_grid{64, 128, 256, 512, 1024, 2048};
  std::vector<int> n_grid{64, 128, 256, 512, 1024, 2048};
  int profile_k = 1024;
  int u = 1;
  int v = 1;
  int grid_max = 8;
  int grid_n = 4096;  // the spread is O(grid_max^2 / grid_n)
};

BallotReport ballot_check(const StepDistribution& survival_step, const StepDistribution& profile_step,
                          const BallotOptions& opt = {});

// Fraction of bridges visiting [N^{4 delta}, N - N^{4 delta}] x [0, N^delta].
double dip_frequency(const std::vector<WalkPath>& bridges, i64 N, double delta);

}  // namespace soslab
