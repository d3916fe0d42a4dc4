#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "soslab/cone.hpp"
#include "soslab/contour.hpp"
#include "soslab/polymer.hpp"
#include "soslab/sos.hpp"
#include "soslab/walk.hpp"

namespace soslab {

inline constexpr const char* kVersion = "0.3.0";

// Plain string table. csv() appends the column asymptotic=false to every row.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  bool empty() const { return rows.empty(); }
  std::string csv() const;
  // Rows whose `key` column equals `value`.
  std::vector<std::size_t> find(const std::string& key, const std::string& value) const;
  const std::string& cell(std::size_t row, const std::string& key) const;
};

// %.10g, so outputs are byte-stable across runs.
std::string num(double v);
std::string num(i64 v);
inline std::string num(int v) { return num(static_cast<i64>(v)); }

std::string sha256_hex(std::string_view bytes);

// Independent stream for task `task` of a run seeded with `seed`.
Rng task_rng(std::uint64_t seed, std::uint64_t task);

struct RunManifest {
  std::string experiment;
  std::string config_hash;  // sha256 of the canonical config text
  std::vector<std::uint64_t> seeds;
  std::string started;
  std::string finished;
  std::map<std::string, std::string> versions;
  std::map<std::string, std::string> outputs;  // file name -> sha256

  std::string json() const;
};

std::string utc_timestamp();
std::map<std::string, std::string> module_versions();

// Writes each file under dir, records its checksum, then writes manifest.json.
void write_outputs(const std::string& dir, RunManifest& manifest,
                   const std::vector<std::pair<std::string, std::string>>& files);

// Polyline plot with axes; series share the x values.
std::string svg_plot(const std::vector<double>& x, const std::vector<std::vector<double>>& series,
                     const std::string& title);

// ------------------------------------------------------------ minimum displacement

struct MinRhoConfig {
  double beta = 1.0;
  std::vector<int> sizes{32, 64, 128};
  int samples = 200;  // per size, split across chains
  int chains = 4;
  int burn_in = -1;   // default L^2 / 4 sweeps
  int thin = -1;      // default max(10, L^2 / 64)
  std::uint64_t seed = 1;
};

struct MinRhoSample {
  int L = 0;
  int chain = 0;
  int index = 0;
  bool found = false;  // a macroscopic loop visiting the central interval
  bool spans = false;  // ... and crossing all of its columns
  int level = 0;
  i64 loop_length = 0;
  i64 min_rho = 0;
  double scaled = 0.0;  // min_rho / L^{1/3}
};

struct MinRhoResult {
  MinRhoConfig config;
  std::vector<MinRhoSample> samples;
  Table table() const;
  // One row per L: found and spanning fractions, quantiles 0.1/0.25/0.5/0.75, IQR.
  Table quantiles() const;
  std::optional<double> quantile(int L, double p) const;
};

// Highest level carrying a closed loop of length >= (log L)^2; the longest such loop.
// With require_span the loop must also cross every column of the central interval
// [L/2 - L^{2/3}, L/2 + L^{2/3}].
std::optional<std::pair<int, Contour>> top_macroscopic_loop(const HeightField& field, bool require_span = false);
bool spans_central_interval(const Contour& loop, const Box& box);
// min over the central interval of the lowest crossing of the loop above the bottom edge.
std::optional<i64> min_rho_central(const Contour& loop, const Box& box);

MinRhoResult exp_min_rho(const MinRhoConfig& cfg);

// ------------------------------------------------------------ SOS excursion

struct SigmaEstimate {
  std::vector<int> cutoffs;
  std::vector<double> values;  // sigma^2 of the step law at each cutoff
  double extrapolated = 0.0;   // a in a - b q^L
  double q = 0.0;
  double boundary_shift = 0.0;  // average of lim V(a) - a for the step and its reverse
};

// Step laws along e1 at cutoffs lmin, lmin+2, .., lmax (tilt from the same cutoff).
SigmaEstimate estimate_sigma(double beta, const DecorationFunction& phi, int lmin, int lmax);

struct ExcursionConfig {
  double beta = 1.5;
  std::vector<int> sizes{32, 64, 128};
  std::vector<double> times{0.25, 0.5, 0.75};
  int samples = 2000;  // per size
  int chains = 4;
  int height = -1;     // box height, default max(24, N/4)
  int burn_in = -1;    // default N^2 / 2
  int thin = -1;       // default max(10, N^2 / 32)
  std::string decoration = "sos";  // or "zero"
  int cutoff_min = 6;
  int cutoff_max = 14;
  double sigma_sq = 0.0;  // > 0 skips the estimate
  double y_ref = 0.0;     // used together with sigma_sq
  int ref_half_len = 1 << 13;
  int ref_samples = 50000;
  std::uint64_t seed = 1;
};

struct ExcursionRow {
  int N = 0;
  double t = 0.0;
  int n = 0;
  double mean = 0.0;
  double ref_mean = 0.0;
  double ks = 0.0;
};

struct ExcursionResult {
  ExcursionConfig config;
  SigmaEstimate sigma;
  double y_ref = 0.0;
  std::vector<ExcursionRow> rows;
  Table table() const;
  std::optional<double> ks(int N, double t) const;
};

ExcursionResult exp_excursion_sos(const ExcursionConfig& cfg);

// ------------------------------------------------------------ area tilt

struct AreaTiltConfig {
  double beta = 1.0;
  int L = 16;
  int n = 0;
  double c_inf = 1.0;
  int level = -1;  // height below the contour; default max(H(L) - n, 0)
  int sweeps = 20000;
  int burn_in = 2000;
  int thin = 5;
  std::uint64_t seed = 1;
};

struct AreaTiltResult {
  AreaTiltConfig config;
  double lambda = 0.0;
  double floored_mean = 0.0;
  double floored_ess = 0.0;
  double reweighted_mean = 0.0;
  double reweighted_ess = 0.0;
  double unfloored_mean = 0.0;
  double unfloored_ess = 0.0;
  double relative_difference = 0.0;
  bool ess_collapse = false;  // reweighted ESS < 100
  Table table() const;
};

// Open contour of the legs boundary (level+1 above, level on the bottom row) in an
// L x L box: floored chain against the unfloored chain reweighted by the area tilt.
AreaTiltResult exp_area_tilt(const AreaTiltConfig& cfg);

// Effective sample size (sum w)^2 / sum w^2 from log weights.
double effective_sample_size(const std::vector<double>& log_w);
// Integrated autocorrelation ESS of a series (initial positive sequence).
double autocorr_ess(const std::vector<double>& x);

// ------------------------------------------------------------ OZ battery

struct OzBatteryConfig {
  double beta = 2.0;
  std::string decoration = "zero";
  std::vector<Site> directions{{1, 0}};
  int cutoff = 12;
  int tilt_cutoff = 16;
  double mass_tol = 0.01;
  double colinear_tol = 0.01;
  double gap_ratio = 0.8;  // tail mass must shrink by this factor per two lengths
  double hitting_tol = 1e-10;
  int comparability_nmax = 8;
  double comparability_band = 4.0;
};

// One row per check: direction, check, value, tolerance, verdict (pass/fail/error).
Table exp_oz_battery(const OzBatteryConfig& cfg);

DecorationFunction decoration_by_name(const std::string& name, double beta);

}  // namespace soslab
