#include "soslab/experiments.hpp"

#include <omp.h>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace soslab {

// ------------------------------------------------------------ plumbing

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw std::invalid_argument("row width does not match the header");
  rows.push_back(std::move(row));
}

std::string Table::csv() const {
  std::string out;
  for (const auto& c : columns) out += c + ",";
  out += "asymptotic\n";
  for (const auto& r : rows) {
    for (const auto& v : r) out += v + ",";
    out += "false\n";
  }
  return out;
}

std::vector<std::size_t> Table::find(const std::string& key, const std::string& value) const {
  const auto it = std::find(columns.begin(), columns.end(), key);
  if (it == columns.end()) throw std::out_of_range("no column " + key);
  const auto k = static_cast<std::size_t>(it - columns.begin());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i][k] == value) out.push_back(i);
  return out;
}

const std::string& Table::cell(std::size_t row, const std::string& key) const {
  const auto it = std::find(columns.begin(), columns.end(), key);
  if (it == columns.end()) throw std::out_of_range("no column " + key);
  return rows.at(row)[static_cast<std::size_t>(it - columns.begin())];
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string num(i64 v) { return std::to_string(v); }

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &n, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < n; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Rng task_rng(std::uint64_t seed, std::uint64_t task) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(task), static_cast<std::uint32_t>(task >> 32)};
  return Rng(seq);
}

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::map<std::string, std::string> module_versions() {
  std::map<std::string, std::string> v;
  for (const char* m : {"lattice_core", "sos_gibbs", "level_lines", "polymer_weights", "cone_decomposition",
                        "halfspace_walk", "experiments_cli"})
    v[m] = kVersion;
  v["compiler"] = __VERSION__;
  v["openmp"] = std::to_string(_OPENMP);
  return v;
}

std::string RunManifest::json() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["config_sha256"] = config_hash;
  j["seeds"] = seeds;
  j["started"] = started;
  j["finished"] = finished;
  j["versions"] = versions;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

void write_outputs(const std::string& dir, RunManifest& manifest,
                   const std::vector<std::pair<std::string, std::string>>& files) {
  std::filesystem::create_directories(dir);
  for (const auto& [name, content] : files) {
    std::ofstream os(std::filesystem::path(dir) / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + name);
    os << content;
    manifest.outputs[name] = sha256_hex(content);
  }
  std::ofstream os(std::filesystem::path(dir) / "manifest.json");
  os << manifest.json();
}

std::string svg_plot(const std::vector<double>& x, const std::vector<std::vector<double>>& series,
                     const std::string& title) {
  const double W = 480, H = 320, pad = 40;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!x.empty()) {
    x0 = *std::min_element(x.begin(), x.end());
    x1 = *std::max_element(x.begin(), x.end());
  }
  bool first = true;
  for (const auto& s : series)
    for (double v : s) {
      if (!std::isfinite(v)) continue;
      if (first) y0 = y1 = v, first = false;
      y0 = std::min(y0, v);
      y1 = std::max(y1, v);
    }
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  auto px = [&](double v) { return pad + (v - x0) / (x1 - x0) * (W - 2 * pad); };
  auto py = [&](double v) { return H - pad - (v - y0) / (y1 - y0) * (H - 2 * pad); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<text x=\"" << pad << "\" y=\"20\" font-size=\"12\">" << title << "</text>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\"" << H - pad
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
     << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << pad << "\" y=\"" << H - pad + 15 << "\" font-size=\"10\">" << num(x0) << "</text>\n";
  os << "<text x=\"" << W - pad << "\" y=\"" << H - pad + 15 << "\" font-size=\"10\">" << num(x1) << "</text>\n";
  os << "<text x=\"2\" y=\"" << H - pad << "\" font-size=\"10\">" << num(y0) << "</text>\n";
  os << "<text x=\"2\" y=\"" << pad << "\" font-size=\"10\">" << num(y1) << "</text>\n";
  static const char* colours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  for (std::size_t k = 0; k < series.size(); ++k) {
    os << "<polyline fill=\"none\" stroke=\"" << colours[k % 4] << "\" points=\"";
    for (std::size_t i = 0; i < x.size() && i < series[k].size(); ++i)
      if (std::isfinite(series[k][i])) os << px(x[i]) << "," << py(series[k][i]) << " ";
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

namespace {

// Type-7 quantile of a sorted sample.
double quantile_sorted(const std::vector<double>& v, double p) {
  if (v.empty()) return std::nan("");
  const double h = (static_cast<double>(v.size()) - 1) * p;
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (h - static_cast<double>(i)) * (v[i + 1] - v[i]);
}

// Sample counts per chain, the remainder going to the first chains.
std::vector<int> split(int total, int parts) {
  parts = std::max(1, parts);
  std::vector<int> out(static_cast<std::size_t>(parts), total / parts);
  for (int i = 0; i < total % parts; ++i) ++out[static_cast<std::size_t>(i)];
  return out;
}

}  // namespace

// ------------------------------------------------------------ minimum displacement

namespace {

std::pair<i64, i64> central_interval(const Box& box) {
  const double L = static_cast<double>(box.width);
  const double r = std::pow(L, 2.0 / 3.0);
  const i64 a = std::max<i64>(1, static_cast<i64>(std::ceil(L / 2 - r)));
  const i64 b = std::min<i64>(box.width, static_cast<i64>(std::floor(L / 2 + r)));
  return {box.origin.x - 1 + a, box.origin.x - 1 + b};
}

bool spans(const Contour& c, i64 a, i64 b) {
  const auto prof = displacement_profile(c);
  for (i64 x = a; x <= b; ++x)
    if (!prof.visits(x)) return false;
  return true;
}

}  // namespace

std::optional<std::pair<int, Contour>> top_macroscopic_loop(const HeightField& field, bool require_span) {
  const Box& b = field.box();
  const double L = static_cast<double>(std::max(b.width, b.height));
  const double threshold = std::log(L) * std::log(L);
  const auto [xa, xb] = central_interval(b);
  int top = 0;
  for (i64 y = b.origin.y; y < b.origin.y + b.height; ++y)
    for (i64 x = b.origin.x; x < b.origin.x + b.width; ++x) top = std::max(top, field.at({x, y}));
  for (int h = top; h >= 1; --h) {
    std::optional<Contour> best;
    for (auto& c : extract_level_lines(field, h)) {
      if (c.open || static_cast<double>(c.length()) < threshold) continue;
      if (require_span && !spans(c, xa, xb)) continue;
      if (!best || c.length() > best->length()) best = std::move(c);
    }
    if (best) return std::make_pair(h, std::move(*best));
  }
  return std::nullopt;
}

bool spans_central_interval(const Contour& loop, const Box& box) {
  const auto [a, b] = central_interval(box);
  return spans(loop, a, b);
}

std::optional<i64> min_rho_central(const Contour& loop, const Box& box) {
  const auto [a, b] = central_interval(box);
  const auto prof = displacement_profile(loop, 2 * box.origin.y - 1);
  return prof.min_over(a, b);
}

Table MinRhoResult::table() const {
  Table t;
  t.columns = {"L", "chain", "sample", "found", "spans", "level", "loop_length", "min_rho", "scaled"};
  for (const auto& s : samples)
    t.add({num(s.L), num(s.chain), num(s.index), s.found ? "1" : "0", s.spans ? "1" : "0", num(s.level), num(s.loop_length),
           num(s.min_rho), s.found ? num(s.scaled) : "nan"});
  return t;
}

std::optional<double> MinRhoResult::quantile(int L, double p) const {
  std::vector<double> v;
  for (const auto& s : samples)
    if (s.L == L && s.found) v.push_back(s.scaled);
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, p);
}

Table MinRhoResult::quantiles() const {
  Table t;
  t.columns = {"L", "samples", "found_fraction", "spanning_fraction", "q10", "q25", "q50", "q75", "iqr"};
  for (int L : config.sizes) {
    std::vector<double> v;
    int n = 0, span = 0;
    for (const auto& s : samples)
      if (s.L == L) {
        ++n;
        span += s.spans ? 1 : 0;
        if (s.found) v.push_back(s.scaled);
      }
    std::sort(v.begin(), v.end());
    const double q25 = quantile_sorted(v, 0.25), q75 = quantile_sorted(v, 0.75);
    t.add({num(L), num(n), num(n ? static_cast<double>(v.size()) / n : 0.0), num(n ? static_cast<double>(span) / n : 0.0),
           num(quantile_sorted(v, 0.1)), num(q25),
           num(quantile_sorted(v, 0.5)), num(q75), num(q75 - q25)});
  }
  return t;
}

MinRhoResult exp_min_rho(const MinRhoConfig& cfg) {
  if (cfg.beta <= 0) throw std::invalid_argument("beta must be positive");
  struct Task {
    int size_index, chain, count;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < cfg.sizes.size(); ++i) {
    if (cfg.sizes[i] < 4) throw std::invalid_argument("L must be at least 4");
    const auto counts = split(cfg.samples, cfg.chains);
    for (std::size_t c = 0; c < counts.size(); ++c)
      tasks.push_back({static_cast<int>(i), static_cast<int>(c), counts[c]});
  }
  std::vector<std::vector<MinRhoSample>> out(tasks.size());

#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const Task& tk = tasks[k];
    const int L = cfg.sizes[static_cast<std::size_t>(tk.size_index)];
    Rng rng = task_rng(cfg.seed, static_cast<std::uint64_t>(tk.size_index) * 1000 + static_cast<std::uint64_t>(tk.chain));
    const Box box(L, L);
    HeightField f(box, BoundaryCondition::constant(0), true, cfg.beta);
    const HeatBath hb(cfg.beta);
    const int burn = cfg.burn_in >= 0 ? cfg.burn_in : L * L / 4;
    const int thin = cfg.thin > 0 ? cfg.thin : std::max(10, L * L / 64);
    for (int s = 0; s < burn; ++s) sweep(f, rng, hb);
    for (int i = 0; i < tk.count; ++i) {
      for (int s = 0; s < thin; ++s) sweep(f, rng, hb);
      MinRhoSample smp;
      smp.L = L;
      smp.chain = tk.chain;
      smp.index = i;
      if (auto loop = top_macroscopic_loop(f)) {
        smp.level = loop->first;
        smp.loop_length = static_cast<i64>(loop->second.length());
        smp.spans = spans_central_interval(loop->second, box);
        if (auto m = min_rho_central(loop->second, box)) {
          smp.found = true;
          smp.min_rho = *m;
          smp.scaled = static_cast<double>(*m) / std::cbrt(static_cast<double>(L));
        }
      }
      out[k].push_back(smp);
    }
  }

  MinRhoResult res;
  res.config = cfg;
  for (auto& v : out) res.samples.insert(res.samples.end(), v.begin(), v.end());
  return res;
}

// ------------------------------------------------------------ SOS excursion

DecorationFunction decoration_by_name(const std::string& name, double beta) {
  if (name == "zero") return zero_decoration();
  if (name == "sos") return sos_decoration(beta);
  throw std::invalid_argument("unknown decoration '" + name + "' (zero|sos)");
}

SigmaEstimate estimate_sigma(double beta, const DecorationFunction& phi, int lmin, int lmax) {
  if (lmin < 2 || lmax < lmin) throw std::invalid_argument("bad cutoff range");
  SigmaEstimate e;
  StepDistribution last;
  for (int L = lmin; L <= lmax; L += 2) {
    StepReport r = oz_step(beta, phi, {1, 0}, L, L);
    e.cutoffs.push_back(L);
    e.values.push_back(r.step.sigma_sq());
    last = r.step;
  }
  e.extrapolated = e.values.back();
  if (e.values.size() >= 3 && e.values.back() > e.values.front()) {
    // least squares a - b q^L over a grid of q, linear in (a, b)
    double best = INFINITY;
    for (int g = 0; g <= 2000; ++g) {
      const double q = 0.5 + 0.4995 * g / 2000.0;
      double s1 = 0, sx = 0, sxx = 0, sy = 0, sxy = 0;
      for (std::size_t i = 0; i < e.values.size(); ++i) {
        const double x = std::pow(q, e.cutoffs[i]);
        s1 += 1, sx += x, sxx += x * x, sy += e.values[i], sxy += x * e.values[i];
      }
      const double det = s1 * sxx - sx * sx;
      if (std::abs(det) < 1e-300) continue;
      const double a = (sxx * sy - sx * sxy) / det, b = (s1 * sxy - sx * sy) / det;
      double res = 0;
      for (std::size_t i = 0; i < e.values.size(); ++i) {
        const double d = a + b * std::pow(q, e.cutoffs[i]) - e.values[i];
        res += d * d;
      }
      if (res < best) best = res, e.extrapolated = a, e.q = q;
    }
  }
  const auto marginal = last.normalized().marginal_y();
  const int range = 60;
  const auto v = doney_V1(marginal, range), vr = doney_V1_reversed(marginal, range);
  e.boundary_shift = 0.5 * ((v.values[range] - range) + (vr.values[range] - range));
  return e;
}

Table ExcursionResult::table() const {
  Table t;
  t.columns = {"N", "t", "samples", "mean", "ref_mean", "ks", "sigma_sq", "y_ref"};
  for (const auto& r : rows)
    t.add({num(r.N), num(r.t), num(r.n), num(r.mean), num(r.ref_mean), num(r.ks), num(sigma.extrapolated), num(y_ref)});
  return t;
}

std::optional<double> ExcursionResult::ks(int N, double t) const {
  for (const auto& r : rows)
    if (r.N == N && std::abs(r.t - t) < 1e-12) return r.ks;
  return std::nullopt;
}

ExcursionResult exp_excursion_sos(const ExcursionConfig& cfg) {
  ExcursionResult res;
  res.config = cfg;
  if (cfg.sigma_sq > 0) {
    res.sigma.extrapolated = cfg.sigma_sq;
    res.y_ref = cfg.y_ref;
  } else {
    res.sigma = estimate_sigma(cfg.beta, decoration_by_name(cfg.decoration, cfg.beta), cfg.cutoff_min, cfg.cutoff_max);
    res.y_ref = -1.0 - res.sigma.boundary_shift;
  }
  const double sigma = std::sqrt(res.sigma.extrapolated);
  for (double t : cfg.times)
    if (!(t > 0 && t < 1)) throw std::invalid_argument("times must lie in (0,1)");

  Rng ref_rng = task_rng(cfg.seed, 999999);
  const auto ref = excursion_reference(cfg.ref_half_len, cfg.times, cfg.ref_samples, ref_rng);

  struct Task {
    int size_index, chain, count;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < cfg.sizes.size(); ++i) {
    if (cfg.sizes[i] < 4) throw std::invalid_argument("N must be at least 4");
    const auto counts = split(cfg.samples, cfg.chains);
    for (std::size_t c = 0; c < counts.size(); ++c)
      tasks.push_back({static_cast<int>(i), static_cast<int>(c), counts[c]});
  }
  // heights[task][time] -> raw rho-bar values
  std::vector<std::vector<std::vector<double>>> raw(tasks.size());
  std::vector<std::string> errors(tasks.size());

#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    try {
      const Task& tk = tasks[k];
      const int N = cfg.sizes[static_cast<std::size_t>(tk.size_index)];
      Rng rng = task_rng(cfg.seed, static_cast<std::uint64_t>(tk.size_index) * 1000 + static_cast<std::uint64_t>(tk.chain));
      const int H = cfg.height > 0 ? cfg.height : std::max(24, N / 4);
      const Box box(N, H);
      HeightField f(box, BoundaryCondition::dobrushin_0111(), false, cfg.beta);
      const HeatBath hb(cfg.beta);
      const int burn = cfg.burn_in >= 0 ? cfg.burn_in : N * N / 2;
      const int thin = cfg.thin > 0 ? cfg.thin : std::max(10, N * N / 32);
      for (int s = 0; s < burn; ++s) sweep(f, rng, hb);
      raw[k].assign(cfg.times.size(), {});
      for (int i = 0; i < tk.count; ++i) {
        for (int s = 0; s < thin; ++s) sweep(f, rng, hb);
        const auto prof = displacement_profile(open_one_contour(f), 2 * box.origin.y - 1);
        for (std::size_t j = 0; j < cfg.times.size(); ++j) {
          const i64 col = std::min<i64>(N - 1, static_cast<i64>(std::floor(cfg.times[j] * N)));
          raw[k][j].push_back(static_cast<double>(prof.max_at(box.origin.x + col)));
        }
      }
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw AmbiguityError(e);

  for (std::size_t i = 0; i < cfg.sizes.size(); ++i) {
    const int N = cfg.sizes[i];
    const double scale = sigma * std::sqrt(static_cast<double>(N));
    for (std::size_t j = 0; j < cfg.times.size(); ++j) {
      std::vector<double> v;
      for (std::size_t k = 0; k < tasks.size(); ++k)
        if (tasks[k].size_index == static_cast<int>(i))
          for (double r : raw[k][j]) v.push_back((r - res.y_ref) / scale);
      ExcursionRow row;
      row.N = N;
      row.t = cfg.times[j];
      row.n = static_cast<int>(v.size());
      row.mean = v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      row.ref_mean = std::accumulate(ref[j].begin(), ref[j].end(), 0.0) / static_cast<double>(ref[j].size());
      row.ks = ks_distance(v, 1.0 / scale, ref[j], lattice_spacing(ref[j]));
      res.rows.push_back(row);
    }
  }
  return res;
}

// ------------------------------------------------------------ area tilt

double effective_sample_size(const std::vector<double>& log_w) {
  if (log_w.empty()) return 0.0;
  const double m = *std::max_element(log_w.begin(), log_w.end());
  double s1 = 0, s2 = 0;
  for (double l : log_w) {
    const double w = std::exp(l - m);
    s1 += w;
    s2 += w * w;
  }
  return s1 * s1 / s2;
}

double autocorr_ess(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 4) return static_cast<double>(n);
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double c0 = 0;
  for (double v : x) c0 += (v - m) * (v - m);
  if (c0 == 0) return static_cast<double>(n);
  auto rho = [&](std::size_t lag) {
    double c = 0;
    for (std::size_t i = 0; i + lag < n; ++i) c += (x[i] - m) * (x[i + lag] - m);
    return c / c0;
  };
  // Geyer: sum pairs while positive
  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double g = rho(2 * k) + rho(2 * k + 1);
    if (g <= 0) break;
    tau += 2 * g;
  }
  tau = std::max(tau, 1.0);
  return static_cast<double>(n) / tau;
}

Table AreaTiltResult::table() const {
  Table t;
  t.columns = {"estimate", "mean_area", "ess", "lambda", "L", "beta", "n", "c_inf"};
  const auto tail = [&] { return std::vector<std::string>{num(lambda), num(config.L), num(config.beta), num(config.n), num(config.c_inf)}; };
  auto row = [&](const std::string& name, double mean, double ess) {
    std::vector<std::string> r{name, num(mean), num(ess)};
    for (auto& s : tail()) r.push_back(s);
    t.add(r);
  };
  row("floored", floored_mean, floored_ess);
  row("reweighted", reweighted_mean, reweighted_ess);
  row("unfloored", unfloored_mean, unfloored_ess);
  row(ess_collapse ? "relative_difference_ess_collapse" : "relative_difference", relative_difference, reweighted_ess);
  return t;
}

AreaTiltResult exp_area_tilt(const AreaTiltConfig& cfg) {
  if (cfg.L < 2) throw std::invalid_argument("L must be at least 2");
  AreaTiltResult res;
  res.config = cfg;
  const double L = cfg.L;
  const int H = static_cast<int>(std::floor(std::log(L) / (4 * cfg.beta)));
  const int level = cfg.level >= 0 ? cfg.level : std::max(H - cfg.n, 0);
  res.lambda = area_tilt_lambda(L, cfg.beta, cfg.n, cfg.c_inf);
  const Box box(cfg.L, cfg.L);
  const auto bc = BoundaryCondition::legs(level + 1, level, box.origin.x, box.origin.x + box.width - 1);

  std::vector<double> areas[2];
#pragma omp parallel for schedule(static)
  for (int k = 0; k < 2; ++k) {
    Rng rng = task_rng(cfg.seed, static_cast<std::uint64_t>(k));
    HeightField f(box, bc, k == 0, cfg.beta);
    const HeatBath hb(cfg.beta);
    for (int s = 0; s < cfg.burn_in; ++s) sweep(f, rng, hb);
    for (int s = 1; s <= cfg.sweeps; ++s) {
      sweep(f, rng, hb);
      if (s % std::max(1, cfg.thin) == 0)
        areas[k].push_back(static_cast<double>(area_below(open_one_contour(f), 2 * box.origin.y - 1)));
    }
  }
  const auto& fl = areas[0];
  const auto& un = areas[1];
  if (fl.empty() || un.empty()) throw std::invalid_argument("no samples; increase sweeps");
  res.floored_mean = std::accumulate(fl.begin(), fl.end(), 0.0) / static_cast<double>(fl.size());
  res.unfloored_mean = std::accumulate(un.begin(), un.end(), 0.0) / static_cast<double>(un.size());
  res.floored_ess = autocorr_ess(fl);

  std::vector<double> lw;
  for (double a : un) lw.push_back(area_tilt_log_weight(static_cast<i64>(a), L, cfg.beta, cfg.n, cfg.c_inf));
  const double m = *std::max_element(lw.begin(), lw.end());
  double sw = 0, swa = 0;
  for (std::size_t i = 0; i < un.size(); ++i) {
    const double w = std::exp(lw[i] - m);
    sw += w;
    swa += w * un[i];
  }
  res.reweighted_mean = swa / sw;
  // importance ESS discounted by the chain's own autocorrelation
  res.unfloored_ess = autocorr_ess(un);
  res.reweighted_ess = effective_sample_size(lw) * res.unfloored_ess / static_cast<double>(un.size());
  res.ess_collapse = res.reweighted_ess < 100;
  res.relative_difference = std::abs(res.reweighted_mean - res.floored_mean) / std::max(1e-300, std::abs(res.floored_mean));
  return res;
}

// ------------------------------------------------------------ OZ battery

Table exp_oz_battery(const OzBatteryConfig& cfg) {
  Table t;
  t.columns = {"direction", "check", "value", "tolerance", "verdict"};
  auto verdict = [](bool ok) { return std::string(ok ? "pass" : "fail"); };
  const DecorationFunction phi = decoration_by_name(cfg.decoration, cfg.beta);
  for (const Site& y : cfg.directions) {
    const std::string dir = num(y.x) + ":" + num(y.y);
    try {
      const StepReport r = oz_step(cfg.beta, phi, y, cfg.cutoff, cfg.tilt_cutoff);
      t.add({dir, "normalization", num(r.mass), "[" + num(1 - cfg.mass_tol) + ",1]",
             verdict(r.mass >= 1 - cfg.mass_tol && r.mass <= 1 + 1e-12)});
      t.add({dir, "colinearity", num(r.colinearity), num(cfg.colinear_tol), verdict(r.colinearity <= cfg.colinear_tol)});

      const IrreducibleSet set = enumerate_irreducible(cfg.beta, phi, cfg.cutoff);
      const auto prof = mass_gap_profile(set, r.tilt);
      double worst = 0;
      for (std::size_t k = 1; k + 2 < prof.size(); ++k)
        if (prof[k] > 0) worst = std::max(worst, prof[k + 2] / prof[k]);
      t.add({dir, "mass_gap", num(worst), num(cfg.gap_ratio), verdict(worst <= cfg.gap_ratio)});

      const Site u{0, 1}, v{2, 1};
      const HittingCheck h = hitting_identity_check(u, v, set, r.tilt);
      const double diff = std::abs(h.dp - h.animal_sum);
      t.add({dir, "hitting_identity", num(diff), num(cfg.hitting_tol), verdict(diff <= cfg.hitting_tol)});
    } catch (const GuardError&) {
      throw;
    } catch (const std::exception& e) {
      std::string msg = e.what();
      std::replace(msg.begin(), msg.end(), ',', ';');
      t.add({dir, "error", msg, "", "error"});
    }
    if (y == Site{1, 0} && cfg.comparability_nmax >= 2) {
      std::vector<double> h_ratio, q_ratio;
      for (int N = 2; N <= cfg.comparability_nmax; ++N) {
        PartitionOptions o;
        o.max_len = N + 4;
        o.constraint = Domain::half_plane();
        o.modify = Domain::half_plane();
        const double g_h = partition_function({N, 0}, phi, cfg.beta, o).log_g;
        o.modify.reset();
        const double g_cond = partition_function({N, 0}, phi, cfg.beta, o).log_g;
        o.constraint = Domain::box(N);
        const double g_q = partition_function({N, 0}, phi, cfg.beta, o).log_g;
        h_ratio.push_back(std::exp(g_h - g_cond));
        q_ratio.push_back(std::exp(g_q - g_cond));
      }
      auto band = [](const std::vector<double>& v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return std::max(*hi, 1.0) / std::min(*lo, 1.0);
      };
      const double bh = band(h_ratio), bq = band(q_ratio);
      t.add({dir, "comparability_half_plane", num(bh), num(cfg.comparability_band), verdict(bh <= cfg.comparability_band)});
      t.add({dir, "comparability_box", num(bq), num(cfg.comparability_band), verdict(bq <= cfg.comparability_band)});
    }
  }
  return t;
}

}  // namespace soslab
