#include "soslab/walk.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace soslab {

// ------------------------------------------------------------ step law

StepDistribution StepDistribution::from_pairs(std::vector<std::pair<Site, double>> pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  StepDistribution d;
  for (const auto& [s, p] : pairs) {
    if (s.x < 1) throw std::invalid_argument("steps need a positive first coordinate");
    if (!(p >= 0.0)) throw std::invalid_argument("negative step mass");
    if (p == 0.0) continue;
    if (!d.steps.empty() && d.steps.back() == s) {
      d.probs.back() += p;
    } else {
      d.steps.push_back(s);
      d.probs.push_back(p);
    }
  }
  if (d.steps.empty()) throw std::invalid_argument("empty step distribution");
  return d;
}

double StepDistribution::mass() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }

StepDistribution StepDistribution::normalized() const {
  StepDistribution d = *this;
  const double m = mass();
  for (double& p : d.probs) p /= m;
  return d;
}

namespace {
template <class F>
double moment(const StepDistribution& d, F f) {
  double s = 0.0;
  for (std::size_t i = 0; i < d.steps.size(); ++i) s += d.probs[i] * f(d.steps[i]);
  return s / d.mass();
}
}  // namespace

double StepDistribution::mean_x() const { return moment(*this, [](const Site& s) { return double(s.x); }); }
double StepDistribution::mean_y() const { return moment(*this, [](const Site& s) { return double(s.y); }); }
double StepDistribution::var_x() const {
  const double m = mean_x();
  return moment(*this, [m](const Site& s) { return (double(s.x) - m) * (double(s.x) - m); });
}
double StepDistribution::var_y() const {
  const double m = mean_y();
  return moment(*this, [m](const Site& s) { return (double(s.y) - m) * (double(s.y) - m); });
}

std::map<int, double> StepDistribution::marginal_y() const {
  std::map<int, double> m;
  const double tot = mass();
  for (std::size_t i = 0; i < steps.size(); ++i) m[static_cast<int>(steps[i].y)] += probs[i] / tot;
  return m;
}

i64 StepDistribution::max_dx() const {
  i64 m = 0;
  for (const Site& s : steps) m = std::max(m, s.x);
  return m;
}

i64 StepDistribution::max_abs_dy() const {
  i64 m = 0;
  for (const Site& s : steps) m = std::max<i64>(m, s.y < 0 ? -s.y : s.y);
  return m;
}

void StepDistribution::write_csv(std::ostream& os) const {
  os << "# beta=" << beta << " cutoff=" << cutoff << " total_mass=" << mass() << "\n";
  os << "vx,vy,mass\n";
  os.precision(17);
  for (std::size_t i = 0; i < steps.size(); ++i) os << steps[i].x << ',' << steps[i].y << ',' << probs[i] << '\n';
}

StepDistribution uniform_step3() {
  return StepDistribution::from_pairs({{{1, -1}, 1.0 / 3}, {{1, 0}, 1.0 / 3}, {{1, 1}, 1.0 / 3}});
}

StepDistribution ssrw_step() { return StepDistribution::from_pairs({{{1, -1}, 0.5}, {{1, 1}, 0.5}}); }

WalkPath simulate(const StepDistribution& step, const Site& start, int n, Rng& rng) {
  if (n < 0) throw std::invalid_argument("n must be nonnegative");
  WalkPath w;
  w.start = start;
  w.deficit = 1.0 - step.mass();
  w.positions.push_back(start);
  std::discrete_distribution<std::size_t> pick(step.probs.begin(), step.probs.end());
  for (int i = 0; i < n; ++i) {
    const Site s = step.steps[pick(rng)];
    w.steps.push_back(s);
    w.positions.push_back(w.positions.back() + s);
  }
  return w;
}

// ------------------------------------------------------------ hitting DP

int dp_height_cap(const StepDistribution& step, const Site& u, const Site& v) {
  const i64 n = std::max<i64>(v.x - u.x, 1);
  const i64 exact = std::max(u.y, v.y) + n * step.max_abs_dy();
  // a path reaching cap from below max(u, v) and coming back is a Gaussian excursion event
  // of size > 10 standard deviations
  const double sd = std::sqrt(std::max(step.var_y(), 1e-12) * static_cast<double>(n) / step.normalized().mean_x());
  const i64 gauss = std::max(u.y, v.y) + static_cast<i64>(std::ceil(10.0 * sd)) + 10 * step.max_abs_dy() + 2;
  return static_cast<int>(std::min(exact, gauss));
}

namespace {

// table[c][y] = P_{(v.x - c, y)}(H_v < H_{H-}), c = 0..N
std::vector<std::vector<double>> backward_table(const StepDistribution& step, i64 N, int v, int cap, double guard) {
  if (static_cast<double>(N + 1) * (cap + 1) * static_cast<double>(step.steps.size()) > guard)
    throw GuardError("hitting DP exceeds guard");
  std::vector<std::vector<double>> t(static_cast<std::size_t>(N + 1), std::vector<double>(static_cast<std::size_t>(cap + 1), 0.0));
  if (v >= 0 && v <= cap) t[0][static_cast<std::size_t>(v)] = 1.0;
  for (i64 c = 1; c <= N; ++c) {
    auto& row = t[static_cast<std::size_t>(c)];
    for (std::size_t k = 0; k < step.steps.size(); ++k) {
      const Site s = step.steps[k];
      if (s.x > c) continue;
      const auto& src = t[static_cast<std::size_t>(c - s.x)];
      const double p = step.probs[k];
      const i64 lo = std::max<i64>(0, -s.y), hi = std::min<i64>(cap, cap - s.y);
      for (i64 y = lo; y <= hi; ++y) row[static_cast<std::size_t>(y)] += p * src[static_cast<std::size_t>(y + s.y)];
    }
  }
  return t;
}

}  // namespace

double hitting_probability_dp(const StepDistribution& step, const Site& u, const Site& v, double guard) {
  if (u.y < 0 || v.y < 0 || v.x <= u.x) return 0.0;
  const int cap = dp_height_cap(step, u, v);
  const i64 N = v.x - u.x;
  if (static_cast<double>(N + 1) * (cap + 1) * static_cast<double>(step.steps.size()) > guard)
    throw GuardError("hitting DP exceeds guard");
  // forward over columns; window of the last max_dx columns
  const i64 w = step.max_dx();
  std::vector<std::vector<double>> ring(static_cast<std::size_t>(w + 1), std::vector<double>(static_cast<std::size_t>(cap + 1), 0.0));
  auto col = [&](i64 c) -> std::vector<double>& { return ring[static_cast<std::size_t>(c % (w + 1))]; };
  col(0)[static_cast<std::size_t>(u.y)] = 1.0;
  for (i64 c = 1; c <= N; ++c) {
    auto& row = col(c);
    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t k = 0; k < step.steps.size(); ++k) {
      const Site s = step.steps[k];
      if (s.x > c) continue;
      const auto& src = col(c - s.x);
      const double p = step.probs[k];
      const i64 lo = std::max<i64>(0, s.y), hi = std::min<i64>(cap, cap + s.y);
      for (i64 y = lo; y <= hi; ++y) row[static_cast<std::size_t>(y)] += p * src[static_cast<std::size_t>(y - s.y)];
    }
  }
  return v.y <= cap ? col(N)[static_cast<std::size_t>(v.y)] : 0.0;
}

std::vector<double> hitting_column(const StepDistribution& step, i64 N, int v, int cap, double guard) {
  auto t = backward_table(step, N, v, cap, guard);
  return t[static_cast<std::size_t>(N)];
}

std::vector<double> survival_curve(const StepDistribution& step, int u, int kmax) {
  if (u < 0 || kmax < 0) throw std::invalid_argument("bad survival arguments");
  const auto m = step.marginal_y();
  const i64 up = step.max_abs_dy();
  const std::size_t H = static_cast<std::size_t>(u + up * kmax + 1);
  std::vector<double> p(H, 0.0), q(H, 0.0);
  p[static_cast<std::size_t>(u)] = 1.0;
  std::vector<double> out{1.0};
  i64 top = u;
  for (int k = 1; k <= kmax; ++k) {
    std::fill(q.begin(), q.begin() + std::min<i64>(static_cast<i64>(H), top + up + 1), 0.0);
    for (i64 y = 0; y <= top; ++y) {
      const double py = p[static_cast<std::size_t>(y)];
      if (py == 0.0) continue;
      for (const auto& [dy, pr] : m) {
        const i64 z = y + dy;
        if (z >= 0) q[static_cast<std::size_t>(z)] += py * pr;
      }
    }
    top = std::min<i64>(static_cast<i64>(H) - 1, top + up);
    std::swap(p, q);
    out.push_back(std::accumulate(p.begin(), p.begin() + top + 1, 0.0));
  }
  return out;
}

double LocalProfile::mean() const {
  double s = 0, m = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    s += p[i];
    m += p[i] * static_cast<double>(n0 + static_cast<i64>(i));
  }
  return m / s;
}

double LocalProfile::variance() const {
  const double mu = mean();
  double s = 0, v = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(n0 + static_cast<i64>(i)) - mu;
    s += p[i];
    v += p[i] * d * d;
  }
  return v / s;
}

LocalProfile local_profile(const StepDistribution& raw, int u, int v, int k, double guard) {
  const StepDistribution step = raw.normalized();
  i64 min_dx = step.steps.front().x;
  for (const Site& s : step.steps) min_dx = std::min(min_dx, s.x);
  const int cap = u + v + static_cast<int>(std::ceil(10.0 * std::sqrt(step.var_y() * k))) + 10 * static_cast<int>(step.max_abs_dy()) + 2;
  const std::size_t H = static_cast<std::size_t>(cap + 1);
  // rows are x offsets from k*min_dx, starting at `base`; both tails are pruned as they fade
  std::vector<double> cur(H, 0.0);
  cur[static_cast<std::size_t>(u)] = 1.0;
  i64 base = 0, width = 1, top = u;
  double work = 0.0;
  for (int i = 0; i < k; ++i) {
    const i64 nw = width + step.max_dx() - min_dx;
    const i64 ntop = std::min<i64>(cap, top + step.max_abs_dy());
    std::vector<double> nxt(static_cast<std::size_t>(nw) * H, 0.0);
    for (i64 o = 0; o < width; ++o)
      for (std::size_t kk = 0; kk < step.steps.size(); ++kk) {
        const Site s = step.steps[kk];
        const double p = step.probs[kk];
        const double* src = &cur[static_cast<std::size_t>(o) * H];
        double* dst = &nxt[static_cast<std::size_t>(o + s.x - min_dx) * H];
        const i64 lo = std::max<i64>(0, s.y), hi = std::min<i64>(ntop, top + s.y);
        for (i64 y = lo; y <= hi; ++y) dst[y] += p * src[y - s.y];
      }
    work += static_cast<double>(width) * static_cast<double>(top + 1) * static_cast<double>(step.steps.size());
    if (work > guard) throw GuardError("local profile DP exceeds guard");
    top = ntop;
    std::vector<double> rows(static_cast<std::size_t>(nw), 0.0);
    double total = 0.0;
    for (i64 o = 0; o < nw; ++o) {
      for (i64 y = 0; y <= top; ++y) rows[static_cast<std::size_t>(o)] += nxt[static_cast<std::size_t>(o) * H + static_cast<std::size_t>(y)];
      total += rows[static_cast<std::size_t>(o)];
    }
    i64 first = 0, last = nw - 1;
    while (first < last && rows[static_cast<std::size_t>(first)] <= 1e-24 * total) ++first;
    while (last > first && rows[static_cast<std::size_t>(last)] <= 1e-24 * total) --last;
    cur.assign(nxt.begin() + static_cast<long>(first * static_cast<i64>(H)), nxt.begin() + static_cast<long>((last + 1) * static_cast<i64>(H)));
    base += first;
    width = last - first + 1;
  }
  LocalProfile lp;
  lp.n0 = static_cast<i64>(k) * min_dx + base;
  for (i64 o = 0; o < width; ++o) lp.p.push_back(v <= cap ? cur[static_cast<std::size_t>(o) * H + static_cast<std::size_t>(v)] : 0.0);
  return lp;
}

// ------------------------------------------------------------ harmonic V

double HarmonicProfile::max_residual() const {
  double m = 0.0;
  for (double r : residuals) m = std::max(m, std::abs(r));
  return m;
}

HarmonicProfile doney_V1(const std::map<int, double>& step_in, int range_max, int pad) {
  if (range_max < 1) throw std::invalid_argument("range_max must be positive");
  double tot = 0.0;
  int reach = 0;
  for (const auto& [x, p] : step_in) {
    tot += p;
    reach = std::max(reach, std::abs(x));
  }
  std::map<int, double> step;
  for (const auto& [x, p] : step_in)
    if (p > 0) step[x] = p / tot;
  // a small residual drift (truncation) is removed by an exponential tilt
  double theta = 0.0;
  for (int it = 0; it < 50; ++it) {
    double z = 0, m1 = 0, m2 = 0;
    for (const auto& [x, p] : step) {
      const double w = p * std::exp(theta * x);
      z += w;
      m1 += w * x;
      m2 += w * x * x;
    }
    const double mean = m1 / z;
    if (std::abs(mean) <= 1e-15) break;
    theta -= mean / (m2 / z - mean * mean);
  }
  if (theta != 0.0) {
    double z = 0;
    for (auto& [x, p] : step) z += (p *= std::exp(theta * x));
    for (auto& [x, p] : step) p /= z;
  }
  if (pad < 0) pad = 40 * reach + 200;
  const int M = range_max + pad;
  // V = a + W; (I - P)W = r0 with r0 the defect of the identity, extended with slope one past M
  auto ext = [M](const Eigen::VectorXd& W, int b) { return b <= M ? W(b - 1) : W(M - 1); };
  Eigen::VectorXd r0(M);
  for (int a = 1; a <= M; ++a) {
    double e = 0.0;
    for (const auto& [x, p] : step)
      if (a + x >= 1) e += p * (a + x);
    r0(a - 1) = e - a;
    // rounding in the normalised masses is not a defect
    if (std::abs(r0(a - 1)) <= 64 * std::numeric_limits<double>::epsilon() * a) r0(a - 1) = 0.0;
  }
  Eigen::VectorXd W = Eigen::VectorXd::Zero(M);
  if (r0.cwiseAbs().maxCoeff() > 0.0) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(M, M);
    for (int a = 1; a <= M; ++a)
      for (const auto& [x, p] : step) {
        const int b = a + x;
        if (b < 1) continue;
        A(a - 1, std::min(b, M) - 1) -= p;
      }
    W = A.partialPivLu().solve(r0);
    // one round of refinement
    Eigen::VectorXd res = r0 - A * W;
    W += A.partialPivLu().solve(res);
  }
  HarmonicProfile hp;
  hp.tilt = theta;
  hp.values.assign(static_cast<std::size_t>(range_max) + 1, 0.0);
  for (int a = 1; a <= range_max; ++a) hp.values[static_cast<std::size_t>(a)] = a + W(a - 1);
  hp.residuals.assign(static_cast<std::size_t>(range_max) + 1, 0.0);
  for (int a = 1; a <= range_max; ++a) {
    double e = 0.0;
    for (const auto& [x, p] : step) {
      const int b = a + x;
      if (b >= 1) e += p * (b + ext(W, b));
    }
    hp.residuals[static_cast<std::size_t>(a)] = e - (a + W(a - 1));
  }
  return hp;
}

HarmonicProfile doney_V1_reversed(const std::map<int, double>& step, int range_max, int pad) {
  std::map<int, double> neg;
  for (const auto& [x, p] : step) neg[-x] += p;
  HarmonicProfile hp = doney_V1(neg, range_max, pad);
  hp.reversed = true;
  return hp;
}

// ------------------------------------------------------------ bridges

BridgeSampler::BridgeSampler(const StepDistribution& step, const Site& u, const Site& v, double guard)
    : step_(step), u_(u), v_(v) {
  if (u.y < 0 || v.y < 0 || v.x <= u.x) throw std::invalid_argument("target not reachable");
  cap_ = dp_height_cap(step, u, v);
  table_ = backward_table(step, v.x - u.x, static_cast<int>(v.y), cap_, guard);
  p_ = h(u.x, u.y);
  if (!(p_ > 0.0)) throw std::invalid_argument("zero-probability target");
}

double BridgeSampler::h(i64 x, i64 y) const {
  if (y < 0 || y > cap_ || x > v_.x) return 0.0;
  return table_[static_cast<std::size_t>(v_.x - x)][static_cast<std::size_t>(y)];
}

WalkPath BridgeSampler::sample(Rng& rng) const {
  WalkPath w;
  w.start = u_;
  w.deficit = 1.0 - step_.mass();
  w.positions.push_back(u_);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<double> wts(step_.steps.size());
  Site at = u_;
  while (at.x < v_.x) {
    double tot = 0.0;
    for (std::size_t k = 0; k < step_.steps.size(); ++k) {
      const Site n = at + step_.steps[k];
      wts[k] = step_.probs[k] * h(n.x, n.y);
      tot += wts[k];
    }
    double r = u01(rng) * tot;
    std::size_t k = 0;
    while (k + 1 < wts.size() && (r -= wts[k]) > 0) ++k;
    while (wts[k] == 0.0) k = k == 0 ? wts.size() - 1 : k - 1;
    at = at + step_.steps[k];
    w.steps.push_back(step_.steps[k]);
    w.positions.push_back(at);
  }
  return w;
}

double BridgeSampler::log_likelihood(const WalkPath& p) const {
  double l = -std::log(p_);
  for (const Site& s : p.steps) {
    const auto it = std::lower_bound(step_.steps.begin(), step_.steps.end(), s);
    if (it == step_.steps.end() || *it != s) return -INFINITY;
    l += std::log(step_.probs[static_cast<std::size_t>(it - step_.steps.begin())]);
  }
  for (const Site& q : p.positions)
    if (q.y < 0) return -INFINITY;
  return p.positions.back() == v_ ? l : -INFINITY;
}

WalkPath conditioned_bridge(const StepDistribution& step, const Site& u, const Site& v, Rng& rng, BridgeMethod method,
                            long max_tries) {
  if (method == BridgeMethod::dp_backward) return BridgeSampler(step, u, v).sample(rng);
  if (u.y < 0 || v.y < 0 || v.x <= u.x) throw std::invalid_argument("target not reachable");
  std::discrete_distribution<std::size_t> pick(step.probs.begin(), step.probs.end());
  for (long t = 0; t < max_tries; ++t) {
    WalkPath w;
    w.start = u;
    w.deficit = 1.0 - step.mass();
    w.positions.push_back(u);
    Site at = u;
    while (at.x < v.x && at.y >= 0) {
      const Site s = step.steps[pick(rng)];
      at = at + s;
      w.steps.push_back(s);
      w.positions.push_back(at);
    }
    if (at == v) return w;
  }
  throw std::runtime_error("rejection sampler exhausted its budget");
}

// ------------------------------------------------------------ rescaling

double RescaledPath::at(double t) const {
  if (times.empty()) throw std::invalid_argument("empty path");
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - times.begin());
  const double t0 = times[j - 1], t1 = times[j];
  return values[j - 1] + (values[j] - values[j - 1]) * (t - t0) / (t1 - t0);
}

RescaledPath rescale(const WalkPath& p, double sigma, i64 n, double y_ref) {
  if (p.positions.empty()) throw std::invalid_argument("empty path");
  if (!(sigma > 0)) throw std::invalid_argument("sigma must be positive");
  RescaledPath r;
  r.sigma = sigma;
  const Site s0 = p.positions.front();
  r.n = n > 0 ? n : std::max<i64>(1, p.positions.back().x - s0.x);
  const double nx = static_cast<double>(r.n), ny = sigma * std::sqrt(nx);
  for (const Site& q : p.positions) {
    r.times.push_back(static_cast<double>(q.x - s0.x) / nx);
    r.values.push_back((static_cast<double>(q.y) - y_ref) / ny);
  }
  return r;
}

std::vector<std::vector<double>> excursion_reference(int half_len, const std::vector<double>& t_list, int samples,
                                                     Rng& rng) {
  if (half_len < 1) throw std::invalid_argument("half_len must be positive");
  const int n = 2 * half_len;
  const int m = half_len - 1;  // inner Dyck path of 2m steps
  std::vector<std::vector<double>> out(t_list.size());
  std::vector<int> seq(static_cast<std::size_t>(2 * m + 1));
  std::vector<int> h(static_cast<std::size_t>(n + 1));
  const double scale = std::sqrt(static_cast<double>(n));
  for (int s = 0; s < samples; ++s) {
    // cycle lemma: m ups and m+1 downs, rotated to start after the first minimum
    std::fill(seq.begin(), seq.begin() + m, 1);
    std::fill(seq.begin() + m, seq.end(), -1);
    std::shuffle(seq.begin(), seq.end(), rng);
    int sum = 0, best = 0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
      sum += seq[i];
      if (sum < best) {
        best = sum;
        arg = i + 1;
      }
    }
    std::rotate(seq.begin(), seq.begin() + static_cast<long>(arg % seq.size()), seq.end());
    h[0] = 0;
    h[1] = 1;
    for (int i = 0; i < 2 * m; ++i) h[static_cast<std::size_t>(i + 2)] = h[static_cast<std::size_t>(i + 1)] + seq[static_cast<std::size_t>(i)];
    h[static_cast<std::size_t>(n)] = 0;
    for (std::size_t j = 0; j < t_list.size(); ++j) {
      const double x = t_list[j] * n;
      const int i0 = std::min(n - 1, static_cast<int>(std::floor(x)));
      const double f = x - i0;
      out[j].push_back(((1 - f) * h[static_cast<std::size_t>(i0)] + f * h[static_cast<std::size_t>(i0 + 1)]) / scale);
    }
  }
  return out;
}

double lattice_spacing(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double g = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double d = v[i] - v[i - 1];
    if (d > 1e-12 * std::max(1.0, std::abs(v[i])) && (g == 0.0 || d < g)) g = d;
  }
  return g;
}

namespace {

struct SmoothedCdf {
  std::vector<double> xs, prefix;
  double w;
  SmoothedCdf(std::vector<double> v, double width) : xs(std::move(v)), w(width) {
    std::sort(xs.begin(), xs.end());
    prefix.assign(xs.size() + 1, 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) prefix[i + 1] = prefix[i] + xs[i];
  }
  // fraction of mass at or below x
  double operator()(double x) const {
    const double n = static_cast<double>(xs.size());
    if (w == 0.0) return static_cast<double>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) / n;
    const auto full = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x - w / 2) - xs.begin());
    const auto part = static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), x + w / 2) - xs.begin());
    double mass = static_cast<double>(full);
    if (part > full) {
      const double cnt = static_cast<double>(part - full);
      mass += (cnt * (x + w / 2) - (prefix[part] - prefix[full])) / w;
    }
    return mass / n;
  }
  double left(double x) const {
    if (w != 0.0) return (*this)(x);
    const double n = static_cast<double>(xs.size());
    return static_cast<double>(std::lower_bound(xs.begin(), xs.end(), x) - xs.begin()) / n;
  }
};

}  // namespace

double ks_distance(std::vector<double> a, double width_a, std::vector<double> b, double width_b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("empty sample");
  const SmoothedCdf fa(std::move(a), width_a), fb(std::move(b), width_b);
  std::vector<double> pts;
  for (const SmoothedCdf* f : {&fa, &fb})
    for (double x : f->xs) {
      pts.push_back(x - f->w / 2);
      pts.push_back(x + f->w / 2);
    }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double d = 0.0;
  for (double x : pts) {
    d = std::max(d, std::abs(fa(x) - fb(x)));
    d = std::max(d, std::abs(fa.left(x) - fb.left(x)));
  }
  return d;
}

FitResult loglog_slope(const std::vector<double>& x, const std::vector<double>& y, const std::string& name) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("need at least two points");
  const std::size_t n = x.size();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), 2);
  Eigen::VectorXd Y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0 && y[i] > 0)) throw std::invalid_argument("log of a nonpositive value");
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    X(static_cast<Eigen::Index>(i), 1) = std::log(x[i]);
    Y(static_cast<Eigen::Index>(i)) = std::log(y[i]);
  }
  const Eigen::VectorXd b = X.colPivHouseholderQr().solve(Y);
  FitResult f;
  f.quantity = name;
  f.estimate = b(1);
  if (n > 2) {
    const double rss = (Y - X * b).squaredNorm();
    const Eigen::MatrixXd cov = (X.transpose() * X).inverse() * (rss / static_cast<double>(n - 2));
    f.stderr_ = std::sqrt(cov(1, 1));
  }
  std::ostringstream os;
  os << "[" << x.front() << "," << x.back() << "]";
  f.window = os.str();
  return f;
}

BallotReport ballot_check(const StepDistribution& survival_step, const StepDistribution& profile_step,
                          const BallotOptions& opt) {
  BallotReport r;
  {
    const int kmax = *std::max_element(opt.k_grid.begin(), opt.k_grid.end());
    const auto surv = survival_curve(survival_step, opt.u, kmax);
    std::vector<double> xs, ys;
    for (int k : opt.k_grid) {
      xs.push_back(k);
      ys.push_back(surv[static_cast<std::size_t>(k)]);
    }
    r.survival_slope = loglog_slope(xs, ys, "survival_exponent");
  }
  {
    std::vector<double> xs, ys;
    for (int N : opt.n_grid) {
      xs.push_back(N);
      ys.push_back(hitting_probability_dp(survival_step, {0, opt.u}, {N, opt.v}));
    }
    r.hitting_slope = loglog_slope(xs, ys, "hitting_exponent");
  }
  {
    const auto lp = local_profile(profile_step, opt.u, opt.v, opt.profile_k);
    const double expect = opt.profile_k * profile_step.normalized().var_x();
    r.profile_variance_ratio.quantity = "profile_variance_ratio";
    r.profile_variance_ratio.estimate = lp.variance() / expect;
    r.profile_variance_ratio.window = "k=" + std::to_string(opt.profile_k);
  }
  {
    // heights y >= 0 of the walk correspond to a = y + 1 for V (killed at or below zero)
    const auto m = survival_step.marginal_y();
    const auto V = doney_V1(m, opt.grid_max + 1);
    const auto Vr = doney_V1_reversed(m, opt.grid_max + 1);
    std::vector<double> ratios;
    const int cap = dp_height_cap(survival_step, {0, opt.grid_max}, {opt.grid_n, opt.grid_max});
    for (int v = 0; v < opt.grid_max; ++v) {
      const auto col = hitting_column(survival_step, opt.grid_n, v + 1, cap);
      for (int u = 0; u < opt.grid_max; ++u)
        ratios.push_back(col[static_cast<std::size_t>(u + 1)] /
                         (V.values[static_cast<std::size_t>(u + 2)] * Vr.values[static_cast<std::size_t>(v + 2)]));
    }
    const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
    const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(ratios.size());
    r.v1_spread.quantity = "v1_factorization_spread";
    r.v1_spread.estimate = (*mx - *mn) / mean;
    r.v1_spread.window = "u,v in [1," + std::to_string(opt.grid_max) + "], N=" + std::to_string(opt.grid_n);
  }
  return r;
}

double dip_frequency(const std::vector<WalkPath>& bridges, i64 N, double delta) {
  if (bridges.empty()) return 0.0;
  const double lo = std::pow(static_cast<double>(N), 4 * delta), hi = static_cast<double>(N) - lo;
  const double top = std::pow(static_cast<double>(N), delta);
  std::size_t hits = 0;
  for (const auto& b : bridges) {
    const i64 x0 = b.start.x;
    for (const Site& q : b.positions) {
      const double x = static_cast<double>(q.x - x0);
      if (x >= lo && x <= hi && q.y >= 0 && static_cast<double>(q.y) <= top) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(bridges.size());
}

}  // namespace soslab
