#include "soslab/cone.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace soslab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::array<Site, 4> corners(const Cell& c) { return {c, Site{c.x + 1, c.y}, Site{c.x, c.y + 1}, Site{c.x + 1, c.y + 1}}; }

bool in_double_cone(const Site& apex, const Site& p) {
  const Site d = p - apex;
  return in_forward_cone(d) || in_backward_cone(d);
}

bool cell_in_double_cone(const Site& apex, const Cell& c) {
  return cell_in_forward_cone(apex, c) || cell_in_backward_cone(apex, c);
}

std::map<Site, int> visit_counts(const Path& g) {
  std::map<Site, int> m;
  for (const Site& s : g) m[s] += 1;
  return m;
}

bool vertex_is_cone_point(const Path& g, std::size_t i) {
  for (const Site& w : g)
    if (!in_double_cone(g[i], w)) return false;
  return true;
}

Path translated(const Path& p, const Site& by) {
  Path out = p;
  for (Site& s : out) s = s + by;
  return out;
}

Animal translated(const Animal& a, const Site& by) {
  Animal out{translated(a.contour, by), a.clusters};
  for (auto& c : out.clusters)
    for (Cell& s : c) s = s + by;
  return out;
}

struct LogSum {
  double m = kNegInf;
  double s = 0.0;
  void add(double l) {
    if (l == kNegInf) return;
    if (l > m) {
      s = s * std::exp(m - l) + 1.0;
      m = l;
    } else {
      s += std::exp(l - m);
    }
  }
  void merge(const LogSum& o) {
    if (o.s == 0.0) return;
    if (o.m > m) {
      s = s * std::exp(m - o.m) + o.s;
      m = o.m;
    } else {
      s += o.s * std::exp(o.m - m);
    }
  }
  double value() const { return s > 0 ? m + std::log(s) : kNegInf; }
};

}  // namespace

bool cell_in_forward_cone(const Site& apex, const Cell& c) {
  for (const Site& p : corners(c))
    if (!in_forward_cone(p - apex)) return false;
  return true;
}

bool cell_in_backward_cone(const Site& apex, const Cell& c) {
  for (const Site& p : corners(c))
    if (!in_backward_cone(p - apex)) return false;
  return true;
}

std::vector<std::size_t> contour_cone_points(const Path& g) {
  const auto counts = visit_counts(g);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (counts.at(g[i]) == 1 && vertex_is_cone_point(g, i)) out.push_back(i);
  return out;
}

std::vector<std::size_t> cone_points(const Animal& a) {
  std::vector<std::size_t> out;
  for (std::size_t i : contour_cone_points(a.contour)) {
    bool ok = true;
    for (const auto& c : a.clusters) {
      for (const Cell& s : c)
        if (!cell_in_double_cone(a.contour[i], s)) {
          ok = false;
          break;
        }
      if (!ok) break;
    }
    if (ok) out.push_back(i);
  }
  return out;
}

Animal ConeDecomposition::reconstruct(const Site& start) const {
  Animal out{{start}, {}};
  auto append = [&out](const Animal& piece) {
    const Site at = out.contour.back();
    for (std::size_t i = 1; i < piece.contour.size(); ++i) out.contour.push_back(piece.contour[i] + at);
    for (const auto& c : piece.clusters) {
      Cluster t = c;
      for (Cell& s : t) s = s + at;
      out.clusters.push_back(std::move(t));
    }
  };
  append(left);
  for (const auto& m : middle) append(m);
  append(right);
  return out;
}

ConeDecomposition decompose(const Animal& a) {
  if (a.contour.empty()) throw std::invalid_argument("empty contour");
  const Path& g = a.contour;
  const std::size_t last = g.size() - 1;
  // keep cone points crossed west to east
  std::vector<std::size_t> cps;
  for (std::size_t i : cone_points(a)) {
    const bool in_ok = i == 0 || g[i - 1] == g[i] - Site{1, 0};
    const bool out_ok = i == last || g[i + 1] == g[i] + Site{1, 0};
    if (in_ok && out_ok && (cps.empty() || g[i].x > g[cps.back()].x)) cps.push_back(i);
  }
  ConeDecomposition d;
  if (cps.size() < 2) {
    d.left = translated(a, -g.front());
    d.right = Animal{{{0, 0}}, {}};
    for (std::size_t i : cps) d.cone_points.push_back(g[i]);
    return d;
  }
  d.splittable = true;
  for (std::size_t i : cps) d.cone_points.push_back(g[i]);
  const std::size_t n = cps.size();
  std::vector<Animal> pieces(n + 1);
  auto slice = [&g](std::size_t from, std::size_t to) { return Path(g.begin() + static_cast<long>(from), g.begin() + static_cast<long>(to) + 1); };
  pieces[0].contour = slice(0, cps[0]);
  for (std::size_t j = 0; j + 1 < n; ++j) pieces[j + 1].contour = slice(cps[j], cps[j + 1]);
  pieces[n].contour = slice(cps[n - 1], last);
  for (const auto& c : a.clusters) {
    std::size_t k = 0;
    while (k < n && d.cone_points[k].x <= c.front().x) ++k;
    pieces[k].clusters.push_back(c);
  }
  for (auto& p : pieces) p = translated(p, -p.contour.front());
  d.left = std::move(pieces[0]);
  d.right = std::move(pieces[n]);
  d.middle.assign(pieces.begin() + 1, pieces.end() - 1);
  return d;
}

bool is_irreducible(const Animal& a, IrreducibleKind kind) {
  const Path& g = a.contour;
  if (g.size() < 2) return false;
  const Site s = g.front(), e = g.back();
  const bool need_fwd = kind != IrreducibleKind::left, need_bwd = kind != IrreducibleKind::right;
  for (const Site& w : g) {
    if (need_fwd && !in_forward_cone(w - s)) return false;
    if (need_bwd && !in_backward_cone(w - e)) return false;
  }
  for (const auto& c : a.clusters)
    for (const Cell& x : c) {
      if (need_fwd && !cell_in_forward_cone(s, x)) return false;
      if (need_bwd && !cell_in_backward_cone(e, x)) return false;
    }
  for (std::size_t i : cone_points(a)) {
    if (i == 0 && kind != IrreducibleKind::left) continue;
    if (i == g.size() - 1 && kind != IrreducibleKind::right) continue;
    return false;
  }
  return true;
}

double piece_log_weight(const Animal& a, const TransformedDecoration& t) {
  if (a.contour.size() < 2) {
    if (!a.clusters.empty()) throw std::invalid_argument("clusters on an empty piece");
    return 0.0;
  }
  return animal_weight(a, t);
}

std::uint64_t IrreducibleSet::count() const {
  std::uint64_t n = 0;
  for (const auto& c : classes) n += c.count;
  return n;
}

// ------------------------------------------------------------- enumeration

namespace {

struct ClassKey {
  int length;
  Site x;
  friend auto operator<=>(const ClassKey&, const ClassKey&) = default;
};

struct Collector {
  std::map<ClassKey, std::pair<LogSum, std::uint64_t>> classes;
  std::vector<IrreducibleEntry> items;
};

class IrreducibleSearch {
 public:
  IrreducibleSearch(double beta, const DecorationFunction& phi, int max_len, const IrreducibleOptions& opt,
                    std::atomic<std::uint64_t>* nodes)
      : beta_(beta), phi_(phi), max_len_(max_len), opt_(opt), nodes_(nodes) {
    if (!phi.zero) t_ = positive_transform(phi, beta, opt.d_max);
  }

  bool vertex_ok(const Site& w) const { return opt_.kind == IrreducibleKind::left || in_forward_cone(w); }

  void dfs(PathBuilder& b, Collector& out) {
    if (++local_ % 1024 == 0) flush();
    if (b.length() > 0 && b.visits(b.head()) == 1) consider(b.vertices(), out);
    if (b.length() == max_len_) return;
    for (int dir = 0; dir < 4; ++dir) {
      if (!b.can_step(dir) || !vertex_ok(b.head() + dir_step(dir))) continue;
      b.step(dir);
      dfs(b, out);
      b.undo();
    }
  }

  void flush() {
    if (static_cast<double>(nodes_->fetch_add(local_) + local_) > opt_.guard)
      throw GuardError("irreducible enumeration exceeds guard");
    local_ = 0;
  }

 private:
  void consider(const Path& g, Collector& out) {
    const Site e = g.back();
    const std::size_t last = g.size() - 1;
    const bool need_bwd = opt_.kind != IrreducibleKind::right;
    if (need_bwd)
      for (const Site& w : g)
        if (!in_backward_cone(w - e)) return;
    // contour cone points that clusters would have to remove
    std::vector<std::size_t> kill;
    std::map<Site, int> counts;
    for (const Site& s : g) counts[s] += 1;
    for (std::size_t i = 0; i <= last; ++i) {
      if (i == 0 && opt_.kind != IrreducibleKind::left) continue;
      if (i == last && opt_.kind != IrreducibleKind::right) continue;
      // a cone point in the interior has horizontal neighbours on both sides
      if (i > 0 && i < last && g[i - 1].y != g[i].y) continue;
      if (counts[g[i]] == 1 && vertex_is_cone_point(g, i)) kill.push_back(i);
    }
    const int len = static_cast<int>(last);
    double lw;
    if (phi_.zero) {
      if (!kill.empty()) return;
      lw = -beta_ * len;
    } else {
      lw = decorated_weight(g, kill);
      if (lw == kNegInf) return;
    }
    auto& slot = out.classes[ClassKey{len, e - g.front()}];
    slot.first.add(lw);
    slot.second += 1;
    if (opt_.keep_paths) out.items.push_back({g, lw});
  }

  // log of sum over cluster collections S of prod psi, subject to every contour
  // cone point in `kill` being removed by S and all clusters in the end cones.
  double decorated_weight(const Path& g, const std::vector<std::size_t>& kill) const {
    if (kill.size() > 20) throw GuardError("too many contour cone points for inclusion-exclusion");
    const Site s = g.front(), e = g.back();
    const ContourView view(g);
    std::vector<std::pair<double, std::uint32_t>> cands;  // (psi, kill mask)
    for (const Cluster& c : nabla_clusters(g, opt_.d_max)) {
      bool ok = true;
      for (const Cell& x : c) {
        if (opt_.kind != IrreducibleKind::left && !cell_in_forward_cone(s, x)) ok = false;
        if (opt_.kind != IrreducibleKind::right && !cell_in_backward_cone(e, x)) ok = false;
      }
      if (!ok) continue;
      std::uint32_t mask = 0;
      for (std::size_t k = 0; k < kill.size(); ++k)
        for (const Cell& x : c)
          if (!cell_in_double_cone(g[kill[k]], x)) {
            mask |= 1u << k;
            break;
          }
      cands.push_back({std::expm1(t_.phi_prime(c, view)), mask});
    }
    double total = 0.0;
    for (std::uint32_t T = 0; T < (1u << kill.size()); ++T) {
      double prod = 1.0;
      for (const auto& [psi, mask] : cands)
        if ((mask & T) == 0) prod *= 1.0 + psi;
      total += (std::popcount(T) % 2 ? -prod : prod);
    }
    if (total <= 0.0) return kNegInf;
    return -t_.beta_prime * static_cast<double>(g.size() - 1) + std::log(total);
  }

  double beta_;
  const DecorationFunction& phi_;
  int max_len_;
  const IrreducibleOptions& opt_;
  std::atomic<std::uint64_t>* nodes_;
  std::uint64_t local_ = 0;
  TransformedDecoration t_;
};

void collect_prefixes(PathBuilder& b, int depth, const IrreducibleSearch& s, std::vector<std::vector<int>>& out) {
  if (b.length() == depth) {
    out.push_back(b.dirs());
    return;
  }
  for (int dir = 0; dir < 4; ++dir) {
    if (!b.can_step(dir) || !s.vertex_ok(b.head() + dir_step(dir))) continue;
    b.step(dir);
    collect_prefixes(b, depth, s, out);
    b.undo();
  }
}

}  // namespace

IrreducibleSet enumerate_irreducible(double beta, const DecorationFunction& phi, int max_len,
                                     const IrreducibleOptions& opt) {
  if (max_len < 1) throw std::invalid_argument("max_len must be positive");
  std::atomic<std::uint64_t> nodes{0};
  const int depth = std::min(opt.prefix_depth, max_len);
  // paths shorter than the prefix depth are handled serially
  Collector shallow;
  std::vector<std::vector<int>> prefixes;
  {
    IrreducibleSearch s(beta, phi, depth - 1, opt, &nodes);
    PathBuilder b(max_len);
    s.dfs(b, shallow);
    s.flush();
    collect_prefixes(b, depth, s, prefixes);
  }
  std::vector<Collector> parts(prefixes.size());
  std::atomic<bool> failed{false};
  std::string what;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    if (failed.load()) continue;
    try {
      IrreducibleSearch s(beta, phi, max_len, opt, &nodes);
      PathBuilder b(max_len);
      for (int d : prefixes[i]) b.step(d);
      s.dfs(b, parts[i]);
      s.flush();
    } catch (const std::exception& e) {
#pragma omp critical
      what = e.what();
      failed = true;
    }
  }
  if (failed) throw GuardError(what);
  IrreducibleSet out;
  out.beta = beta;
  out.max_len = max_len;
  out.kind = opt.kind;
  std::map<ClassKey, std::pair<LogSum, std::uint64_t>> merged = shallow.classes;
  out.items = std::move(shallow.items);
  for (auto& p : parts) {
    for (const auto& [k, v] : p.classes) {
      auto& slot = merged[k];
      slot.first.merge(v.first);
      slot.second += v.second;
    }
    out.items.insert(out.items.end(), std::make_move_iterator(p.items.begin()), std::make_move_iterator(p.items.end()));
  }
  for (const auto& [k, v] : merged) out.classes.push_back({k.length, k.x, v.first.value(), v.second});
  return out;
}

// --------------------------------------------------------------- OZ tilt

namespace {

// log-weights aggregated by displacement
std::vector<std::pair<Site, double>> by_displacement(const IrreducibleSet& s, int max_len = -1) {
  std::map<Site, LogSum> m;
  for (const auto& c : s.classes)
    if (max_len < 0 || c.length <= max_len) m[c.displacement].add(c.log_weight);
  std::vector<std::pair<Site, double>> out;
  for (const auto& [x, ls] : m) out.push_back({x, ls.value()});
  return out;
}

double log_mass(const std::vector<std::pair<Site, double>>& d, double h1, double h2) {
  LogSum ls;
  for (const auto& [x, lw] : d) ls.add(h1 * static_cast<double>(x.x) + h2 * static_cast<double>(x.y) + lw);
  return ls.value();
}

struct Frame {
  double e1, e2, p1, p2;  // unit y and its left normal
};

Frame frame(const Site& y) {
  const double n = std::hypot(static_cast<double>(y.x), static_cast<double>(y.y));
  if (n == 0) throw std::invalid_argument("zero direction");
  const double a = static_cast<double>(y.x) / n, b = static_cast<double>(y.y) / n;
  return {a, b, -b, a};
}

// largest s with log f(s e + t p) <= 0
double root_along(const std::vector<std::pair<Site, double>>& d, const Frame& f, double t) {
  auto g = [&](double s) { return log_mass(d, s * f.e1 + t * f.p1, s * f.e2 + t * f.p2); };
  double lo = -1.0, hi = 1.0;
  while (g(lo) > 0) {
    lo *= 2;
    if (lo < -1e6) throw std::runtime_error("tilt root not bracketed");
  }
  while (g(hi) < 0) {
    hi *= 2;
    if (hi > 1e6) throw std::runtime_error("tilt root not bracketed");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

std::pair<double, double> support(const std::vector<std::pair<Site, double>>& d, const Site& y) {
  const Frame f = frame(y);
  // s*(t) is concave; golden section on t
  double a = -4.0, b = 4.0;
  const double r = (std::sqrt(5.0) - 1) / 2;
  double c = b - r * (b - a), e = a + r * (b - a);
  double fc = root_along(d, f, c), fe = root_along(d, f, e);
  while (b - a > 1e-11) {
    if (fc < fe) {
      a = c;
      c = e;
      fc = fe;
      e = a + r * (b - a);
      fe = root_along(d, f, e);
    } else {
      b = e;
      e = c;
      fe = fc;
      c = b - r * (b - a);
      fc = root_along(d, f, c);
    }
  }
  const double t = 0.5 * (a + b);
  return {root_along(d, f, t), t};
}

}  // namespace

double oz_mass(const IrreducibleSet& s, const Tilt& h) {
  return std::exp(log_mass(by_displacement(s), h.h1, h.h2));
}

Tilt oz_tilt(const IrreducibleSet& s, const Site& y) {
  const auto d = by_displacement(s);
  const auto [sv, t] = support(d, y);
  const Frame f = frame(y);
  return {sv * f.e1 + t * f.p1, sv * f.e2 + t * f.p2};
}

double oz_tau(const IrreducibleSet& s, const Site& y) { return support(by_displacement(s), y).first; }

SurfaceTensionTable oz_tension_table(const IrreducibleSet& s, const std::vector<Site>& directions) {
  SurfaceTensionTable tab;
  tab.beta = s.beta;
  tab.source = "renewal";
  tab.cutoff = s.max_len;
  const auto d = by_displacement(s);
  for (const Site& y : directions) tab.add(y, support(d, y).first);
  return tab;
}

StepDistribution step_distribution(const IrreducibleSet& s, const Tilt& h) {
  std::vector<std::pair<Site, double>> pairs;
  for (const auto& [x, lw] : by_displacement(s))
    pairs.push_back({x, std::exp(h.h1 * static_cast<double>(x.x) + h.h2 * static_cast<double>(x.y) + lw)});
  StepDistribution st = StepDistribution::from_pairs(std::move(pairs));
  st.beta = s.beta;
  st.cutoff = s.max_len;
  return st;
}

StepReport oz_step(double beta, const DecorationFunction& phi, const Site& y, int max_len, int tilt_len) {
  if (max_len > tilt_len) throw std::invalid_argument("max_len must not exceed tilt_len");
  const IrreducibleSet deep = enumerate_irreducible(beta, phi, tilt_len);
  StepReport r;
  r.tilt = oz_tilt(deep, y);
  r.tau = oz_tau(deep, y);
  IrreducibleSet shallow = deep;
  shallow.max_len = max_len;
  std::erase_if(shallow.classes, [max_len](const IrreducibleClass& c) { return c.length > max_len; });
  r.step = step_distribution(shallow, r.tilt);
  r.mass = r.step.mass();
  const Frame f = frame(y);
  const double m1 = r.step.mean_x(), m2 = r.step.mean_y();
  r.colinearity = std::abs(m1 * f.p1 + m2 * f.p2) / (m1 * f.e1 + m2 * f.e2);
  return r;
}

// ----------------------------------------------------------- hitting check

namespace {

double tuple_sum(const Site& pos, const Site& v, const std::vector<std::pair<Site, double>>& w) {
  double total = 0.0;
  for (const auto& [x, p] : w) {
    const Site next = pos + x;
    if (next.y < 0 || next.x > v.x) continue;
    if (next == v) total += p;
    else if (next.x < v.x) total += p * tuple_sum(next, v, w);
  }
  return total;
}

}  // namespace

HittingCheck hitting_identity_check(const Site& u, const Site& v, const IrreducibleSet& s, const Tilt& h) {
  HittingCheck r;
  if (u.y < 0 || v.y < 0) return r;
  // one weight per irreducible animal when paths are kept, else per class
  std::vector<std::pair<Site, double>> w;
  auto weight = [&h](const Site& x, double lw) {
    return std::exp(h.h1 * static_cast<double>(x.x) + h.h2 * static_cast<double>(x.y) + lw);
  };
  if (!s.items.empty()) {
    for (const auto& it : s.items) w.push_back({it.contour.back() - it.contour.front(), weight(it.contour.back() - it.contour.front(), it.log_weight)});
  } else {
    for (const auto& c : s.classes) w.push_back({c.displacement, weight(c.displacement, c.log_weight)});
  }
  if (u != v) r.animal_sum = tuple_sum(u, v, w);
  r.dp = u == v ? 0.0 : hitting_probability_dp(step_distribution(s, h), u, v);
  return r;
}

std::vector<double> mass_gap_profile(const IrreducibleSet& s, const Tilt& h) {
  std::vector<double> by_len(static_cast<std::size_t>(s.max_len + 2), 0.0);
  for (const auto& c : s.classes)
    by_len[static_cast<std::size_t>(c.length)] +=
        std::exp(h.h1 * static_cast<double>(c.displacement.x) + h.h2 * static_cast<double>(c.displacement.y) + c.log_weight);
  std::vector<double> out(static_cast<std::size_t>(s.max_len), 0.0);
  double acc = 0.0;
  for (int k = s.max_len; k >= 1; --k) {
    acc += by_len[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(k - 1)] = acc;
  }
  return out;
}

Animal random_animal(Rng& rng, int max_len, double east_bias, double cluster_prob, int d_max) {
  std::uniform_int_distribution<int> len_d(1, max_len);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (;;) {
    const int len = len_d(rng);
    PathBuilder b(max_len);
    while (b.length() < len) {
      double w[4], tot = 0.0;
      for (int d = 0; d < 4; ++d) {
        w[d] = b.can_step(d) ? (d == kEast ? east_bias : 1.0) : 0.0;
        tot += w[d];
      }
      if (tot == 0.0) break;
      double r = u01(rng) * tot;
      int d = 0;
      while (d < 3 && (r -= w[d]) > 0) ++d;
      while (w[d] == 0.0) d = (d + 1) & 3;
      b.step(d);
    }
    if (b.length() != len || b.visits(b.head()) != 1) continue;
    Animal a{b.vertices(), {}};
    for (const Cluster& c : nabla_clusters(a.contour, d_max))
      if (u01(rng) < cluster_prob) a.clusters.push_back(c);
    return a;
  }
}

}  // namespace soslab
