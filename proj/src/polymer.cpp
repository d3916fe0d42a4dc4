#include "soslab/polymer.hpp"

#include <omp.h>

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <tuple>
#include <stdexcept>

namespace soslab {

Site dir_step(int dir) {
  switch (dir & 3) {
    case kEast: return {1, 0};
    case kNorth: return {0, 1};
    case kWest: return {-1, 0};
    default: return {0, -1};
  }
}

int dir_between(const Site& a, const Site& b) {
  const Site d = b - a;
  if (d == Site{1, 0}) return kEast;
  if (d == Site{0, 1}) return kNorth;
  if (d == Site{-1, 0}) return kWest;
  if (d == Site{0, -1}) return kSouth;
  throw std::invalid_argument("not a unit step");
}

BondCells bond_cells(const Site& a, const Site& b) {
  switch (dir_between(a, b)) {
    case kEast: return {{a.x, a.y}, {a.x, a.y - 1}};
    case kNorth: return {{a.x - 1, a.y}, {a.x, a.y}};
    case kWest: return {{a.x - 1, a.y - 1}, {a.x - 1, a.y}};
    default: return {{a.x, a.y - 1}, {a.x - 1, a.y - 1}};
  }
}

BondKey bond_key(const Site& a, const Site& b) { return {std::min(a, b), a.x == b.x}; }

namespace {

// The four sides of a cell.
std::array<BondKey, 4> cell_sides(const Cell& c) {
  return {BondKey{c, false}, BondKey{{c.x, c.y + 1}, false}, BondKey{c, true}, BondKey{{c.x + 1, c.y}, true}};
}

std::array<Cell, 2> cells_of(const BondKey& b) {
  if (b.vertical) return {Cell{b.low.x - 1, b.low.y}, Cell{b.low.x, b.low.y}};
  return {Cell{b.low.x, b.low.y}, Cell{b.low.x, b.low.y - 1}};
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Cluster normalised(Cluster c, Site* shift = nullptr) {
  i64 mx = c[0].x, my = c[0].y;
  for (const Cell& s : c) {
    mx = std::min(mx, s.x);
    my = std::min(my, s.y);
  }
  for (Cell& s : c) s = s - Site{mx, my};
  std::sort(c.begin(), c.end());
  if (shift) *shift = {mx, my};
  return c;
}

}  // namespace

ContourView::ContourView(const Path& path) : path_(&path) {
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const BondCells bc = bond_cells(path[i], path[i + 1]);
    plus_.insert(bc.left);
    minus_.insert(bc.right);
    const BondKey k = bond_key(path[i], path[i + 1]);
    const Site along = k.vertical ? Site{0, 1} : Site{1, 0};
    nabla_[k] += 1;
    nabla_[BondKey{k.low + along, k.vertical}] += 1;
    nabla_[BondKey{k.low - along, k.vertical}] += 1;
  }
}

bool ContourView::touches_delta(const Cluster& c) const {
  for (const Cell& s : c)
    if (in_delta(s)) return true;
  return false;
}

int ContourView::nabla_count(const Cluster& c) const {
  std::unordered_set<BondKey, BondKeyHash> sides;
  for (const Cell& s : c)
    for (const BondKey& b : cell_sides(s)) sides.insert(b);
  int n = 0;
  for (const BondKey& b : sides) {
    auto it = nabla_.find(b);
    if (it != nabla_.end()) n += it->second;
  }
  return n;
}

std::vector<Cell> ContourView::delta_cells() const {
  std::set<Cell> s(plus_.begin(), plus_.end());
  s.insert(minus_.begin(), minus_.end());
  return {s.begin(), s.end()};
}

std::vector<Cell> ContourView::nabla_cells() const {
  std::set<Cell> s;
  for (const auto& [b, m] : nabla_)
    for (const Cell& c : cells_of(b)) s.insert(c);
  return {s.begin(), s.end()};
}

std::vector<Cell> ContourView::cap_plus(const Cluster& c) const {
  std::vector<Cell> out;
  for (const Cell& s : c)
    if (in_plus(s)) out.push_back(s);
  return out;
}

std::vector<Cell> ContourView::cap_minus(const Cluster& c) const {
  std::vector<Cell> out;
  for (const Cell& s : c)
    if (in_minus(s)) out.push_back(s);
  return out;
}

// ------------------------------------------------------------ decorations

DecorationFunction zero_decoration() {
  DecorationFunction f;
  f.eval = [](const Cluster&, const ContourView&) { return 0.0; };
  f.zero = true;
  f.name = "zero";
  return f;
}

DecorationFunction synthetic_decoration(double beta, double chi, double amplitude, std::uint64_t salt) {
  DecorationFunction f;
  f.chi = chi;
  f.locality_radius = 0;
  f.name = "synthetic";
  f.eval = [beta, chi, amplitude, salt](const Cluster& c, const ContourView& v) {
    Site shift;
    const Cluster n = normalised(c, &shift);
    std::uint64_t h = splitmix(salt);
    for (const Cell& s : n) {
      h = splitmix(h ^ static_cast<std::uint64_t>(s.x) * 1315423911ULL);
      h = splitmix(h ^ static_cast<std::uint64_t>(s.y) * 2654435761ULL);
    }
    for (const Cell& s : c) {
      const std::uint64_t tag = (v.in_plus(s) ? 1u : 0u) | (v.in_minus(s) ? 2u : 0u);
      const Site r = s - shift;
      h = splitmix(h ^ (tag + 4 * (static_cast<std::uint64_t>(r.x) * 64 + static_cast<std::uint64_t>(r.y))));
    }
    const double u = 2.0 * ((static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53) - 1.0;
    return amplitude * u * std::exp(-chi * beta * (cluster_d(c) + 1));
  };
  return f;
}

namespace {
struct SosDecorationState {
  explicit SosDecorationState(double beta, int hmax) : ce(beta, hmax) {}
  ClusterExpansion ce;
  std::mutex mu;
  std::map<std::tuple<Cluster, Cluster, Cluster>, double> cache;
};
}  // namespace

DecorationFunction sos_decoration(double beta, double chi, int hmax) {
  auto st = std::make_shared<SosDecorationState>(beta, hmax);
  DecorationFunction f;
  f.chi = chi;
  f.name = "sos";
  f.eval = [st](const Cluster& c, const ContourView& v) {
    Site shift;
    const Cluster n = normalised(c, &shift);
    Cluster plus = v.cap_plus(c), minus = v.cap_minus(c);
    for (Cell& s : plus) s = s - shift;
    for (Cell& s : minus) s = s - shift;
    std::sort(plus.begin(), plus.end());
    std::sort(minus.begin(), minus.end());
    auto key = std::make_tuple(n, plus, minus);
    std::lock_guard<std::mutex> lock(st->mu);
    if (auto it = st->cache.find(key); it != st->cache.end()) return it->second;
    const double f0 = st->ce.f(n, {}).value;
    const double fp = plus.empty() ? f0 : st->ce.f(n, plus).value;
    const double fm = minus.empty() ? f0 : st->ce.f(n, minus).value;
    const double val = -f0 + (minus.empty() ? fp : 0.0) + (plus.empty() ? fm : 0.0);
    st->cache.emplace(std::move(key), val);
    return val;
  };
  return f;
}

// --------------------------------------------------------------- catalog

ClusterCatalog::ClusterCatalog(int d_max) : d_max_(d_max) {
  // perimeter of an s-cell polyomino is at least 2 ceil(2 sqrt(s)) and d >= perimeter
  int s_max = 0;
  while (2 * static_cast<int>(std::ceil(2.0 * std::sqrt(static_cast<double>(s_max + 1)) - 1e-12)) <= d_max) ++s_max;
  std::set<Cluster> level{Cluster{{0, 0}}};
  for (int s = 1; s <= s_max; ++s) {
    for (const Cluster& c : level) {
      const int d = cluster_d(c);
      if (d <= d_max) shapes_.push_back({c, d});
    }
    if (s == s_max) break;
    std::set<Cluster> next;
    for (const Cluster& c : level)
      for (const Cell& cell : c)
        for (int dir = 0; dir < 4; ++dir) {
          const Cell t = cell + dir_step(dir);
          if (std::binary_search(c.begin(), c.end(), t)) continue;
          Cluster g = c;
          g.push_back(t);
          next.insert(normalised(std::move(g)));
        }
    level.swap(next);
  }
}

std::vector<std::pair<Cluster, int>> ClusterCatalog::touching(const std::vector<Cell>& targets) const {
  std::map<Cluster, int> out;
  for (const Cell& t : targets)
    for (const Shape& sh : shapes_)
      for (const Cell& anchor : sh.cells) {
        Cluster c = sh.cells;
        const Site shift = t - anchor;
        for (Cell& s : c) s = s + shift;
        out.emplace(std::move(c), sh.d);
      }
  return {out.begin(), out.end()};
}

double ClusterCatalog::c_beta(double beta, double chi) const {
  double c = 0.0;
  for (const auto& [cl, d] : touching({{0, 0}, {0, -1}})) c += std::exp(-chi * beta * (d + 1));
  return c;
}

const ClusterCatalog& cluster_catalog(int d_max) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<ClusterCatalog>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[d_max];
  if (!slot) slot = std::make_unique<ClusterCatalog>(d_max);
  return *slot;
}

// ---------------------------------------------------------------- weights

namespace {

// Per-cell decay mass of the next few omitted d shells.
double shell_mass(int d_max, double beta, double chi) {
  const ClusterCatalog& wide = cluster_catalog(d_max + 4);
  double m = 0.0;
  for (const auto& sh : wide.shapes())
    if (sh.d > d_max) m += static_cast<double>(sh.cells.size()) * std::exp(-chi * beta * (sh.d + 1));
  return m;
}

}  // namespace

FreeWeight free_weight(const Path& gamma, const DecorationFunction& phi, double beta, int d_max, double tol) {
  if (gamma.size() < 2) throw std::invalid_argument("contour needs at least one bond");
  FreeWeight fw;
  const double len = static_cast<double>(gamma.size() - 1);
  fw.log_weight = -beta * len;
  if (phi.zero) return fw;
  const ContourView view(gamma);
  const auto delta = view.delta_cells();
  for (const auto& [c, d] : cluster_catalog(d_max).touching(delta)) {
    fw.log_weight += phi(c, view);
    ++fw.n_clusters;
  }
  const double cells = static_cast<double>(delta.size());
  fw.tail_estimate = cells * shell_mass(d_max, beta, phi.chi);
  const double ratio = 6.0 * std::exp(1.0) * std::exp(-phi.chi * beta);
  fw.tail_bound = ratio >= 1.0 ? std::numeric_limits<double>::infinity()
                               : cells * std::exp(-phi.chi * beta) * std::pow(ratio, d_max + 1) / (1.0 - ratio);
  fw.tail_ok = fw.tail_estimate <= tol;
  return fw;
}

bool Domain::contains_vertex(const Site& v) const {
  switch (kind) {
    case Kind::plane: return true;
    case Kind::half_plane: return v.y >= 0;
    case Kind::box: return v.x >= 0 && v.y >= 0 && v.x <= n && v.y <= n;
  }
  return true;
}

bool Domain::contains_cell(const Cell& c) const {
  switch (kind) {
    case Kind::plane: return true;
    case Kind::half_plane: return c.y >= 0;
    case Kind::box: return c.x >= 0 && c.y >= 0 && c.x < n && c.y < n;
  }
  return true;
}

bool Domain::contains(const Cluster& c) const {
  return std::all_of(c.begin(), c.end(), [&](const Cell& s) { return contains_cell(s); });
}

bool Domain::contains_path(const Path& p) const {
  return std::all_of(p.begin(), p.end(), [&](const Site& s) { return contains_vertex(s); });
}

DecorationFunction restrict_to_domain(const DecorationFunction& phi, const Domain& d, ModificationRule rule) {
  DecorationFunction f = phi;
  f.name = phi.name + "|D";
  f.eval = [phi, d, rule](const Cluster& c, const ContourView& v) {
    if (d.contains(c)) return phi(c, v);
    return rule ? rule(c, phi(c, v), d) : 0.0;
  };
  return f;
}

double modified_weight(const Path& gamma, const Domain& d, const DecorationFunction& phi, double beta, int d_max,
                       ModificationRule rule) {
  if (phi.zero) return free_weight(gamma, phi, beta, d_max).log_weight;
  return free_weight(gamma, restrict_to_domain(phi, d, std::move(rule)), beta, d_max).log_weight;
}

TransformedDecoration positive_transform(const DecorationFunction& phi, double beta, int d_max) {
  TransformedDecoration t;
  t.d_max = d_max;
  t.c_beta_bound = std::exp(-phi.chi * beta);
  if (phi.zero) {
    t.phi_prime = phi;
    t.beta_prime = beta;
    t.identity = true;
    return t;
  }
  t.c_beta = cluster_catalog(d_max).c_beta(beta, phi.chi);
  t.beta_prime = beta + 3.0 * t.c_beta;
  const double cb = phi.chi * beta;
  t.phi_prime.chi = phi.chi;
  t.phi_prime.locality_radius = phi.locality_radius + 1;
  t.phi_prime.name = phi.name + "'";
  t.phi_prime.eval = [phi, cb](const Cluster& c, const ContourView& v) {
    const int n = v.nabla_count(c);
    double val = n * std::exp(-cb * (cluster_d(c) + 1));
    if (v.touches_delta(c)) val += phi(c, v);
    return val;
  };
  return t;
}

std::vector<Cluster> nabla_clusters(const Path& gamma, int d_max) {
  const ContourView view(gamma);
  std::vector<Cluster> out;
  for (auto& [c, d] : cluster_catalog(d_max).touching(view.nabla_cells())) out.push_back(c);
  return out;
}

double animal_weight(const Animal& a, const DecorationFunction& phi_prime, double beta) {
  if (a.contour.size() < 2) throw std::invalid_argument("animal needs a nonempty contour");
  const ContourView view(a.contour);
  double w = -beta * static_cast<double>(a.contour.size() - 1);
  for (const Cluster& c : a.clusters) {
    if (view.nabla_count(c) == 0) throw std::invalid_argument("cluster does not touch the thickened contour");
    const double v = phi_prime(c, view);
    if (v < 0.0) throw std::domain_error("negative transformed decoration");
    w += std::log(std::expm1(v));
  }
  return w;
}

double animal_weight(const Animal& a, const TransformedDecoration& t) {
  if (t.identity) {
    if (!a.clusters.empty()) return -std::numeric_limits<double>::infinity();
    return -t.beta_prime * static_cast<double>(a.contour.size() - 1);
  }
  return animal_weight(a, t.phi_prime, t.beta_prime);
}

// ------------------------------------------------------------ path builder

PathBuilder::PathBuilder(int max_len, Site start)
    : radius_(max_len + 1), side_(2 * static_cast<i64>(max_len + 1) + 1), start_(start) {
  grid_.assign(static_cast<std::size_t>(side_ * side_), VInfo{});
  verts_.push_back(start);
  grid_[idx(start)].count = 1;
}

bool PathBuilder::inside(const Site& v) const {
  // strict, so that the lower-left neighbour used by bond_used stays on the grid
  return std::llabs(v.x - start_.x) < radius_ && std::llabs(v.y - start_.y) < radius_;
}

std::size_t PathBuilder::idx(const Site& v) const {
  return static_cast<std::size_t>((v.y - start_.y + radius_) * side_ + (v.x - start_.x + radius_));
}

bool PathBuilder::bond_used(const Site& v, int dir) const {
  switch (dir) {
    case kEast: return grid_[idx(v)].bonds & 1;
    case kNorth: return grid_[idx(v)].bonds & 2;
    case kWest: return grid_[idx(v - Site{1, 0})].bonds & 1;
    default: return grid_[idx(v - Site{0, 1})].bonds & 2;
  }
}

void PathBuilder::set_bond(const Site& v, int dir, bool used) {
  VInfo* info;
  std::uint8_t bit;
  switch (dir) {
    case kEast: info = &grid_[idx(v)]; bit = 1; break;
    case kNorth: info = &grid_[idx(v)]; bit = 2; break;
    case kWest: info = &grid_[idx(v - Site{1, 0})]; bit = 1; break;
    default: info = &grid_[idx(v - Site{0, 1})]; bit = 2; break;
  }
  if (used) info->bonds |= bit;
  else info->bonds &= static_cast<std::uint8_t>(~bit);
}

int PathBuilder::visits(const Site& v) const { return inside(v) ? grid_[idx(v)].count : 0; }

bool PathBuilder::can_step(int dir) const {
  const Site v = head();
  const Site w = v + dir_step(dir);
  if (!inside(w)) return false;
  if (bond_used(v, dir)) return false;
  const VInfo& iv = grid_[idx(v)];
  if (iv.count == 2) {
    // second visit: the outgoing side is forced by the arrival side
    const int arrival = opposite(dirs_.back());
    if (dir != ne_partner(arrival)) return false;
  }
  const VInfo& iw = grid_[idx(w)];
  if (iw.count >= 2) return false;
  if (iw.count == 1) {
    if (w == start_) return false;
    if (iw.first_out < 0 || ne_partner(iw.first_in) != iw.first_out) return false;
  }
  return true;
}

void PathBuilder::step(int dir) {
  const Site v = head();
  const Site w = v + dir_step(dir);
  VInfo& iv = grid_[idx(v)];
  if (iv.count == 1) iv.first_out = static_cast<std::int8_t>(dir);
  set_bond(v, dir, true);
  VInfo& iw = grid_[idx(w)];
  iw.count += 1;
  if (iw.count == 1) iw.first_in = static_cast<std::int8_t>(opposite(dir));
  verts_.push_back(w);
  dirs_.push_back(dir);
}

void PathBuilder::undo() {
  const int dir = dirs_.back();
  const Site w = verts_.back();
  verts_.pop_back();
  dirs_.pop_back();
  const Site v = head();
  VInfo& iw = grid_[idx(w)];
  if (iw.count == 1) iw.first_in = -1;
  iw.count -= 1;
  set_bond(v, dir, false);
  VInfo& iv = grid_[idx(v)];
  if (iv.count == 1) iv.first_out = -1;
}

bool is_admissible(const Path& p) {
  if (p.size() < 2) return false;
  std::set<std::pair<Site, Site>> bonds;
  std::map<Site, std::vector<std::pair<int, int>>> pairs;  // (in side, out side)
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    const Site d = p[i + 1] - p[i];
    if (std::llabs(d.x) + std::llabs(d.y) != 1) return false;
    if (!bonds.insert({std::min(p[i], p[i + 1]), std::max(p[i], p[i + 1])}).second) return false;
  }
  for (std::size_t i = 1; i + 1 < p.size(); ++i)
    pairs[p[i]].push_back({dir_between(p[i], p[i - 1]), dir_between(p[i], p[i + 1])});
  if (pairs.count(p.front()) || pairs.count(p.back()) || p.front() == p.back()) return false;
  for (const auto& [v, ps] : pairs) {
    if (ps.size() > 2) return false;
    if (ps.size() == 2)
      for (auto [a, b] : ps) {
        // both other endpoints strictly on one side of the slope-1 line through v
        const Site da = dir_step(a), db = dir_step(b);
        if ((da.y - da.x > 0) != (db.y - db.x > 0)) return false;
      }
  }
  return true;
}

// ------------------------------------------------------ partition function

namespace {

struct LogSum {
  double m = -std::numeric_limits<double>::infinity();
  double s = 0.0;
  void add(double l) {
    if (l == -std::numeric_limits<double>::infinity()) return;
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
  double value() const { return s > 0 ? m + std::log(s) : -std::numeric_limits<double>::infinity(); }
};

struct Accumulator {
  std::vector<LogSum> by_len;
  std::vector<std::uint64_t> count;
  std::uint64_t nodes = 0;
  explicit Accumulator(int max_len) : by_len(static_cast<std::size_t>(max_len + 1)), count(static_cast<std::size_t>(max_len + 1), 0) {}
  void merge(const Accumulator& o) {
    for (std::size_t i = 0; i < count.size(); ++i) {
      by_len[i].merge(o.by_len[i]);
      count[i] += o.count[i];
    }
    nodes += o.nodes;
  }
};

struct Search {
  Site target;
  int max_len;
  const Domain* constraint;
  std::function<void(const PathBuilder&)> on_path;
  double guard;
  std::atomic<std::uint64_t>* global_nodes;
  std::uint64_t local_nodes = 0;

  void flush() {
    if (static_cast<double>(global_nodes->fetch_add(local_nodes) + local_nodes) > guard)
      throw GuardError("contour enumeration exceeds guard");
    local_nodes = 0;
  }

  void dfs(PathBuilder& b) {
    if (++local_nodes % 1024 == 0) flush();
    if (b.head() == target) {
      on_path(b);
      return;
    }
    if (b.length() == max_len) return;
    for (int dir = 0; dir < 4; ++dir) {
      if (!b.can_step(dir)) continue;
      const Site w = b.head() + dir_step(dir);
      if (!constraint->contains_vertex(w)) continue;
      const i64 dist = std::llabs(target.x - w.x) + std::llabs(target.y - w.y);
      if (dist > max_len - b.length() - 1) continue;
      b.step(dir);
      dfs(b);
      b.undo();
    }
  }
};

// Prefixes of length `depth` (or complete paths reached earlier).
void collect_prefixes(PathBuilder& b, const Site& target, int max_len, const Domain& c, int depth,
                      std::vector<std::vector<int>>& prefixes) {
  if (b.head() == target || b.length() == depth) {
    prefixes.push_back(b.dirs());
    return;
  }
  if (b.length() == max_len) return;
  for (int dir = 0; dir < 4; ++dir) {
    if (!b.can_step(dir)) continue;
    const Site w = b.head() + dir_step(dir);
    if (!c.contains_vertex(w)) continue;
    const i64 dist = std::llabs(target.x - w.x) + std::llabs(target.y - w.y);
    if (dist > max_len - b.length() - 1) continue;
    b.step(dir);
    collect_prefixes(b, target, max_len, c, depth, prefixes);
    b.undo();
  }
}

PartitionResult finish(const Accumulator& acc, const DecorationFunction& phi, double beta) {
  PartitionResult r;
  const std::size_t n = acc.count.size();
  r.count_by_length = acc.count;
  r.log_by_length.assign(n, -std::numeric_limits<double>::infinity());
  LogSum total;
  for (std::size_t L = 0; L < n; ++L) {
    if (acc.count[L] == 0) continue;
    r.log_by_length[L] = phi.zero ? std::log(static_cast<double>(acc.count[L])) - beta * static_cast<double>(L)
                                  : acc.by_len[L].value();
    total.add(r.log_by_length[L]);
    r.n_contours += acc.count[L];
  }
  r.log_g = total.value();
  std::vector<std::size_t> nz;
  for (std::size_t L = 0; L < n; ++L)
    if (acc.count[L]) nz.push_back(L);
  if (nz.size() >= 2) {
    const std::size_t a = nz[nz.size() - 2], b = nz.back();
    const double rho = std::exp((r.log_by_length[b] - r.log_by_length[a]) / static_cast<double>(b - a) * 2.0);
    r.tail_estimate = rho < 1.0 ? std::exp(r.log_by_length[b] - r.log_g) * rho / (1.0 - rho)
                                : std::numeric_limits<double>::infinity();
  }
  return r;
}

std::function<void(const PathBuilder&)> recorder(Accumulator& acc, const DecorationFunction& phi, double beta,
                                                 const PartitionOptions& opt) {
  return [&acc, &phi, beta, &opt](const PathBuilder& b) {
    const auto L = static_cast<std::size_t>(b.length());
    acc.count[L] += 1;
    if (phi.zero) return;
    const Path& p = b.vertices();
    const double lw = opt.modify ? modified_weight(p, *opt.modify, phi, beta, opt.d_max)
                                 : free_weight(p, phi, beta, opt.d_max).log_weight;
    acc.by_len[L].add(lw);
  };
}

void check_target(const Site& x, const PartitionOptions& opt) {
  if (x == Site{0, 0}) throw std::invalid_argument("target must differ from the origin");
  if (opt.max_len < 1) throw std::invalid_argument("max_len must be positive");
  if (!opt.constraint.contains_vertex({0, 0}) || !opt.constraint.contains_vertex(x))
    throw std::invalid_argument("endpoints violate the constraint");
}

}  // namespace

PartitionResult partition_function_serial(const Site& x, const DecorationFunction& phi, double beta,
                                          const PartitionOptions& opt) {
  check_target(x, opt);
  Accumulator acc(opt.max_len);
  std::atomic<std::uint64_t> nodes{0};
  Search s{x, opt.max_len, &opt.constraint, recorder(acc, phi, beta, opt), opt.guard, &nodes};
  PathBuilder b(opt.max_len);
  s.dfs(b);
  s.flush();
  return finish(acc, phi, beta);
}

PartitionResult partition_function(const Site& x, const DecorationFunction& phi, double beta,
                                   const PartitionOptions& opt) {
  check_target(x, opt);
  std::vector<std::vector<int>> prefixes;
  {
    PathBuilder b(opt.max_len);
    collect_prefixes(b, x, opt.max_len, opt.constraint, std::min(opt.prefix_depth, opt.max_len), prefixes);
  }
  std::vector<Accumulator> parts(prefixes.size(), Accumulator(opt.max_len));
  std::atomic<std::uint64_t> nodes{0};
  std::atomic<bool> failed{false};
  std::string what;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    if (failed.load()) continue;
    try {
      PathBuilder b(opt.max_len);
      for (int d : prefixes[i]) b.step(d);
      Search s{x, opt.max_len, &opt.constraint, recorder(parts[i], phi, beta, opt), opt.guard, &nodes};
      s.dfs(b);
      s.flush();
    } catch (const std::exception& e) {
#pragma omp critical
      what = e.what();
      failed = true;
    }
  }
  if (failed) throw GuardError(what);
  Accumulator acc(opt.max_len);
  for (const auto& p : parts) acc.merge(p);
  return finish(acc, phi, beta);
}

void for_each_contour(const Site& x, int max_len, const Domain& constraint,
                      const std::function<void(const Path&)>& visit) {
  std::atomic<std::uint64_t> nodes{0};
  Search s{x, max_len, &constraint, [&](const PathBuilder& b) { visit(b.vertices()); }, 5e9, &nodes};
  PathBuilder b(max_len);
  s.dfs(b);
}

// --------------------------------------------------------- surface tension

RichardsonFit richardson_fit(const std::vector<int>& n, const std::vector<double>& v) {
  RichardsonFit f;
  const std::size_t m = n.size();
  if (m == 0) return f;
  if (m == 1) {
    f.a = v[0];
    return f;
  }
  const int k = m >= 3 ? 3 : 2;
  Eigen::MatrixXd X(static_cast<Eigen::Index>(m), k);
  Eigen::VectorXd y(static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const double N = n[i];
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    if (k == 3) {
      X(static_cast<Eigen::Index>(i), 1) = std::log(N) / N;
      X(static_cast<Eigen::Index>(i), 2) = 1.0 / N;
    } else {
      X(static_cast<Eigen::Index>(i), 1) = 1.0 / N;
    }
    y(static_cast<Eigen::Index>(i)) = v[i];
  }
  const Eigen::VectorXd beta = X.colPivHouseholderQr().solve(y);
  f.a = beta(0);
  if (k == 3) {
    f.b = beta(1);
    f.c = beta(2);
  } else {
    f.c = beta(1);
  }
  const Eigen::Index dof = static_cast<Eigen::Index>(m) - k;
  if (dof > 0) {
    const double rss = (y - X * beta).squaredNorm();
    const Eigen::MatrixXd cov = (X.transpose() * X).inverse() * (rss / static_cast<double>(dof));
    f.stderr_a = std::sqrt(std::max(0.0, cov(0, 0)));
  } else {
    f.stderr_a = std::abs(f.a - v.back());
  }
  return f;
}

TensionEntry surface_tension(const Site& direction, double beta, const DecorationFunction& phi,
                             const std::vector<int>& n_list, int extra_len, int max_len_cap) {
  TensionEntry t;
  t.direction = direction;
  const double norm = std::hypot(static_cast<double>(direction.x), static_cast<double>(direction.y));
  for (int N : n_list) {
    const Site x{direction.x * N, direction.y * N};
    const int l1 = static_cast<int>(std::llabs(x.x) + std::llabs(x.y));
    if (l1 > max_len_cap) throw GuardError("target beyond the enumeration cap");
    PartitionOptions opt;
    opt.max_len = std::min(l1 + extra_len, max_len_cap);
    const PartitionResult r = partition_function(x, phi, beta, opt);
    t.n.push_back(N);
    t.values.push_back(-r.log_g / (N * norm));
  }
  const RichardsonFit f = richardson_fit(t.n, t.values);
  t.extrapolated = f.a;
  t.stderr_fit = f.stderr_a;
  return t;
}

namespace {
Site primitive(const Site& d) {
  const i64 g = std::gcd(std::llabs(d.x), std::llabs(d.y));
  if (g == 0) throw std::invalid_argument("zero direction");
  return {d.x / g, d.y / g};
}
double angle(const Site& d) { return std::atan2(static_cast<double>(d.y), static_cast<double>(d.x)); }
}  // namespace

void SurfaceTensionTable::add(const Site& dir, double tau_unit_value) {
  const Site p = primitive(dir);
  for (std::size_t i = 0; i < directions.size(); ++i)
    if (directions[i] == p) {
      values[i] = tau_unit_value;
      return;
    }
  directions.push_back(p);
  values.push_back(tau_unit_value);
}

std::optional<double> SurfaceTensionTable::tau_unit(const Site& dir) const {
  const Site p = primitive(dir);
  for (std::size_t i = 0; i < directions.size(); ++i)
    if (directions[i] == p) return values[i];
  return std::nullopt;
}

std::optional<double> SurfaceTensionTable::tau(const Site& z) const {
  auto t = tau_unit(z);
  if (!t) return std::nullopt;
  return *t * std::hypot(static_cast<double>(z.x), static_cast<double>(z.y));
}

void SurfaceTensionTable::write_csv(std::ostream& os) const {
  os << "# beta=" << beta << " source=" << source << " cutoff=" << cutoff << "\n";
  os << "direction_x,direction_y,tau_unit\n";
  for (std::size_t i = 0; i < directions.size(); ++i)
    os << directions[i].x << ',' << directions[i].y << ',' << values[i] << '\n';
}

Tilt dual_tilt(const Site& y, const SurfaceTensionTable& table) {
  const Site p = primitive(y);
  std::vector<std::size_t> order(table.directions.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return angle(table.directions[a]) < angle(table.directions[b]); });
  std::size_t k = order.size();
  for (std::size_t i = 0; i < order.size(); ++i)
    if (table.directions[order[i]] == p) k = i;
  if (k == order.size()) throw StencilError("direction not in the table");
  if (order.size() < 2) throw StencilError("stencil needs at least two directions");
  const double t0 = angle(p), f0 = table.values[order[k]];
  double deriv;
  if (k > 0 && k + 1 < order.size()) {
    const double tm = angle(table.directions[order[k - 1]]), tp = angle(table.directions[order[k + 1]]);
    const double fm = table.values[order[k - 1]], fp = table.values[order[k + 1]];
    const double hm = t0 - tm, hp = tp - t0;
    deriv = (hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f0) / (hp * hm * (hp + hm));
  } else {
    const std::size_t j = k > 0 ? k - 1 : k + 1;
    deriv = (table.values[order[j]] - f0) / (angle(table.directions[order[j]]) - t0);
  }
  const double c = std::cos(t0), s = std::sin(t0);
  return {f0 * c - deriv * s, f0 * s + deriv * c};
}

double wulff_excess(const Tilt& h, const SurfaceTensionTable& table) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < table.directions.size(); ++i) {
    const double t = angle(table.directions[i]);
    worst = std::max(worst, h.h1 * std::cos(t) + h.h2 * std::sin(t) - table.values[i]);
  }
  return worst;
}

}  // namespace soslab
