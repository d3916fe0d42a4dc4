#include "soslab/sos.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <queue>
#include <unordered_set>

namespace soslab {

BoundaryCondition BoundaryCondition::constant(int j) {
  BoundaryCondition bc;
  bc.kind = Kind::constant;
  bc.value = j;
  return bc;
}

BoundaryCondition BoundaryCondition::dobrushin_0111() {
  BoundaryCondition bc;
  bc.kind = Kind::dobrushin_0111;
  return bc;
}

BoundaryCondition BoundaryCondition::legs(int h_high, int h_low, i64 xl, i64 xr) {
  BoundaryCondition bc;
  bc.kind = Kind::legs;
  bc.h_high = h_high;
  bc.h_low = h_low;
  bc.x_left = xl;
  bc.x_right = xr;
  return bc;
}

BoundaryCondition BoundaryCondition::explicit_heights(std::unordered_map<Site, int, SiteHash> m, int fallback) {
  BoundaryCondition bc;
  bc.kind = Kind::explicit_map;
  bc.map = std::move(m);
  bc.value = fallback;
  return bc;
}

int BoundaryCondition::height_at(const Box& box, const Site& s) const {
  switch (kind) {
    case Kind::constant:
      return value;
    case Kind::dobrushin_0111:
      return s.y < box.origin.y ? 0 : 1;
    case Kind::legs:
      return (s.y < box.origin.y && s.x >= x_left && s.x <= x_right) ? h_low : h_high;
    case Kind::explicit_map: {
      auto it = map.find(s);
      return it == map.end() ? value : it->second;
    }
  }
  return value;
}

void BoundaryCondition::validate(const Box& box) const {
  if (kind != Kind::legs) return;
  if (h_low != h_high - 1) throw std::invalid_argument("legs boundary needs h_low = h_high - 1");
  if (x_left > x_right || x_left < box.origin.x || x_right >= box.origin.x + box.width)
    throw std::invalid_argument("legs segment must lie inside the bottom row");
}

namespace {
int natural_init(const BoundaryCondition& bc) {
  switch (bc.kind) {
    case BoundaryCondition::Kind::dobrushin_0111: return 1;
    case BoundaryCondition::Kind::legs: return bc.h_high;
    default: return bc.value;
  }
}
}  // namespace

HeightField::HeightField(const Box& box, BoundaryCondition bc, bool floor, double beta)
    : HeightField(box, bc, floor, beta, natural_init(bc)) {}

HeightField::HeightField(const Box& box, BoundaryCondition bc, bool floor, double beta, int init)
    : box_(box), bc_(std::move(bc)), floor_(floor), beta_(beta) {
  if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
  bc_.validate(box_);
  data_.assign(stride() * static_cast<std::size_t>(box_.height + 2), 0);
  if (floor_ && init < 0) init = 0;
  for (i64 y = box_.origin.y - 1; y <= box_.origin.y + box_.height; ++y)
    for (i64 x = box_.origin.x - 1; x <= box_.origin.x + box_.width; ++x) {
      const Site s{x, y};
      data_[index(s)] = box_.contains(s) ? init : bc_.height_at(box_, s);
    }
}

void HeightField::set(const Site& s, int h) {
  if (!box_.contains(s)) throw std::out_of_range("set outside the box");
  if (floor_ && h < 0) throw std::invalid_argument("negative height with floor");
  data_[index(s)] = h;
}

i64 hamiltonian(const HeightField& f) {
  const Box& b = f.box();
  i64 total = 0;
  for (i64 y = b.origin.y; y < b.origin.y + b.height; ++y)
    for (i64 x = b.origin.x; x < b.origin.x + b.width; ++x) {
      const int h = f.at({x, y});
      total += std::abs(h - f.at({x + 1, y})) + std::abs(h - f.at({x, y + 1}));
      if (x == b.origin.x) total += std::abs(h - f.at({x - 1, y}));
      if (y == b.origin.y) total += std::abs(h - f.at({x, y - 1}));
    }
  return total;
}

// ---------------------------------------------------------------- heat bath

HeatBath::HeatBath(double beta) : beta_(beta), r_(std::exp(-4.0 * beta)) {
  table_.resize(256);
  for (std::size_t e = 0; e < table_.size(); ++e) table_[e] = std::exp(-beta * static_cast<double>(e));
}

double HeatBath::weight(i64 e) const {
  return e < static_cast<i64>(table_.size()) ? table_[static_cast<std::size_t>(e)]
                                              : std::exp(-beta_ * static_cast<double>(e));
}

namespace {

struct Conditional {
  int a = 0, b = 0;             // explicit range
  i64 emin = 0;
  std::array<int, 4> n{};
  bool lower_tail = false;
  i64 lower_len = -1;           // -1: unbounded
  double upper = 0.0, lower = 0.0, body = 0.0;
};

i64 energy(int h, const std::array<int, 4>& n) {
  return std::abs(h - n[0]) + std::abs(h - n[1]) + std::abs(h - n[2]) + std::abs(h - n[3]);
}

}  // namespace

namespace {

template <class W>
Conditional conditional(const int nbr[4], bool floor, double r, W&& weight) {
  Conditional c;
  c.n = {nbr[0], nbr[1], nbr[2], nbr[3]};
  std::sort(c.n.begin(), c.n.end());
  const int lo = floor ? 0 : std::numeric_limits<int>::min();
  c.a = std::max(c.n[0], lo);
  c.b = std::max(c.n[3], c.a);
  // minimum energy over [a,b]: median if reachable, else the clamped endpoint
  const int m = std::clamp(c.n[1], c.a, c.b);
  c.emin = energy(m, c.n);
  for (int h = c.a; h <= c.b; ++h) c.body += weight(energy(h, c.n) - c.emin);
  const double rr = r / (1.0 - r);
  c.upper = weight(energy(c.b, c.n) - c.emin) * rr;
  if (c.a > lo) {
    c.lower_tail = true;
    const double wa = weight(energy(c.a, c.n) - c.emin);
    if (floor) {
      c.lower_len = static_cast<i64>(c.a) - lo;
      c.lower = wa * r * (1.0 - std::pow(r, static_cast<double>(c.lower_len))) / (1.0 - r);
    } else {
      c.lower = wa * rr;
    }
  }
  return c;
}

// k >= 1 with P(k) proportional to r^k, k <= len (len < 0: unbounded).
i64 sample_geometric(double r, i64 len, double u) {
  const double lr = std::log(r);
  double mass = 1.0;
  if (len > 0) mass = -std::expm1(static_cast<double>(len) * lr);
  i64 k = 1 + static_cast<i64>(std::floor(std::log1p(-u * mass) / lr));
  if (len > 0 && k > len) k = len;
  return std::max<i64>(k, 1);
}

}  // namespace

int HeatBath::sample(const int nbr[4], bool floor, Rng& rng) const {
  auto w = [this](i64 e) { return weight(e); };
  const Conditional c = conditional(nbr, floor, r_, w);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double u = uni(rng) * (c.body + c.upper + c.lower);
  if (u < c.body) {
    for (int h = c.a; h <= c.b; ++h) {
      u -= weight(energy(h, c.n) - c.emin);
      if (u < 0.0) return h;
    }
    return c.b;
  }
  u -= c.body;
  if (u < c.upper || !c.lower_tail) return c.b + static_cast<int>(sample_geometric(r_, -1, uni(rng)));
  return c.a - static_cast<int>(sample_geometric(r_, c.lower_len, uni(rng)));
}

double HeatBath::probability(int h, const int nbr[4], bool floor) const {
  if (floor && h < 0) return 0.0;
  auto w = [this](i64 e) { return std::exp(-beta_ * static_cast<double>(e)); };
  const Conditional c = conditional(nbr, floor, r_, w);
  return w(energy(h, c.n) - c.emin) / (c.body + c.upper + c.lower);
}

void heat_bath_update(HeightField& field, const Site& site, Rng& rng, const HeatBath& hb) {
  if (!field.interior(site)) throw std::out_of_range("heat bath update outside the box");
  const int nbr[4] = {field.at({site.x - 1, site.y}), field.at({site.x + 1, site.y}),
                      field.at({site.x, site.y - 1}), field.at({site.x, site.y + 1})};
  field.raw()[field.index(site)] = hb.sample(nbr, field.floor(), rng);
}

void heat_bath_update(HeightField& field, const Site& site, Rng& rng) {
  heat_bath_update(field, site, rng, HeatBath(field.beta()));
}

void sweep(HeightField& field, Rng& rng, const HeatBath& hb) {
  const Box& b = field.box();
  const std::size_t s = field.stride();
  int* d = field.raw();
  const bool fl = field.floor();
  for (i64 y = 1; y <= b.height; ++y) {
    int* row = d + static_cast<std::size_t>(y) * s;
    for (i64 x = 1; x <= b.width; ++x) {
      const int nbr[4] = {row[x - 1], row[x + 1], row[x - static_cast<i64>(s)], row[x + static_cast<i64>(s)]};
      row[x] = hb.sample(nbr, fl, rng);
    }
  }
}

std::vector<std::vector<double>> run_chain(HeightField& field, int sweeps, Rng& rng,
                                           const std::vector<Observable>& observables) {
  if (sweeps < 0) throw std::invalid_argument("sweeps must be nonnegative");
  const HeatBath hb(field.beta());
  std::vector<std::vector<double>> series;
  series.reserve(static_cast<std::size_t>(sweeps));
  for (int t = 0; t < sweeps; ++t) {
    sweep(field, rng, hb);
    std::vector<double> row;
    row.reserve(observables.size());
    for (const auto& obs : observables) row.push_back(obs(field));
    series.push_back(std::move(row));
  }
  return series;
}

// ------------------------------------------------------------ exact oracle

int default_hmax(double beta) { return static_cast<int>(std::ceil(40.0 / (4.0 * beta))) + 3; }

double exact_log_z(const std::vector<Site>& sites, const std::vector<int>& lo, const std::vector<int>& hi,
                   const std::function<int(const Site&)>& outside, double beta, double guard) {
  if (sites.empty()) return 0.0;
  i64 x0 = sites[0].x, x1 = sites[0].x, y0 = sites[0].y, y1 = sites[0].y;
  for (const Site& s : sites) {
    x0 = std::min(x0, s.x);
    x1 = std::max(x1, s.x);
    y0 = std::min(y0, s.y);
    y1 = std::max(y1, s.y);
  }
  const i64 w = x1 - x0 + 1;
  const i64 hgt = y1 - y0 + 1;
  // position -> active site index or -1
  std::vector<int> slot_of(static_cast<std::size_t>(w * hgt), -1);
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (lo[i] > hi[i]) return -std::numeric_limits<double>::infinity();
    slot_of[static_cast<std::size_t>((sites[i].y - y0) * w + (sites[i].x - x0))] = static_cast<int>(i);
  }
  auto active = [&](i64 x, i64 y) -> int {
    if (x < x0 || x > x1 || y < y0 || y > y1) return -1;
    return slot_of[static_cast<std::size_t>((y - y0) * w + (x - x0))];
  };

  // frontier radices, oldest slot first (most significant digit)
  std::vector<i64> radix(static_cast<std::size_t>(w), 1);
  std::vector<int> base(static_cast<std::size_t>(w), 0);
  std::vector<double> state{1.0}, next;
  double log_acc = 0.0;
  int max_e = 0;
  std::vector<double> etab;
  auto boltz = [&](int e) {
    while (e > max_e || etab.empty()) {
      etab.push_back(std::exp(-beta * static_cast<double>(etab.size())));
      max_e = static_cast<int>(etab.size()) - 1;
    }
    return etab[static_cast<std::size_t>(e)];
  };

  for (i64 k = 0; k < w * hgt; ++k) {
    const i64 x = x0 + k % w;
    const i64 y = y0 + k / w;
    const int idx = slot_of[static_cast<std::size_t>(k)];
    i64 rest_size = 1;
    for (std::size_t s = 1; s < radix.size(); ++s) rest_size *= radix[s];
    const i64 old_size = static_cast<i64>(state.size());
    const int nlo = idx >= 0 ? lo[static_cast<std::size_t>(idx)] : 0;
    const i64 r_new = idx >= 0 ? hi[static_cast<std::size_t>(idx)] - nlo + 1 : 1;
    const double work = static_cast<double>(old_size) * static_cast<double>(r_new);
    if (static_cast<double>(rest_size) * static_cast<double>(r_new) > guard || work > 20.0 * guard)
      throw GuardError("transfer-matrix state space exceeds guard");
    next.assign(static_cast<std::size_t>(rest_size * r_new), 0.0);
    if (idx < 0) {
      for (i64 o = 0; o < old_size; ++o) next[static_cast<std::size_t>(o % rest_size)] += state[static_cast<std::size_t>(o)];
    } else {
      const int li = active(x - 1, y);
      const int di = active(x, y - 1);
      const bool left_active = li >= 0;
      const bool down_active = di >= 0;
      // fixed contributions from frozen neighbours
      std::vector<std::pair<int, int>> frozen;  // (value, count)
      auto add_frozen = [&](i64 nx, i64 ny, bool processed_active) {
        if (processed_active) return;
        if (active(nx, ny) >= 0) return;  // counted later
        frozen.push_back({outside({nx, ny}), 1});
      };
      add_frozen(x - 1, y, left_active);
      add_frozen(x, y - 1, down_active);
      add_frozen(x + 1, y, false);
      add_frozen(x, y + 1, false);
      const i64 r_last = radix.back();
      const int base_last = base.back();
      const int base_first = base.front();
      std::vector<int> efix(static_cast<std::size_t>(r_new));
      for (i64 v = 0; v < r_new; ++v) {
        int e = 0;
        for (const auto& [val, cnt] : frozen) e += cnt * std::abs(nlo + static_cast<int>(v) - val);
        efix[static_cast<std::size_t>(v)] = e;
      }
      for (i64 o = 0; o < old_size; ++o) {
        const double p = state[static_cast<std::size_t>(o)];
        if (p == 0.0) continue;
        const i64 rest = o % rest_size;
        const int hd = down_active ? base_first + static_cast<int>(o / rest_size) : 0;
        const int hl = left_active ? base_last + static_cast<int>(o % r_last) : 0;
        double* out = &next[static_cast<std::size_t>(rest * r_new)];
        for (i64 v = 0; v < r_new; ++v) {
          const int h = nlo + static_cast<int>(v);
          int e = efix[static_cast<std::size_t>(v)];
          if (left_active) e += std::abs(h - hl);
          if (down_active) e += std::abs(h - hd);
          out[v] += p * boltz(e);
        }
      }
    }
    radix.erase(radix.begin());
    base.erase(base.begin());
    radix.push_back(r_new);
    base.push_back(nlo);
    const double m = *std::max_element(next.begin(), next.end());
    if (m <= 0.0) return -std::numeric_limits<double>::infinity();
    for (double& v : next) v /= m;
    log_acc += std::log(m);
    state.swap(next);
  }
  return log_acc + std::log(std::accumulate(state.begin(), state.end(), 0.0));
}

ExactResult exact_enumerate(const Box& box, const BoundaryCondition& bc, bool floor, double beta, int hmax,
                            bool with_marginals, double guard) {
  bc.validate(box);
  if (hmax < 0) hmax = default_hmax(beta);
  ExactResult res;
  for (i64 y = box.origin.y; y < box.origin.y + box.height; ++y)
    for (i64 x = box.origin.x; x < box.origin.x + box.width; ++x) res.sites.push_back({x, y});
  res.h_lo = floor ? 0 : -hmax;
  res.h_hi = hmax;
  const std::size_t n = res.sites.size();
  std::vector<int> lo(n, res.h_lo), hi(n, res.h_hi);
  auto outside = [&](const Site& s) { return bc.height_at(box, s); };
  res.log_z = exact_log_z(res.sites, lo, hi, outside, beta, guard);
  const double r = std::exp(-4.0 * beta);
  res.tail_bound = static_cast<double>(n) * std::exp(-4.0 * beta * (hmax + 1)) / (1.0 - r);
  if (with_marginals) {
    const int range = res.h_hi - res.h_lo + 1;
    res.marginals.assign(n, std::vector<double>(static_cast<std::size_t>(range), 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (int h = res.h_lo; h <= res.h_hi; ++h) {
        lo[i] = hi[i] = h;
        const double lz = exact_log_z(res.sites, lo, hi, outside, beta, guard);
        res.marginals[i][static_cast<std::size_t>(h - res.h_lo)] = std::exp(lz - res.log_z);
      }
      lo[i] = res.h_lo;
      hi[i] = res.h_hi;
    }
  }
  return res;
}

// ------------------------------------------------------- cluster geometry

bool is_connected(const std::vector<Site>& sites) {
  if (sites.empty()) return false;
  std::unordered_set<Site, SiteHash> set(sites.begin(), sites.end());
  std::unordered_set<Site, SiteHash> seen{sites[0]};
  std::vector<Site> stack{sites[0]};
  while (!stack.empty()) {
    const Site s = stack.back();
    stack.pop_back();
    for (const Site d : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
      const Site t = s + d;
      if (set.count(t) && seen.insert(t).second) stack.push_back(t);
    }
  }
  return seen.size() == set.size();
}

int cluster_d(const std::vector<Site>& cluster) {
  if (cluster.empty()) return 0;
  std::unordered_set<Site, SiteHash> in(cluster.begin(), cluster.end());
  i64 x0 = cluster[0].x, x1 = x0, y0 = cluster[0].y, y1 = y0;
  for (const Site& s : cluster) {
    x0 = std::min(x0, s.x);
    x1 = std::max(x1, s.x);
    y0 = std::min(y0, s.y);
    y1 = std::max(y1, s.y);
  }
  const i64 m = 2;
  x0 -= m;
  y0 -= m;
  x1 += m;
  y1 += m;
  const i64 w = x1 - x0 + 1, h = y1 - y0 + 1;
  const int nv = static_cast<int>(w * h);
  auto vid = [&](const Site& s) { return static_cast<int>((s.y - y0) * w + (s.x - x0)); };

  // edge cost 0 on boundary bonds, 1 otherwise; right/up edges keyed by lower vertex
  std::vector<std::array<int, 2>> cost(static_cast<std::size_t>(nv), {1, 1});
  std::vector<int> parent(static_cast<std::size_t>(nv));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
  int nbonds = 0;
  std::vector<char> touched(static_cast<std::size_t>(nv), 0);
  for (const Site& c : cluster) {
    for (const Site d : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
      const Site t = c + d;
      if (in.count(t)) continue;
      ++nbonds;
      const Site low = (d.x + d.y > 0) ? c : t;
      cost[static_cast<std::size_t>(vid(low))][d.x != 0 ? 0 : 1] = 0;
      parent[find(vid(c))] = find(vid(t));
      touched[vid(c)] = touched[vid(t)] = 1;
    }
  }
  std::vector<int> terminals;
  {
    std::unordered_set<int> roots;
    for (int v = 0; v < nv; ++v)
      if (touched[v] && roots.insert(find(v)).second) terminals.push_back(v);
  }
  const int t = static_cast<int>(terminals.size());
  if (t <= 1) return nbonds;

  // adjacency with costs
  auto for_nbrs = [&](int v, auto&& fn) {
    const i64 vx = v % w, vy = v / w;
    if (vx + 1 < w) fn(v + 1, cost[v][0]);
    if (vx > 0) fn(v - 1, cost[v - 1][0]);
    if (vy + 1 < h) fn(v + static_cast<int>(w), cost[v][1]);
    if (vy > 0) fn(v - static_cast<int>(w), cost[v - w][1]);
  };
  const int inf = std::numeric_limits<int>::max() / 4;
  auto relax = [&](std::vector<int>& dist) {
    using P = std::pair<int, int>;
    std::priority_queue<P, std::vector<P>, std::greater<P>> pq;
    for (int v = 0; v < nv; ++v)
      if (dist[v] < inf) pq.push({dist[v], v});
    while (!pq.empty()) {
      auto [dv, v] = pq.top();
      pq.pop();
      if (dv > dist[v]) continue;
      for_nbrs(v, [&](int u, int c) {
        if (dv + c < dist[u]) {
          dist[u] = dv + c;
          pq.push({dist[u], u});
        }
      });
    }
  };
  // Dreyfus-Wagner over component representatives
  const int full = (1 << t) - 1;
  std::vector<std::vector<int>> dp(static_cast<std::size_t>(full + 1), std::vector<int>(static_cast<std::size_t>(nv), inf));
  for (int i = 0; i < t; ++i) {
    dp[1 << i][terminals[i]] = 0;
    relax(dp[1 << i]);
  }
  for (int mask = 1; mask <= full; ++mask) {
    if ((mask & (mask - 1)) == 0) continue;
    auto& cur = dp[mask];
    const int low = mask & -mask;
    for (int sub = (mask - 1) & mask; sub > 0; sub = (sub - 1) & mask) {
      if (!(sub & low)) continue;
      const auto& a = dp[sub];
      const auto& b = dp[mask ^ sub];
      for (int v = 0; v < nv; ++v) cur[v] = std::min(cur[v], a[v] + b[v]);
    }
    relax(cur);
  }
  return nbonds + dp[full][terminals[0]];
}

// -------------------------------------------------------- cluster weights

ClusterExpansion::ClusterExpansion(double beta, int hmax) : beta_(beta), hmax_(hmax < 0 ? default_hmax(beta) : hmax) {}

double ClusterExpansion::log_z_connected(std::vector<Site> w, std::vector<Site> u) {
  i64 mx = w[0].x, my = w[0].y;
  for (const Site& s : w) {
    mx = std::min(mx, s.x);
    my = std::min(my, s.y);
  }
  for (Site& s : w) s = s - Site{mx, my};
  for (Site& s : u) s = s - Site{mx, my};
  std::sort(w.begin(), w.end());
  std::sort(u.begin(), u.end());
  auto key = std::make_pair(w, u);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  std::vector<int> lo(w.size(), -hmax_), hi(w.size(), hmax_);
  for (std::size_t i = 0; i < w.size(); ++i)
    if (std::binary_search(u.begin(), u.end(), w[i])) lo[i] = 0;
  const double v = exact_log_z(w, lo, hi, [](const Site&) { return 0; }, beta_);
  cache_.emplace(std::move(key), v);
  return v;
}

double ClusterExpansion::log_z_hat(const std::vector<Site>& w, const std::vector<Site>& u) {
  if (w.empty()) return 0.0;
  std::unordered_set<Site, SiteHash> in(w.begin(), w.end());
  std::unordered_set<Site, SiteHash> uset(u.begin(), u.end());
  std::unordered_set<Site, SiteHash> seen;
  double total = 0.0;
  for (const Site& start : w) {
    if (seen.count(start)) continue;
    std::vector<Site> comp, compu, stack{start};
    seen.insert(start);
    while (!stack.empty()) {
      const Site s = stack.back();
      stack.pop_back();
      comp.push_back(s);
      if (uset.count(s)) compu.push_back(s);
      for (const Site d : {Site{1, 0}, Site{-1, 0}, Site{0, 1}, Site{0, -1}}) {
        const Site t = s + d;
        if (in.count(t) && seen.insert(t).second) stack.push_back(t);
      }
    }
    total += log_z_connected(std::move(comp), std::move(compu));
  }
  return total;
}

ClusterWeight ClusterExpansion::f(const std::vector<Site>& v, const std::vector<Site>& u) {
  if (v.size() > 20) throw GuardError("cluster too large for Moebius inversion");
  ClusterWeight cw;
  cw.cluster = v;
  std::unordered_set<Site, SiteHash> uset(u.begin(), u.end());
  for (const Site& s : v)
    if (uset.count(s)) cw.context.push_back(s);
  const std::size_t n = v.size();
  double acc = 0.0;
  std::vector<Site> w, wu;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    w.clear();
    wu.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) {
        w.push_back(v[i]);
        if (uset.count(v[i])) wu.push_back(v[i]);
      }
    const int parity = static_cast<int>(n - w.size()) & 1;
    acc += (parity ? -1.0 : 1.0) * log_z_hat(w, wu);
  }
  cw.value = acc;
  cw.d_value = cluster_d(v);
  return cw;
}

ClusterWeight cluster_weight_fU(const std::vector<Site>& v, const std::vector<Site>& u, double beta, int hmax) {
  ClusterExpansion ce(beta, hmax);
  return ce.f(v, u);
}

// --------------------------------------------------------------- area tilt

double area_tilt_lambda(double L, double beta, int n, double c_inf) {
  const double t = std::log(L) / (4.0 * beta);
  double alpha = t - std::floor(t);
  if (alpha > 1.0 - 1e-12) alpha = 0.0;
  return c_inf * std::exp(4.0 * beta * alpha) * (1.0 - std::exp(-4.0 * beta)) * std::exp(4.0 * beta * n);
}

double area_tilt_log_weight(i64 area, double L, double beta, int n, double c_inf) {
  return -area_tilt_lambda(L, beta, n, c_inf) * static_cast<double>(area) / L;
}

double area_tilt_weight(i64 area, double L, double beta, int n, double c_inf) {
  return std::exp(area_tilt_log_weight(area, L, beta, n, c_inf));
}

}  // namespace soslab
