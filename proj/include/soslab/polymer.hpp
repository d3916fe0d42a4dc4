#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "soslab/lattice.hpp"
#include "soslab/sos.hpp"

namespace soslab {

// Contours in this module live on Z^2 (dual points shifted by -(1/2,1/2)).
// Sites of the original lattice become cells: cell (i,j) is the unit square
// with lower-left corner (i,j).
using Path = std::vector<Site>;
using Cell = Site;
using Cluster = std::vector<Cell>;  // sorted, connected

enum Dir : int { kEast = 0, kNorth = 1, kWest = 2, kSouth = 3 };
Site dir_step(int dir);
int dir_between(const Site& a, const Site& b);
inline int opposite(int dir) { return (dir + 2) & 3; }
// Northeast rule: sides N,W pair together and so do E,S.
inline int ne_partner(int side) { return 3 - side; }

// Cells left (Delta+) and right (Delta-) of the unit step a -> b.
struct BondCells {
  Cell left;
  Cell right;
};
BondCells bond_cells(const Site& a, const Site& b);

// Undirected unit bond keyed by its lower-left endpoint and orientation.
struct BondKey {
  Site low;
  bool vertical = false;
  friend bool operator==(const BondKey&, const BondKey&) = default;
};
struct BondKeyHash {
  std::size_t operator()(const BondKey& b) const noexcept { return SiteHash{}(b.low) * 2 + (b.vertical ? 1 : 0); }
};
BondKey bond_key(const Site& a, const Site& b);

// Precomputed Delta+/Delta- cells and the thickened bond multiset nabla.
class ContourView {
 public:
  explicit ContourView(const Path& path);

  const Path& path() const { return *path_; }
  std::size_t length() const { return path_->size() - 1; }
  bool in_plus(const Cell& c) const { return plus_.count(c) > 0; }
  bool in_minus(const Cell& c) const { return minus_.count(c) > 0; }
  bool in_delta(const Cell& c) const { return in_plus(c) || in_minus(c); }
  bool touches_delta(const Cluster& c) const;
  // Number of nabla bonds (with multiplicity) that the cluster touches.
  int nabla_count(const Cluster& c) const;
  std::vector<Cell> delta_cells() const;
  std::vector<Cell> nabla_cells() const;
  std::vector<Cell> cap_plus(const Cluster& c) const;
  std::vector<Cell> cap_minus(const Cluster& c) const;

 private:
  const Path* path_;
  std::unordered_set<Cell, SiteHash> plus_, minus_;
  std::unordered_map<BondKey, int, BondKeyHash> nabla_;
};

struct DecorationFunction {
  std::function<double(const Cluster&, const ContourView&)> eval;
  double chi = 1.0;
  int locality_radius = 0;
  bool zero = false;
  std::string name;

  double operator()(const Cluster& c, const ContourView& v) const { return zero ? 0.0 : eval(c, v); }
};

DecorationFunction zero_decoration();
// Pseudo-random values a*u*exp(-chi*beta*(d+1)), |u| < 1, hashed from the
// translation-normalised triple (C, C cap Delta+, C cap Delta-).
DecorationFunction synthetic_decoration(double beta, double chi = 1.0, double amplitude = 1.0, std::uint64_t salt = 0);
// SOS decorations from the cluster weights f_U.
DecorationFunction sos_decoration(double beta, double chi = 0.6, int hmax = -1);

// Connected cell sets with d(C) <= d_max, up to translation.
class ClusterCatalog {
 public:
  struct Shape {
    Cluster cells;  // normalised to min x = min y = 0
    int d = 0;
  };
  explicit ClusterCatalog(int d_max);
  int d_max() const { return d_max_; }
  const std::vector<Shape>& shapes() const { return shapes_; }
  // Every translate of every shape containing at least one target cell; sorted, unique.
  std::vector<std::pair<Cluster, int>> touching(const std::vector<Cell>& targets) const;
  // Sum over clusters touching a fixed bond of exp(-chi beta (d+1)).
  double c_beta(double beta, double chi) const;

 private:
  int d_max_;
  std::vector<Shape> shapes_;
};
const ClusterCatalog& cluster_catalog(int d_max);

struct FreeWeight {
  double log_weight = 0.0;
  int n_clusters = 0;
  double tail_estimate = 0.0;  // contribution of the next omitted d shells
  double tail_bound = 0.0;     // e^{cm} counting bound; may be infinite
  bool tail_ok = true;
};

constexpr int kDefaultDMax = 7;

// -beta|gamma| + sum over clusters touching Delta of Phi.
FreeWeight free_weight(const Path& gamma, const DecorationFunction& phi, double beta, int d_max = kDefaultDMax,
                       double tol = 1e-6);

struct Domain {
  enum class Kind { plane, half_plane, box };
  Kind kind = Kind::plane;
  i64 n = 0;  // box side for Q = [0,n]^2

  static Domain plane() { return {}; }
  static Domain half_plane() { return {Kind::half_plane, 0}; }
  static Domain box(i64 n) { return {Kind::box, n}; }
  bool contains_vertex(const Site& v) const;
  bool contains_cell(const Cell& c) const;
  bool contains(const Cluster& c) const;
  bool contains_path(const Path& p) const;
};

using ModificationRule = std::function<double(const Cluster&, double phi, const Domain&)>;
// Phi_D: Phi on clusters inside D; outside D the rule applies (default: 0).
DecorationFunction restrict_to_domain(const DecorationFunction& phi, const Domain& d, ModificationRule rule = {});
double modified_weight(const Path& gamma, const Domain& d, const DecorationFunction& phi, double beta,
                       int d_max = kDefaultDMax, ModificationRule rule = {});

struct TransformedDecoration {
  DecorationFunction phi_prime;
  double beta_prime = 0.0;
  double c_beta = 0.0;
  double c_beta_bound = 0.0;  // e^{-chi beta}
  int d_max = kDefaultDMax;
  bool identity = false;      // Phi == 0: no transform, animals are bare contours
};

// Phi' = |C cap nabla| e^{-chi beta (d+1)} + 1{C cap Delta != 0} Phi, beta' = beta + 3 c(beta).
TransformedDecoration positive_transform(const DecorationFunction& phi, double beta, int d_max = kDefaultDMax);

struct Animal {
  Path contour;
  std::vector<Cluster> clusters;
};

// Clusters with d <= d_max touching nabla(gamma).
std::vector<Cluster> nabla_clusters(const Path& gamma, int d_max = kDefaultDMax);

// -beta|gamma| + sum log(e^{Phi'} - 1); rejects clusters missing nabla(gamma).
double animal_weight(const Animal& a, const DecorationFunction& phi_prime, double beta);
double animal_weight(const Animal& a, const TransformedDecoration& t);

// Incremental builder of splitting-rule admissible open paths.
class PathBuilder {
 public:
  explicit PathBuilder(int max_len, Site start = {0, 0});
  bool can_step(int dir) const;
  void step(int dir);
  void undo();
  Site head() const { return verts_.back(); }
  int length() const { return static_cast<int>(dirs_.size()); }
  const std::vector<Site>& vertices() const { return verts_; }
  const std::vector<int>& dirs() const { return dirs_; }
  int visits(const Site& v) const;

 private:
  struct VInfo {
    std::int8_t count = 0;
    std::int8_t first_in = -1;
    std::int8_t first_out = -1;
    std::uint8_t bonds = 0;  // bit0: bond to v+e1, bit1: bond to v+e2
  };
  bool inside(const Site& v) const;
  std::size_t idx(const Site& v) const;
  bool bond_used(const Site& v, int dir) const;
  void set_bond(const Site& v, int dir, bool used);

  int radius_;
  i64 side_;
  Site start_;
  std::vector<VInfo> grid_;
  std::vector<Site> verts_;
  std::vector<int> dirs_;
};

// Whether a full path obeys the contour rules (used as an independent check).
bool is_admissible(const Path& p);

struct PartitionOptions {
  int max_len = 10;
  Domain constraint = Domain::plane();          // gamma subset of this domain
  std::optional<Domain> modify;                 // use q_D instead of q
  int d_max = kDefaultDMax;
  int prefix_depth = 4;
  double guard = 5e9;                           // DFS nodes
};

struct PartitionResult {
  double log_g = -std::numeric_limits<double>::infinity();
  std::vector<double> log_by_length;            // index = length
  std::vector<std::uint64_t> count_by_length;
  std::uint64_t n_contours = 0;
  double tail_estimate = 0.0;                   // relative mass beyond max_len, geometric in length
};

PartitionResult partition_function(const Site& x, const DecorationFunction& phi, double beta,
                                   const PartitionOptions& opt);
PartitionResult partition_function_serial(const Site& x, const DecorationFunction& phi, double beta,
                                          const PartitionOptions& opt);

// Visits every admissible path from the origin to x with length <= max_len inside the constraint.
void for_each_contour(const Site& x, int max_len, const Domain& constraint,
                      const std::function<void(const Path&)>& visit);

struct TensionEntry {
  Site direction;
  std::vector<int> n;
  std::vector<double> values;
  double extrapolated = 0.0;
  double stderr_fit = 0.0;
};

// -(1/(N|v|)) log G(N v) over N_list, with a fit a + (b log N + c)/N.
TensionEntry surface_tension(const Site& direction, double beta, const DecorationFunction& phi,
                             const std::vector<int>& n_list, int extra_len = 6, int max_len_cap = 18);

struct RichardsonFit {
  double a = 0.0, b = 0.0, c = 0.0;
  double stderr_a = 0.0;
};
RichardsonFit richardson_fit(const std::vector<int>& n, const std::vector<double>& v);

struct SurfaceTensionTable {
  double beta = 0.0;
  std::string source;
  int cutoff = 0;
  std::vector<Site> directions;
  std::vector<double> values;  // tau of the unit vector along each direction

  void add(const Site& dir, double tau_unit);
  std::optional<double> tau_unit(const Site& dir) const;
  // Homogeneous extension tau(z) = |z| tau(z/|z|), for z in the table up to scaling.
  std::optional<double> tau(const Site& z) const;
  void write_csv(std::ostream& os) const;
};

struct Tilt {
  double h1 = 0.0;
  double h2 = 0.0;
};

class StencilError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// h_y = tau(theta) e_r + tau'(theta) e_theta from angular differences on the table.
Tilt dual_tilt(const Site& y, const SurfaceTensionTable& table);
// max over table directions z of h.z/|z| - tau(z/|z|); <= 0 means h lies in the Wulff shape.
double wulff_excess(const Tilt& h, const SurfaceTensionTable& table);

}  // namespace soslab
