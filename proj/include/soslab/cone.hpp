#pragma once

#include <cstdint>
#include <vector>

#include "soslab/polymer.hpp"
#include "soslab/walk.hpp"

namespace soslab {

// Forward cone {|y| <= x} and backward cone {|y| <= -x}, apex at the origin.
inline bool in_forward_cone(const Site& d) { return (d.y < 0 ? -d.y : d.y) <= d.x; }
inline bool in_backward_cone(const Site& d) { return (d.y < 0 ? -d.y : d.y) <= -d.x; }

// A cell lies in a cone when all four of its corners do. Cells sharing a corner
// with the apex are therefore in neither cone, which keeps clusters at a cut from
// touching the thickened bonds on the other side.
bool cell_in_forward_cone(const Site& apex, const Cell& c);
bool cell_in_backward_cone(const Site& apex, const Cell& c);

// Indices into the vertex list, in path order.
std::vector<std::size_t> contour_cone_points(const Path& g);
std::vector<std::size_t> cone_points(const Animal& a);

struct ConeDecomposition {
  // Pieces are translated to start at the origin. Empty pieces have a single vertex.
  Animal left;
  std::vector<Animal> middle;
  Animal right;
  std::vector<Site> cone_points;  // absolute, strictly increasing in x
  bool splittable = false;        // fewer than two usable cone points: `left` holds everything

  Animal reconstruct(const Site& start) const;
};

ConeDecomposition decompose(const Animal& a);

enum class IrreducibleKind { irreducible, left, right };
bool is_irreducible(const Animal& a, IrreducibleKind kind = IrreducibleKind::irreducible);

// Log weight of an animal under (phi', beta'); empty contours weigh 1.
double piece_log_weight(const Animal& a, const TransformedDecoration& t);

struct IrreducibleEntry {
  Path contour;
  double log_weight = 0.0;  // log of q summed over admissible cluster collections
};

// Entries grouped by (length, displacement).
struct IrreducibleClass {
  int length = 0;
  Site displacement;
  double log_weight = 0.0;
  std::uint64_t count = 0;
};

struct IrreducibleSet {
  double beta = 0.0;
  int max_len = 0;
  IrreducibleKind kind = IrreducibleKind::irreducible;
  std::vector<IrreducibleEntry> items;  // only when paths are kept; in enumeration order
  std::vector<IrreducibleClass> classes;
  std::uint64_t count() const;
};

// Every irreducible contour of length <= max_len with the weight of all its
// irreducible animals. With Phi == 0 animals are bare contours; otherwise the
// cluster collections are resummed by inclusion-exclusion over the contour's
// own cone points.
struct IrreducibleOptions {
  IrreducibleKind kind = IrreducibleKind::irreducible;
  bool keep_paths = false;
  int d_max = kDefaultDMax;
  int prefix_depth = 5;
  double guard = 5e9;  // DFS nodes
};
IrreducibleSet enumerate_irreducible(double beta, const DecorationFunction& phi, int max_len,
                                     const IrreducibleOptions& opt = {});

// f(h) = sum over the set of e^{h.X} q.
double oz_mass(const IrreducibleSet& s, const Tilt& h);
// Point h on {f = 1} with outward normal along y, i.e. the gradient of the
// support function tau(y) = max{h.y : f(h) <= 1}.
Tilt oz_tilt(const IrreducibleSet& s, const Site& y);
// tau of the unit vector along y.
double oz_tau(const IrreducibleSet& s, const Site& y);
SurfaceTensionTable oz_tension_table(const IrreducibleSet& s, const std::vector<Site>& directions);

StepDistribution step_distribution(const IrreducibleSet& s, const Tilt& h);

struct StepReport {
  StepDistribution step;
  Tilt tilt;
  double tau = 0.0;
  double mass = 0.0;
  double colinearity = 0.0;  // |mean . y_perp| / (mean . y_hat)
};

// Tilt from an enumeration at tilt_len, step law from one at max_len <= tilt_len.
StepReport oz_step(double beta, const DecorationFunction& phi, const Site& y, int max_len, int tilt_len);

struct HittingCheck {
  double dp = 0.0;
  double animal_sum = 0.0;
};
// Walk hitting probability against the sum over tuples of irreducible animals with cone points in H.
HittingCheck hitting_identity_check(const Site& u, const Site& v, const IrreducibleSet& s, const Tilt& h);

// Sum of P^h over entries with length >= k, for k = 1..max_len.
std::vector<double> mass_gap_profile(const IrreducibleSet& s, const Tilt& h);

// Random admissible contour of length in [1, max_len] with an eastward bias, and
// random clusters from its thickened bond set, each kept with probability p.
Animal random_animal(Rng& rng, int max_len, double east_bias, double cluster_prob, int d_max = kDefaultDMax);

}  // namespace soslab
