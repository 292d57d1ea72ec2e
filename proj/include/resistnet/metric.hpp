#pragma once

// Geodesic distance, comparisons between resistance and other metrics,
// distances between probability measures, negative-semidefiniteness tests
// and the von Neumann embedding of a metric into Euclidean space.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "resistnet/forms.hpp"
#include "resistnet/limits.hpp"
#include "resistnet/network.hpp"

namespace resistnet {

/// Finitely supported probability measure on the vertices of a network.
class ProbabilityMeasure {
 public:
  /// Throws ValidationError for negative weights or a total off 1 by more
  /// than 1e-12.
  explicit ProbabilityMeasure(VertexFunction weights);
  static ProbabilityMeasure dirac(std::size_t n, std::size_t x);
  /// Uniform on `support`.
  static ProbabilityMeasure uniform(std::size_t n, std::span<const std::size_t> support);

  const VertexFunction& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
  double operator()(std::size_t x) const { return weights_(static_cast<Eigen::Index>(x)); }

 private:
  VertexFunction weights_;
};

// ---------------------------------------------------------------------------
// Geodesic distance

/// Shortest path with edge lengths 1 / c_xy.
double geodesic_distance(const Network& net, std::size_t x, std::size_t y);

struct GeodesicResult {
  double distance = 0.0;     // best path found (upper bound on the infimum)
  double lower_bound = 0.0;  // no path is shorter
  int radius = 0;            // ball radius of the last search
  bool certified = false;    // distance - lower_bound <= tolerance * distance
  std::vector<std::pair<int, double>> history;  // (radius, distance)
};

/// Infimum of path resistance on an infinite model. Searches balls of
/// increasing radius; a path leaving the ball of radius r crosses its outer
/// layer, which bounds every such path from below.
GeodesicResult geodesic_distance(const InfiniteNetworkSpec& spec, const std::string& x,
                                 const std::string& y, int max_radius = 40,
                                 double tolerance = 1e-9);

struct GeodesicBoundEntry {
  std::size_t x = 0;
  std::size_t y = 0;
  double resistance = 0.0;
  double geodesic = 0.0;
};

struct GeodesicBoundReport {
  std::vector<GeodesicBoundEntry> entries;
  bool tree = false;
  double max_excess = 0.0;    // max(R - d_geo), should be <= 1e-9
  double max_tree_gap = 0.0;  // max |R - d_geo| on trees
  bool passed(double tolerance = 1e-9) const {
    return max_excess <= tolerance && (!tree || max_tree_gap <= tolerance);
  }
};

/// A connected network is a tree when |E| = |V| - 1.
bool is_tree(const Network& net);

GeodesicBoundReport geodesic_bound_check(const Network& net,
                                         std::span<const std::pair<std::size_t, std::size_t>> pairs);

// ---------------------------------------------------------------------------
// Commutator bound (unit conductances)

/// Operator norm of [v, Δ] = vΔ - Δv, whose (x, y) entry is -c_xy (v(x) - v(y)).
double commutator_norm(const Network& net, const VertexFunction& v);

struct CommutatorPotentialCheck {
  double norm_squared = 0.0;
  double twice_energy = 0.0;
};

struct CommutatorWitnessCheck {
  std::size_t x = 0;
  std::size_t y = 0;
  double resistance = 0.0;
  double witness_norm = 0.0;  // ‖[v*, Δ]‖, at most sqrt(2)
  double witness_gap = 0.0;   // |v*(x) - v*(y)|^2, equal to R(x, y)
};

struct CommutatorReport {
  std::vector<CommutatorPotentialCheck> potentials;
  std::vector<CommutatorWitnessCheck> witnesses;
  bool passed() const;
};

/// Requires unit conductances and at most 200 vertices.
CommutatorReport commutator_bound_check(const Network& net,
                                        std::span<const VertexFunction> potentials,
                                        std::span<const std::pair<std::size_t, std::size_t>> pairs);

// ---------------------------------------------------------------------------
// Distances between measures

/// Σ_x |μ(x) - ν(x)|, which equals 2 sup_A |μ(A) - ν(A)|.
double tv_distance(const ProbabilityMeasure& mu, const ProbabilityMeasure& nu);
/// sup over u in {±1}^V of Σ u (μ - ν), by enumeration (at most 15 vertices).
double tv_distance_enumerated(const ProbabilityMeasure& mu, const ProbabilityMeasure& nu);

/// ‖Σ_x (μ - ν)(x) v_x‖²_E with energy kernels of `net`.
double measure_resistance(const Network& net, const ProbabilityMeasure& mu,
                          const ProbabilityMeasure& nu);

/// Measures given by vertex id, evaluated on the largest free or wired
/// truncation of the exhaustion.
double measure_resistance(const InfiniteNetworkSpec& spec, const Exhaustion& exhaustion,
                          std::span<const std::pair<std::string, double>> mu,
                          std::span<const std::pair<std::string, double>> nu, Truncation kind);

/// Count of random u violating |Σ u (μ - ν)|^2 <= value E(u).
std::size_t measure_bound_violations(const Network& net, const ProbabilityMeasure& mu,
                                     const ProbabilityMeasure& nu, std::size_t trials,
                                     std::uint64_t seed);

// ---------------------------------------------------------------------------
// Negative semidefiniteness and embedding

struct NsdReport {
  double max_eigenvalue = 0.0;  // of P d² P, P the zero-sum projector
  double norm = 0.0;            // ‖d²‖ (spectral)
  VertexFunction witness;       // zero-sum f with f d² f > 0 when failing
  bool passed(double relative = 1e-9) const { return max_eigenvalue <= relative * norm; }
};

NsdReport negative_semidefinite_check(const Eigen::MatrixXd& squared);

/// Σ f R f against -2 ‖Σ f(x) v_x‖²_E for random zero-sum f on `vertices`,
/// with R and the kernels v_x taken from `net`.
struct KernelIdentityReport {
  std::size_t trials = 0;
  double max_relative_error = 0.0;
};

KernelIdentityReport kernel_identity_check(const Network& net, std::span<const std::size_t> vertices,
                                           std::size_t trials, std::uint64_t seed);

struct EmbeddingResult {
  Eigen::MatrixXd distance;  // d
  Eigen::MatrixXd gram;      // (d²(x,o) + d²(y,o) - d²(x,y)) / 2
  double nsd_max_eigenvalue = 0.0;
  Eigen::MatrixXd coordinates;  // one row per point, `rank` columns
  std::size_t rank = 0;
  double defect = 0.0;  // max |‖w_x - w_y‖² - d²(x, y)|
  double max_squared = 0.0;
};

/// Embeds the metric `distance` with pivot point `pivot`. Throws
/// ValidationError when d² is not negative semidefinite or the Gram matrix
/// has an eigenvalue below -1e-9 ‖G‖.
EmbeddingResult vn_embed(const Eigen::MatrixXd& distance, std::size_t pivot = 0);

/// max |‖w_x - w_y‖² - E(v_x - v_y)| over pairs of `vertices` in `net`,
/// where `embedding` was built from the resistance metric on those vertices.
double embedding_energy_defect(const EmbeddingResult& embedding, const Network& net,
                               std::span<const std::size_t> vertices);

/// CSV with header `vertex,coord_1,...,coord_r`.
void write_embedding_csv(std::ostream& out, std::span<const std::string> ids,
                         const EmbeddingResult& embedding, int precision = 17);

}  // namespace resistnet
