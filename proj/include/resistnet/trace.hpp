#pragma once

// Trace networks: Schur complement (Kron reduction) of the Laplacian onto a
// vertex subset, the elementary series/parallel/wye-delta transforms, and
// the shorted-operator limit.

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "resistnet/limits.hpp"
#include "resistnet/network.hpp"

namespace resistnet {

/// One eliminated vertex. `kind` is "pendant" (degree 1), "series"
/// (degree 2), "wye-delta" (degree 3) or "star" (higher degree).
struct ReductionStep {
  std::string kind;
  std::string vertex;
  std::size_t degree = 0;
};

struct TraceResult {
  /// Network on the kept vertices, ids preserved and in the requested
  /// order. The base is the original base when kept, otherwise the first
  /// kept vertex.
  Network network;
  /// Reduced Laplacian in the same order (before pruning).
  Eigen::MatrixXd laplacian;
  std::vector<ReductionStep> steps;
  /// Largest ratio between a vertex's original total conductance and its
  /// pivot at elimination time.
  double condition_estimate = 1.0;
  std::size_t pruned = 0;  // conductances below 1e-13 max c dropped
};

/// Eliminates every vertex outside `keep` by star-mesh transforms in
/// minimum-degree order: removing t adds c_it c_tj / c(t) to c_ij for each
/// pair of neighbors of t. Throws SolverError when the condition estimate
/// exceeds 1e12.
TraceResult schur_trace(const Network& net, std::span<const std::size_t> keep);

/// Dense A - B^T D^{-1} B with rows/columns in `keep` order.
Eigen::MatrixXd schur_complement_dense(const Network& net, std::span<const std::size_t> keep);

/// Conductance of two conductors in series.
double series_reduce(double c1, double c2);
/// Conductance of two conductors in parallel.
double parallel_merge(double c1, double c2);

/// Star with center conductances a, b, c (to terminals 1, 2, 3) replaced by
/// the equivalent triangle.
struct Delta {
  double c12 = 0.0;
  double c23 = 0.0;
  double c13 = 0.0;
};
Delta wye_delta(double a, double b, double c);

/// Removes the degree-2 vertex z, joining its neighbors by the series
/// conductance (merged in parallel with any existing edge). Throws Error
/// when z does not have degree 2 or is the base vertex.
Network series_reduce(const Network& net, std::size_t z);
/// Replaces the degree-3 vertex t by a triangle on its neighbors. Throws
/// Error when t does not have degree 3 or is the base vertex.
Network wye_delta(const Network& net, std::size_t t);
/// Rebuilds the network through the parallel-merging constructor. Networks
/// are merged on construction, so this is the identity on edges.
Network parallel_merge(const Network& net);

/// Effective resistance between x and y by reducing the network to the
/// single edge {x, y}.
double reduce_to_pair(const Network& net, std::size_t x, std::size_t y,
                      std::vector<ReductionStep>* log = nullptr);

/// Resistance in the trace of the largest free truncation onto each level
/// of the exhaustion. The sequence is level-invariant.
LimitEstimate trace_resistance(const InfiniteNetworkSpec& spec, const std::string& x,
                               const std::string& y, const Exhaustion& exhaustion,
                               const LimitOptions& options = {});

/// Probability that the walk from x steps into the complement of `keep` and
/// first returns to `keep` at y (indices into the network).
double through_complement_probability(const Network& net, std::span<const std::size_t> keep,
                                      std::size_t x, std::size_t y);

/// Trace conductance of each kept pair against c_xy + c(x) P[x -> y] through
/// the complement.
struct TraceConductanceEntry {
  std::size_t x = 0;  // network indices
  std::size_t y = 0;
  double schur = 0.0;
  double direct = 0.0;        // c_xy
  double through = 0.0;       // P[x -> y] through the complement
  double predicted = 0.0;     // c_xy + c(x) * through
  double relative_error = 0.0;
};

struct TraceConductanceReport {
  std::vector<TraceConductanceEntry> entries;
  double max_relative_error = 0.0;
  bool passed(double tolerance = 1e-9) const { return max_relative_error <= tolerance; }
};

TraceConductanceReport trace_conductance_check(const Network& net,
                                               std::span<const std::size_t> keep);

/// ε_j = 10^{-j}, j = 1..12.
std::vector<double> default_shorting_schedule();

/// Limit of A - B^T (D + εI)^{-1} B along a decreasing schedule, where T is
/// split after its first `kept` rows into [A B^T; B D].
struct ShortedOperator {
  Eigen::MatrixXd limit;
  std::vector<double> epsilons;
  std::vector<Eigen::MatrixXd> iterates;
  std::vector<double> differences;  // ‖S_j - S_{j-1}‖_F
  bool converged = false;           // some difference <= 1e-9 ‖A‖_F
};

ShortedOperator shorted_operator(const Eigen::MatrixXd& matrix, std::size_t kept,
                                 std::span<const double> schedule);
/// The Laplacian of `net` with `keep` first, default schedule.
ShortedOperator shorted_operator(const Network& net, std::span<const std::size_t> keep);

}  // namespace resistnet
