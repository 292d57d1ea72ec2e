#pragma once

// Laplacian, transition kernel, energy and dissipation forms, Ohm's and
// Kirchhoff's operators, and grounded dipole solves.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "resistnet/network.hpp"

namespace resistnet {

using VertexFunction = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

inline constexpr double kSolveTolerance = 1e-10;

/// Real function on the vertices of a network (volts). `pinned` records
/// that the representative was chosen with value 0 at the base vertex.
struct Potential {
  VertexFunction values;
  bool pinned = false;

  double operator()(std::size_t x) const { return values(static_cast<Eigen::Index>(x)); }
  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Antisymmetric edge function (amps). `along(k)` is I(u, v) for the k-th
/// canonical edge (u < v) of the network; I(v, u) = -along(k).
struct Flow {
  Eigen::VectorXd along;

  /// I(x, y) for an arbitrary ordered pair; zero off the edge set.
  double at(const Network& net, std::size_t x, std::size_t y) const;
};

/// Dense Laplacian over an explicit vertex ordering, optionally split into
/// the kept block (first `kept` rows) and its complement:
///   [ A  B^T ]
///   [ B  D   ]
struct LaplacianBlocks {
  Eigen::MatrixXd matrix;
  std::vector<std::size_t> ordering;
  std::size_t kept = 0;

  Eigen::MatrixXd A() const;
  Eigen::MatrixXd B() const;  // complement x kept
  Eigen::MatrixXd D() const;
};

/// Laplacian with rows/columns in `ordering` (a permutation of the vertices).
LaplacianBlocks assemble_laplacian(const Network& net, std::span<const std::size_t> ordering);
LaplacianBlocks assemble_laplacian(const Network& net);
/// Ordering with `keep` first (in the given order), then the complement in
/// index order.
LaplacianBlocks partitioned_laplacian(const Network& net, std::span<const std::size_t> keep);

SparseMatrix sparse_laplacian(const Network& net);

/// (Δu)(x) = Σ_y c_xy (u(x) - u(y)).
VertexFunction apply_laplacian(const Network& net, const VertexFunction& u);

/// p(x, y) = c_xy / c(x), row-major sparse.
Eigen::SparseMatrix<double, Eigen::RowMajor> transition_kernel(const Network& net);

/// E(u, v) = Σ_edges c_xy (u(x) - u(y)) (v(x) - v(y)).
double energy(const Network& net, const VertexFunction& u, const VertexFunction& v);
double energy(const Network& net, const VertexFunction& u);

/// D(I, J) = Σ_edges I(x,y) J(x,y) / c_xy.
double dissipation(const Network& net, const Flow& I, const Flow& J);
double dissipation(const Network& net, const Flow& I);

/// Ohm's law: I(x, y) = c_xy (u(x) - u(y)).
Flow drop(const Network& net, const VertexFunction& u);

/// (div I)(x) = Σ_y I(x, y).
VertexFunction divergence(const Network& net, const Flow& I);

/// Indicator δ_x.
VertexFunction dirac(const Network& net, std::size_t x);

/// Factorization of the Laplacian with the `ground` row and column removed.
/// The grounded matrix is positive definite on a connected network, so each
/// solve returns the unique solution of Δv = b with v(ground) = 0, provided
/// Σ b = 0. Every solve checks its residual against the full Laplacian.
/// Gaussian elimination of the block of Δ on the vertices not marked in
/// `fixed`, in minimum-degree order. Each pivot is the sum of the positive
/// conductances still attached to the eliminated vertex, so no step
/// subtracts, and conductance ranges beyond 1e16 stay accurate.
class InteriorElimination {
 public:
  InteriorElimination(const Network& net, const std::vector<char>& fixed);

  /// Solves Δ_II x = b_I. Entries of `b` at fixed vertices are ignored and
  /// returned as zero.
  VertexFunction solve(const VertexFunction& b) const;

 private:
  struct Step {
    std::size_t vertex;
    double pivot;
    std::vector<std::pair<std::size_t, double>> links;  // interior neighbors at elimination
  };
  std::size_t size_ = 0;
  std::vector<Step> steps_;
};

class GroundedSolver {
 public:
  explicit GroundedSolver(const Network& net);
  GroundedSolver(const Network& net, std::size_t ground);

  std::size_t ground() const noexcept { return ground_; }
  /// Throws SolverError when the relative residual
  /// ‖Δv - b‖∞ / (max c(x) ‖v‖∞ + ‖b‖∞) exceeds kSolveTolerance; the value
  /// is stored in `residual` when given.
  VertexFunction solve(const VertexFunction& rhs, double* residual = nullptr) const;

 private:
  std::size_t ground_;
  double scale_ = 0.0;  // max c(x)
  SparseMatrix laplacian_;
  std::shared_ptr<const InteriorElimination> factor_;
};

/// Pinned solution of Δv = δ_x - δ_y, grounded at the base vertex.
Potential solve_dipole(const Network& net, std::size_t x, std::size_t y);
Potential solve_dipole(const GroundedSolver& solver, const Network& net, std::size_t x,
                       std::size_t y);

/// Energy kernel element v_x (Δv_x = δ_x - δ_o, v_x(o) = 0). Zero for x = o.
Potential energy_kernel_element(const Network& net, std::size_t x);

/// Dirichlet problem: u prescribed on `boundary`, Δu = 0 at every other
/// vertex. The boundary must be nonempty.
VertexFunction solve_dirichlet(const Network& net,
                               std::span<const std::pair<std::size_t, double>> boundary);

}  // namespace resistnet
