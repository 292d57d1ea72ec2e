#pragma once

// Effective resistance on finite networks, computed through six independent
// formulations, plus metric-axiom checks.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "resistnet/forms.hpp"
#include "resistnet/network.hpp"

namespace resistnet {

/// R(x, y) = v(x) - v(y) where Δv = δ_x - δ_y. Zero when x == y.
double effective_resistance(const Network& net, std::size_t x, std::size_t y);

struct ResistanceReport {
  std::size_t x = 0;
  std::size_t y = 0;
  double potential_drop = 0.0;        // v(x) - v(y), Δv = δ_x - δ_y
  double dipole_energy = 0.0;         // E(v)
  double min_dissipation = 0.0;       // D(drop v), the unit current in Flo(x, y)
  double reciprocal_min_energy = 0.0; // 1 / min{E(u) : u(x) = 1, u(y) = 0}
  double best_constant = 0.0;         // κ = E(v_x - v_y)
  double sup_form = 0.0;              // |w(x) - w(y)|^2 / E(w) at w = v_x - v_y
  double consensus = 0.0;             // mean of the six
  double spread = 0.0;                // max - min of the six
  /// Random u violating |u(x) - u(y)|^2 <= κ E(u) (should be zero).
  std::size_t bound_violations = 0;
  std::size_t bound_trials = 0;

  std::vector<double> values() const;
};

ResistanceReport resistance_report(const Network& net, std::size_t x, std::size_t y,
                                   std::size_t random_trials = 100, std::uint64_t seed = 1);

/// Pairwise effective resistances among `vertices` from one factorization.
Eigen::MatrixXd resistance_matrix(const Network& net, std::span<const std::size_t> vertices);

struct MetricViolation {
  std::string axiom;  // "symmetry", "positivity", "zero-diagonal" or "triangle"
  std::size_t i = 0, j = 0, k = 0;  // positions in the sample
  double excess = 0.0;
};

struct MetricReport {
  std::size_t triples_checked = 0;
  std::vector<MetricViolation> violations;
  bool passed() const { return violations.empty(); }
};

/// Symmetry, zero diagonal, positivity off the diagonal and the triangle
/// inequality (absolute slack `slack`) for a distance matrix.
MetricReport check_metric_axioms(const Eigen::MatrixXd& distances, double slack = 1e-9);
/// The same for effective resistance over a vertex sample.
MetricReport check_metric_axioms(const Network& net, std::span<const std::size_t> sample,
                                 double slack = 1e-9);

}  // namespace resistnet
