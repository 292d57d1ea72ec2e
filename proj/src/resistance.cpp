#include "resistnet/resistance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include "resistnet/errors.hpp"

namespace resistnet {

namespace {

using Index = Eigen::Index;

Index as_index(std::size_t i) { return static_cast<Index>(i); }

VertexFunction kernel(const GroundedSolver& solver, const Network& net, std::size_t x) {
  if (x == solver.ground()) return VertexFunction::Zero(as_index(net.size()));
  return solve_dipole(solver, net, x, solver.ground()).values;
}

}  // namespace

double effective_resistance(const Network& net, std::size_t x, std::size_t y) {
  if (x >= net.size() || y >= net.size()) throw Error("vertex index out of range");
  if (x == y) return 0.0;
  const Potential v = solve_dipole(net, x, y);
  return v(x) - v(y);
}

std::vector<double> ResistanceReport::values() const {
  return {potential_drop, dipole_energy, min_dissipation,
          reciprocal_min_energy, best_constant, sup_form};
}

ResistanceReport resistance_report(const Network& net, std::size_t x, std::size_t y,
                                   std::size_t random_trials, std::uint64_t seed) {
  if (x >= net.size() || y >= net.size()) throw Error("vertex index out of range");
  if (x == y) throw Error("resistance report needs two distinct vertices");
  ResistanceReport r;
  r.x = x;
  r.y = y;

  const GroundedSolver solver(net);
  const Potential v = solve_dipole(solver, net, x, y);
  r.potential_drop = v(x) - v(y);
  r.dipole_energy = energy(net, v.values);
  r.min_dissipation = dissipation(net, drop(net, v.values));

  const std::array<std::pair<std::size_t, double>, 2> boundary{{{x, 1.0}, {y, 0.0}}};
  const VertexFunction unit = solve_dirichlet(net, boundary);
  r.reciprocal_min_energy = 1.0 / energy(net, unit);

  // The norm of the functional u ↦ u(x) - u(y) is attained along v_x - v_y.
  const VertexFunction w = kernel(solver, net, x) - kernel(solver, net, y);
  const double ew = energy(net, w);
  r.best_constant = ew;
  const double gap = w(as_index(x)) - w(as_index(y));
  r.sup_form = gap * gap / ew;

  const auto vals = r.values();
  const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
  r.spread = *hi - *lo;
  double sum = 0.0;
  for (double value : vals) sum += value;
  r.consensus = sum / static_cast<double>(vals.size());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  r.bound_trials = random_trials;
  for (std::size_t t = 0; t < random_trials; ++t) {
    VertexFunction u(as_index(net.size()));
    for (Index i = 0; i < u.size(); ++i) u(i) = uniform(rng);
    const double d = u(as_index(x)) - u(as_index(y));
    const double bound = r.best_constant * energy(net, u);
    if (d * d > bound * (1.0 + 1e-10) + 1e-300) ++r.bound_violations;
  }
  return r;
}

Eigen::MatrixXd resistance_matrix(const Network& net, std::span<const std::size_t> vertices) {
  const std::size_t m = vertices.size();
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(as_index(m), as_index(m));
  if (m == 0 || net.size() < 2) return R;
  const GroundedSolver solver(net);
  std::vector<VertexFunction> kernels;
  kernels.reserve(m);
  for (std::size_t x : vertices) {
    if (x >= net.size()) throw Error("vertex index out of range");
    kernels.push_back(kernel(solver, net, x));
  }
  // ⟨v_x, v_y⟩_E = v_y(x), so R(x, y) = v_x(x) - v_x(y) - v_y(x) + v_y(y).
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const Index xi = as_index(vertices[i]);
      const Index xj = as_index(vertices[j]);
      const double value = kernels[i](xi) - kernels[i](xj) - kernels[j](xi) + kernels[j](xj);
      R(as_index(i), as_index(j)) = value;
      R(as_index(j), as_index(i)) = value;
    }
  }
  return R;
}

MetricReport check_metric_axioms(const Eigen::MatrixXd& d, double slack) {
  if (d.rows() != d.cols()) throw Error("distance matrix must be square");
  MetricReport report;
  const auto n = static_cast<std::size_t>(d.rows());
  auto at = [&](std::size_t i, std::size_t j) { return d(as_index(i), as_index(j)); };
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(at(i, i)) > slack) {
      report.violations.push_back({"zero-diagonal", i, i, i, std::abs(at(i, i))});
    }
    for (std::size_t j = i + 1; j < n; ++j) {
      const double asym = std::abs(at(i, j) - at(j, i));
      if (asym > slack * std::max(1.0, std::abs(at(i, j)))) {
        report.violations.push_back({"symmetry", i, j, j, asym});
      }
      if (!(at(i, j) > 0.0)) report.violations.push_back({"positivity", i, j, j, -at(i, j)});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (i == j || j == k || i == k) continue;
        ++report.triples_checked;
        const double excess = at(i, k) - at(i, j) - at(j, k);
        if (excess > slack) report.violations.push_back({"triangle", i, j, k, excess});
      }
    }
  }
  return report;
}

MetricReport check_metric_axioms(const Network& net, std::span<const std::size_t> sample,
                                 double slack) {
  return check_metric_axioms(resistance_matrix(net, sample), slack);
}

}  // namespace resistnet
