#include "resistnet/forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <numeric>

#include "resistnet/errors.hpp"

namespace resistnet {

namespace {

using Index = Eigen::Index;

Index as_index(std::size_t i) { return static_cast<Index>(i); }

}  // namespace

double Flow::at(const Network& net, std::size_t x, std::size_t y) const {
  for (const Neighbor& n : net.neighbors(x)) {
    if (n.vertex == y) {
      const Edge& e = net.edges()[n.edge];
      return e.u == x ? along(as_index(n.edge)) : -along(as_index(n.edge));
    }
  }
  return 0.0;
}

Eigen::MatrixXd LaplacianBlocks::A() const {
  const Index k = as_index(kept);
  return matrix.topLeftCorner(k, k);
}

Eigen::MatrixXd LaplacianBlocks::B() const {
  const Index k = as_index(kept);
  return matrix.bottomLeftCorner(matrix.rows() - k, k);
}

Eigen::MatrixXd LaplacianBlocks::D() const {
  const Index k = as_index(kept);
  return matrix.bottomRightCorner(matrix.rows() - k, matrix.cols() - k);
}

LaplacianBlocks assemble_laplacian(const Network& net, std::span<const std::size_t> ordering) {
  const std::size_t n = net.size();
  if (ordering.size() != n) throw Error("ordering must list every vertex once");
  std::vector<std::size_t> position(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (ordering[i] >= n || position[ordering[i]] != n) {
      throw Error("ordering must be a permutation of the vertices");
    }
    position[ordering[i]] = i;
  }
  LaplacianBlocks blocks;
  blocks.ordering.assign(ordering.begin(), ordering.end());
  blocks.kept = n;
  blocks.matrix = Eigen::MatrixXd::Zero(as_index(n), as_index(n));
  for (const Edge& e : net.edges()) {
    if (e.u == e.v) continue;
    const Index a = as_index(position[e.u]);
    const Index b = as_index(position[e.v]);
    blocks.matrix(a, b) -= e.conductance;
    blocks.matrix(b, a) -= e.conductance;
    blocks.matrix(a, a) += e.conductance;
    blocks.matrix(b, b) += e.conductance;
  }
  return blocks;
}

LaplacianBlocks assemble_laplacian(const Network& net) {
  std::vector<std::size_t> identity(net.size());
  std::iota(identity.begin(), identity.end(), std::size_t{0});
  return assemble_laplacian(net, identity);
}

LaplacianBlocks partitioned_laplacian(const Network& net, std::span<const std::size_t> keep) {
  std::vector<char> kept(net.size(), 0);
  std::vector<std::size_t> ordering(keep.begin(), keep.end());
  for (std::size_t x : keep) {
    if (x >= net.size() || kept[x]) throw Error("kept set must list distinct vertices");
    kept[x] = 1;
  }
  for (std::size_t x = 0; x < net.size(); ++x) {
    if (!kept[x]) ordering.push_back(x);
  }
  LaplacianBlocks blocks = assemble_laplacian(net, ordering);
  blocks.kept = keep.size();
  return blocks;
}

SparseMatrix sparse_laplacian(const Network& net) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * net.edges().size());
  for (const Edge& e : net.edges()) {
    if (e.u == e.v) continue;
    const Index a = as_index(e.u);
    const Index b = as_index(e.v);
    triplets.emplace_back(a, b, -e.conductance);
    triplets.emplace_back(b, a, -e.conductance);
    triplets.emplace_back(a, a, e.conductance);
    triplets.emplace_back(b, b, e.conductance);
  }
  SparseMatrix L(as_index(net.size()), as_index(net.size()));
  L.setFromTriplets(triplets.begin(), triplets.end());
  return L;
}

VertexFunction apply_laplacian(const Network& net, const VertexFunction& u) {
  VertexFunction out = VertexFunction::Zero(u.size());
  for (const Edge& e : net.edges()) {
    if (e.u == e.v) continue;
    const double current = e.conductance * (u(as_index(e.u)) - u(as_index(e.v)));
    out(as_index(e.u)) += current;
    out(as_index(e.v)) -= current;
  }
  return out;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> transition_kernel(const Network& net) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t x = 0; x < net.size(); ++x) {
    const double cx = net.total_conductance(x);
    for (const Neighbor& n : net.neighbors(x)) {
      triplets.emplace_back(as_index(x), as_index(n.vertex), n.conductance / cx);
    }
  }
  Eigen::SparseMatrix<double, Eigen::RowMajor> P(as_index(net.size()), as_index(net.size()));
  P.setFromTriplets(triplets.begin(), triplets.end());
  return P;
}

double energy(const Network& net, const VertexFunction& u, const VertexFunction& v) {
  double sum = 0.0;
  for (const Edge& e : net.edges()) {
    const Index a = as_index(e.u);
    const Index b = as_index(e.v);
    sum += e.conductance * (u(a) - u(b)) * (v(a) - v(b));
  }
  return sum;
}

double energy(const Network& net, const VertexFunction& u) { return energy(net, u, u); }

double dissipation(const Network& net, const Flow& I, const Flow& J) {
  double sum = 0.0;
  for (std::size_t k = 0; k < net.edges().size(); ++k) {
    sum += I.along(as_index(k)) * J.along(as_index(k)) / net.edges()[k].conductance;
  }
  return sum;
}

double dissipation(const Network& net, const Flow& I) { return dissipation(net, I, I); }

Flow drop(const Network& net, const VertexFunction& u) {
  Flow flow;
  flow.along.resize(as_index(net.edges().size()));
  for (std::size_t k = 0; k < net.edges().size(); ++k) {
    const Edge& e = net.edges()[k];
    flow.along(as_index(k)) = e.conductance * (u(as_index(e.u)) - u(as_index(e.v)));
  }
  return flow;
}

VertexFunction divergence(const Network& net, const Flow& I) {
  VertexFunction out = VertexFunction::Zero(as_index(net.size()));
  for (std::size_t k = 0; k < net.edges().size(); ++k) {
    const Edge& e = net.edges()[k];
    out(as_index(e.u)) += I.along(as_index(k));
    out(as_index(e.v)) -= I.along(as_index(k));
  }
  return out;
}

VertexFunction dirac(const Network& net, std::size_t x) {
  VertexFunction d = VertexFunction::Zero(as_index(net.size()));
  d(as_index(x)) = 1.0;
  return d;
}

// ---------------------------------------------------------------------------

namespace {

// L v evaluated edge by edge as sum c_xy (v(x) - v(y)). Differencing first
// avoids the cancellation between a huge diagonal and its off-diagonals.
VertexFunction laplacian_times(const SparseMatrix& L, const VertexFunction& v) {
  VertexFunction out = VertexFunction::Zero(L.rows());
  for (Index col = 0; col < L.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(L, col); it; ++it) {
      if (it.row() == col) continue;
      out(it.row()) -= it.value() * (v(it.row()) - v(col));
    }
  }
  return out;
}

double relative_residual(const SparseMatrix& L, const VertexFunction& v, const VertexFunction& b,
                         double scale) {
  const double r = (laplacian_times(L, v) - b).lpNorm<Eigen::Infinity>();
  const double denom = scale * v.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>();
  return denom > 0.0 ? r / denom : r;
}

}  // namespace

InteriorElimination::InteriorElimination(const Network& net, const std::vector<char>& fixed)
    : size_(net.size()) {
  const std::size_t n = net.size();
  if (fixed.size() != n) throw Error("fixed mask has the wrong length");
  std::vector<std::map<std::size_t, double>> adj(n);
  for (const Edge& e : net.edges()) {
    if (fixed[e.u] && fixed[e.v]) continue;
    adj[e.u][e.v] += e.conductance;
    adj[e.v][e.u] += e.conductance;
  }
  std::set<std::pair<std::size_t, std::size_t>> queue;
  for (std::size_t x = 0; x < n; ++x) {
    if (!fixed[x]) queue.insert({adj[x].size(), x});
  }
  steps_.reserve(queue.size());
  while (!queue.empty()) {
    const std::size_t t = queue.begin()->second;
    queue.erase(queue.begin());
    Step step{t, 0.0, {}};
    for (const auto& [j, c] : adj[t]) {
      step.pivot += c;
      if (!fixed[j]) step.links.emplace_back(j, c);
    }
    if (!(step.pivot > 0.0)) {
      throw SolverError("vertex '" + net.id(t) + "' is not connected to a fixed vertex",
                        std::numeric_limits<double>::infinity());
    }
    const std::vector<std::pair<std::size_t, double>> star(adj[t].begin(), adj[t].end());
    for (const auto& [i, ci] : star) {
      if (!fixed[i]) queue.erase({adj[i].size(), i});
      adj[i].erase(t);
    }
    for (std::size_t a = 0; a < star.size(); ++a) {
      for (std::size_t b = a + 1; b < star.size(); ++b) {
        const auto [i, ci] = star[a];
        const auto [j, cj] = star[b];
        if (fixed[i] && fixed[j]) continue;
        const double added = ci * cj / step.pivot;
        adj[i][j] += added;
        adj[j][i] += added;
      }
    }
    for (const auto& [i, ci] : star) {
      if (!fixed[i]) queue.insert({adj[i].size(), i});
    }
    adj[t].clear();
    steps_.push_back(std::move(step));
  }
}

VertexFunction InteriorElimination::solve(const VertexFunction& b) const {
  if (static_cast<std::size_t>(b.size()) != size_) throw Error("right-hand side has the wrong length");
  VertexFunction y = VertexFunction::Zero(b.size());
  for (const Step& s : steps_) y(as_index(s.vertex)) = b(as_index(s.vertex));
  for (const Step& s : steps_) {
    const double yt = y(as_index(s.vertex));
    for (const auto& [j, c] : s.links) y(as_index(j)) += c / s.pivot * yt;
  }
  VertexFunction x = VertexFunction::Zero(b.size());
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) {
    double value = y(as_index(it->vertex)) / it->pivot;
    for (const auto& [j, c] : it->links) value += c / it->pivot * x(as_index(j));
    x(as_index(it->vertex)) = value;
  }
  return x;
}

GroundedSolver::GroundedSolver(const Network& net) : GroundedSolver(net, net.base()) {}

GroundedSolver::GroundedSolver(const Network& net, std::size_t ground)
    : ground_(ground), scale_(net.max_total_conductance()), laplacian_(sparse_laplacian(net)) {
  if (ground >= net.size()) throw Error("ground vertex out of range");
  std::vector<char> fixed(net.size(), 0);
  fixed[ground] = 1;
  factor_ = std::make_shared<const InteriorElimination>(net, fixed);
}

VertexFunction GroundedSolver::solve(const VertexFunction& rhs, double* residual) const {
  const Index n = laplacian_.rows();
  if (rhs.size() != n) throw Error("right-hand side has the wrong length");
  const double total = rhs.sum();
  if (std::abs(total) > 1e-12 * std::max(1.0, rhs.lpNorm<1>())) {
    throw Error("grounded solve needs a right-hand side summing to zero");
  }
  VertexFunction v = factor_->solve(rhs);
  // One or two refinement sweeps polish the last bits; stop once the
  // correction no longer shrinks.
  double last_step = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < 4; ++sweep) {
    const VertexFunction correction = factor_->solve(rhs - laplacian_times(laplacian_, v));
    const double step = correction.lpNorm<Eigen::Infinity>();
    if (!(step < last_step)) break;
    v += correction;
    last_step = step;
    if (step <= 1e-16 * v.lpNorm<Eigen::Infinity>()) break;
  }
  const double rel = relative_residual(laplacian_, v, rhs, scale_);
  if (residual) *residual = rel;
  if (!(rel <= kSolveTolerance)) {
    throw SolverError("grounded solve did not reach the residual tolerance", rel);
  }
  return v;
}

Potential solve_dipole(const GroundedSolver& solver, const Network& net, std::size_t x,
                       std::size_t y) {
  if (x >= net.size() || y >= net.size()) throw Error("dipole endpoint out of range");
  VertexFunction b = VertexFunction::Zero(as_index(net.size()));
  b(as_index(x)) += 1.0;
  b(as_index(y)) -= 1.0;
  Potential p;
  p.values = solver.solve(b);
  p.pinned = solver.ground() == net.base();
  return p;
}

Potential solve_dipole(const Network& net, std::size_t x, std::size_t y) {
  if (x == y) throw Error("dipole endpoints must differ");
  const GroundedSolver solver(net);
  return solve_dipole(solver, net, x, y);
}

Potential energy_kernel_element(const Network& net, std::size_t x) {
  if (x == net.base()) {
    return Potential{VertexFunction::Zero(as_index(net.size())), true};
  }
  return solve_dipole(net, x, net.base());
}

VertexFunction solve_dirichlet(const Network& net,
                               std::span<const std::pair<std::size_t, double>> boundary) {
  const std::size_t n = net.size();
  if (boundary.empty()) throw Error("Dirichlet problem needs at least one boundary vertex");
  VertexFunction u = VertexFunction::Zero(as_index(n));
  std::vector<char> fixed(n, 0);
  for (const auto& [x, value] : boundary) {
    if (x >= n) throw Error("boundary vertex out of range");
    fixed[x] = 1;
    u(as_index(x)) = value;
  }
  std::vector<std::size_t> interior;
  for (std::size_t x = 0; x < n; ++x) {
    if (!fixed[x]) interior.push_back(x);
  }
  if (interior.empty()) return u;

  const InteriorElimination factor(net, fixed);
  // Interior residual of Δu = 0, summed edge by edge.
  auto defect = [&](const VertexFunction& w) {
    VertexFunction r = VertexFunction::Zero(as_index(n));
    for (std::size_t x : interior) {
      double sum = 0.0;
      for (const Neighbor& nb : net.neighbors(x)) {
        sum += nb.conductance * (w(as_index(nb.vertex)) - w(as_index(x)));
      }
      r(as_index(x)) = sum;
    }
    return r;
  };
  u += factor.solve(defect(u));
  double last_step = std::numeric_limits<double>::infinity();
  for (int sweep = 0; sweep < 4; ++sweep) {
    const VertexFunction correction = factor.solve(defect(u));
    const double step = correction.lpNorm<Eigen::Infinity>();
    if (!(step < last_step)) break;
    u += correction;
    last_step = step;
    if (step <= 1e-16 * u.lpNorm<Eigen::Infinity>()) break;
  }
  const double scale = net.max_total_conductance() * u.lpNorm<Eigen::Infinity>();
  const double r = defect(u).lpNorm<Eigen::Infinity>();
  const double rel = scale > 0.0 ? r / scale : r;
  if (!(rel <= kSolveTolerance)) {
    throw SolverError("Dirichlet solve did not reach the residual tolerance", rel);
  }
  return u;
}

}  // namespace resistnet
