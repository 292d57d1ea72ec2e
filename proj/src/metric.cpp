#include "resistnet/metric.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <queue>
#include <random>

#include "resistnet/errors.hpp"
#include "resistnet/resistance.hpp"

namespace resistnet {

namespace {

using Index = Eigen::Index;

constexpr double kInf = std::numeric_limits<double>::infinity();

Index as_index(std::size_t i) { return static_cast<Index>(i); }

std::vector<double> dijkstra(const Network& net, std::size_t source) {
  std::vector<double> dist(net.size(), kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    const auto [d, x] = heap.top();
    heap.pop();
    if (d > dist[x]) continue;
    for (const Neighbor& nb : net.neighbors(x)) {
      const double next = d + 1.0 / nb.conductance;
      if (next < dist[nb.vertex]) {
        dist[nb.vertex] = next;
        heap.push({next, nb.vertex});
      }
    }
  }
  return dist;
}

void check_same_size(const ProbabilityMeasure& mu, const ProbabilityMeasure& nu) {
  if (mu.size() != nu.size()) throw Error("measures live on different vertex sets");
}

}  // namespace

ProbabilityMeasure::ProbabilityMeasure(VertexFunction weights) : weights_(std::move(weights)) {
  for (Index i = 0; i < weights_.size(); ++i) {
    if (!(weights_(i) >= 0.0)) {
      throw ValidationError("nonnegative-weights", "vertex index " + std::to_string(i));
    }
  }
  const double total = weights_.sum();
  if (std::abs(total - 1.0) > 1e-12) {
    throw ValidationError("unit-mass", "total weight " + std::to_string(total));
  }
}

ProbabilityMeasure ProbabilityMeasure::dirac(std::size_t n, std::size_t x) {
  if (x >= n) throw Error("vertex index out of range");
  VertexFunction w = VertexFunction::Zero(as_index(n));
  w(as_index(x)) = 1.0;
  return ProbabilityMeasure(std::move(w));
}

ProbabilityMeasure ProbabilityMeasure::uniform(std::size_t n, std::span<const std::size_t> support) {
  if (support.empty()) throw Error("uniform measure needs a nonempty support");
  VertexFunction w = VertexFunction::Zero(as_index(n));
  for (std::size_t x : support) {
    if (x >= n) throw Error("vertex index out of range");
    w(as_index(x)) += 1.0 / static_cast<double>(support.size());
  }
  w /= w.sum();
  return ProbabilityMeasure(std::move(w));
}

double geodesic_distance(const Network& net, std::size_t x, std::size_t y) {
  if (x >= net.size() || y >= net.size()) throw Error("vertex index out of range");
  return dijkstra(net, x)[y];
}

GeodesicResult geodesic_distance(const InfiniteNetworkSpec& spec, const std::string& x,
                                 const std::string& y, int max_radius, double tolerance) {
  GeodesicResult result;
  result.distance = kInf;
  for (int r = 1; r <= max_radius; ++r) {
    const int radii[] = {r};
    const Exhaustion ball = ball_exhaustion(spec, radii);
    const Network net = full_subnetwork(spec, ball.level(0));
    const auto xi = net.find(x);
    const auto yi = net.find(y);
    if (!xi || !yi) continue;
    result.radius = r;
    const std::vector<double> from_x = dijkstra(net, *xi);
    const std::vector<double> from_y = dijkstra(net, *yi);
    result.distance = from_x[*yi];
    result.history.emplace_back(r, result.distance);

    const bool covered = spec.finite() && net.size() == *spec.vertex_count;
    double lower = result.distance;
    if (!covered) {
      double to_layer_x = kInf;
      double to_layer_y = kInf;
      for (std::size_t i = 0; i < net.size(); ++i) {
        if (ball.distance[i] != r) continue;
        to_layer_x = std::min(to_layer_x, from_x[i]);
        to_layer_y = std::min(to_layer_y, from_y[i]);
      }
      lower = std::min(lower, to_layer_x + to_layer_y);
    }
    result.lower_bound = lower;
    if (result.distance - lower <= tolerance * result.distance) {
      result.certified = true;
      break;
    }
  }
  return result;
}

bool is_tree(const Network& net) {
  return net.size() > 0 && net.edges().size() + 1 == net.size();
}

GeodesicBoundReport geodesic_bound_check(
    const Network& net, std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  GeodesicBoundReport report;
  report.tree = is_tree(net);
  std::vector<std::size_t> vertices;
  for (const auto& [x, y] : pairs) {
    vertices.push_back(x);
    vertices.push_back(y);
  }
  const Eigen::MatrixXd R = resistance_matrix(net, vertices);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    GeodesicBoundEntry e;
    e.x = pairs[k].first;
    e.y = pairs[k].second;
    e.resistance = R(as_index(2 * k), as_index(2 * k + 1));
    e.geodesic = geodesic_distance(net, e.x, e.y);
    report.max_excess = std::max(report.max_excess, e.resistance - e.geodesic);
    if (report.tree) {
      report.max_tree_gap = std::max(report.max_tree_gap, std::abs(e.resistance - e.geodesic));
    }
    report.entries.push_back(e);
  }
  return report;
}

double commutator_norm(const Network& net, const VertexFunction& v) {
  const Index n = as_index(net.size());
  if (v.size() != n) throw Error("potential size does not match the network");
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : net.edges()) {
    const Index a = as_index(e.u);
    const Index b = as_index(e.v);
    const double entry = -e.conductance * (v(a) - v(b));
    C(a, b) = entry;
    C(b, a) = -entry;
  }
  if (n == 0) return 0.0;
  const Eigen::BDCSVD<Eigen::MatrixXd> svd(C);
  return svd.singularValues()(0);
}

bool CommutatorReport::passed() const {
  for (const auto& p : potentials) {
    if (p.norm_squared > p.twice_energy + 1e-8) return false;
  }
  for (const auto& w : witnesses) {
    if (w.witness_norm > std::sqrt(2.0) + 1e-8) return false;
    if (std::abs(w.witness_gap - w.resistance) > 1e-9) return false;
  }
  return true;
}

CommutatorReport commutator_bound_check(
    const Network& net, std::span<const VertexFunction> potentials,
    std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  for (const Edge& e : net.edges()) {
    if (e.conductance != 1.0) {
      throw ValidationError("unit-conductance",
                            "edge " + net.id(e.u) + " " + net.id(e.v) + " has conductance " +
                                std::to_string(e.conductance));
    }
  }
  if (net.size() > 200) throw Error("commutator check is limited to 200 vertices");
  CommutatorReport report;
  for (const VertexFunction& v : potentials) {
    const double norm = commutator_norm(net, v);
    report.potentials.push_back({norm * norm, 2.0 * energy(net, v)});
  }
  if (!pairs.empty()) {
    const GroundedSolver solver(net);
    for (const auto& [x, y] : pairs) {
      CommutatorWitnessCheck w;
      w.x = x;
      w.y = y;
      const VertexFunction diff = solve_dipole(solver, net, x, y).values;
      const double e = energy(net, diff);
      const VertexFunction witness = diff / std::sqrt(e);
      w.resistance = diff(as_index(x)) - diff(as_index(y));
      w.witness_norm = commutator_norm(net, witness);
      const double gap = witness(as_index(x)) - witness(as_index(y));
      w.witness_gap = gap * gap;
      report.witnesses.push_back(w);
    }
  }
  return report;
}

double tv_distance(const ProbabilityMeasure& mu, const ProbabilityMeasure& nu) {
  check_same_size(mu, nu);
  return (mu.weights() - nu.weights()).lpNorm<1>();
}

double tv_distance_enumerated(const ProbabilityMeasure& mu, const ProbabilityMeasure& nu) {
  check_same_size(mu, nu);
  const std::size_t n = mu.size();
  if (n > 15) throw Error("enumeration is limited to 15 vertices");
  const VertexFunction diff = mu.weights() - nu.weights();
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += ((mask >> i) & 1u) ? diff(as_index(i)) : -diff(as_index(i));
    }
    best = std::max(best, total);
  }
  return best;
}

double measure_resistance(const Network& net, const ProbabilityMeasure& mu,
                          const ProbabilityMeasure& nu) {
  check_same_size(mu, nu);
  if (mu.size() != net.size()) throw Error("measure size does not match the network");
  const VertexFunction diff = mu.weights() - nu.weights();
  if (diff.lpNorm<Eigen::Infinity>() == 0.0) return 0.0;
  // Σ (μ - ν)(x) v_x solves Δg = μ - ν because Σ (μ - ν) = 0.
  const GroundedSolver solver(net);
  const VertexFunction g = solver.solve(diff);
  return energy(net, g);
}

double measure_resistance(const InfiniteNetworkSpec& spec, const Exhaustion& exhaustion,
                          std::span<const std::pair<std::string, double>> mu,
                          std::span<const std::pair<std::string, double>> nu, Truncation kind) {
  if (exhaustion.levels() == 0) throw Error("exhaustion has no levels");
  const Network net = truncation(spec, exhaustion, exhaustion.levels() - 1, kind);
  auto lift = [&](std::span<const std::pair<std::string, double>> weights) {
    VertexFunction w = VertexFunction::Zero(as_index(net.size()));
    for (const auto& [id, value] : weights) w(as_index(net.index(id))) += value;
    return ProbabilityMeasure(std::move(w));
  };
  return measure_resistance(net, lift(mu), lift(nu));
}

std::size_t measure_bound_violations(const Network& net, const ProbabilityMeasure& mu,
                                     const ProbabilityMeasure& nu, std::size_t trials,
                                     std::uint64_t seed) {
  const double value = measure_resistance(net, mu, nu);
  const VertexFunction diff = mu.weights() - nu.weights();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::size_t violations = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    VertexFunction u(as_index(net.size()));
    for (Index i = 0; i < u.size(); ++i) u(i) = uniform(rng);
    const double pairing = u.dot(diff);
    if (pairing * pairing > value * energy(net, u) * (1.0 + 1e-10) + 1e-300) ++violations;
  }
  return violations;
}

NsdReport negative_semidefinite_check(const Eigen::MatrixXd& squared) {
  if (squared.rows() != squared.cols()) throw Error("metric matrix must be square");
  const Index n = squared.rows();
  NsdReport report;
  if (n == 0) return report;
  const Eigen::MatrixXd sym = 0.5 * (squared + squared.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(sym, Eigen::EigenvaluesOnly);
  report.norm = full.eigenvalues().cwiseAbs().maxCoeff();
  const Eigen::MatrixXd P =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(P * sym * P);
  report.max_eigenvalue = eig.eigenvalues()(n - 1);
  report.witness = eig.eigenvectors().col(n - 1);
  return report;
}

KernelIdentityReport kernel_identity_check(const Network& net,
                                           std::span<const std::size_t> vertices,
                                           std::size_t trials, std::uint64_t seed) {
  KernelIdentityReport report;
  report.trials = trials;
  if (vertices.size() < 2) return report;
  const Eigen::MatrixXd R = resistance_matrix(net, vertices);
  const GroundedSolver solver(net);
  std::vector<VertexFunction> kernels;
  for (std::size_t x : vertices) {
    kernels.push_back(x == solver.ground()
                          ? VertexFunction::Zero(as_index(net.size()))
                          : solve_dipole(solver, net, x, solver.ground()).values);
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Index m = as_index(vertices.size());
  for (std::size_t t = 0; t < trials; ++t) {
    Eigen::VectorXd f(m);
    for (Index i = 0; i < m; ++i) f(i) = normal(rng);
    f.array() -= f.mean();
    const double lhs = f.dot(R * f);
    VertexFunction g = VertexFunction::Zero(as_index(net.size()));
    for (Index i = 0; i < m; ++i) g += f(i) * kernels[static_cast<std::size_t>(i)];
    const double rhs = -2.0 * energy(net, g);
    const double scale = std::max(std::abs(rhs), 1e-300);
    report.max_relative_error = std::max(report.max_relative_error, std::abs(lhs - rhs) / scale);
  }
  return report;
}

EmbeddingResult vn_embed(const Eigen::MatrixXd& distance, std::size_t pivot) {
  if (distance.rows() != distance.cols()) throw Error("metric matrix must be square");
  const Index n = distance.rows();
  if (n == 0) throw Error("embedding needs at least one point");
  if (as_index(pivot) >= n) throw Error("pivot index out of range");
  EmbeddingResult out;
  out.distance = distance;
  const Eigen::MatrixXd squared = distance.cwiseProduct(distance);
  out.max_squared = squared.maxCoeff();

  const NsdReport nsd = negative_semidefinite_check(squared);
  out.nsd_max_eigenvalue = nsd.max_eigenvalue;
  if (!nsd.passed()) {
    throw ValidationError("negative-semidefinite",
                          "zero-sum quadratic form has eigenvalue " +
                              std::to_string(nsd.max_eigenvalue));
  }

  const Index o = as_index(pivot);
  out.gram.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      out.gram(i, j) = 0.5 * (squared(i, o) + squared(j, o) - squared(i, j));
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.gram);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double threshold = 1e-9 * lambda.cwiseAbs().maxCoeff();
  if (lambda.minCoeff() < -threshold) {
    throw ValidationError("negative-semidefinite",
                          "Gram matrix has eigenvalue " + std::to_string(lambda.minCoeff()));
  }
  std::vector<Index> kept;
  for (Index k = n - 1; k >= 0; --k) {
    if (lambda(k) > threshold) kept.push_back(k);
  }
  out.rank = kept.size();
  out.coordinates.resize(n, as_index(kept.size()));
  for (std::size_t c = 0; c < kept.size(); ++c) {
    out.coordinates.col(as_index(c)) =
        std::sqrt(lambda(kept[c])) * eig.eigenvectors().col(kept[c]);
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double recovered = (out.coordinates.row(i) - out.coordinates.row(j)).squaredNorm();
      out.defect = std::max(out.defect, std::abs(recovered - squared(i, j)));
    }
  }
  return out;
}

double embedding_energy_defect(const EmbeddingResult& embedding, const Network& net,
                               std::span<const std::size_t> vertices) {
  if (as_index(vertices.size()) != embedding.coordinates.rows()) {
    throw Error("embedding and vertex list differ in size");
  }
  const GroundedSolver solver(net);
  std::vector<VertexFunction> kernels;
  for (std::size_t x : vertices) {
    kernels.push_back(x == solver.ground()
                          ? VertexFunction::Zero(as_index(net.size()))
                          : solve_dipole(solver, net, x, solver.ground()).values);
  }
  double defect = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    for (std::size_t j = i + 1; j < vertices.size(); ++j) {
      const double embedded =
          (embedding.coordinates.row(as_index(i)) - embedding.coordinates.row(as_index(j)))
              .squaredNorm();
      const double e = energy(net, kernels[i] - kernels[j]);
      defect = std::max(defect, std::abs(embedded - e));
    }
  }
  return defect;
}

void write_embedding_csv(std::ostream& out, std::span<const std::string> ids,
                         const EmbeddingResult& embedding, int precision) {
  if (as_index(ids.size()) != embedding.coordinates.rows()) {
    throw Error("embedding and id list differ in size");
  }
  out << "vertex";
  for (std::size_t c = 1; c <= embedding.rank; ++c) out << ",coord_" << c;
  out << '\n';
  const auto saved = out.precision();
  out << std::setprecision(precision);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (Index c = 0; c < embedding.coordinates.cols(); ++c) {
      const double x = embedding.coordinates(as_index(i), c);
      out << ',' << (x == 0.0 ? 0.0 : x);  // no negative zero
    }
    out << '\n';
  }
  out.precision(saved);
}

}  // namespace resistnet
