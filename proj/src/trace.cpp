#include "resistnet/trace.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "resistnet/errors.hpp"
#include "resistnet/forms.hpp"
#include "resistnet/resistance.hpp"

namespace resistnet {

namespace {

using Index = Eigen::Index;

constexpr double kConditionLimit = 1e12;

Index as_index(std::size_t i) { return static_cast<Index>(i); }

std::vector<char> membership(std::size_t n, std::span<const std::size_t> keep) {
  std::vector<char> kept(n, 0);
  for (std::size_t x : keep) {
    if (x >= n || kept[x]) throw Error("kept set must list distinct vertices");
    kept[x] = 1;
  }
  return kept;
}

std::string step_kind(std::size_t degree) {
  switch (degree) {
    case 1: return "pendant";
    case 2: return "series";
    case 3: return "wye-delta";
    default: return "star";
  }
}

}  // namespace

double series_reduce(double c1, double c2) { return c1 * c2 / (c1 + c2); }

double parallel_merge(double c1, double c2) { return c1 + c2; }

Delta wye_delta(double a, double b, double c) {
  const double total = a + b + c;
  return {a * b / total, b * c / total, a * c / total};
}

TraceResult schur_trace(const Network& net, std::span<const std::size_t> keep) {
  if (keep.empty()) throw Error("trace needs at least one kept vertex");
  const std::size_t n = net.size();
  const std::vector<char> kept = membership(n, keep);

  std::vector<std::map<std::size_t, double>> adj(n);
  for (const Edge& e : net.edges()) {
    if (e.u == e.v) continue;
    adj[e.u][e.v] += e.conductance;
    adj[e.v][e.u] += e.conductance;
  }

  TraceResult out;
  std::set<std::pair<std::size_t, std::size_t>> queue;
  for (std::size_t x = 0; x < n; ++x) {
    if (!kept[x]) queue.insert({adj[x].size(), x});
  }
  while (!queue.empty()) {
    const auto [degree, t] = *queue.begin();
    queue.erase(queue.begin());

    double pivot = 0.0;
    for (const auto& [j, c] : adj[t]) pivot += c;
    out.steps.push_back({step_kind(degree), net.id(t), degree});
    if (degree == 0) continue;
    out.condition_estimate = std::max(out.condition_estimate, net.total_conductance(t) / pivot);
    if (out.condition_estimate > kConditionLimit) {
      throw SolverError("elimination pivot lost too much precision", out.condition_estimate);
    }

    const std::vector<std::pair<std::size_t, double>> star(adj[t].begin(), adj[t].end());
    for (const auto& [i, ci] : star) {
      if (!kept[i]) queue.erase({adj[i].size(), i});
      adj[i].erase(t);
    }
    for (std::size_t a = 0; a < star.size(); ++a) {
      for (std::size_t b = a + 1; b < star.size(); ++b) {
        const auto [i, ci] = star[a];
        const auto [j, cj] = star[b];
        const double added = ci * cj / pivot;
        adj[i][j] += added;
        adj[j][i] += added;
      }
    }
    for (const auto& [i, ci] : star) {
      if (!kept[i]) queue.insert({adj[i].size(), i});
    }
    adj[t].clear();
  }

  std::vector<std::size_t> position(n, n);
  std::vector<std::string> ids;
  ids.reserve(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    position[keep[i]] = i;
    ids.push_back(net.id(keep[i]));
  }
  const Index m = as_index(keep.size());
  out.laplacian = Eigen::MatrixXd::Zero(m, m);
  double largest = 0.0;
  for (std::size_t x : keep) {
    for (const auto& [y, c] : adj[x]) {
      const Index i = as_index(position[x]);
      const Index j = as_index(position[y]);
      out.laplacian(i, j) -= c;
      out.laplacian(i, i) += c;
      largest = std::max(largest, c);
    }
  }
  std::vector<Edge> edges;
  for (std::size_t x : keep) {
    for (const auto& [y, c] : adj[x]) {
      if (position[x] >= position[y]) continue;
      if (c < 1e-13 * largest) {
        ++out.pruned;
        continue;
      }
      edges.push_back({position[x], position[y], c});
    }
  }
  const std::size_t base = kept[net.base()] ? position[net.base()] : 0;
  out.network = Network(std::move(ids), std::move(edges), base);
  return out;
}

namespace {

Network eliminate_one(const Network& net, std::size_t t, std::size_t degree, const char* what) {
  if (t >= net.size()) throw Error("vertex index out of range");
  if (net.degree(t) != degree) {
    throw Error(std::string(what) + " needs a vertex of degree " + std::to_string(degree) +
                ", '" + net.id(t) + "' has degree " + std::to_string(net.degree(t)));
  }
  if (t == net.base()) throw Error("cannot eliminate the base vertex");
  std::vector<std::size_t> keep;
  keep.reserve(net.size() - 1);
  for (std::size_t x = 0; x < net.size(); ++x) {
    if (x != t) keep.push_back(x);
  }
  return schur_trace(net, keep).network;
}

}  // namespace

Network series_reduce(const Network& net, std::size_t z) {
  return eliminate_one(net, z, 2, "series reduction");
}

Network wye_delta(const Network& net, std::size_t t) {
  return eliminate_one(net, t, 3, "wye-delta");
}

Network parallel_merge(const Network& net) {
  return Network(net.ids(), net.edges(), net.base());
}

Eigen::MatrixXd schur_complement_dense(const Network& net, std::span<const std::size_t> keep) {
  if (keep.empty()) throw Error("trace needs at least one kept vertex");
  const LaplacianBlocks blocks = partitioned_laplacian(net, keep);
  if (blocks.kept == net.size()) return blocks.A();
  const Eigen::MatrixXd B = blocks.B();
  const Eigen::LDLT<Eigen::MatrixXd> factor(blocks.D());
  if (factor.info() != Eigen::Success) throw SolverError("complement block is singular", 0.0);
  return blocks.A() - B.transpose() * factor.solve(B);
}

double reduce_to_pair(const Network& net, std::size_t x, std::size_t y,
                      std::vector<ReductionStep>* log) {
  if (x == y) throw Error("reduce_to_pair needs two distinct vertices");
  const std::size_t keep[] = {x, y};
  TraceResult trace = schur_trace(net, keep);
  if (log) *log = std::move(trace.steps);
  const double c = trace.network.conductance(0, 1);
  if (!(c > 0.0)) throw SolverError("reduction left no conductor between the pair", 0.0);
  return 1.0 / c;
}

LimitEstimate trace_resistance(const InfiniteNetworkSpec& spec, const std::string& x,
                               const std::string& y, const Exhaustion& exhaustion,
                               const LimitOptions& options) {
  if (exhaustion.levels() == 0) throw Error("exhaustion has no levels");
  const std::size_t last = exhaustion.levels() - 1;
  const Network ambient = truncation(spec, exhaustion, last, Truncation::Free);

  LimitEstimate est;
  est.metric = "trace";
  std::vector<double> values;
  for (std::size_t k = 0; k < exhaustion.levels(); ++k) {
    const auto level = exhaustion.level(k);
    if (std::find(level.begin(), level.end(), x) == level.end() ||
        std::find(level.begin(), level.end(), y) == level.end()) {
      throw Error("pair is not in exhaustion level " + std::to_string(k));
    }
    std::vector<std::size_t> keep;
    keep.reserve(level.size());
    for (const auto& id : level) keep.push_back(ambient.index(id));
    const TraceResult trace = schur_trace(ambient, keep);
    const Network& t = trace.network;
    values.push_back(effective_resistance(t, t.index(x), t.index(y)));
    est.samples.push_back({k, exhaustion.radii.at(k), values.back()});
  }
  bool invariant = true;
  for (std::size_t k = 1; k < values.size(); ++k) {
    const double scale = std::max(std::abs(values[k]), std::abs(values[k - 1]));
    if (std::abs(values[k] - values[k - 1]) > 1e-8 * scale) invariant = false;
  }
  est.level_invariant = invariant;
  est.converged = invariant || sequence_converged(values, options);
  est.estimate = values.back();
  return est;
}

double through_complement_probability(const Network& net, std::span<const std::size_t> keep,
                                      std::size_t x, std::size_t y) {
  const std::vector<char> kept = membership(net.size(), keep);
  if (keep.size() == net.size()) return 0.0;
  std::vector<std::pair<std::size_t, double>> boundary;
  boundary.reserve(keep.size());
  for (std::size_t z : keep) boundary.emplace_back(z, z == y ? 1.0 : 0.0);
  const VertexFunction h = solve_dirichlet(net, boundary);
  double total = 0.0;
  for (const Neighbor& nb : net.neighbors(x)) {
    if (!kept[nb.vertex]) total += nb.conductance * h(as_index(nb.vertex));
  }
  return total / net.total_conductance(x);
}

TraceConductanceReport trace_conductance_check(const Network& net,
                                               std::span<const std::size_t> keep) {
  const TraceResult trace = schur_trace(net, keep);
  TraceConductanceReport report;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (std::size_t j = 0; j < keep.size(); ++j) {
      if (i == j) continue;
      TraceConductanceEntry e;
      e.x = keep[i];
      e.y = keep[j];
      e.schur = -trace.laplacian(as_index(i), as_index(j));
      e.direct = net.conductance(e.x, e.y);
      e.through = through_complement_probability(net, keep, e.x, e.y);
      e.predicted = e.direct + net.total_conductance(e.x) * e.through;
      const double scale = std::max({std::abs(e.schur), std::abs(e.predicted),
                                     1e-15 * net.total_conductance(e.x)});
      e.relative_error = std::abs(e.schur - e.predicted) / scale;
      report.max_relative_error = std::max(report.max_relative_error, e.relative_error);
      report.entries.push_back(e);
    }
  }
  return report;
}

std::vector<double> default_shorting_schedule() {
  std::vector<double> eps;
  for (int j = 1; j <= 12; ++j) eps.push_back(std::pow(10.0, -j));
  return eps;
}

ShortedOperator shorted_operator(const Eigen::MatrixXd& matrix, std::size_t kept,
                                 std::span<const double> schedule) {
  if (matrix.rows() != matrix.cols()) throw Error("shorted operator needs a square matrix");
  const Index k = as_index(kept);
  if (kept == 0 || k > matrix.rows()) throw Error("kept block size out of range");
  for (std::size_t j = 0; j < schedule.size(); ++j) {
    if (!(schedule[j] > 0.0) || (j > 0 && !(schedule[j] < schedule[j - 1]))) {
      throw Error("shorting schedule must be positive and decreasing");
    }
  }
  const Eigen::MatrixXd A = matrix.topLeftCorner(k, k);
  ShortedOperator out;
  const Index m = matrix.rows() - k;
  if (m == 0) {
    out.limit = A;
    out.converged = true;
    return out;
  }
  if (schedule.empty()) throw Error("shorting schedule is empty");
  const Eigen::MatrixXd B = matrix.bottomLeftCorner(m, k);
  const Eigen::MatrixXd D = matrix.bottomRightCorner(m, m);
  const double norm_a = A.norm();
  for (double eps : schedule) {
    const Eigen::MatrixXd shifted = D + eps * Eigen::MatrixXd::Identity(m, m);
    Eigen::MatrixXd iterate = A - B.transpose() * shifted.ldlt().solve(B);
    if (!out.iterates.empty()) out.differences.push_back((iterate - out.iterates.back()).norm());
    out.epsilons.push_back(eps);
    out.iterates.push_back(std::move(iterate));
  }
  out.limit = out.iterates.back();
  out.converged = !out.differences.empty() && out.differences.back() <= 1e-9 * norm_a;
  return out;
}

ShortedOperator shorted_operator(const Network& net, std::span<const std::size_t> keep) {
  const LaplacianBlocks blocks = partitioned_laplacian(net, keep);
  const std::vector<double> schedule = default_shorting_schedule();
  return shorted_operator(blocks.matrix, blocks.kept, schedule);
}

}  // namespace resistnet
