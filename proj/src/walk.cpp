#include "resistnet/walk.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "resistnet/errors.hpp"
#include "resistnet/limits.hpp"
#include "resistnet/resistance.hpp"
#include "resistnet/trace.hpp"

namespace resistnet {

namespace {

using Index = Eigen::Index;

Index as_index(std::size_t i) { return static_cast<Index>(i); }

/// Cumulative conductances per vertex for inverse-CDF step sampling.
class Stepper {
 public:
  explicit Stepper(const Network& net) : offsets_(net.size() + 1, 0) {
    for (std::size_t x = 0; x < net.size(); ++x) {
      double running = 0.0;
      for (const Neighbor& nb : net.neighbors(x)) {
        running += nb.conductance;
        cumulative_.push_back(running);
        targets_.push_back(nb.vertex);
      }
      offsets_[x + 1] = cumulative_.size();
    }
  }

  std::size_t step(std::size_t x, std::mt19937_64& rng) const {
    const std::size_t lo = offsets_[x];
    const std::size_t hi = offsets_[x + 1];
    if (lo == hi) return x;
    std::uniform_real_distribution<double> uniform(0.0, cumulative_[hi - 1]);
    const double u = uniform(rng);
    auto it = std::upper_bound(cumulative_.begin() + static_cast<std::ptrdiff_t>(lo),
                               cumulative_.begin() + static_cast<std::ptrdiff_t>(hi), u);
    std::size_t k = static_cast<std::size_t>(it - cumulative_.begin());
    if (k >= hi) k = hi - 1;
    return targets_[k];
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<double> cumulative_;
  std::vector<std::size_t> targets_;
};

std::mt19937_64 episode_rng(std::uint64_t seed, std::uint64_t episode) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(episode),
                    static_cast<std::uint32_t>(episode >> 32)};
  return std::mt19937_64(seq);
}

struct Tally {
  std::size_t hits = 0;
  std::size_t censored = 0;
  std::size_t completed = 0;
  // Visit counts: sum and sum of squares over completed episodes. Integer
  // sums keep the totals independent of the partition.
  std::uint64_t visits = 0;
  std::uint64_t visits_sq = 0;
};

/// Runs `episode(rng, tally)` for every episode index over contiguous,
/// deterministic partitions and merges the per-thread tallies in order.
template <class Episode>
Tally run_episodes(const WalkConfig& config, Episode episode) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(config.threads),
                                                  std::max<std::size_t>(config.episodes, 1)));
  std::vector<Tally> partial(workers);
  auto work = [&](unsigned w) {
    const std::size_t begin = config.episodes * w / workers;
    const std::size_t end = config.episodes * (w + 1) / workers;
    for (std::size_t i = begin; i < end; ++i) {
      std::mt19937_64 rng = episode_rng(config.seed, i);
      episode(rng, partial[w]);
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  Tally total;
  for (const Tally& t : partial) {
    total.hits += t.hits;
    total.censored += t.censored;
    total.completed += t.completed;
    total.visits += t.visits;
    total.visits_sq += t.visits_sq;
  }
  return total;
}

void check_vertex(const Network& net, std::size_t x) {
  if (x >= net.size()) throw Error("vertex index out of range");
}

}  // namespace

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

HittingEstimate simulate_hitting(const Network& net, std::size_t start,
                                 std::span<const std::size_t> targets,
                                 std::span<const std::size_t> avoid, const WalkConfig& config) {
  check_vertex(net, start);
  if (targets.empty() && avoid.empty()) throw Error("walk needs targets or avoid vertices");
  // 0: interior, 1: target, 2: avoid.
  std::vector<unsigned char> state(net.size(), 0);
  for (std::size_t t : targets) {
    check_vertex(net, t);
    state[t] = 1;
  }
  for (std::size_t a : avoid) {
    check_vertex(net, a);
    if (state[a] == 1) throw Error("targets and avoid must be disjoint");
    state[a] = 2;
  }
  const Stepper stepper(net);
  const Tally tally = run_episodes(config, [&](std::mt19937_64& rng, Tally& out) {
    std::size_t x = start;
    for (std::size_t s = 0; s < config.max_steps; ++s) {
      x = stepper.step(x, rng);
      if (state[x] == 1) {
        ++out.hits;
        ++out.completed;
        return;
      }
      if (state[x] == 2) {
        ++out.completed;
        return;
      }
    }
    ++out.censored;
  });

  HittingEstimate est;
  est.episodes = config.episodes;
  est.hits = tally.hits;
  est.censored = tally.censored;
  const std::size_t n = tally.completed;
  if (n > 0) {
    est.estimate = static_cast<double>(tally.hits) / static_cast<double>(n);
    est.standard_error = std::sqrt(est.estimate * (1.0 - est.estimate) / static_cast<double>(n));
  }
  est.censored_warning = static_cast<double>(tally.censored) > 1e-3 * static_cast<double>(config.episodes);
  return est;
}

HittingEstimate simulate_escape(const Network& net, std::size_t a, std::size_t b,
                                const WalkConfig& config) {
  if (a == b) throw Error("escape probability needs two distinct vertices");
  const std::size_t targets[] = {b};
  const std::size_t avoid[] = {a};
  return simulate_hitting(net, a, targets, avoid, config);
}

VertexFunction exact_hitting(const Network& net, std::span<const std::size_t> targets,
                             std::span<const std::size_t> avoid) {
  if (targets.empty() && avoid.empty()) throw Error("hitting problem needs a nonempty boundary");
  std::vector<std::pair<std::size_t, double>> boundary;
  std::vector<char> seen(net.size(), 0);
  for (std::size_t t : targets) {
    check_vertex(net, t);
    seen[t] = 1;
    boundary.emplace_back(t, 1.0);
  }
  for (std::size_t a : avoid) {
    check_vertex(net, a);
    if (seen[a]) throw Error("targets and avoid must be disjoint");
    boundary.emplace_back(a, 0.0);
  }
  VertexFunction u = solve_dirichlet(net, boundary);
  return u.cwiseMax(0.0).cwiseMin(1.0);
}

double escape_probability(const Network& net, std::size_t x, std::size_t y) {
  check_vertex(net, x);
  check_vertex(net, y);
  if (x == y) throw Error("escape probability needs two distinct vertices");
  const std::size_t targets[] = {y};
  const std::size_t avoid[] = {x};
  const VertexFunction h = exact_hitting(net, targets, avoid);
  double total = 0.0;
  for (const Neighbor& nb : net.neighbors(x)) total += nb.conductance * h(as_index(nb.vertex));
  return total / net.total_conductance(x);
}

PathIntegralResult path_integral_resistance(const Network& net, std::size_t x, std::size_t y,
                                            const WalkConfig& config) {
  PathIntegralResult r;
  r.escape = escape_probability(net, x, y);
  const double cx = net.total_conductance(x);
  r.exact = 1.0 / (cx * r.escape);
  r.effective = effective_resistance(net, x, y);
  r.simulated = simulate_escape(net, x, y, config);
  r.monte_carlo = 1.0 / (cx * r.simulated.estimate);
  const double gap = std::abs(r.simulated.estimate - r.escape);
  if (gap > 0.0) {
    r.z_score = r.simulated.standard_error > 0.0 ? gap / r.simulated.standard_error
                                                 : std::numeric_limits<double>::infinity();
  }
  return r;
}

DipoleProbabilityReport dipole_probability_check(const Network& net, std::size_t x) {
  check_vertex(net, x);
  const std::size_t o = net.base();
  if (x == o) throw Error("dipole check needs x different from the base vertex");
  DipoleProbabilityReport r;
  r.kernel = energy_kernel_element(net, x).values;
  const std::size_t targets[] = {x};
  const std::size_t avoid[] = {o};
  r.probability = exact_hitting(net, targets, avoid);
  r.resistance = r.kernel(as_index(x)) - r.kernel(as_index(o));
  r.max_error = (r.kernel - r.resistance * r.probability).lpNorm<Eigen::Infinity>();
  r.scale = r.kernel.lpNorm<Eigen::Infinity>();
  return r;
}

WiredProbabilityReport wired_fx_probabilistic(const InfiniteNetworkSpec& spec, const std::string& x,
                                              const Exhaustion& exhaustion) {
  WiredProbabilityReport report;
  for (std::size_t k = 0; k < exhaustion.levels(); ++k) {
    const Network net = truncation(spec, exhaustion, k, Truncation::Wired);
    const std::size_t xi = net.index(x);
    const DipoleProbabilityReport d = dipole_probability_check(net, xi);
    WiredLevelCheck level;
    level.radius = exhaustion.radii.at(k);
    level.resistance = d.resistance;
    level.max_error = d.scale > 0.0 ? d.max_error / d.scale : d.max_error;
    if (const auto inf = net.find(kInfinityId)) {
      level.prefactor = net.total_conductance(xi) / net.total_conductance(*inf);
    }
    if (!report.levels.empty() &&
        level.prefactor > report.levels.back().prefactor * (1.0 + 1e-12)) {
      report.prefactor_decays = false;
    }
    report.max_error = std::max(report.max_error, level.max_error);
    report.levels.push_back(level);
  }
  return report;
}

TraceTransitionReport trace_transition_check(const Network& net,
                                             std::span<const std::size_t> keep) {
  const TraceResult trace = schur_trace(net, keep);
  TraceTransitionReport report;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const double trace_total = trace.laplacian(as_index(i), as_index(i));
    for (std::size_t j = 0; j < keep.size(); ++j) {
      if (i == j) continue;
      TraceTransitionEntry e;
      e.x = keep[i];
      e.y = keep[j];
      const double ctr = -trace.laplacian(as_index(i), as_index(j));
      const double cx = net.total_conductance(e.x);
      e.trace = ctr / cx;
      e.direct = net.conductance(e.x, e.y) / cx;
      e.through = through_complement_probability(net, keep, e.x, e.y);
      e.normalized = trace_total > 0.0 ? ctr / trace_total : 0.0;
      e.error = std::abs(e.trace - e.direct - e.through);
      report.max_error = std::max(report.max_error, e.error);
      report.entries.push_back(e);
    }
  }
  return report;
}

VisitEstimate simulate_visits(const Network& net, std::size_t a, std::size_t b,
                              const WalkConfig& config) {
  check_vertex(net, a);
  check_vertex(net, b);
  if (a == b) throw Error("visit counts need two distinct vertices");
  const Stepper stepper(net);
  const Tally tally = run_episodes(config, [&](std::mt19937_64& rng, Tally& out) {
    std::size_t x = a;
    std::uint64_t visits = 1;
    for (std::size_t s = 0; s < config.max_steps; ++s) {
      x = stepper.step(x, rng);
      if (x == b) {
        ++out.completed;
        out.visits += visits;
        out.visits_sq += visits * visits;
        return;
      }
      if (x == a) ++visits;
    }
    ++out.censored;
  });
  VisitEstimate est;
  est.episodes = config.episodes;
  est.censored = tally.censored;
  const double n = static_cast<double>(tally.completed);
  if (n > 0) {
    est.mean = static_cast<double>(tally.visits) / n;
    const double sq = static_cast<double>(tally.visits_sq);
    const double var = n > 1 ? (sq - n * est.mean * est.mean) / (n - 1.0) : 0.0;
    est.standard_error = std::sqrt(std::max(var, 0.0) / n);
  }
  return est;
}

TransitionCounts simulate_transitions(const Network& net, std::size_t start, std::size_t steps,
                                      std::uint64_t seed) {
  check_vertex(net, start);
  const Stepper stepper(net);
  std::mt19937_64 rng = episode_rng(seed, 0);
  TransitionCounts counts;
  counts.forward.assign(net.edges().size(), 0);
  counts.backward.assign(net.edges().size(), 0);
  counts.departures.assign(net.size(), 0);
  counts.steps = steps;
  std::size_t x = start;
  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t y = stepper.step(x, rng);
    ++counts.departures[x];
    for (const Neighbor& nb : net.neighbors(x)) {
      if (nb.vertex != y) continue;
      if (x < y) {
        ++counts.forward[nb.edge];
      } else {
        ++counts.backward[nb.edge];
      }
      break;
    }
    x = y;
  }
  return counts;
}

VertexFunction experimental_free_kernel(const InfiniteNetworkSpec& spec, const std::string& x,
                                        const Exhaustion& exhaustion) {
  if (exhaustion.levels() == 0) throw Error("exhaustion has no levels");
  const std::size_t last = exhaustion.levels() - 1;
  const Network free_net = truncation(spec, exhaustion, last, Truncation::Free);
  const Network wired = truncation(spec, exhaustion, last, Truncation::Wired);
  const std::size_t xi = wired.index(x);
  const std::size_t o = wired.base();
  if (xi == o) return VertexFunction::Zero(as_index(free_net.size()));
  const double rf = effective_resistance(free_net, free_net.index(x), free_net.base());

  std::vector<std::size_t> avoid_x{o};
  std::vector<std::size_t> either{xi, o};
  std::vector<std::size_t> none;
  if (const auto inf = wired.find(kInfinityId)) {
    avoid_x.push_back(*inf);
    none.push_back(*inf);
  }
  const std::size_t only_x[] = {xi};
  const VertexFunction joint = exact_hitting(wired, only_x, avoid_x);
  const VertexFunction reach = exact_hitting(wired, either, none);
  VertexFunction out(as_index(free_net.size()));
  for (Index i = 0; i < out.size(); ++i) {
    out(i) = reach(i) > 0.0 ? rf * joint(i) / reach(i) : 0.0;
  }
  return out;
}

}  // namespace resistnet
