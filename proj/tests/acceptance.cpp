// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "resistnet/errors.hpp"
#include "resistnet/limits.hpp"
#include "resistnet/metric.hpp"
#include "resistnet/network.hpp"
#include "resistnet/resistance.hpp"
#include "resistnet/trace.hpp"
#include "resistnet/walk.hpp"
#include "support/oracles.hpp"
#include "support/random_networks.hpp"

using namespace resistnet;

namespace {

struct Outcome {
  bool passed = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      notes.push_back("FAILED " + what);
    }
  }
  void note(const std::string& text) { notes.push_back(text); }
};

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

std::vector<std::pair<std::size_t, std::size_t>> all_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) out.emplace_back(a, b);
  }
  return out;
}

InfiniteNetworkSpec model(const std::string& text) { return std::get<InfiniteNetworkSpec>(generate(text)); }

// Resistances among `ids` in `net` (by id), from the dense oracle.
Eigen::MatrixXd oracle_among(const Network& net, const std::vector<std::string>& ids) {
  const Eigen::MatrixXd all = testing::dense_resistance_oracle(net);
  const auto n = static_cast<Eigen::Index>(ids.size());
  Eigen::MatrixXd out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out(i, j) = all(static_cast<Eigen::Index>(net.index(ids[static_cast<std::size_t>(i)])),
                      static_cast<Eigen::Index>(net.index(ids[static_cast<std::size_t>(j)])));
    }
  }
  return out;
}

double max_relative_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      worst = std::max(worst, testing::relative_difference(a(i, j), b(i, j)));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------

Outcome six_formulations() {
  Outcome out;
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 2, 50), 0.1);
    const auto pair = testing::random_subset(rng, net.size(), 2);
    const auto values = resistance_report(net, pair[0], pair[1]).values();
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    worst = std::max(worst, (*hi - *lo) / *hi);
  }
  out.require(worst <= 1e-8, "six values agree within 1e-8");
  out.note("200 networks, worst relative spread " + fmt(worst));
  return out;
}

Outcome trace_and_reductions() {
  Outcome out;
  std::mt19937_64 rng(1002);
  double nested = 0.0;
  double transforms = 0.0;
  int series = 0;
  int wye = 0;
  for (int t = 0; t < 100; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 4, 40), 0.15);
    const std::size_t outer = testing::random_size(rng, 2, net.size());
    const auto h1 = testing::random_subset(rng, net.size(), outer);
    const std::size_t inner = testing::random_size(rng, 2, outer);
    const std::vector<std::size_t> h2(h1.begin(), h1.begin() + static_cast<std::ptrdiff_t>(inner));

    const Network t1 = schur_trace(net, h1).network;
    const Network t2 = schur_trace(net, h2).network;
    std::vector<std::string> ids;
    for (auto v : h2) ids.push_back(net.id(v));
    std::vector<std::size_t> in_t1;
    for (const auto& id : ids) in_t1.push_back(t1.index(id));
    const Network t21 = schur_trace(t1, in_t1).network;
    const Eigen::MatrixXd direct = oracle_among(t2, ids);
    nested = std::max(nested, max_relative_gap(oracle_among(t21, ids), direct));
    nested = std::max(nested, max_relative_gap(oracle_among(t1, ids), direct));
    nested = std::max(nested, max_relative_gap(oracle_among(net, ids), direct));

    const Network merged = parallel_merge(net);
    transforms = std::max(transforms, max_relative_gap(oracle_among(merged, net.ids()),
                                                       oracle_among(net, net.ids())));
    for (std::size_t z = 0; z < net.size(); ++z) {
      const std::size_t deg = net.degree(z);
      if (z == net.base() || (deg != 2 && deg != 3)) continue;
      const Network reduced = deg == 2 ? series_reduce(net, z) : wye_delta(net, z);
      (deg == 2 ? series : wye)++;
      transforms = std::max(transforms, max_relative_gap(oracle_among(reduced, reduced.ids()),
                                                         oracle_among(net, reduced.ids())));
    }
  }
  out.require(nested <= 1e-9, "nested traces agree within 1e-9");
  out.require(transforms <= 1e-9, "transforms preserve resistances within 1e-9");
  out.require(series > 0 && wye > 0, "series and wye-delta steps exercised");
  out.note("nested gap " + fmt(nested) + ", transform gap " + fmt(transforms) + " over " +
           std::to_string(series) + " series and " + std::to_string(wye) + " wye-delta steps");
  return out;
}

Outcome trace_conductance() {
  Outcome out;
  std::mt19937_64 rng(1003);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 3, 40), 0.15);
    const auto keep = testing::random_subset(rng, net.size(), testing::random_size(rng, 2, net.size() - 1));
    worst = std::max(worst, trace_conductance_check(net, keep).max_relative_error);
  }
  out.require(worst <= 1e-9, "trace conductance matches within 1e-9");
  out.note("50 instances, worst relative error " + fmt(worst));
  return out;
}

Outcome path_integral() {
  Outcome out;
  std::mt19937_64 rng(1004);
  double exact_gap = 0.0;
  double worst_z = 0.0;
  const int trials = 20;
  for (int t = 0; t < trials; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 2, 20), 0.2, 0.1, 10.0);
    const auto pair = testing::random_subset(rng, net.size(), 2);
    WalkConfig config;
    config.seed = 4000 + static_cast<std::uint64_t>(t);
    config.episodes = 100'000;
    const PathIntegralResult r = path_integral_resistance(net, pair[0], pair[1], config);
    exact_gap = std::max(exact_gap, testing::relative_difference(r.exact, r.effective));
    worst_z = std::max(worst_z, r.z_score);
  }
  out.require(exact_gap <= 1e-9, "exact path integral matches within 1e-9");
  out.require(worst_z <= 4.0, "simulation within 4 sigma");
  out.note(std::to_string(trials) + " networks, exact gap " + fmt(exact_gap) + ", worst |z| " + fmt(worst_z, 3));
  return out;
}

Outcome geometric_integers() {
  Outcome out;
  const InfiniteNetworkSpec spec = model("geometric-z:2");
  const Exhaustion ex = ball_exhaustion(spec, radius_range(1, 30));
  const LimitEstimate free = free_resistance(spec, "0", "1", ex);
  const LimitEstimate trace = trace_resistance(spec, "0", "1", ex);
  const LimitEstimate wired = wired_resistance(spec, "0", "1", ex);
  out.require(free.converged && std::abs(free.estimate - 0.5) <= 1e-6, "free limit converges to 0.5");
  out.require(std::abs(trace.estimate - free.estimate) <= 1e-6, "trace limit equals free limit");
  out.require(wired.converged, "wired limit converges");
  out.require(wired.estimate <= free.estimate && wired.below_free.value_or(false), "wired below free");
  double oracle_gap = 0.0;
  for (const LimitSample& s : wired.samples) {
    const double oracle =
        testing::geometric_truncation_oracle(2.0, s.radius, true, testing::GeometricConvention::MaxEndpoint);
    oracle_gap = std::max(oracle_gap, std::abs(s.value - oracle));
  }
  out.require(oracle_gap <= 1e-9, "wired truncations match the dense oracle within 1e-9");
  const double max_endpoint =
      testing::geometric_truncation_oracle(2.0, 30, true, testing::GeometricConvention::MaxEndpoint);
  const double far_endpoint =
      testing::geometric_truncation_oracle(2.0, 30, true, testing::GeometricConvention::FarEndpointAbs);
  const double target = 8.0 / 27.0;
  out.note("free " + fmt(free.estimate, 10) + ", trace " + fmt(trace.estimate, 10) + ", wired " +
           fmt(wired.estimate, 10) + ", oracle gap " + fmt(oracle_gap));
  out.note("8/27 reconciliation (reported, not gated): c^max(|n|,|n-1|) gives " + fmt(max_endpoint, 10) +
           ", c^|n| gives " + fmt(far_endpoint, 10) + ", 8/27 = " + fmt(target, 10) +
           (std::abs(max_endpoint - target) <= 1e-6 || std::abs(far_endpoint - target) <= 1e-6
                ? "; a convention reproduces 8/27"
                : "; neither convention reproduces 8/27, gated on oracle agreement"));
  return out;
}

Outcome dipole_identity() {
  Outcome out;
  std::mt19937_64 rng(1006);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 2, 40), 0.15);
    std::uniform_int_distribution<std::size_t> pick(0, net.size() - 2);
    std::size_t x = pick(rng);
    if (x >= net.base()) ++x;
    const auto r = dipole_probability_check(net, x);
    worst = std::max(worst, r.scale == 0.0 ? 0.0 : r.max_error / r.scale);
  }
  const WiredProbabilityReport wired =
      wired_fx_probabilistic(model("geometric-z:2"), "1", ball_exhaustion(model("geometric-z:2"), radius_range(1, 15)));
  out.require(worst <= 1e-9, "finite identity within 1e-9");
  out.require(wired.levels.size() == 15 && wired.max_error <= 1e-9, "wired identity within 1e-9 up to radius 15");
  out.note("finite worst " + fmt(worst) + ", wired worst " + fmt(wired.max_error) + " over " +
           std::to_string(wired.levels.size()) + " radii");
  return out;
}

Outcome metric_axioms() {
  Outcome out;
  std::mt19937_64 rng(1007);
  std::size_t violations = 0;
  for (int t = 0; t < 50; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 3, 40), 0.15);
    const auto sample = testing::random_subset(rng, net.size(), std::min<std::size_t>(net.size(), 12));
    violations += check_metric_axioms(net, sample).violations.size();
  }
  bool rayleigh = true;
  std::size_t limit_violations = 0;
  for (const auto& [text, hi] : std::vector<std::pair<std::string, int>>{{"geometric-z:2", 30}, {"binary-tree", 12}}) {
    const InfiniteNetworkSpec spec = model(text);
    const Exhaustion ex = ball_exhaustion(spec, radius_range(4, hi));
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < ex.sizes.front(); ++i) ids.push_back(ex.order[i]);
    const auto F = limit_resistance_matrix(spec, ids, ex, Truncation::Free);
    const auto W = limit_resistance_matrix(spec, ids, ex, Truncation::Wired);
    limit_violations += check_metric_axioms(F.matrix).violations.size();
    limit_violations += check_metric_axioms(W.matrix).violations.size();
    rayleigh = rayleigh && (W.matrix.array() <= F.matrix.array() + 1e-12).all();
    for (std::size_t a = 1; a < std::min<std::size_t>(ids.size(), 5); ++a) {
      const auto w = wired_resistance(spec, ids[0], ids[a], ex);
      rayleigh = rayleigh && w.below_free.value_or(false);
    }
  }
  out.require(violations == 0, "finite resistance is a metric");
  out.require(limit_violations == 0, "free and wired limits are metrics");
  out.require(rayleigh, "wired below free at every truncation");
  out.note("violations: finite " + std::to_string(violations) + ", limits " + std::to_string(limit_violations));
  return out;
}

Outcome geodesic_comparison() {
  Outcome out;
  std::mt19937_64 rng(1008);
  double excess = 0.0;
  double tree_gap = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 2, 30), 0.2);
    excess = std::max(excess, geodesic_bound_check(net, all_pairs(net.size())).max_excess);
  }
  for (int t = 0; t < 50; ++t) {
    const Network tree = testing::random_tree(rng, testing::random_size(rng, 2, 30));
    tree_gap = std::max(tree_gap, geodesic_bound_check(tree, all_pairs(tree.size())).max_tree_gap);
  }
  const GeodesicResult ladder = geodesic_distance(model("ladder"), "t0", "b0");
  out.require(excess <= 1e-9, "resistance below geodesic distance");
  out.require(tree_gap <= 1e-9, "equality on trees");
  out.require(std::abs(ladder.distance - 2.0 / 3.0) <= 1e-6, "ladder infimum is 2/3");
  out.note("max excess " + fmt(excess) + ", tree gap " + fmt(tree_gap) + ", ladder " + fmt(ladder.distance, 10));
  return out;
}

Outcome embedding() {
  Outcome out;
  std::mt19937_64 rng(1009);
  double worst_ratio = -1.0;
  double worst_defect = 0.0;
  for (const auto& [text, hi] : std::vector<std::pair<std::string, int>>{{"geometric-z:2", 30}, {"binary-tree", 12}}) {
    const InfiniteNetworkSpec spec = model(text);
    const Exhaustion ex = ball_exhaustion(spec, radius_range(4, hi));
    const auto picks = testing::random_subset(rng, ex.sizes.front(), 10);
    std::vector<std::string> ids;
    for (auto i : picks) ids.push_back(ex.order[i]);
    for (const Truncation kind : {Truncation::Free, Truncation::Wired}) {
      const Eigen::MatrixXd R = limit_resistance_matrix(spec, ids, ex, kind).matrix;
      const NsdReport nsd = negative_semidefinite_check(R);
      worst_ratio = std::max(worst_ratio, nsd.max_eigenvalue / nsd.norm);
      out.require(nsd.passed(), text + " zero-sum check");
      const EmbeddingResult emb = vn_embed(R.cwiseSqrt());
      worst_defect = std::max(worst_defect, emb.defect);
    }
  }
  double identity = 0.0;
  const Network geo = full_subnetwork(model("geometric-z:2"), ball_exhaustion(model("geometric-z:2"), std::vector<int>{10}).level(0));
  const Network tree = full_subnetwork(model("binary-tree"), ball_exhaustion(model("binary-tree"), std::vector<int>{6}).level(0));
  for (const Network* net : {&geo, &tree}) {
    const auto sample = testing::random_subset(rng, net->size(), 10);
    identity = std::max(identity, kernel_identity_check(*net, sample, 100, 9).max_relative_error);
  }
  out.require(worst_defect <= 1e-8, "embedding recovers pairwise values within 1e-8");
  out.require(identity <= 1e-8, "kernel identity within 1e-8");
  out.note("max eigenvalue/norm " + fmt(worst_ratio) + ", embedding defect " + fmt(worst_defect) +
           ", identity error " + fmt(identity));
  return out;
}

Outcome boundary_consistency() {
  Outcome out;
  const InfiniteNetworkSpec geo = model("geometric-z:2");
  const auto b = boundary_resistance(geo, "0", "1", ball_exhaustion(geo, radius_range(1, 30)));
  out.require(!b.infinite && b.relative_agreement <= 1e-6, "two computations agree on geometric-z(2)");
  const InfiniteNetworkSpec half = model("half-line");
  const auto recurrent = boundary_resistance(half, "0", "1", ball_exhaustion(half, radius_range(1, 20)));
  const InfiniteNetworkSpec integers = model("integers");
  const auto line = boundary_resistance(integers, "0", "3", ball_exhaustion(integers, radius_range(3, 20)));
  const Network k4 = std::get<Network>(generate("complete:4"));
  const auto finite = boundary_resistance(as_spec(k4), k4.id(0), k4.id(1), ball_exhaustion(k4, radius_range(1, 4)));
  out.require(recurrent.infinite && line.infinite, "recurrent inputs give the infinity marker");
  out.require(finite.infinite, "finite input gives the infinity marker");
  out.note("geometric-z(2) " + fmt(b.estimate, 10) + ", agreement " + fmt(b.relative_agreement));
  return out;
}

Outcome commutator_bound() {
  Outcome out;
  std::mt19937_64 rng(1011);
  std::normal_distribution<double> gauss;
  std::size_t checks = 0;
  std::size_t witnesses = 0;
  double worst = -1e300;
  for (int t = 0; t < 50; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 2, 50), 0.1, 1.0, 1.0);
    std::vector<VertexFunction> potentials;
    for (int k = 0; k < 20; ++k) {
      VertexFunction v(static_cast<Eigen::Index>(net.size()));
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
      potentials.push_back(v);
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (int k = 0; k < 10; ++k) {
      const auto p = testing::random_subset(rng, net.size(), 2);
      pairs.emplace_back(p[0], p[1]);
    }
    const CommutatorReport r = commutator_bound_check(net, potentials, pairs);
    out.require(r.passed(), "network " + std::to_string(t));
    for (const auto& p : r.potentials) worst = std::max(worst, p.norm_squared - p.twice_energy);
    checks += r.potentials.size();
    witnesses += r.witnesses.size();
  }
  out.note(std::to_string(checks) + " potentials, " + std::to_string(witnesses) +
           " witnesses, max(norm^2 - 2E) " + fmt(worst));
  return out;
}

template <class T>
bool same_bits(const T& a, const T& b) {
  return std::memcmp(&a, &b, sizeof(T)) == 0;
}

Outcome determinism() {
  Outcome out;
  const Network k4 = std::get<Network>(generate("complete:4"));
  std::mt19937_64 rng(1012);
  const Network net = testing::random_connected(rng, 15, 0.2);
  for (const unsigned threads : {1u, 4u}) {
    WalkConfig config;
    config.seed = 77;
    config.episodes = 20'000;
    config.threads = threads;
    WalkConfig reference = config;
    reference.threads = 1;
    const auto e1 = simulate_escape(net, 0, 5, config);
    const auto e2 = simulate_escape(net, 0, 5, reference);
    out.require(same_bits(e1.estimate, e2.estimate) && e1.censored == e2.censored, "escape reproduces");
    const auto v1 = simulate_visits(net, 1, 6, config);
    const auto v2 = simulate_visits(net, 1, 6, reference);
    out.require(same_bits(v1.mean, v2.mean) && same_bits(v1.standard_error, v2.standard_error), "visits reproduce");
    const std::vector<std::size_t> targets{2};
    const std::vector<std::size_t> avoid{3};
    const auto h1 = simulate_hitting(k4, 0, targets, avoid, config);
    const auto h2 = simulate_hitting(k4, 0, targets, avoid, reference);
    out.require(same_bits(h1.estimate, h2.estimate), "hitting reproduces");
    const auto p1 = path_integral_resistance(net, 2, 9, config);
    const auto p2 = path_integral_resistance(net, 2, 9, reference);
    out.require(same_bits(p1.monte_carlo, p2.monte_carlo), "path integral reproduces");
    const auto t1 = simulate_transitions(net, 0, 200'000, config.seed);
    const auto t2 = simulate_transitions(net, 0, 200'000, config.seed);
    out.require(t1.forward == t2.forward && t1.backward == t2.backward, "transitions reproduce");
  }

  // Manifest round trip through the command line.
  const std::string source = std::string(RESISTNET_DATA_DIR) + "/k3.net";
  const std::string manifest = std::string(RESISTNET_SCRATCH_DIR) + "/acceptance_manifest.json";
  const std::vector<std::vector<std::string>> runs{
      {"escape", "a", "b"}, {"hitting", "a", "--targets", "b", "--avoid", "c"}, {"path", "a", "c"},
      {"visits", "a", "b"}, {"transitions", "a", "--steps", "50000"}};
  std::size_t replays = 0;
  for (const auto& tail : runs) {
    std::vector<std::string> args{"--full-precision", "--manifest", manifest, "walk", source};
    args.insert(args.end(), tail.begin(), tail.end());
    args.insert(args.end(), {"--seed", "2024", "--episodes", "20000"});
    std::ostringstream first, second, again, sink;
    const int code1 = cli::run(args, first, sink);
    const int code2 = cli::run(args, second, sink);
    const int code3 = cli::run({"replay", manifest}, again, sink);
    const bool ok = code1 == 0 && code2 == 0 && code3 == 0 && first.str() == second.str() &&
                    first.str() == again.str() && !first.str().empty();
    out.require(ok, "walk " + tail.front() + " reproduces via manifest replay");
    replays += ok;
  }
  out.note("library estimators match across reruns and thread counts; " + std::to_string(replays) +
           " manifest replays identical");
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    std::function<Outcome()> check;
    double budget_seconds;  // zero: no runtime gate
  };
  const std::vector<Criterion> criteria{
      {1, "six-formulation equivalence", six_formulations, 60.0},
      {2, "trace invariance and reduction fidelity", trace_and_reductions, 0.0},
      {3, "trace-conductance formula", trace_conductance, 0.0},
      {4, "path-integral identity", path_integral, 120.0},
      {5, "geometric integers limits", geometric_integers, 0.0},
      {6, "dipole-probability identity", dipole_identity, 0.0},
      {7, "metric axioms and Rayleigh monotonicity", metric_axioms, 0.0},
      {8, "geodesic comparison", geodesic_comparison, 0.0},
      {9, "negative-type embedding", embedding, 0.0},
      {10, "boundary and harmonic consistency", boundary_consistency, 0.0},
      {11, "commutator bound", commutator_bound, 0.0},
      {12, "determinism", determinism, 0.0},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome result;
    try {
      result = c.check();
    } catch (const std::exception& e) {
      result.passed = false;
      result.notes.push_back(std::string("threw: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0.0 && seconds > c.budget_seconds) {
      result.passed = false;
      result.notes.push_back("FAILED runtime budget of " + fmt(c.budget_seconds, 3) + " s");
    }
    std::string detail;
    for (const auto& n : result.notes) detail += (detail.empty() ? "" : "; ") + n;
    std::printf("%s criterion %2d %s (%.2f s): %s\n", result.passed ? "PASS" : "FAIL", c.id, c.name.c_str(),
                seconds, detail.c_str());
    std::fflush(stdout);
    failures += result.passed ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
