#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <numeric>
#include <random>

#include "resistnet/errors.hpp"
#include "resistnet/resistance.hpp"
#include "resistnet/trace.hpp"
#include "support/oracles.hpp"
#include "support/random_networks.hpp"

using namespace resistnet;

namespace {

std::vector<std::size_t> all_vertices(const Network& net) {
  std::vector<std::size_t> out(net.size());
  std::iota(out.begin(), out.end(), std::size_t{0});
  return out;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  return eig.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("schur trace: path onto its ends") {
  const Network p3 = load_network("0 1 1\n1 2 1\n");
  const std::size_t ends[] = {0, 2};
  const TraceResult tr = schur_trace(p3, ends);
  CHECK(tr.laplacian(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(tr.laplacian(0, 1) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(tr.network.size() == 2);
  CHECK(tr.network.conductance(0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  REQUIRE(tr.steps.size() == 1);
  CHECK(tr.steps[0].kind == "series");
  CHECK(tr.steps[0].vertex == "1");
}

TEST_CASE("schur trace: unit star becomes a triangle") {
  const Network star = load_network("t a 1\nt b 1\nt c 1\n");
  const std::size_t leaves[] = {1, 2, 3};
  const TraceResult tr = schur_trace(star, leaves);
  CHECK(tr.network.edges().size() == 3);
  for (const Edge& e : tr.network.edges()) CHECK(e.conductance == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(tr.steps.at(0).kind == "wye-delta");
}

TEST_CASE("schur trace: keeping everything changes nothing") {
  std::mt19937_64 rng(41);
  const Network net = testing::random_connected(rng, 12, 0.3);
  const auto keep = all_vertices(net);
  const TraceResult tr = schur_trace(net, keep);
  CHECK(tr.steps.empty());
  CHECK((tr.laplacian - testing::dense_laplacian_oracle(net)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("schur trace: star elimination of any degree") {
  std::mt19937_64 rng(42);
  for (int degree = 2; degree <= 8; ++degree) {
    NetworkBuilder b;
    std::vector<double> c(static_cast<std::size_t>(degree));
    for (int i = 0; i < degree; ++i) {
      c[static_cast<std::size_t>(i)] = testing::log_uniform(rng, 0.1, 10.0);
      b.add_edge("hub", "s" + std::to_string(i), c[static_cast<std::size_t>(i)]);
    }
    const Network star = b.build();
    std::vector<std::size_t> spokes;
    for (int i = 0; i < degree; ++i) spokes.push_back(star.index("s" + std::to_string(i)));
    const TraceResult tr = schur_trace(star, spokes);
    const double total = std::accumulate(c.begin(), c.end(), 0.0);
    for (int i = 0; i < degree; ++i) {
      for (int j = i + 1; j < degree; ++j) {
        const double expected = c[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(j)] / total;
        const double got = tr.network.conductance(tr.network.index("s" + std::to_string(i)),
                                                  tr.network.index("s" + std::to_string(j)));
        CHECK(testing::relative_difference(got, expected) <= 1e-14);
      }
    }
  }
}

TEST_CASE("schur trace: agrees with the dense block formula and stays a Laplacian") {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 50; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 3, 30), 0.2);
    const auto keep = testing::random_subset(rng, net.size(), testing::random_size(rng, 2, net.size()));
    const TraceResult tr = schur_trace(net, keep);
    const Eigen::MatrixXd dense = schur_complement_dense(net, keep);
    const double scale = net.max_total_conductance();
    CHECK((tr.laplacian - dense).cwiseAbs().maxCoeff() <= 1e-10 * scale);
    CHECK((tr.laplacian - tr.laplacian.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    CHECK(tr.laplacian.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-10 * scale);
    for (Eigen::Index i = 0; i < tr.laplacian.rows(); ++i) {
      for (Eigen::Index j = 0; j < tr.laplacian.cols(); ++j) {
        if (i != j) CHECK(tr.laplacian(i, j) <= 0.0);
      }
    }
    CHECK(validate(tr.network).ok());
    // Induced conductances dominate the original ones on kept pairs.
    for (std::size_t i = 0; i < keep.size(); ++i) {
      for (std::size_t j = i + 1; j < keep.size(); ++j) {
        const double before = net.conductance(keep[i], keep[j]);
        const double after = tr.network.conductance(tr.network.index(net.id(keep[i])),
                                                    tr.network.index(net.id(keep[j])));
        CHECK(after >= before * (1.0 - 1e-12));
      }
    }
  }
}

TEST_CASE("schur trace: rejects an empty keep set") {
  const Network p3 = load_network("0 1 1\n1 2 1\n");
  CHECK_THROWS(schur_trace(p3, std::span<const std::size_t>{}));
}

TEST_CASE("transforms: scalar examples") {
  CHECK(series_reduce(2.0, 2.0) == 1.0);
  CHECK(parallel_merge(1.5, 2.5) == 4.0);
  const Delta d = wye_delta(1.0, 1.0, 1.0);
  CHECK(d.c12 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(d.c23 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(d.c13 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("transforms: degree mismatch is an error") {
  const Network star = load_network("base a\nt a 1\nt b 1\nt c 1\n");
  CHECK_THROWS_AS(series_reduce(star, star.index("t")), Error);
  const Network p3 = load_network("0 1 1\n1 2 1\n");
  CHECK_THROWS_AS(wye_delta(p3, 1), Error);
  const Network wye = wye_delta(star, star.index("t"));
  CHECK(wye.size() == 3);
  CHECK(wye.edges().size() == 3);
}

TEST_CASE("transforms preserve retained resistances") {
  std::mt19937_64 rng(44);
  int series_done = 0;
  int wye_done = 0;
  for (int t = 0; t < 100; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 4, 25), 0.15);
    for (std::size_t z = 0; z < net.size(); ++z) {
      if (z == net.base()) continue;
      const std::size_t deg = net.degree(z);
      if (deg != 2 && deg != 3) continue;
      const Network reduced = deg == 2 ? series_reduce(net, z) : wye_delta(net, z);
      (deg == 2 ? series_done : wye_done)++;
      const Eigen::MatrixXd before = testing::dense_resistance_oracle(net);
      const Eigen::MatrixXd after = testing::dense_resistance_oracle(reduced);
      for (std::size_t a = 0; a < reduced.size(); ++a) {
        for (std::size_t b = a + 1; b < reduced.size(); ++b) {
          const auto ia = static_cast<Eigen::Index>(net.index(reduced.id(a)));
          const auto ib = static_cast<Eigen::Index>(net.index(reduced.id(b)));
          CHECK(testing::relative_difference(after(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)),
                                             before(ia, ib)) <= 1e-9);
        }
      }
      break;
    }
    const Network merged = parallel_merge(net);
    CHECK(serialize(merged) == serialize(net));
  }
  CHECK(series_done > 0);
  CHECK(wye_done > 0);
}

TEST_CASE("reduce to pair: examples and agreement") {
  const Network k3 = load_network("a b 1\nb c 1\na c 1\n");
  std::vector<ReductionStep> log;
  CHECK(reduce_to_pair(k3, 0, 1, &log) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(log.size() == 1);
  CHECK(reduce_to_pair(load_network("0 1 1\n1 2 1\n"), 0, 2) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(reduce_to_pair(load_network("x y 5\n"), 0, 1) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK_THROWS(reduce_to_pair(k3, 1, 1));

  std::mt19937_64 rng(45);
  for (int t = 0; t < 50; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 2, 40), 0.15);
    const auto pair = testing::random_subset(rng, net.size(), 2);
    CHECK(testing::relative_difference(reduce_to_pair(net, pair[0], pair[1]),
                                       effective_resistance(net, pair[0], pair[1])) <= 1e-9);
  }
}

TEST_CASE("trace invariance over nested subsets") {
  const Network k5 = std::get<Network>(generate("complete:5"));
  const std::size_t h1[] = {0, 1, 2, 3};
  const std::size_t h2[] = {0, 1};
  const double r1 = effective_resistance(schur_trace(k5, h1).network, 0, 1);
  const double r2 = effective_resistance(schur_trace(k5, h2).network, 0, 1);
  CHECK(r1 == doctest::Approx(0.4).epsilon(1e-13));
  CHECK(r2 == doctest::Approx(0.4).epsilon(1e-13));

  std::mt19937_64 rng(46);
  for (int t = 0; t < 100; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 3, 30), 0.2);
    const auto outer = testing::random_subset(rng, net.size(), testing::random_size(rng, 2, net.size()));
    std::vector<std::size_t> inner(outer.begin(),
                                   outer.begin() + static_cast<std::ptrdiff_t>(testing::random_size(rng, 2, outer.size())));
    const Network t1 = schur_trace(net, outer).network;
    const Network t2 = schur_trace(net, inner).network;
    const std::string& a = net.id(inner[0]);
    const std::string& b = net.id(inner[1]);
    const double via_outer = effective_resistance(t1, t1.index(a), t1.index(b));
    const double via_inner = effective_resistance(t2, t2.index(a), t2.index(b));
    CHECK(testing::relative_difference(via_outer, via_inner) <= 1e-9);
  }
}

TEST_CASE("trace resistance: geometric integers equal the free limit") {
  const auto spec = std::get<InfiniteNetworkSpec>(generate("geometric-z:2"));
  const auto radii = radius_range(1, 30);
  const Exhaustion ex = ball_exhaustion(spec, radii);
  const LimitEstimate tr = trace_resistance(spec, "0", "1", ex);
  const LimitEstimate fr = free_resistance(spec, "0", "1", ex);
  CHECK(tr.converged);
  REQUIRE(tr.level_invariant.has_value());
  CHECK(*tr.level_invariant);
  CHECK(testing::relative_difference(tr.estimate, fr.estimate) <= 1e-6);
  CHECK(std::abs(tr.estimate - 0.5) <= 1e-6);
}

TEST_CASE("trace resistance: finite network at every level") {
  const Network grid = std::get<Network>(generate("grid:3,3"));
  const auto radii = radius_range(2, 5);
  const Exhaustion ex = ball_exhaustion(grid, radii);
  const double exact = effective_resistance(grid, grid.index("0.0"), grid.index("1.1"));
  const LimitEstimate tr = trace_resistance(as_spec(grid), "0.0", "1.1", ex);
  for (const LimitSample& s : tr.samples) CHECK(testing::relative_difference(s.value, exact) <= 1e-10);
}

TEST_CASE("trace conductance formula") {
  const Network p3 = load_network("0 1 1\n1 2 1\n");
  const std::size_t ends[] = {0, 2};
  const TraceConductanceReport r = trace_conductance_check(p3, ends);
  CHECK(r.passed());
  REQUIRE_FALSE(r.entries.empty());
  CHECK(r.entries[0].through == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(r.entries[0].schur == doctest::Approx(0.5).epsilon(1e-14));

  const Network k4 = std::get<Network>(generate("complete:4"));
  const std::size_t three[] = {0, 1, 2};
  CHECK(trace_conductance_check(k4, three).passed());
  const auto every = all_vertices(k4);
  const TraceConductanceReport same = trace_conductance_check(k4, every);
  CHECK(same.passed());
  for (const auto& e : same.entries) CHECK(e.through == 0.0);

  std::mt19937_64 rng(47);
  for (int t = 0; t < 50; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 3, 25), 0.2);
    const auto keep = testing::random_subset(rng, net.size(), testing::random_size(rng, 2, net.size()));
    CHECK(trace_conductance_check(net, keep).passed());
  }
}

TEST_CASE("shorted operator: invertible complement gives the Schur complement") {
  std::mt19937_64 rng(48);
  for (int t = 0; t < 20; ++t) {
    const Network net = testing::random_connected(rng, testing::random_size(rng, 3, 15), 0.3, 0.5, 2.0);
    const auto keep = testing::random_subset(rng, net.size(), testing::random_size(rng, 1, net.size() - 1));
    const ShortedOperator sh = shorted_operator(net, keep);
    CHECK(sh.converged);
    const Eigen::MatrixXd schur = schur_complement_dense(net, keep);
    CHECK((sh.limit - schur).norm() <= 1e-8 * std::max(1.0, schur.norm()));
  }
}

TEST_CASE("shorted operator: iterates decrease towards the Schur complement") {
  const Network k4 = std::get<Network>(generate("complete:4"));
  const std::size_t keep[] = {0, 1};
  const ShortedOperator sh = shorted_operator(k4, keep);
  const Eigen::MatrixXd schur = schur_complement_dense(k4, keep);
  // (D + ε)^{-1} ⪯ D^{-1}, so each iterate sits above the limit.
  CHECK(min_eigenvalue(sh.iterates.front() - schur) >= -1e-12);
  CHECK((sh.iterates.front() - schur).norm() > 1e-3);
  for (std::size_t j = 1; j < sh.iterates.size(); ++j) {
    CHECK(min_eigenvalue(sh.iterates[j - 1] - sh.iterates[j]) >= -1e-12);
  }
}

TEST_CASE("shorted operator: zero complement block") {
  // T = [[2, 1, 0], [1, 1, 0], [0, 0, 0]] keeps the first two coordinates;
  // B = 0 and D = 0, so the limit is the kept block itself.
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(3, 3);
  T << 2, 1, 0, 1, 1, 0, 0, 0, 0;
  const auto schedule = default_shorting_schedule();
  const ShortedOperator sh = shorted_operator(T, 2, schedule);
  CHECK(sh.converged);
  CHECK((sh.limit - T.topLeftCorner(2, 2)).norm() <= 1e-12);
  CHECK(min_eigenvalue(T.topLeftCorner(2, 2) - sh.limit) >= -1e-12);

  // A PSD matrix whose complement block is singular but coupled:
  // T = v v^T with v = (1, 1). Shorting onto the first coordinate gives 0.
  Eigen::MatrixXd rank_one(2, 2);
  rank_one << 1, 1, 1, 1;
  const ShortedOperator sh1 = shorted_operator(rank_one, 1, schedule);
  CHECK(std::abs(sh1.limit(0, 0)) <= 1e-11);
  CHECK(sh1.limit(0, 0) <= 1.0);
}

TEST_CASE("shorted operator: schedule must decrease") {
  const double bad[] = {1e-3, 1e-2};
  Eigen::MatrixXd T = Eigen::MatrixXd::Identity(2, 2);
  CHECK_THROWS(shorted_operator(T, 1, bad));
}
