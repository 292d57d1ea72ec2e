#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "resistnet/errors.hpp"
#include "resistnet/network.hpp"
#include "support/random_networks.hpp"

using namespace resistnet;

namespace {

InfiniteNetworkSpec infinite(std::string_view model) {
  return std::get<InfiniteNetworkSpec>(generate(model));
}

Network finite(std::string_view model) { return std::get<Network>(generate(model)); }

std::set<std::string> as_set(std::span<const std::string> ids) {
  return {ids.begin(), ids.end()};
}

std::string invariant_of(std::string_view text) {
  try {
    load_network(text);
  } catch (const ValidationError& e) {
    return e.invariant();
  }
  return "";
}

}  // namespace

TEST_CASE("load: smallest valid input with explicit base") {
  const Network net = load_network("base 0\n0 1 2.0\n");
  CHECK(net.size() == 2);
  CHECK(net.id(net.base()) == "0");
  CHECK(net.conductance(0, 1) == 2.0);
  CHECK(net.total_conductance(1) == 2.0);
}

TEST_CASE("load: base defaults to the first declared vertex") {
  const Network net = load_network("0 1 1\n1 2 1\n");
  CHECK(net.size() == 3);
  CHECK(net.id(net.base()) == "0");
  CHECK(net.edges().size() == 2);
}

TEST_CASE("load: comments, blank lines and a late base directive") {
  const Network net = load_network("# header\n\na b 1 # trailing\nb c 3\nbase c\n");
  CHECK(net.id(net.base()) == "c");
  CHECK(net.conductance(net.index("b"), net.index("c")) == 3.0);
}

TEST_CASE("load: invariant violations are named") {
  CHECK(invariant_of("0 1 -1\n") == "positive-conductance");
  CHECK(invariant_of("0 0 1\n") == "no-self-loops");
  CHECK(invariant_of("0 1 1\n2 3 1\n") == "connected");
  CHECK(invariant_of("0 1 1\n1 0 2\n") == "symmetric");
}

TEST_CASE("load: parse errors carry the line number") {
  try {
    load_network("0 1 1\n1 2 abc\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(load_network("0 1\n"), ParseError);
  CHECK_THROWS_AS(load_network("base\n"), ParseError);
}

TEST_CASE("load: parallel lines sum, reversed lines restate the conductor") {
  const Network net = load_network("0 1 1\n0 1 2\n1 0 3\n");
  CHECK(net.conductance(0, 1) == 3.0);
}

TEST_CASE("load: zero conductance declares vertices but no edge") {
  const Network net = load_network("0 1 1\n1 2 0\n2 0 1\n");
  CHECK(net.size() == 3);
  CHECK(net.conductance(1, 2) == 0.0);
  CHECK(net.degree(1) == 1);
}

TEST_CASE("serialize round-trips") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    const Network net = testing::random_connected(rng, 12, 0.3);
    const Network back = load_network(serialize(net));
    REQUIRE(back.size() == net.size());
    CHECK(back.id(back.base()) == net.id(net.base()));
    for (const Edge& e : net.edges()) {
      CHECK(back.conductance(back.index(net.id(e.u)), back.index(net.id(e.v))) == e.conductance);
    }
  }
}

TEST_CASE("validate: report lists every invariant with witnesses") {
  const Network ok = finite("path:3");
  const auto report = validate(ok);
  CHECK(report.ok());
  CHECK(report.checks.size() == 6);

  const Network split({"a", "b", "c", "d"}, {{0, 1, 1.0}, {2, 3, 1.0}}, 0);
  const auto bad = validate(split);
  REQUIRE_FALSE(bad.ok());
  CHECK(bad.first_failure()->name == "connected");
  CHECK(bad.first_failure()->witness == "c");
}

TEST_CASE("generate: finite models") {
  const Network p3 = finite("path:3");
  CHECK(p3.size() == 3);
  CHECK(p3.edges().size() == 2);
  CHECK(finite("cycle:5").edges().size() == 5);
  CHECK(finite("grid:3,4").edges().size() == 3 * 3 + 2 * 4);
  CHECK(finite("complete:5").edges().size() == 10);
  CHECK_THROWS(generate("cycle:2"));
  CHECK_THROWS(generate("nope:1"));
  CHECK_THROWS(generate("geometric-z:1"));
}

TEST_CASE("generate: geometric integers follow the max-endpoint rule") {
  const auto spec = infinite("geometric-z:2");
  auto edge = [&](const std::string& a, const std::string& b) {
    for (const auto& [id, c] : spec.neighbors(a)) {
      if (id == b) return c;
    }
    return 0.0;
  };
  CHECK(edge("0", "1") == 2.0);
  CHECK(edge("1", "2") == 4.0);
  CHECK(edge("-1", "0") == 2.0);
  CHECK(edge("-2", "-1") == 4.0);
  CHECK(edge("2", "1") == 4.0);
}

TEST_CASE("generate: ladder conductances are powers of four") {
  const auto spec = infinite("ladder");
  for (const auto& [id, c] : spec.neighbors("t1")) {
    if (id == "t0") CHECK(c == 4.0);
    if (id == "b1") CHECK(c == 4.0);
    if (id == "t2") CHECK(c == 16.0);
  }
}

TEST_CASE("exhaustion: geometric balls and canonical order") {
  const auto spec = infinite("geometric-z:2");
  const int radii[] = {1, 2};
  const Exhaustion ex = ball_exhaustion(spec, radii);
  CHECK(as_set(ex.level(0)) == std::set<std::string>{"-1", "0", "1"});
  CHECK(as_set(ex.level(1)) == std::set<std::string>{"-2", "-1", "0", "1", "2"});
  CHECK(std::vector<std::string>(ex.order.begin(), ex.order.begin() + 5) ==
        std::vector<std::string>{"0", "1", "-1", "2", "-2"});
}

TEST_CASE("exhaustion: binary tree ball sizes") {
  const auto spec = infinite("binary-tree");
  const auto radii = radius_range(1, 8);
  const Exhaustion ex = ball_exhaustion(spec, radii);
  for (std::size_t k = 0; k < ex.levels(); ++k) {
    CHECK(ex.sizes[k] == (std::size_t{1} << (radii[k] + 1)) - 1);
  }
  // Radius 20 would hold 2^21 - 1 vertices.
  const std::vector<int> too_far{20};
  CHECK_THROWS_WITH_AS(ball_exhaustion(spec, too_far), doctest::Contains("use smaller radii"), Error);
}

TEST_CASE("exhaustion: finite network is covered and flagged") {
  const int radii[] = {10};
  const Exhaustion ex = ball_exhaustion(finite("path:3"), radii);
  CHECK(ex.truncated);
  CHECK(ex.sizes[0] == 3);
  const int bad[] = {2, 2};
  CHECK_THROWS(ball_exhaustion(finite("path:3"), bad));
  const int zero[] = {0};
  CHECK_THROWS(ball_exhaustion(finite("path:3"), zero));
}

TEST_CASE("exhaustion: nested and covering") {
  const auto spec = infinite("ladder");
  const auto radii = radius_range(1, 12);
  const Exhaustion ex = ball_exhaustion(spec, radii);
  for (std::size_t k = 1; k < ex.levels(); ++k) {
    CHECK(ex.sizes[k] > ex.sizes[k - 1]);
    const auto inner = as_set(ex.level(k - 1));
    const auto outer = as_set(ex.level(k));
    CHECK(std::includes(outer.begin(), outer.end(), inner.begin(), inner.end()));
  }
  const auto all = as_set(ex.level(ex.levels() - 1));
  CHECK(all.count("t10"));
  CHECK(all.count("b10"));
}

TEST_CASE("subnetworks: free truncations") {
  const Network p3 = finite("path:3");
  const std::string two[] = {"0", "1"};
  const Network sub = full_subnetwork(p3, two);
  CHECK(sub.size() == 2);
  CHECK(sub.conductance(0, 1) == 1.0);

  const Network k3 = load_network("a b 1\nb c 1\na c 1\n");
  const std::string ab[] = {"a", "b"};
  CHECK(full_subnetwork(k3, ab).edges().size() == 1);

  const auto spec = infinite("geometric-z:2");
  const std::string ball[] = {"-1", "0", "1"};
  const Network g = full_subnetwork(spec, ball);
  CHECK(g.conductance(g.index("-1"), g.index("0")) == 2.0);
  CHECK(g.conductance(g.index("0"), g.index("1")) == 2.0);

  const std::string no_origin[] = {"1", "2"};
  CHECK_THROWS_AS(full_subnetwork(p3, no_origin), ValidationError);
  const std::string gap[] = {"0", "2"};
  CHECK_THROWS_AS(full_subnetwork(p3, gap), ValidationError);
}

TEST_CASE("subnetworks: wired truncations") {
  const auto spec = infinite("geometric-z:2");
  const std::string ball[] = {"-1", "0", "1"};
  const Network w = wired_subnetwork(spec, ball);
  const std::size_t inf = w.index(kInfinityId);
  CHECK(w.conductance(w.index("1"), inf) == 4.0);
  CHECK(w.conductance(w.index("-1"), inf) == 4.0);

  const auto tree = infinite("binary-tree");
  const int radii[] = {3};
  const Exhaustion ex = ball_exhaustion(tree, radii);
  const Network wt = wired_subnetwork(tree, ex.level(0));
  const std::size_t tinf = wt.index(kInfinityId);
  CHECK(wt.degree(tinf) == 8);
  for (const Neighbor& nb : wt.neighbors(tinf)) CHECK(nb.conductance == 2.0);

  const Network p3 = finite("path:3");
  const std::string all[] = {"0", "1", "2"};
  const Network same = wired_subnetwork(p3, all);
  CHECK(same.size() == 3);
  CHECK_FALSE(same.find(kInfinityId).has_value());
}

TEST_CASE("subnetworks: restriction composes") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    const Network g = testing::random_connected(rng, 15, 0.4);
    const int radii[] = {1, 2};
    const Exhaustion ex = ball_exhaustion(g, radii);
    const Network a = full_subnetwork(g, ex.level(1));
    const Network direct = full_subnetwork(g, ex.level(0));
    const Network twice = full_subnetwork(a, ex.level(0));
    CHECK(serialize(direct) == serialize(twice));
  }
}

TEST_CASE("subnetworks: wired frontier equals the cut sum") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 20; ++t) {
    const Network g = testing::random_connected(rng, 15, 0.3);
    const int radii[] = {1};
    const Exhaustion ex = ball_exhaustion(g, radii);
    if (ex.sizes[0] == g.size()) continue;
    const Network w = wired_subnetwork(g, ex.level(0));
    const std::set<std::string> inside = as_set(ex.level(0));
    double cut = 0.0;
    for (const Edge& e : g.edges()) {
      if (inside.count(g.id(e.u)) != inside.count(g.id(e.v))) cut += e.conductance;
    }
    CHECK(w.total_conductance(w.index(kInfinityId)) == doctest::Approx(cut).epsilon(1e-14));
  }
}

TEST_CASE("generated truncations validate") {
  for (const char* model : {"geometric-z:2", "binary-tree", "ladder", "integers", "half-line"}) {
    const auto spec = infinite(model);
    const auto radii = radius_range(1, 6);
    const Exhaustion ex = ball_exhaustion(spec, radii);
    for (std::size_t k = 0; k < ex.levels(); ++k) {
      CHECK(validate(full_subnetwork(spec, ex.level(k))).ok());
      CHECK(validate(wired_subnetwork(spec, ex.level(k))).ok());
    }
  }
}
