#pragma once

// Weighted networks: data model, edge-list I/O, model generators, ball
// exhaustions and the free/wired truncations built from them.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace resistnet {

/// Undirected conductor between dense vertex indices, stored with u < v.
struct Edge {
  std::size_t u;
  std::size_t v;
  double conductance;
};

struct Neighbor {
  std::size_t vertex;
  double conductance;
  std::size_t edge;  // index into Network::edges()
};

/// Finite network with symmetric conductances and a base vertex o.
///
/// Vertex ids are opaque strings mapped to dense indices in declaration
/// order. The constructor merges parallel conductors by summation and drops
/// zero conductances; it does not validate. Invalid edges (self-loops,
/// negative conductances) are kept so that validate() can report them.
class Network {
 public:
  Network() = default;
  Network(std::vector<std::string> ids, std::vector<Edge> edges, std::size_t base);

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t i) const { return ids_.at(i); }
  std::optional<std::size_t> find(std::string_view id) const;
  /// Throws Error when `id` is not a vertex.
  std::size_t index(std::string_view id) const;

  std::size_t base() const noexcept { return base_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::span<const Neighbor> neighbors(std::size_t x) const { return adjacency_.at(x); }

  /// c(x), the total conductance at x.
  double total_conductance(std::size_t x) const { return total_.at(x); }
  double max_total_conductance() const noexcept { return max_total_; }
  /// c_xy; zero when x and y are not adjacent.
  double conductance(std::size_t x, std::size_t y) const;
  std::size_t degree(std::size_t x) const { return adjacency_.at(x).size(); }

  /// Copy with a different base vertex.
  Network with_base(std::size_t base) const;

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<double> total_;
  double max_total_ = 0.0;
  std::size_t base_ = 0;
};

/// Incremental construction by vertex id.
class NetworkBuilder {
 public:
  std::size_t add_vertex(const std::string& id);
  /// Adds a conductor; repeated pairs are summed (parallel conductors).
  void add_edge(const std::string& u, const std::string& v, double conductance);
  void set_base(const std::string& id);
  Network build() const;

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Edge> edges_;
  std::optional<std::string> base_;
};

// ---------------------------------------------------------------------------
// Validation

struct InvariantCheck {
  std::string name;
  bool passed = true;
  std::string witness;  // empty when passed
};

struct ValidationReport {
  std::vector<InvariantCheck> checks;
  bool ok() const;
  const InvariantCheck* first_failure() const;
};

/// Checks positivity, absence of self-loops, symmetry, finiteness of c(x)
/// and connectivity from the base vertex.
ValidationReport validate(const Network& net);
/// Throws ValidationError naming the first violated invariant.
void require_valid(const Network& net);

// ---------------------------------------------------------------------------
// Edge-list format

/// Parses the edge-list format:
///   # comment
///   base <id>
///   <u> <v> <conductance>
/// Parallel lines for the same orientation are summed. A line stating the
/// reversed orientation of an existing pair restates the same conductor and
/// must agree with it (otherwise: asymmetric conductance). Zero conductances
/// are dropped. The result is validated.
Network load_network(std::string_view text);
Network load_network_file(const std::string& path);

/// Canonical serialization: `base` directive, then edges ordered by
/// (u, v) vertex index with u < v, conductances with 17 significant digits.
std::string serialize(const Network& net);

// ---------------------------------------------------------------------------
// Infinite models

/// Lazily enumerated, locally finite network. Nothing infinite is ever
/// materialized; exhaustions are built by BFS through `neighbors`.
struct InfiniteNetworkSpec {
  using NeighborList = std::vector<std::pair<std::string, double>>;

  std::string model;
  std::vector<double> params;
  std::string origin;
  std::function<NeighborList(const std::string&)> neighbors;
  /// Set when the spec wraps a finite network.
  std::optional<std::size_t> vertex_count;

  bool finite() const noexcept { return vertex_count.has_value(); }
};

/// Lazy view of a finite network (used to exhaust finite inputs uniformly).
InfiniteNetworkSpec as_spec(const Network& net);

using Model = std::variant<Network, InfiniteNetworkSpec>;

/// Model generators. Finite: `path:n`, `cycle:n`, `grid:m,n`, `complete:n`.
/// Infinite: `geometric-z:c` (c > 1, c_{n-1,n} = c^max(|n|,|n-1|)),
/// `binary-tree`, `ladder`, `integers` (Z, unit conductances) and
/// `half-line` (N, unit conductances).
Model generate(std::string_view name, std::span<const double> params);
/// Parses `name:p1,p2,...`.
Model generate(std::string_view model_spec);

// ---------------------------------------------------------------------------
// Exhaustions

/// Nested balls around the origin. Vertices are stored in BFS order, so
/// level k is the prefix of length sizes[k].
struct Exhaustion {
  std::vector<std::string> order;
  std::vector<std::size_t> sizes;
  std::vector<int> radii;
  /// Set when a ball already covered a finite network (later levels repeat).
  bool truncated = false;
  /// BFS hop distance from the origin, aligned with `order`.
  std::vector<int> distance;

  std::size_t levels() const noexcept { return sizes.size(); }
  std::span<const std::string> level(std::size_t k) const {
    return std::span<const std::string>(order).first(sizes.at(k));
  }
};

/// Largest ball an exhaustion will enumerate.
inline constexpr std::size_t kMaxExhaustionVertices = std::size_t{1} << 20;

/// Throws Error when the largest ball would exceed kMaxExhaustionVertices.
Exhaustion ball_exhaustion(const InfiniteNetworkSpec& spec, std::span<const int> radii);
Exhaustion ball_exhaustion(const Network& net, std::span<const int> radii);
/// Radii lo, lo+1, ..., hi.
std::vector<int> radius_range(int lo, int hi);

/// Id given to the vertex that replaces the complement in a wired truncation.
inline constexpr std::string_view kInfinityId = "inf";

/// Induced subnetwork on `vertices` with unchanged conductances. The base is
/// the spec origin. Throws ValidationError when the origin is excluded or
/// the induced graph is disconnected.
Network full_subnetwork(const InfiniteNetworkSpec& parent, std::span<const std::string> vertices);
Network full_subnetwork(const Network& parent, std::span<const std::string> vertices);

/// Induced subnetwork plus one vertex `inf` carrying, for each boundary
/// vertex x, the summed conductance from x to the complement. No `inf`
/// vertex is added when the frontier is empty.
Network wired_subnetwork(const InfiniteNetworkSpec& parent, std::span<const std::string> vertices);
Network wired_subnetwork(const Network& parent, std::span<const std::string> vertices);

}  // namespace resistnet
