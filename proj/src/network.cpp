#include "resistnet/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>

#include "resistnet/errors.hpp"

namespace resistnet {

Network::Network(std::vector<std::string> ids, std::vector<Edge> edges, std::size_t base)
    : ids_(std::move(ids)), base_(base) {
  if (!ids_.empty() && base_ >= ids_.size()) {
    throw Error("base vertex index out of range");
  }
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw Error("duplicate vertex id '" + ids_[i] + "'");
    }
  }
  std::map<std::pair<std::size_t, std::size_t>, double> merged;
  for (const Edge& e : edges) {
    if (e.u >= ids_.size() || e.v >= ids_.size()) {
      throw Error("edge endpoint out of range");
    }
    if (e.conductance == 0.0) continue;
    merged[{std::min(e.u, e.v), std::max(e.u, e.v)}] += e.conductance;
  }
  edges_.reserve(merged.size());
  for (const auto& [key, c] : merged) {
    if (c == 0.0) continue;
    edges_.push_back({key.first, key.second, c});
  }
  adjacency_.resize(ids_.size());
  total_.assign(ids_.size(), 0.0);
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    if (e.u == e.v) continue;
    adjacency_[e.u].push_back({e.v, e.conductance, k});
    adjacency_[e.v].push_back({e.u, e.conductance, k});
    total_[e.u] += e.conductance;
    total_[e.v] += e.conductance;
  }
  for (auto& row : adjacency_) {
    std::sort(row.begin(), row.end(),
              [](const Neighbor& a, const Neighbor& b) { return a.vertex < b.vertex; });
  }
  for (double t : total_) max_total_ = std::max(max_total_, t);
}

std::optional<std::size_t> Network::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Network::index(std::string_view id) const {
  if (auto i = find(id)) return *i;
  throw Error("unknown vertex '" + std::string(id) + "'");
}

double Network::conductance(std::size_t x, std::size_t y) const {
  const auto& row = adjacency_.at(x);
  auto it = std::lower_bound(row.begin(), row.end(), y,
                             [](const Neighbor& n, std::size_t v) { return n.vertex < v; });
  return (it != row.end() && it->vertex == y) ? it->conductance : 0.0;
}

Network Network::with_base(std::size_t base) const {
  Network copy = *this;
  if (base >= size()) throw Error("base vertex index out of range");
  copy.base_ = base;
  return copy;
}

std::size_t NetworkBuilder::add_vertex(const std::string& id) {
  auto [it, inserted] = index_.emplace(id, ids_.size());
  if (inserted) ids_.push_back(id);
  return it->second;
}

void NetworkBuilder::add_edge(const std::string& u, const std::string& v, double conductance) {
  const std::size_t a = add_vertex(u);
  const std::size_t b = add_vertex(v);
  edges_.push_back({a, b, conductance});
}

void NetworkBuilder::set_base(const std::string& id) {
  add_vertex(id);
  base_ = id;
}

Network NetworkBuilder::build() const {
  std::size_t base = 0;
  if (base_) base = index_.at(*base_);
  return Network(ids_, edges_, base);
}

// ---------------------------------------------------------------------------

bool ValidationReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const InvariantCheck* ValidationReport::first_failure() const {
  for (const auto& c : checks) {
    if (!c.passed) return &c;
  }
  return nullptr;
}

namespace {

std::string edge_label(const Network& net, const Edge& e) {
  return net.id(e.u) + "-" + net.id(e.v);
}

}  // namespace

ValidationReport validate(const Network& net) {
  ValidationReport report;
  auto record = [&](std::string name) -> InvariantCheck& {
    report.checks.push_back({std::move(name), true, {}});
    return report.checks.back();
  };

  auto& nonempty = record("nonempty");
  if (net.size() == 0) {
    nonempty.passed = false;
    nonempty.witness = "no vertices";
    return report;
  }

  auto& positive = record("positive-conductance");
  auto& loops = record("no-self-loops");
  for (const Edge& e : net.edges()) {
    if (positive.passed && !(e.conductance > 0.0 && std::isfinite(e.conductance))) {
      positive.passed = false;
      positive.witness = edge_label(net, e);
    }
    if (loops.passed && e.u == e.v) {
      loops.passed = false;
      loops.witness = net.id(e.u);
    }
  }

  auto& symmetric = record("symmetric");
  for (std::size_t x = 0; x < net.size() && symmetric.passed; ++x) {
    for (const Neighbor& n : net.neighbors(x)) {
      if (net.conductance(n.vertex, x) != n.conductance) {
        symmetric.passed = false;
        symmetric.witness = net.id(x) + "-" + net.id(n.vertex);
        break;
      }
    }
  }

  auto& finite = record("finite-total-conductance");
  for (std::size_t x = 0; x < net.size(); ++x) {
    if (!std::isfinite(net.total_conductance(x))) {
      finite.passed = false;
      finite.witness = net.id(x);
      break;
    }
  }

  auto& connected = record("connected");
  std::vector<char> seen(net.size(), 0);
  std::deque<std::size_t> queue{net.base()};
  seen[net.base()] = 1;
  while (!queue.empty()) {
    const std::size_t x = queue.front();
    queue.pop_front();
    for (const Neighbor& n : net.neighbors(x)) {
      if (n.conductance > 0.0 && !seen[n.vertex]) {
        seen[n.vertex] = 1;
        queue.push_back(n.vertex);
      }
    }
  }
  for (std::size_t x = 0; x < net.size(); ++x) {
    if (!seen[x]) {
      connected.passed = false;
      connected.witness = net.id(x);
      break;
    }
  }
  return report;
}

void require_valid(const Network& net) {
  const auto report = validate(net);
  if (const auto* failure = report.first_failure()) {
    throw ValidationError(failure->name, failure->witness);
  }
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

double parse_conductance(std::string_view token, std::size_t line) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw ParseError(line, "invalid conductance '" + std::string(token) + "'");
  }
  return value;
}

struct PairRecord {
  std::size_t first;   // orientation of the first statement
  std::size_t second;
  double forward = 0.0;
  double reverse = 0.0;
  std::size_t reverse_line = 0;
};

}  // namespace

Network load_network(std::string_view text) {
  NetworkBuilder builder;
  std::optional<std::string> base;
  std::map<std::pair<std::size_t, std::size_t>, PairRecord> pairs;
  std::vector<std::pair<std::size_t, std::size_t>> pair_order;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (tokens[0] == "base") {
      if (tokens.size() != 2) throw ParseError(line_no, "expected 'base <id>'");
      if (base) throw ParseError(line_no, "duplicate base directive");
      base = std::string(tokens[1]);
      builder.set_base(*base);
      continue;
    }
    if (tokens.size() != 3) {
      throw ParseError(line_no, "expected '<u> <v> <conductance>'");
    }
    const std::string u(tokens[0]);
    const std::string v(tokens[1]);
    const double c = parse_conductance(tokens[2], line_no);
    if (u == v) {
      throw ValidationError("no-self-loops", u + " (line " + std::to_string(line_no) + ")");
    }
    if (c < 0.0) {
      throw ValidationError("positive-conductance",
                            u + "-" + v + " (line " + std::to_string(line_no) + ")");
    }
    const std::size_t a = builder.add_vertex(u);
    const std::size_t b = builder.add_vertex(v);
    if (c == 0.0) continue;
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = pairs.find(key);
    if (it == pairs.end()) {
      pairs.emplace(key, PairRecord{a, b, c, 0.0, 0});
      pair_order.push_back(key);
    } else if (it->second.first == a) {
      it->second.forward += c;
    } else {
      it->second.reverse += c;
      it->second.reverse_line = line_no;
    }
  }

  Network draft = builder.build();
  std::vector<Edge> edges;
  edges.reserve(pair_order.size());
  for (const auto& key : pair_order) {
    const PairRecord& rec = pairs.at(key);
    if (rec.reverse != 0.0 &&
        std::abs(rec.reverse - rec.forward) > 1e-12 * std::max(rec.forward, rec.reverse)) {
      throw ValidationError("symmetric", draft.id(rec.first) + "-" + draft.id(rec.second) +
                                             " (line " + std::to_string(rec.reverse_line) + ")");
    }
    edges.push_back({rec.first, rec.second, rec.forward});
  }
  Network net(draft.ids(), std::move(edges), draft.base());
  require_valid(net);
  return net;
}

Network load_network_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return load_network(buffer.str());
}

std::string serialize(const Network& net) {
  std::string out;
  if (net.size() > 0) out += "base " + net.id(net.base()) + "\n";
  char number[64];
  for (const Edge& e : net.edges()) {
    std::snprintf(number, sizeof number, "%.17g", e.conductance);
    out += net.id(e.u) + " " + net.id(e.v) + " " + number + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------

InfiniteNetworkSpec as_spec(const Network& net) {
  auto shared = std::make_shared<const Network>(net);
  InfiniteNetworkSpec spec;
  spec.model = "finite";
  spec.origin = net.id(net.base());
  spec.vertex_count = net.size();
  spec.neighbors = [shared](const std::string& id) {
    InfiniteNetworkSpec::NeighborList out;
    for (const Neighbor& n : shared->neighbors(shared->index(id))) {
      out.emplace_back(shared->id(n.vertex), n.conductance);
    }
    return out;
  };
  return spec;
}

namespace {

std::size_t count_param(std::span<const double> params, std::size_t i, std::string_view model,
                        std::size_t minimum) {
  if (params.size() <= i) {
    throw Error("model '" + std::string(model) + "' needs parameter " + std::to_string(i + 1));
  }
  const double p = params[i];
  if (!(p >= static_cast<double>(minimum)) || std::floor(p) != p || p > 1e7) {
    throw Error("model '" + std::string(model) + "': invalid size parameter");
  }
  return static_cast<std::size_t>(p);
}

long long parse_int_id(const std::string& id) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(id.data(), id.data() + id.size(), value);
  if (ec != std::errc() || ptr != id.data() + id.size()) {
    throw Error("not a vertex of this model: '" + id + "'");
  }
  return value;
}

InfiniteNetworkSpec geometric_integers(double c) {
  if (!(c > 1.0) || !std::isfinite(c)) {
    throw Error("geometric-z requires c > 1");
  }
  InfiniteNetworkSpec spec;
  spec.model = "geometric-z";
  spec.params = {c};
  spec.origin = "0";
  // c_{n-1,n} = c^max(|n|,|n-1|): the edge between m and m+1 (m >= 0) is
  // c^(m+1), mirrored for negative vertices.
  spec.neighbors = [c](const std::string& id) {
    const long long n = parse_int_id(id);
    InfiniteNetworkSpec::NeighborList out;
    if (n == 0) {
      out.emplace_back("1", c);
      out.emplace_back("-1", c);
    } else {
      const long long m = n > 0 ? n : -n;
      const long long inward = n > 0 ? n - 1 : n + 1;
      const long long outward = n > 0 ? n + 1 : n - 1;
      out.emplace_back(std::to_string(inward), std::pow(c, static_cast<double>(m)));
      out.emplace_back(std::to_string(outward), std::pow(c, static_cast<double>(m + 1)));
    }
    return out;
  };
  return spec;
}

InfiniteNetworkSpec unit_integers() {
  InfiniteNetworkSpec spec;
  spec.model = "integers";
  spec.origin = "0";
  spec.neighbors = [](const std::string& id) {
    const long long n = parse_int_id(id);
    InfiniteNetworkSpec::NeighborList out;
    if (n == 0) {
      out.emplace_back("1", 1.0);
      out.emplace_back("-1", 1.0);
    } else {
      out.emplace_back(std::to_string(n > 0 ? n - 1 : n + 1), 1.0);
      out.emplace_back(std::to_string(n > 0 ? n + 1 : n - 1), 1.0);
    }
    return out;
  };
  return spec;
}

InfiniteNetworkSpec half_line() {
  InfiniteNetworkSpec spec;
  spec.model = "half-line";
  spec.origin = "0";
  spec.neighbors = [](const std::string& id) {
    const long long n = parse_int_id(id);
    if (n < 0) throw Error("not a vertex of half-line: '" + id + "'");
    InfiniteNetworkSpec::NeighborList out;
    if (n > 0) out.emplace_back(std::to_string(n - 1), 1.0);
    out.emplace_back(std::to_string(n + 1), 1.0);
    return out;
  };
  return spec;
}

InfiniteNetworkSpec binary_tree() {
  InfiniteNetworkSpec spec;
  spec.model = "binary-tree";
  spec.origin = "0";
  // Heap numbering: the children of i are 2i+1 and 2i+2.
  spec.neighbors = [](const std::string& id) {
    const long long i = parse_int_id(id);
    if (i < 0 || i > (1LL << 61)) throw Error("not a vertex of binary-tree: '" + id + "'");
    InfiniteNetworkSpec::NeighborList out;
    if (i > 0) out.emplace_back(std::to_string((i - 1) / 2), 1.0);
    out.emplace_back(std::to_string(2 * i + 1), 1.0);
    out.emplace_back(std::to_string(2 * i + 2), 1.0);
    return out;
  };
  return spec;
}

InfiniteNetworkSpec ladder() {
  InfiniteNetworkSpec spec;
  spec.model = "ladder";
  spec.origin = "t0";
  // Rails t_n and b_n. Rung n and the rail edges (n-1, n) have resistance
  // 4^-n, i.e. conductance 4^n.
  spec.neighbors = [](const std::string& id) {
    if (id.size() < 2 || (id[0] != 't' && id[0] != 'b')) {
      throw Error("not a vertex of ladder: '" + id + "'");
    }
    const char rail = id[0];
    const char other = rail == 't' ? 'b' : 't';
    const long long n = parse_int_id(id.substr(1));
    if (n < 0) throw Error("not a vertex of ladder: '" + id + "'");
    auto name = [](char r, long long k) { return std::string(1, r) + std::to_string(k); };
    auto power = [](long long k) { return std::pow(4.0, static_cast<double>(k)); };
    InfiniteNetworkSpec::NeighborList out;
    if (n > 0) out.emplace_back(name(rail, n - 1), power(n));
    out.emplace_back(name(other, n), power(n));
    out.emplace_back(name(rail, n + 1), power(n + 1));
    return out;
  };
  return spec;
}

}  // namespace

Model generate(std::string_view name, std::span<const double> params) {
  if (name == "geometric-z") {
    if (params.size() != 1) throw Error("geometric-z takes one parameter c");
    return geometric_integers(params[0]);
  }
  if (name == "binary-tree") return binary_tree();
  if (name == "ladder") return ladder();
  if (name == "integers") return unit_integers();
  if (name == "half-line") return half_line();

  NetworkBuilder b;
  if (name == "path") {
    const std::size_t n = count_param(params, 0, name, 1);
    b.add_vertex("0");
    for (std::size_t i = 1; i < n; ++i) b.add_edge(std::to_string(i - 1), std::to_string(i), 1.0);
  } else if (name == "cycle") {
    const std::size_t n = count_param(params, 0, name, 3);
    for (std::size_t i = 0; i < n; ++i) {
      b.add_edge(std::to_string(i), std::to_string((i + 1) % n), 1.0);
    }
  } else if (name == "grid") {
    const std::size_t m = count_param(params, 0, name, 1);
    const std::size_t n = count_param(params, 1, name, 1);
    auto id = [](std::size_t i, std::size_t j) {
      return std::to_string(i) + "." + std::to_string(j);
    };
    b.add_vertex(id(0, 0));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i + 1 < m) b.add_edge(id(i, j), id(i + 1, j), 1.0);
        if (j + 1 < n) b.add_edge(id(i, j), id(i, j + 1), 1.0);
      }
    }
  } else if (name == "complete") {
    const std::size_t n = count_param(params, 0, name, 1);
    b.add_vertex("0");
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        b.add_edge(std::to_string(i), std::to_string(j), 1.0);
      }
    }
  } else {
    throw Error("unknown model '" + std::string(name) + "'");
  }
  Network net = b.build();
  require_valid(net);
  return net;
}

Model generate(std::string_view model_spec) {
  const auto colon = model_spec.find(':');
  const std::string_view name = model_spec.substr(0, colon);
  std::vector<double> params;
  if (colon != std::string_view::npos) {
    std::string_view rest = model_spec.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view tok = rest.substr(0, comma);
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        throw Error("invalid model parameter '" + std::string(tok) + "'");
      }
      params.push_back(value);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }
  return generate(name, params);
}

// ---------------------------------------------------------------------------

std::vector<int> radius_range(int lo, int hi) {
  std::vector<int> r;
  for (int k = lo; k <= hi; ++k) r.push_back(k);
  return r;
}

Exhaustion ball_exhaustion(const InfiniteNetworkSpec& spec, std::span<const int> radii) {
  if (radii.empty()) throw Error("exhaustion needs at least one radius");
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (radii[k] < 1 || (k > 0 && radii[k] <= radii[k - 1])) {
      throw Error("radii must be strictly increasing and >= 1");
    }
  }
  const int max_radius = radii.back();

  Exhaustion ex;
  ex.radii.assign(radii.begin(), radii.end());
  std::unordered_map<std::string, int> dist;
  dist.emplace(spec.origin, 0);
  ex.order.push_back(spec.origin);
  ex.distance.push_back(0);
  for (std::size_t head = 0; head < ex.order.size(); ++head) {
    const int d = ex.distance[head];
    if (d >= max_radius) break;
    const std::string current = ex.order[head];
    for (const auto& [nb, c] : spec.neighbors(current)) {
      if (!(c > 0.0)) continue;
      if (dist.emplace(nb, d + 1).second) {
        if (ex.order.size() >= kMaxExhaustionVertices) {
          throw Error("ball of radius " + std::to_string(max_radius) + " around '" + spec.origin +
                      "' exceeds " + std::to_string(kMaxExhaustionVertices) +
                      " vertices; use smaller radii");
        }
        ex.order.push_back(nb);
        ex.distance.push_back(d + 1);
      }
    }
  }
  const int reached = ex.distance.back();
  ex.truncated = spec.finite() && reached < max_radius;
  for (int r : radii) {
    const auto it = std::upper_bound(ex.distance.begin(), ex.distance.end(), r);
    ex.sizes.push_back(static_cast<std::size_t>(it - ex.distance.begin()));
  }
  return ex;
}

Exhaustion ball_exhaustion(const Network& net, std::span<const int> radii) {
  return ball_exhaustion(as_spec(net), radii);
}

namespace {

struct Induced {
  std::vector<std::string> ids;
  std::vector<Edge> edges;
  std::vector<double> frontier;
};

Induced induce(const InfiniteNetworkSpec& parent, std::span<const std::string> vertices) {
  Induced out;
  out.ids.assign(vertices.begin(), vertices.end());
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < out.ids.size(); ++i) {
    if (!index.emplace(out.ids[i], i).second) {
      throw Error("duplicate vertex '" + out.ids[i] + "' in vertex set");
    }
  }
  if (!index.count(parent.origin)) {
    throw ValidationError("contains-origin", parent.origin);
  }
  out.frontier.assign(out.ids.size(), 0.0);
  for (std::size_t i = 0; i < out.ids.size(); ++i) {
    for (const auto& [nb, c] : parent.neighbors(out.ids[i])) {
      auto it = index.find(nb);
      if (it == index.end()) {
        out.frontier[i] += c;
      } else if (it->second > i) {
        out.edges.push_back({i, it->second, c});
      }
    }
  }
  return out;
}

void require_connected(const Network& net) {
  for (const auto& check : validate(net).checks) {
    if (check.name == "connected" && !check.passed) {
      throw ValidationError("connected", check.witness);
    }
  }
}

void require_members(const Network& parent, std::span<const std::string> vertices) {
  for (const auto& v : vertices) parent.index(v);
}

}  // namespace

Network full_subnetwork(const InfiniteNetworkSpec& parent, std::span<const std::string> vertices) {
  Induced induced = induce(parent, vertices);
  const std::size_t base =
      static_cast<std::size_t>(std::find(induced.ids.begin(), induced.ids.end(), parent.origin) -
                               induced.ids.begin());
  Network net(std::move(induced.ids), std::move(induced.edges), base);
  require_connected(net);
  return net;
}

Network full_subnetwork(const Network& parent, std::span<const std::string> vertices) {
  require_members(parent, vertices);
  return full_subnetwork(as_spec(parent), vertices);
}

Network wired_subnetwork(const InfiniteNetworkSpec& parent, std::span<const std::string> vertices) {
  Induced induced = induce(parent, vertices);
  const std::size_t base =
      static_cast<std::size_t>(std::find(induced.ids.begin(), induced.ids.end(), parent.origin) -
                               induced.ids.begin());
  const bool has_frontier =
      std::any_of(induced.frontier.begin(), induced.frontier.end(), [](double c) { return c > 0; });
  if (has_frontier) {
    if (std::find(induced.ids.begin(), induced.ids.end(), kInfinityId) != induced.ids.end()) {
      throw Error("vertex id 'inf' is reserved for wired truncations");
    }
    const std::size_t inf = induced.ids.size();
    induced.ids.emplace_back(kInfinityId);
    for (std::size_t i = 0; i < inf; ++i) {
      if (induced.frontier[i] > 0.0) induced.edges.push_back({i, inf, induced.frontier[i]});
    }
  }
  Network net(std::move(induced.ids), std::move(induced.edges), base);
  require_connected(net);
  return net;
}

Network wired_subnetwork(const Network& parent, std::span<const std::string> vertices) {
  require_members(parent, vertices);
  return wired_subnetwork(as_spec(parent), vertices);
}

}  // namespace resistnet
