#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <variant>

#include "resistnet/errors.hpp"
#include "resistnet/forms.hpp"
#include "resistnet/limits.hpp"
#include "resistnet/metric.hpp"
#include "resistnet/network.hpp"
#include "resistnet/resistance.hpp"
#include "resistnet/trace.hpp"
#include "resistnet/walk.hpp"

namespace resistnet::cli {

namespace {

using json = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Cell = std::variant<std::string, double, long long, bool>;

struct Result {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  json extra = json::object();
  int exit = kExitOk;
  /// Replaces the table in CSV mode (reduced networks print as edge lists).
  std::optional<std::string> text;
};

struct Globals {
  bool json_mode = false;
  bool full_precision = false;
  bool experimental = false;
  unsigned threads = 0;
  std::string manifest_path;
  int precision() const { return full_precision ? 17 : 12; }
};

std::string format_number(double value, int precision) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (value == 0.0) value = 0.0;  // drop the sign of negative zero
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*g", precision, value);
  return buffer;
}

std::string format_cell(const Cell& cell, int precision) {
  return std::visit(
      [precision](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::string>) return v;
        else if constexpr (std::is_same_v<T, double>) return format_number(v, precision);
        else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
        else return std::to_string(v);
      },
      cell);
}

json number(double value) {
  if (std::isfinite(value)) return value;
  return format_number(value, 17);
}

json cell_json(const Cell& cell) {
  return std::visit(
      [](const auto& v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return number(v);
        else return v;
      },
      cell);
}

// ---------------------------------------------------------------------------
// Argument helpers

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, sep)) {
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_pairs(const std::vector<std::string>& raw) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& token : raw) {
    for (const auto& item : split(token, ';')) {
      const auto ends = split(item, ',');
      if (ends.size() != 2) throw UsageError("pair '" + item + "' must look like x,y");
      out.emplace_back(ends[0], ends[1]);
    }
  }
  if (out.empty()) throw UsageError("no vertex pairs given");
  return out;
}

std::vector<std::string> parse_list(const std::vector<std::string>& raw) {
  std::vector<std::string> out;
  for (const auto& token : raw) {
    for (auto& item : split(token, ',')) out.push_back(std::move(item));
  }
  return out;
}

int parse_int(const std::string& text) {
  std::size_t used = 0;
  int value = 0;
  try {
    value = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw UsageError("'" + text + "' is not an integer");
  return value;
}

/// "lo..hi" or a comma-separated list of radii.
std::vector<int> parse_radii(const std::string& text) {
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const int lo = parse_int(text.substr(0, dots));
    const int hi = parse_int(text.substr(dots + 2));
    if (lo < 1 || hi < lo) throw UsageError("radii '" + text + "' must satisfy 1 <= lo <= hi");
    return radius_range(lo, hi);
  }
  std::vector<int> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_int(item));
  if (out.empty()) throw UsageError("empty radius list");
  return out;
}

Model load_source(const std::string& source) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(source, ec)) return load_network_file(source);
  if (source.find('/') != std::string::npos || source.ends_with(".net")) {
    throw UsageError("cannot read '" + source + "'");
  }
  try {
    return generate(source);
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError("'" + source + "' is neither a readable file nor a model: " + e.what());
  }
}

const Network& require_finite(const Model& model, const std::string& what) {
  if (const auto* net = std::get_if<Network>(&model)) return *net;
  throw UsageError(what + " needs a finite network");
}

std::size_t vertex(const Network& net, const std::string& id) {
  const auto found = net.find(id);
  if (!found) throw UsageError("unknown vertex '" + id + "'");
  return *found;
}

std::vector<std::size_t> vertices(const Network& net, const std::vector<std::string>& ids) {
  std::vector<std::size_t> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(vertex(net, id));
  return out;
}

struct Exhausted {
  InfiniteNetworkSpec spec;
  Exhaustion exhaustion;
};

Exhausted exhaust(const Model& model, const std::vector<int>& radii) {
  if (const auto* net = std::get_if<Network>(&model)) {
    return {as_spec(*net), ball_exhaustion(*net, radii)};
  }
  const auto& spec = std::get<InfiniteNetworkSpec>(model);
  return {spec, ball_exhaustion(spec, radii)};
}

// ---------------------------------------------------------------------------
// Subcommands. Each one only adapts arguments and formats module results.

Result cmd_validate(const std::string& source) {
  Result r;
  r.columns = {"invariant", "passed", "witness"};
  try {
    const Model model = load_source(source);
    const Network& net = require_finite(model, "validate");
    const ValidationReport report = validate(net);
    for (const auto& check : report.checks) r.rows.push_back({check.name, check.passed, check.witness});
    r.extra["vertices"] = static_cast<long long>(net.size());
    r.extra["edges"] = static_cast<long long>(net.edges().size());
    r.extra["base"] = net.id(net.base());
    if (!report.ok()) r.exit = kExitInvalid;
  } catch (const ParseError& e) {
    r.rows.push_back({std::string("parse"), false, "line " + std::to_string(e.line()) + ": " + e.what()});
    r.exit = kExitInvalid;
  } catch (const ValidationError& e) {
    r.rows.push_back({e.invariant(), false, e.witness()});
    r.exit = kExitInvalid;
  }
  r.extra["valid"] = r.exit == kExitOk;
  return r;
}

Result cmd_resistance(const std::string& source, const std::vector<std::string>& raw_pairs, bool report,
                      std::size_t trials, std::uint64_t seed) {
  const Model model = load_source(source);
  const Network& net = require_finite(model, "resistance (use 'limits' for infinite models)");
  const auto pairs = parse_pairs(raw_pairs);
  Result r;
  if (!report) {
    r.columns = {"x", "y", "resistance"};
    for (const auto& [x, y] : pairs) {
      r.rows.push_back({x, y, effective_resistance(net, vertex(net, x), vertex(net, y))});
    }
    return r;
  }
  r.columns = {"x", "y", "potential_drop", "dipole_energy", "min_dissipation", "reciprocal_min_energy",
               "best_constant", "sup_form", "consensus", "spread", "bound_violations"};
  for (const auto& [x, y] : pairs) {
    const ResistanceReport rep = resistance_report(net, vertex(net, x), vertex(net, y), trials, seed);
    r.rows.push_back({x, y, rep.potential_drop, rep.dipole_energy, rep.min_dissipation,
                      rep.reciprocal_min_energy, rep.best_constant, rep.sup_form, rep.consensus,
                      rep.spread, static_cast<long long>(rep.bound_violations)});
  }
  return r;
}

json limit_json(const LimitEstimate& est) {
  json samples = json::array();
  for (const auto& s : est.samples) {
    samples.push_back({{"level", s.level}, {"radius", s.radius}, {"value", number(s.value)}});
  }
  json out = {{"metric", est.metric},
              {"estimate", number(est.estimate)},
              {"converged", est.converged},
              {"monotone", est.monotone},
              {"samples", samples}};
  if (est.below_free) out["below_free"] = *est.below_free;
  if (est.level_invariant) out["level_invariant"] = *est.level_invariant;
  return out;
}

Result cmd_limits(const std::string& source, const std::string& x, const std::string& y,
                  const std::string& metric, const std::string& radii_text, double tolerance,
                  std::size_t window, bool samples) {
  const Model model = load_source(source);
  const Exhausted ex = exhaust(model, parse_radii(radii_text));
  const LimitOptions options{tolerance, window};

  LimitEstimate est;
  double estimate = 0.0;
  bool converged = false;
  Result r;
  if (metric == "free" || metric == "wired" || metric == "trace") {
    est = metric == "free"    ? free_resistance(ex.spec, x, y, ex.exhaustion, options)
          : metric == "wired" ? wired_resistance(ex.spec, x, y, ex.exhaustion, options)
                              : trace_resistance(ex.spec, x, y, ex.exhaustion, options);
    estimate = est.estimate;
    converged = est.converged;
    r.extra["limit"] = limit_json(est);
  } else if (metric == "harmonic") {
    const HarmonicEstimate h = harmonic_resistance(ex.spec, x, y, ex.exhaustion, options);
    est = h.harmonic;
    estimate = est.estimate;
    converged = est.converged;
    r.extra["limit"] = limit_json(h.harmonic);
    r.extra["free"] = limit_json(h.free);
    r.extra["wired"] = limit_json(h.wired);
    r.extra["energy_crosscheck"] = number(h.energy_crosscheck);
    r.extra["crosscheck_relative_error"] = number(h.crosscheck_relative_error);
    r.extra["nonnegative"] = h.nonnegative;
  } else {
    const BoundaryEstimate b = boundary_resistance(ex.spec, x, y, ex.exhaustion, options);
    est = b.reciprocal;
    estimate = b.estimate;
    converged = b.infinite || (b.reciprocal.converged && b.product.converged);
    r.extra["reciprocal"] = limit_json(b.reciprocal);
    r.extra["product"] = limit_json(b.product);
    r.extra["infinite"] = b.infinite;
    r.extra["divergent"] = b.divergent;
    r.extra["increment_decay"] = number(b.increment_decay);
    r.extra["relative_agreement"] = number(b.relative_agreement);
  }
  r.extra["estimate"] = number(estimate);
  r.extra["converged"] = converged;

  if (samples) {
    r.columns = {"metric", "x", "y", "level", "radius", "value"};
    for (const auto& s : est.samples) {
      r.rows.push_back({metric, x, y, static_cast<long long>(s.level), static_cast<long long>(s.radius), s.value});
    }
  } else {
    r.columns = {"metric", "x", "y", "estimate", "converged", "levels", "last_radius"};
    r.rows.push_back({metric, x, y, estimate, converged, static_cast<long long>(ex.exhaustion.levels()),
                      static_cast<long long>(ex.exhaustion.radii.back())});
  }
  if (!converged) r.exit = kExitNotConverged;
  return r;
}

Result cmd_reduce(const std::string& source, const std::vector<std::string>& keep_raw,
                  const std::string& transform) {
  if (keep_raw.empty() && transform.empty()) throw UsageError("reduce needs --keep or --transform");
  const Model model = load_source(source);
  const Network& net = require_finite(model, "reduce");
  Result r;
  Network reduced = net;
  std::vector<ReductionStep> steps;
  json details = json::object();
  if (!keep_raw.empty()) {
    const auto keep = vertices(net, parse_list(keep_raw));
    TraceResult trace = schur_trace(net, keep);
    reduced = std::move(trace.network);
    steps = std::move(trace.steps);
    details["condition_estimate"] = number(trace.condition_estimate);
    details["pruned"] = static_cast<long long>(trace.pruned);
  } else {
    const auto colon = transform.find(':');
    const std::string kind = transform.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : transform.substr(colon + 1);
    if (kind == "parallel") {
      reduced = parallel_merge(net);
    } else if (kind == "series") {
      reduced = series_reduce(net, vertex(net, arg));
      steps.push_back({"series", arg, 2});
    } else if (kind == "wye-delta") {
      reduced = wye_delta(net, vertex(net, arg));
      steps.push_back({"wye-delta", arg, 3});
    } else if (kind == "pair") {
      const auto ends = split(arg, ',');
      if (ends.size() != 2) throw UsageError("pair reduction needs --transform pair:x,y");
      const double resistance = reduce_to_pair(net, vertex(net, ends[0]), vertex(net, ends[1]), &steps);
      const std::size_t keep[] = {vertex(net, ends[0]), vertex(net, ends[1])};
      reduced = schur_trace(net, keep).network;
      details["resistance"] = number(resistance);
    } else {
      throw UsageError("unknown transform '" + transform + "' (parallel, series:z, wye-delta:t, pair:x,y)");
    }
  }
  std::string text;
  for (const auto& s : steps) {
    text += "# eliminated " + s.vertex + " (" + s.kind + ", degree " + std::to_string(s.degree) + ")\n";
  }
  text += serialize(reduced);
  r.text = text;
  json log = json::array();
  for (const auto& s : steps) log.push_back({{"vertex", s.vertex}, {"kind", s.kind}, {"degree", s.degree}});
  r.extra["steps"] = log;
  r.extra["network"] = serialize(reduced);
  r.extra.update(details);
  return r;
}

struct WalkArgs {
  std::string mode;
  std::vector<std::string> operands;
  std::vector<std::string> targets;
  std::vector<std::string> avoid;
  std::uint64_t seed = 1;
  std::size_t episodes = 100'000;
  std::size_t max_steps = 1'000'000;
  std::size_t steps = 1'000'000;
  std::string radii = "1..15";
};

void expect_operands(const WalkArgs& a, std::size_t n, const char* usage) {
  if (a.operands.size() != n) throw UsageError(std::string("walk ") + a.mode + " expects " + usage);
}

Result cmd_walk(const std::string& source, const WalkArgs& a, const Globals& g) {
  const Model model = load_source(source);
  WalkConfig cfg;
  cfg.seed = a.seed;
  cfg.episodes = a.episodes;
  cfg.max_steps = a.max_steps;
  cfg.threads = g.threads;
  Result r;
  r.extra["rng"] = std::string(kWalkRng);
  auto warn_censored = [&r](const HittingEstimate& est) {
    r.extra["censored"] = static_cast<long long>(est.censored);
    r.extra["censored_warning"] = est.censored_warning;
  };

  if (a.mode == "escape") {
    expect_operands(a, 2, "<a> <b>");
    const Network& net = require_finite(model, "walk escape");
    const std::size_t x = vertex(net, a.operands[0]);
    const std::size_t y = vertex(net, a.operands[1]);
    const HittingEstimate est = simulate_escape(net, x, y, cfg);
    r.columns = {"a", "b", "estimate", "standard_error", "episodes", "hits", "censored", "exact"};
    r.rows.push_back({a.operands[0], a.operands[1], est.estimate, est.standard_error,
                      static_cast<long long>(est.episodes), static_cast<long long>(est.hits),
                      static_cast<long long>(est.censored), escape_probability(net, x, y)});
    warn_censored(est);
  } else if (a.mode == "hitting") {
    expect_operands(a, 1, "<start> --targets ... [--avoid ...]");
    const Network& net = require_finite(model, "walk hitting");
    const auto targets = vertices(net, parse_list(a.targets));
    const auto avoid = vertices(net, parse_list(a.avoid));
    if (targets.empty()) throw UsageError("walk hitting needs --targets");
    const std::size_t start = vertex(net, a.operands[0]);
    const HittingEstimate est = simulate_hitting(net, start, targets, avoid, cfg);
    const VertexFunction exact = exact_hitting(net, targets, avoid);
    r.columns = {"start", "estimate", "standard_error", "episodes", "censored", "exact"};
    r.rows.push_back({a.operands[0], est.estimate, est.standard_error, static_cast<long long>(est.episodes),
                      static_cast<long long>(est.censored), exact(static_cast<Eigen::Index>(start))});
    warn_censored(est);
  } else if (a.mode == "path") {
    expect_operands(a, 2, "<x> <y>");
    const Network& net = require_finite(model, "walk path");
    const PathIntegralResult p =
        path_integral_resistance(net, vertex(net, a.operands[0]), vertex(net, a.operands[1]), cfg);
    r.columns = {"x", "y", "exact", "effective", "escape", "monte_carlo", "standard_error", "z_score"};
    r.rows.push_back({a.operands[0], a.operands[1], p.exact, p.effective, p.escape, p.monte_carlo,
                      p.simulated.standard_error, p.z_score});
    warn_censored(p.simulated);
  } else if (a.mode == "visits") {
    expect_operands(a, 2, "<a> <b>");
    const Network& net = require_finite(model, "walk visits");
    const std::size_t x = vertex(net, a.operands[0]);
    const std::size_t y = vertex(net, a.operands[1]);
    const VisitEstimate v = simulate_visits(net, x, y, cfg);
    r.columns = {"a", "b", "mean", "standard_error", "episodes", "censored", "expected"};
    r.rows.push_back({a.operands[0], a.operands[1], v.mean, v.standard_error,
                      static_cast<long long>(v.episodes), static_cast<long long>(v.censored),
                      net.total_conductance(x) * effective_resistance(net, x, y)});
  } else if (a.mode == "transitions") {
    expect_operands(a, 1, "<start>");
    const Network& net = require_finite(model, "walk transitions");
    const TransitionCounts counts = simulate_transitions(net, vertex(net, a.operands[0]), a.steps, a.seed);
    r.columns = {"u", "v", "forward", "backward"};
    const auto edges = net.edges();
    for (std::size_t k = 0; k < edges.size(); ++k) {
      r.rows.push_back({net.id(edges[k].u), net.id(edges[k].v), static_cast<long long>(counts.forward[k]),
                        static_cast<long long>(counts.backward[k])});
    }
  } else if (a.mode == "dipole") {
    expect_operands(a, 1, "<x>");
    const Network& net = require_finite(model, "walk dipole");
    const DipoleProbabilityReport rep = dipole_probability_check(net, vertex(net, a.operands[0]));
    r.columns = {"vertex", "kernel", "probability", "resistance_times_probability"};
    for (std::size_t i = 0; i < net.size(); ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      r.rows.push_back({net.id(i), rep.kernel(k), rep.probability(k), rep.resistance * rep.probability(k)});
    }
    r.extra["resistance"] = number(rep.resistance);
    r.extra["max_error"] = number(rep.max_error);
    r.extra["passed"] = rep.passed();
  } else if (a.mode == "wired") {
    expect_operands(a, 1, "<x>");
    const Exhausted ex = exhaust(model, parse_radii(a.radii));
    const WiredProbabilityReport rep = wired_fx_probabilistic(ex.spec, a.operands[0], ex.exhaustion);
    r.columns = {"radius", "resistance", "max_error", "prefactor"};
    for (const auto& level : rep.levels) {
      r.rows.push_back({static_cast<long long>(level.radius), level.resistance, level.max_error, level.prefactor});
    }
    r.extra["max_error"] = number(rep.max_error);
    r.extra["prefactor_decays"] = rep.prefactor_decays;
  } else if (a.mode == "free-kernel") {
    if (!g.experimental) throw UsageError("walk free-kernel is experimental; pass --experimental");
    expect_operands(a, 1, "<x>");
    const Exhausted ex = exhaust(model, parse_radii(a.radii));
    const VertexFunction v = experimental_free_kernel(ex.spec, a.operands[0], ex.exhaustion);
    const auto level = ex.exhaustion.level(ex.exhaustion.levels() - 1);
    r.columns = {"vertex", "value"};
    for (std::size_t i = 0; i < level.size() && static_cast<Eigen::Index>(i) < v.size(); ++i) {
      r.rows.push_back({level[i], v(static_cast<Eigen::Index>(i))});
    }
    r.extra["experimental"] = true;
  } else {
    throw UsageError("unknown walk mode '" + a.mode + "'");
  }
  return r;
}

Result cmd_embed(const std::string& source, const std::string& metric, const std::vector<std::string>& ids_raw,
                 std::size_t sample, const std::string& radii, std::size_t pivot, const std::string& out_path,
                 int precision) {
  const Model model = load_source(source);
  std::vector<std::string> ids = parse_list(ids_raw);
  Eigen::MatrixXd squared;
  Result r;
  if (const auto* net = std::get_if<Network>(&model)) {
    if (ids.empty()) {
      ids = net->ids();
      if (ids.size() > sample && !ids_raw.empty()) ids.resize(sample);
    }
    const auto index = vertices(*net, ids);
    squared = resistance_matrix(*net, index);
    const EmbeddingResult probe = vn_embed(squared.cwiseSqrt(), pivot);
    r.extra["energy_defect"] = number(embedding_energy_defect(probe, *net, index));
  } else {
    const Exhausted ex = exhaust(model, parse_radii(radii));
    if (ids.empty()) {
      const auto first = ex.exhaustion.level(0);
      if (first.size() < sample) {
        throw UsageError("the first ball has only " + std::to_string(first.size()) +
                         " vertices; raise the lowest radius or lower --sample");
      }
      ids.assign(first.begin(), first.begin() + static_cast<std::ptrdiff_t>(sample));
    }
    const Truncation kind = metric == "wired" ? Truncation::Wired : Truncation::Free;
    const LimitMatrix m = limit_resistance_matrix(ex.spec, ids, ex.exhaustion, kind);
    squared = m.matrix;
    r.extra["max_relative_change"] = number(m.max_relative_change);
  }
  if (pivot >= ids.size()) throw UsageError("--pivot is out of range");
  const EmbeddingResult emb = vn_embed(squared.cwiseSqrt(), pivot);
  r.extra["rank"] = static_cast<long long>(emb.rank);
  r.extra["defect"] = number(emb.defect);
  r.extra["nsd_max_eigenvalue"] = number(emb.nsd_max_eigenvalue);

  r.columns = {"vertex"};
  for (std::size_t k = 0; k < emb.rank; ++k) r.columns.push_back("coord_" + std::to_string(k + 1));
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::vector<Cell> row{ids[i]};
    for (std::size_t k = 0; k < emb.rank; ++k) {
      row.emplace_back(emb.coordinates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
    }
    r.rows.push_back(std::move(row));
  }
  if (!out_path.empty()) {
    std::ofstream file(out_path);
    if (!file) throw UsageError("cannot write '" + out_path + "'");
    write_embedding_csv(file, ids, emb, precision);
    r.extra["written"] = out_path;
  }
  return r;
}

Result cmd_compare(const std::string& source, const std::vector<std::string>& raw_pairs,
                   const std::string& radii) {
  const Model model = load_source(source);
  const auto pairs = parse_pairs(raw_pairs);
  Result r;
  if (const auto* net = std::get_if<Network>(&model)) {
    std::vector<std::pair<std::size_t, std::size_t>> index;
    for (const auto& [x, y] : pairs) index.emplace_back(vertex(*net, x), vertex(*net, y));
    const GeodesicBoundReport rep = geodesic_bound_check(*net, index);
    r.columns = {"x", "y", "resistance", "geodesic", "gap"};
    for (const auto& e : rep.entries) {
      r.rows.push_back({net->id(e.x), net->id(e.y), e.resistance, e.geodesic, e.geodesic - e.resistance});
    }
    r.extra["tree"] = rep.tree;
    r.extra["passed"] = rep.passed();
    return r;
  }
  const auto& spec = std::get<InfiniteNetworkSpec>(model);
  const std::vector<int> schedule = parse_radii(radii);
  const Exhaustion ex = ball_exhaustion(spec, schedule);
  r.columns = {"x", "y", "free_resistance", "converged", "geodesic", "geodesic_lower_bound", "certified"};
  bool all_good = true;
  for (const auto& [x, y] : pairs) {
    const LimitEstimate f = free_resistance(spec, x, y, ex);
    const GeodesicResult g = geodesic_distance(spec, x, y, std::max(40, schedule.back()));
    r.rows.push_back({x, y, f.estimate, f.converged, g.distance, g.lower_bound, g.certified});
    all_good = all_good && f.converged && g.certified;
  }
  if (!all_good) r.exit = kExitNotConverged;
  return r;
}

// ---------------------------------------------------------------------------

void emit(const Result& r, const Globals& g, const json& manifest, std::ostream& out) {
  if (g.json_mode) {
    json doc = json::object();
    doc["columns"] = r.columns;
    json rows = json::array();
    for (const auto& row : r.rows) {
      json obj = json::object();
      for (std::size_t k = 0; k < row.size() && k < r.columns.size(); ++k) obj[r.columns[k]] = cell_json(row[k]);
      rows.push_back(std::move(obj));
    }
    doc["rows"] = rows;
    for (const auto& [key, value] : r.extra.items()) doc[key] = value;
    doc["exit_code"] = r.exit;
    doc["manifest"] = manifest;
    out << doc.dump(2) << "\n";
    return;
  }
  if (r.text) {
    out << *r.text;
    return;
  }
  for (std::size_t k = 0; k < r.columns.size(); ++k) out << (k ? "," : "") << r.columns[k];
  out << "\n";
  for (const auto& row : r.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << format_cell(row[k], g.precision());
    out << "\n";
  }
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buffer;
}

json parameters_of(const CLI::App* app) {
  json params = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help") continue;
    const auto& results = opt->results();
    if (results.empty()) {
      params[name] = opt->get_default_str().empty() ? json(nullptr) : json(opt->get_default_str());
    } else if (results.size() == 1) {
      params[name] = results.front();
    } else {
      params[name] = results;
    }
  }
  return params;
}

int run_impl(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, int depth) {
  CLI::App app{"Effective resistance on finite and infinite networks", "resistnet"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.set_version_flag("--version", kVersion);

  Globals g;
  app.add_flag("--json", g.json_mode, "Print one JSON object instead of CSV");
  app.add_flag("--full-precision", g.full_precision, "Print floats with 17 significant digits");
  app.add_flag("--experimental", g.experimental, "Enable estimators without correctness claims");
  app.add_option("--threads", g.threads, "Worker threads for simulations (0: all cores)")
      ->envname("RESISTNET_THREADS");
  app.add_option("--manifest", g.manifest_path, "Write the run manifest to this file");

  std::string source;
  std::vector<std::string> pairs;

  auto* validate_cmd = app.add_subcommand("validate", "Check a network against its invariants");
  validate_cmd->add_option("source", source, "Edge-list file or model spec")->required();

  bool report = false;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  auto* resistance_cmd = app.add_subcommand("resistance", "Effective resistance between vertex pairs");
  resistance_cmd->add_option("source", source, "Edge-list file or finite model spec")->required();
  resistance_cmd->add_option("--pairs", pairs, "Vertex pairs x,y (repeatable)")->required();
  resistance_cmd->add_flag("--report", report, "Evaluate all six formulations");
  resistance_cmd->add_option("--trials", trials, "Random potentials for the bound check");
  resistance_cmd->add_option("--seed", seed, "Seed for the bound check");

  std::string x, y, metric = "free", radii = "1..30";
  double tolerance = 1e-7;
  std::size_t window = 3;
  bool samples = false;
  auto* limits_cmd = app.add_subcommand("limits", "Exhaustion limits of free, wired, trace, harmonic and boundary resistance");
  limits_cmd->add_option("source", source, "Model spec or edge-list file")->required();
  limits_cmd->add_option("x", x)->required();
  limits_cmd->add_option("y", y)->required();
  limits_cmd->add_option("--metric", metric)
      ->check(CLI::IsMember({"free", "wired", "trace", "harmonic", "boundary"}));
  limits_cmd->add_option("--radii", radii, "lo..hi or a comma-separated list");
  limits_cmd->add_option("--tol", tolerance, "Relative tolerance between successive levels");
  limits_cmd->add_option("--window", window, "Consecutive differences that must meet --tol");
  limits_cmd->add_flag("--samples", samples, "Print every level instead of the summary");

  std::vector<std::string> keep;
  std::string transform;
  auto* reduce_cmd = app.add_subcommand("reduce", "Schur-complement trace or a single network transform");
  reduce_cmd->add_option("source", source, "Edge-list file or finite model spec")->required();
  auto* keep_opt = reduce_cmd->add_option("--keep", keep, "Vertices to keep (comma-separated)");
  auto* transform_opt =
      reduce_cmd->add_option("--transform", transform, "parallel | series:z | wye-delta:t | pair:x,y");
  keep_opt->excludes(transform_opt);

  WalkArgs walk;
  auto* walk_cmd = app.add_subcommand("walk", "Random-walk simulation and exact absorbing solves");
  walk_cmd->add_option("source", source, "Edge-list file or model spec")->required();
  walk_cmd->add_option("mode", walk.mode, "escape | hitting | path | visits | transitions | dipole | wired | free-kernel")
      ->required();
  walk_cmd->add_option("operands", walk.operands, "Vertices the mode acts on");
  walk_cmd->add_option("--targets", walk.targets, "Target vertices for hitting");
  walk_cmd->add_option("--avoid", walk.avoid, "Absorbing vertices to avoid for hitting");
  walk_cmd->add_option("--seed", walk.seed, "Random seed");
  walk_cmd->add_option("--episodes", walk.episodes, "Monte-Carlo episodes");
  walk_cmd->add_option("--max-steps", walk.max_steps, "Step cap per episode");
  walk_cmd->add_option("--steps", walk.steps, "Length of the transitions run");
  walk_cmd->add_option("--radii", walk.radii, "Radii for wired and free-kernel modes");

  std::vector<std::string> ids;
  std::size_t sample = 10;
  std::size_t pivot = 0;
  std::string out_path;
  std::string embed_radii = "5..25";
  std::string embed_metric = "free";
  auto* embed_cmd = app.add_subcommand("embed", "Isometric Hilbert-space embedding of resistance^(1/2)");
  embed_cmd->add_option("source", source, "Edge-list file or model spec")->required();
  embed_cmd->add_option("--metric", embed_metric)->check(CLI::IsMember({"resistance", "free", "wired"}));
  embed_cmd->add_option("--vertices", ids, "Vertices to embed (comma-separated)");
  embed_cmd->add_option("--sample", sample, "Number of vertices taken from the first ball");
  embed_cmd->add_option("--radii", embed_radii, "Radii for infinite models");
  embed_cmd->add_option("--pivot", pivot, "Index of the Gram base point within the vertex list");
  embed_cmd->add_option("--out", out_path, "Also write the coordinates CSV to this file");

  std::string compare_radii = "1..30";
  auto* compare_cmd = app.add_subcommand("compare", "Resistance against geodesic distance");
  compare_cmd->add_option("source", source, "Edge-list file or model spec")->required();
  compare_cmd->add_option("--pairs", pairs, "Vertex pairs x,y (repeatable)")->required();
  compare_cmd->add_option("--radii", compare_radii, "Radii for infinite models");

  std::string manifest_in;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay_cmd->add_option("manifest", manifest_in, "Manifest JSON file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  if (sub == replay_cmd) {
    if (depth > 0) {
      err << "error: a manifest cannot replay another replay\n";
      return kExitUsage;
    }
    std::ifstream in(manifest_in);
    if (!in) {
      err << "error: cannot read '" << manifest_in << "'\n";
      return kExitUsage;
    }
    json manifest;
    try {
      manifest = json::parse(in);
      return run_impl(manifest.at("argv").get<std::vector<std::string>>(), out, err, depth + 1);
    } catch (const json::exception& e) {
      err << "error: malformed manifest: " << e.what() << "\n";
      return kExitUsage;
    }
  }

  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = utc_now();
  Result result;
  try {
    if (sub == validate_cmd) {
      result = cmd_validate(source);
    } else if (sub == resistance_cmd) {
      result = cmd_resistance(source, pairs, report, trials, seed);
    } else if (sub == limits_cmd) {
      result = cmd_limits(source, x, y, metric, radii, tolerance, window, samples);
    } else if (sub == reduce_cmd) {
      result = cmd_reduce(source, keep, transform);
    } else if (sub == walk_cmd) {
      result = cmd_walk(source, walk, g);
    } else if (sub == embed_cmd) {
      result = cmd_embed(source, embed_metric, ids, sample, embed_radii, pivot, out_path, g.precision());
    } else if (sub == compare_cmd) {
      result = cmd_compare(source, pairs, compare_radii);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: line " << e.line() << ": " << e.what() << "\n";
    return kExitInvalid;
  } catch (const ValidationError& e) {
    err << "error: invariant '" << e.invariant() << "' violated";
    if (!e.witness().empty()) err << " at " << e.witness();
    err << "\n";
    return kExitInvalid;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kExitNotConverged;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  json manifest = {{"artifact", "resistnet"},
                   {"version", kVersion},
                   {"command", sub->get_name()},
                   {"argv", args},
                   {"parameters", parameters_of(sub)},
                   {"global", {{"json", g.json_mode},
                               {"full_precision", g.full_precision},
                               {"experimental", g.experimental},
                               {"threads", resolve_threads(g.threads)}}},
                   {"seed", sub == walk_cmd ? json(walk.seed) : sub == resistance_cmd ? json(seed) : json(nullptr)},
                   {"rng", sub == walk_cmd ? json(std::string(kWalkRng)) : json(nullptr)},
                   {"started", started_at},
                   {"elapsed_seconds", elapsed}};

  emit(result, g, manifest, out);
  if (result.extra.contains("censored_warning") && result.extra["censored_warning"].get<bool>()) {
    err << "warning: " << result.extra["censored"].get<long long>()
        << " episodes reached --max-steps and were excluded\n";
  }
  if (!g.manifest_path.empty()) {
    std::ofstream file(g.manifest_path);
    if (!file) {
      err << "error: cannot write manifest '" << g.manifest_path << "'\n";
      return kExitUsage;
    }
    file << manifest.dump(2) << "\n";
  } else if (!g.json_mode) {
    err << "manifest: " << manifest.dump() << "\n";
  }
  return result.exit;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return run_impl(args, out, err, 0);
}

}  // namespace resistnet::cli
