#include "resistnet/limits.hpp"

#include <algorithm>
#include <cmath>

#include "resistnet/errors.hpp"
#include "resistnet/resistance.hpp"

namespace resistnet {

namespace {

using Index = Eigen::Index;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMonotoneSlack = 1e-10;

Index as_index(std::size_t i) { return static_cast<Index>(i); }

double difference(double a, double b) {
  if (a == b) return 0.0;
  if (std::isinf(a) || std::isinf(b)) return kInf;
  return std::abs(a - b);
}

bool covers_everything(const InfiniteNetworkSpec& spec, const Exhaustion& ex) {
  return spec.finite() && ex.levels() > 0 && ex.sizes.back() == *spec.vertex_count;
}

void require_in_first_level(const Exhaustion& ex, const std::string& x) {
  if (ex.levels() == 0) throw Error("exhaustion has no levels");
  const auto first = ex.level(0);
  if (std::find(first.begin(), first.end(), x) == first.end()) {
    throw Error("vertex '" + x + "' is not in the first exhaustion level");
  }
}

struct PairSequence {
  std::vector<double> free;
  std::vector<double> wired;
};

double pair_resistance(const Network& net, const std::string& x, const std::string& y) {
  return effective_resistance(net, net.index(x), net.index(y));
}

PairSequence pair_sequence(const InfiniteNetworkSpec& spec, const std::string& x,
                           const std::string& y, const Exhaustion& ex, bool want_free,
                           bool want_wired) {
  require_in_first_level(ex, x);
  require_in_first_level(ex, y);
  PairSequence seq;
  for (std::size_t k = 0; k < ex.levels(); ++k) {
    if (want_free) {
      seq.free.push_back(pair_resistance(truncation(spec, ex, k, Truncation::Free), x, y));
    }
    if (want_wired) {
      seq.wired.push_back(pair_resistance(truncation(spec, ex, k, Truncation::Wired), x, y));
    }
  }
  return seq;
}

LimitEstimate make_estimate(const std::string& metric, const Exhaustion& ex,
                            const std::vector<double>& values, const InfiniteNetworkSpec& spec,
                            const LimitOptions& options, double absolute = 0.0) {
  LimitEstimate est;
  est.metric = metric;
  for (std::size_t k = 0; k < values.size(); ++k) {
    est.samples.push_back({k, ex.radii.at(k), values[k]});
  }
  est.converged = sequence_converged(values, options, absolute) ||
                  (covers_everything(spec, ex) && !values.empty());
  est.estimate = values.empty() ? std::numeric_limits<double>::quiet_NaN() : values.back();
  return est;
}

bool nonincreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] > v[k - 1] * (1.0 + kMonotoneSlack)) return false;
  }
  return true;
}

bool nondecreasing(const std::vector<double>& v) {
  for (std::size_t k = 1; k < v.size(); ++k) {
    if (v[k] < v[k - 1] * (1.0 - kMonotoneSlack)) return false;
  }
  return true;
}

}  // namespace

bool sequence_converged(std::span<const double> values, const LimitOptions& options,
                        double absolute) {
  if (options.window == 0) return !values.empty();
  if (values.size() < options.window + 1) return false;
  for (std::size_t k = values.size() - options.window; k < values.size(); ++k) {
    const double a = values[k - 1];
    const double b = values[k];
    const double gap = difference(a, b);
    if (gap == 0.0) continue;
    if (!(gap <= options.tolerance * std::max(std::abs(a), std::abs(b)) + absolute)) {
      return false;
    }
  }
  return true;
}

Network truncation(const InfiniteNetworkSpec& spec, const Exhaustion& exhaustion, std::size_t k,
                   Truncation kind) {
  const auto level = exhaustion.level(k);
  return kind == Truncation::Free ? full_subnetwork(spec, level) : wired_subnetwork(spec, level);
}

LimitEstimate free_resistance(const InfiniteNetworkSpec& spec, const std::string& x,
                              const std::string& y, const Exhaustion& exhaustion,
                              const LimitOptions& options) {
  const PairSequence seq = pair_sequence(spec, x, y, exhaustion, true, false);
  LimitEstimate est = make_estimate("free", exhaustion, seq.free, spec, options);
  est.monotone = nonincreasing(seq.free);
  return est;
}

LimitEstimate wired_resistance(const InfiniteNetworkSpec& spec, const std::string& x,
                               const std::string& y, const Exhaustion& exhaustion,
                               const LimitOptions& options) {
  const PairSequence seq = pair_sequence(spec, x, y, exhaustion, true, true);
  LimitEstimate est = make_estimate("wired", exhaustion, seq.wired, spec, options);
  est.monotone = nondecreasing(seq.wired);
  bool below = true;
  for (std::size_t k = 0; k < seq.wired.size(); ++k) {
    if (seq.wired[k] > seq.free[k] * (1.0 + kMonotoneSlack)) below = false;
  }
  est.below_free = below;
  return est;
}

HarmonicEstimate harmonic_resistance(const InfiniteNetworkSpec& spec, const std::string& x,
                                     const std::string& y, const Exhaustion& exhaustion,
                                     const LimitOptions& options) {
  const PairSequence seq = pair_sequence(spec, x, y, exhaustion, true, true);
  HarmonicEstimate out;
  out.free = make_estimate("free", exhaustion, seq.free, spec, options);
  out.free.monotone = nonincreasing(seq.free);
  out.wired = make_estimate("wired", exhaustion, seq.wired, spec, options);
  out.wired.monotone = nondecreasing(seq.wired);

  std::vector<double> harm(seq.free.size());
  for (std::size_t k = 0; k < harm.size(); ++k) {
    harm[k] = seq.free[k] - seq.wired[k];
    if (harm[k] < -kMonotoneSlack * seq.free[k]) out.nonnegative = false;
  }
  // A harmonic part that vanishes is measured against the free resistance.
  const double floor = options.tolerance * (seq.free.empty() ? 0.0 : seq.free.back());
  out.harmonic = make_estimate("harmonic", exhaustion, harm, spec, options, floor);
  out.harmonic.converged = out.harmonic.converged && out.free.converged && out.wired.converged;

  if (x != y && exhaustion.levels() > 0) {
    const std::size_t last = exhaustion.levels() - 1;
    const Network free_net = truncation(spec, exhaustion, last, Truncation::Free);
    const Network wired_net = truncation(spec, exhaustion, last, Truncation::Wired);
    const Potential vf = solve_dipole(free_net, free_net.index(x), free_net.index(y));
    const Potential vw = solve_dipole(wired_net, wired_net.index(x), wired_net.index(y));
    // Wired truncations list the ball first, then `inf`.
    const VertexFunction h = vf.values - vw.values.head(vf.values.size());
    out.energy_crosscheck = energy(free_net, h);
    out.crosscheck_relative_error =
        std::abs(out.energy_crosscheck - harm.back()) / seq.free.back();
  }
  return out;
}

namespace {

// Fits increment(r) ~ r^-q between the last level and the level closest to
// half its radius, where increment is the per-radius change to the previous
// level. Sum of increments diverges for q <= 1.
double increment_decay(const Exhaustion& ex, const std::vector<double>& values) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t n = values.size();
  if (n < 4) return nan;
  auto step = [&](std::size_t k) {
    const int dr = ex.radii.at(k) - ex.radii.at(k - 1);
    if (dr <= 0 || std::isinf(values[k]) || std::isinf(values[k - 1])) return nan;
    return (values[k] - values[k - 1]) / dr;
  };
  const std::size_t last = n - 1;
  const int half = ex.radii.at(last) / 2;
  std::size_t mid = 1;
  for (std::size_t k = 1; k < last; ++k) {
    if (std::abs(ex.radii.at(k) - half) < std::abs(ex.radii.at(mid) - half)) mid = k;
  }
  const double r_mid = ex.radii.at(mid);
  const double r_last = ex.radii.at(last);
  if (r_mid <= 0 || r_last < 1.5 * r_mid) return nan;
  const double a = step(mid);
  const double b = step(last);
  if (!(a > 0.0) || !(b > 0.0)) return std::numeric_limits<double>::infinity();
  return -std::log(b / a) / std::log(r_last / r_mid);
}

}  // namespace

BoundaryEstimate boundary_resistance(const InfiniteNetworkSpec& spec, const std::string& x,
                                     const std::string& y, const Exhaustion& exhaustion,
                                     const LimitOptions& options) {
  const PairSequence seq = pair_sequence(spec, x, y, exhaustion, true, true);
  std::vector<double> reciprocal(seq.free.size());
  std::vector<double> product(seq.free.size());
  for (std::size_t k = 0; k < seq.free.size(); ++k) {
    const double f = seq.free[k];
    const double w = seq.wired[k];
    if (f - w <= 1e-9 * f) {
      reciprocal[k] = kInf;
      product[k] = kInf;
    } else {
      reciprocal[k] = 1.0 / (1.0 / w - 1.0 / f);
      product[k] = w * f / (f - w);
    }
  }
  BoundaryEstimate out;
  out.reciprocal = make_estimate("boundary", exhaustion, reciprocal, spec, options);
  out.product = make_estimate("boundary-product", exhaustion, product, spec, options);
  out.infinite = !reciprocal.empty() && std::isinf(reciprocal.back());
  out.estimate = out.reciprocal.estimate;
  out.increment_decay = increment_decay(exhaustion, reciprocal);
  if (!out.infinite && !out.reciprocal.converged && out.increment_decay < 1.5) {
    out.divergent = true;
    out.infinite = true;
    out.estimate = kInf;
    out.reciprocal.estimate = kInf;
    out.product.estimate = kInf;
  }
  if (!reciprocal.empty() && !out.infinite) {
    out.relative_agreement =
        std::abs(reciprocal.back() - product.back()) / std::abs(reciprocal.back());
  }
  return out;
}

RoydenSplit royden_split(const InfiniteNetworkSpec& spec, const std::string& x,
                         const Exhaustion& exhaustion) {
  require_in_first_level(exhaustion, x);
  const std::size_t last = exhaustion.levels() - 1;
  RoydenSplit out;
  out.free_truncation = truncation(spec, exhaustion, last, Truncation::Free);
  out.wired_truncation = truncation(spec, exhaustion, last, Truncation::Wired);
  const Network& fnet = out.free_truncation;
  const Network& wnet = out.wired_truncation;
  const std::size_t n = fnet.size();

  out.v = energy_kernel_element(fnet, fnet.index(x)).values;
  const VertexFunction f_full = energy_kernel_element(wnet, wnet.index(x)).values;
  out.f = f_full.head(as_index(n));
  out.h = out.v - out.f;

  out.energy_v = energy(fnet, out.v);
  out.energy_f = energy(fnet, out.f);
  out.wired_energy_f = energy(wnet, f_full);
  out.energy_h = energy(fnet, out.h);
  out.orthogonality_defect =
      out.energy_v > 0.0 ? std::abs(out.energy_f + out.energy_h - out.energy_v) / out.energy_v
                         : 0.0;

  const int radius = exhaustion.radii.at(last);
  const VertexFunction lap = apply_laplacian(fnet, out.h);
  for (std::size_t i = 0; i < n; ++i) {
    if (exhaustion.distance.at(i) > radius - 2) continue;
    out.deep_interior.push_back(i);
    out.harmonic_residual =
        std::max(out.harmonic_residual, std::abs(lap(as_index(i))) / fnet.total_conductance(i));
  }
  return out;
}

LimitMatrix limit_resistance_matrix(const InfiniteNetworkSpec& spec,
                                    std::span<const std::string> vertices,
                                    const Exhaustion& exhaustion, Truncation kind) {
  for (const auto& v : vertices) require_in_first_level(exhaustion, v);
  auto at_level = [&](std::size_t k) {
    const Network net = truncation(spec, exhaustion, k, kind);
    std::vector<std::size_t> idx;
    idx.reserve(vertices.size());
    for (const auto& v : vertices) idx.push_back(net.index(v));
    return resistance_matrix(net, idx);
  };
  LimitMatrix out;
  const std::size_t last = exhaustion.levels() - 1;
  out.matrix = at_level(last);
  out.previous = last > 0 ? at_level(last - 1) : out.matrix;
  for (Index i = 0; i < out.matrix.rows(); ++i) {
    for (Index j = 0; j < out.matrix.cols(); ++j) {
      const double a = out.matrix(i, j);
      const double b = out.previous(i, j);
      const double scale = std::max(std::abs(a), std::abs(b));
      if (scale > 0.0) {
        out.max_relative_change = std::max(out.max_relative_change, std::abs(a - b) / scale);
      }
    }
  }
  return out;
}

}  // namespace resistnet
