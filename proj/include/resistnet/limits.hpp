#pragma once

// Free, wired, harmonic and boundary resistance on infinite networks as
// limits over an exhaustion, and the approximate Royden split of energy
// kernel elements on a truncation.

#include <Eigen/Dense>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "resistnet/forms.hpp"
#include "resistnet/network.hpp"

namespace resistnet {

struct LimitOptions {
  double tolerance = 1e-7;   // relative difference between successive levels
  std::size_t window = 3;    // consecutive differences that must pass
};

struct LimitSample {
  std::size_t level = 0;
  int radius = 0;
  double value = 0.0;
};

struct LimitEstimate {
  std::string metric;
  std::vector<LimitSample> samples;
  bool converged = false;
  double estimate = std::numeric_limits<double>::quiet_NaN();
  /// The sequence moves in the direction the metric requires
  /// (free: nonincreasing, wired: nondecreasing; vacuous otherwise).
  bool monotone = true;
  /// Wired only: value <= free value at every level.
  std::optional<bool> below_free;
  /// Trace only: successive values agree to 1e-8 relative.
  std::optional<bool> level_invariant;

  bool infinite() const { return estimate == std::numeric_limits<double>::infinity(); }
};

enum class Truncation { Free, Wired };

LimitEstimate free_resistance(const InfiniteNetworkSpec& spec, const std::string& x,
                              const std::string& y, const Exhaustion& exhaustion,
                              const LimitOptions& options = {});

LimitEstimate wired_resistance(const InfiniteNetworkSpec& spec, const std::string& x,
                               const std::string& y, const Exhaustion& exhaustion,
                               const LimitOptions& options = {});

struct HarmonicEstimate {
  LimitEstimate free;
  LimitEstimate wired;
  LimitEstimate harmonic;   // free - wired, level by level
  double energy_crosscheck = 0.0;  // E(h_x - h_y) on the largest truncation
  /// |E(h_x - h_y) - R^harm| / R^F on the largest truncation.
  double crosscheck_relative_error = 0.0;
  bool nonnegative = true;
};

HarmonicEstimate harmonic_resistance(const InfiniteNetworkSpec& spec, const std::string& x,
                                     const std::string& y, const Exhaustion& exhaustion,
                                     const LimitOptions& options = {});

struct BoundaryEstimate {
  LimitEstimate reciprocal;  // 1 / (1/R^W - 1/R^F)
  LimitEstimate product;     // R^W R^F / R^harm
  /// R^harm below 1e-9 R^F on the largest truncation, or `divergent`.
  bool infinite = false;
  /// The sequence grows without settling: its per-radius increments decay
  /// no faster than r^-1.5 (see `increment_decay`), as on recurrent networks.
  bool divergent = false;
  /// Exponent q in increment ~ r^-q, from the last level and the level near
  /// half its radius. NaN when there are too few levels to tell.
  double increment_decay = std::numeric_limits<double>::quiet_NaN();
  double relative_agreement = 0.0;
  double estimate = std::numeric_limits<double>::quiet_NaN();
};

BoundaryEstimate boundary_resistance(const InfiniteNetworkSpec& spec, const std::string& x,
                                     const std::string& y, const Exhaustion& exhaustion,
                                     const LimitOptions& options = {});

/// Energy kernel element split on the largest truncation G_K: v_x solved on
/// the free truncation, f_x on the wired truncation (restricted to V[G_K]),
/// h_x = v_x - f_x. Energies are taken over the edges of G_K^F.
struct RoydenSplit {
  Network free_truncation;
  Network wired_truncation;
  VertexFunction v;
  VertexFunction f;
  VertexFunction h;
  double energy_v = 0.0;
  double energy_f = 0.0;  // over G_K^F edges
  double wired_energy_f = 0.0;  // over G_K^W edges, equals R_{G_K^W}(o, x)
  double energy_h = 0.0;
  /// |E(f) + E(h) - E(v)| / E(v).
  double orthogonality_defect = 0.0;
  /// max |Δh(z)| / c(z) over vertices at distance >= 2 from the truncation
  /// boundary.
  double harmonic_residual = 0.0;
  std::vector<std::size_t> deep_interior;
};

RoydenSplit royden_split(const InfiniteNetworkSpec& spec, const std::string& x,
                         const Exhaustion& exhaustion);

/// Resistance matrix among `vertices` on the last two truncations of the
/// exhaustion.
struct LimitMatrix {
  Eigen::MatrixXd matrix;    // largest truncation
  Eigen::MatrixXd previous;  // next-to-largest (equal to matrix for one level)
  double max_relative_change = 0.0;
};

LimitMatrix limit_resistance_matrix(const InfiniteNetworkSpec& spec,
                                    std::span<const std::string> vertices,
                                    const Exhaustion& exhaustion, Truncation kind);

/// Convergence verdict shared by every limit: the last `window` differences
/// satisfy |a - b| <= tolerance * max(|a|, |b|) + absolute.
bool sequence_converged(std::span<const double> values, const LimitOptions& options,
                        double absolute = 0.0);

/// Truncation of `spec` to exhaustion level k.
Network truncation(const InfiniteNetworkSpec& spec, const Exhaustion& exhaustion, std::size_t k,
                   Truncation kind);

}  // namespace resistnet
