#pragma once

// Reversible random walks: exact absorbing-chain computations and seeded
// Monte Carlo estimates of hitting and escape probabilities.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "resistnet/forms.hpp"
#include "resistnet/network.hpp"

namespace resistnet {

/// Episode i draws from mt19937_64 seeded with seed_seq{seed, i} (each split
/// into 32-bit halves), so results do not depend on the thread count.
inline constexpr std::string_view kWalkRng = "mt19937_64+seed_seq(seed,episode)";

struct WalkConfig {
  std::uint64_t seed = 1;
  std::size_t max_steps = 1'000'000;
  std::size_t episodes = 100'000;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Worker count actually used for a request (0 means hardware concurrency).
unsigned resolve_threads(unsigned requested);

struct HittingEstimate {
  double estimate = 0.0;   // hits / (episodes - censored)
  std::size_t episodes = 0;
  std::size_t hits = 0;
  std::size_t censored = 0;  // episodes that reached max_steps
  double standard_error = 0.0;  // sqrt(p(1-p)/n), n = episodes - censored
  /// More than 0.1% of episodes were censored.
  bool censored_warning = false;
};

/// Walk from `start` for at least one step until it enters `targets` (hit)
/// or `avoid` (miss). The sets must be disjoint and not both empty.
HittingEstimate simulate_hitting(const Network& net, std::size_t start,
                                 std::span<const std::size_t> targets,
                                 std::span<const std::size_t> avoid, const WalkConfig& config);

/// P[a -> b] = P_a[τ_b < τ_a^+] by simulation.
HittingEstimate simulate_escape(const Network& net, std::size_t a, std::size_t b,
                                const WalkConfig& config);

/// u(z) = P_z[τ_targets < τ_avoid] for every start z: 1 on targets, 0 on
/// avoid, harmonic elsewhere. With `avoid` empty the result is all ones.
VertexFunction exact_hitting(const Network& net, std::span<const std::size_t> targets,
                             std::span<const std::size_t> avoid);

/// P[x -> y] by first-step decomposition: Σ_z p(x, z) P_z[τ_y < τ_x].
double escape_probability(const Network& net, std::size_t x, std::size_t y);

struct PathIntegralResult {
  double exact = 0.0;         // 1 / (c(x) P[x -> y])
  double effective = 0.0;     // effective_resistance(x, y)
  double escape = 0.0;        // exact P[x -> y]
  HittingEstimate simulated;  // Monte Carlo P[x -> y]
  double monte_carlo = 0.0;   // 1 / (c(x) p̂)
  /// |p̂ - P[x -> y]| in units of the standard error (0 when both vanish).
  double z_score = 0.0;
};

PathIntegralResult path_integral_resistance(const Network& net, std::size_t x, std::size_t y,
                                            const WalkConfig& config);

/// v_x = R(o, x) u_x with u_x(z) = P_z[τ_x < τ_o].
struct DipoleProbabilityReport {
  VertexFunction kernel;       // v_x
  VertexFunction probability;  // u_x
  double resistance = 0.0;     // R(o, x)
  double max_error = 0.0;      // ‖v_x - R u_x‖∞
  double scale = 0.0;          // max |v_x|
  bool passed(double tolerance = 1e-9) const { return max_error <= tolerance * scale; }
};

DipoleProbabilityReport dipole_probability_check(const Network& net, std::size_t x);

struct WiredLevelCheck {
  int radius = 0;
  double resistance = 0.0;  // R on the wired truncation between o and x
  double max_error = 0.0;   // ‖f_x - R u_x‖∞ / max |f_x|
  double prefactor = 0.0;   // c(x) / c(∞_k), zero without an ∞ vertex
};

struct WiredProbabilityReport {
  std::vector<WiredLevelCheck> levels;
  double max_error = 0.0;
  /// Prefactors are nonincreasing across levels.
  bool prefactor_decays = true;
};

WiredProbabilityReport wired_fx_probabilistic(const InfiniteNetworkSpec& spec, const std::string& x,
                                              const Exhaustion& exhaustion);

struct TraceTransitionEntry {
  std::size_t x = 0;  // network indices
  std::size_t y = 0;
  double trace = 0.0;        // c^tr_xy / c(x)
  double direct = 0.0;       // p(x, y)
  double through = 0.0;      // P[x -> y] through the complement
  double normalized = 0.0;   // c^tr_xy / c^tr(x), the trace network's own kernel
  double error = 0.0;        // |trace - direct - through|
};

struct TraceTransitionReport {
  std::vector<TraceTransitionEntry> entries;
  double max_error = 0.0;
  bool passed(double tolerance = 1e-9) const { return max_error <= tolerance; }
};

TraceTransitionReport trace_transition_check(const Network& net, std::span<const std::size_t> keep);

/// Visits to a (time 0 included) before the walk from a reaches b. The mean
/// is c(a) R(a, b).
struct VisitEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t episodes = 0;
  std::size_t censored = 0;
};

VisitEstimate simulate_visits(const Network& net, std::size_t a, std::size_t b,
                              const WalkConfig& config);

/// Transition counts along one long trajectory from `start`.
struct TransitionCounts {
  std::vector<std::size_t> forward;   // u -> v per canonical edge
  std::vector<std::size_t> backward;  // v -> u per canonical edge
  std::vector<std::size_t> departures;  // steps leaving each vertex
  std::size_t steps = 0;
};

TransitionCounts simulate_transitions(const Network& net, std::size_t start, std::size_t steps,
                                      std::uint64_t seed);

/// Experimental estimate of v_x on the largest truncation: R^F_K(o, x) times
/// the probability, on the wired truncation, of reaching x before o given
/// that the walk reaches {x, o} before ∞. Indexed like the free truncation.
VertexFunction experimental_free_kernel(const InfiniteNetworkSpec& spec, const std::string& x,
                                        const Exhaustion& exhaustion);

}  // namespace resistnet
