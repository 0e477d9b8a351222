#pragma once

// CHSH harness.  Two qubits share a near-singlet state; each wing applies
// a rotated-basis reduction at its detector after a per-wing delay.  With
// deterministic equal delays the two reductions are spacelike and the
// causal engine shows no correlation between the wings; once the delays
// make the reductions timelike, the causal engine reproduces the standard
// correlations.  Stochastic delays mix the two regimes, which is what the
// sweep quantifies.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "causalqt/collapse.hpp"
#include "causalqt/engine.hpp"
#include "causalqt/parallel.hpp"
#include "causalqt/rng.hpp"

namespace causalqt {

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Default angles maximize S = E(a,b) + E(a,b') + E(a',b) - E(a',b') for the
// singlet correlation E(x, y) = -cos(x - y).
struct BellConfig {
  EngineKind engine = EngineKind::Causal;
  double separation = 3e-5;   // wing separation in light-seconds
  double eps = 1e-3;          // initial-state perturbation
  double eta = 0.0;           // 0 = projective reductions, else softened
  double arrival_time = 1.0;  // particle arrival at both wings, seconds
  double angle_a = 0.0;
  double angle_ap = -std::numbers::pi / 2.0;
  double angle_b = 3.0 * std::numbers::pi / 4.0;
  double angle_bp = -3.0 * std::numbers::pi / 4.0;
  DelayModel delay_a;
  DelayModel delay_b;
  bool exact = true;
  std::uint64_t trials = 10000;
  std::uint64_t seed = 1;
  int threads = 1;

  bool stochastic() const {
    return delay_a.family == DelayFamily::Exponential ||
           delay_b.family == DelayFamily::Exponential;
  }

  void validate() const {
    if (!(separation > 0.0) || !std::isfinite(separation))
      throw ParamError("separation must be finite and > 0");
    if (!(eps >= 0.0 && eps < 0.5)) throw ParamError("eps must lie in [0, 0.5)");
    if (!(eta >= 0.0 && eta < 1.0)) throw ParamError("eta must lie in [0, 1)");
    if (engine == EngineKind::Causal && eta == 0.0 && eps == 0.0)
      throw ParamError("causal engine with projective reductions requires "
                       "eps > 0 (or eta > 0) to keep every cone-conditioned "
                       "state defined");
    if (!(arrival_time > 0.0) || !std::isfinite(arrival_time))
      throw ParamError("arrival_time must be finite and > 0");
    for (double a : {angle_a, angle_ap, angle_b, angle_bp})
      if (!std::isfinite(a)) throw ParamError("angles must be finite");
    delay_a.validate();
    delay_b.validate();
    if ((stochastic() || !exact) && trials == 0)
      throw ParamError("trials must be > 0 for sampled or stochastic runs");
  }
};

// One Bell pair with concrete delays and measurement angles.  Event 0 is
// wing A at the origin, event 1 is wing B at (separation, 0, 0).
inline Scenario build_bell_scenario(const BellConfig& cfg, double delta_a,
                                    double delta_b, double theta_a,
                                    double theta_b) {
  auto kraus_for = [&](double theta) {
    return cfg.eta > 0.0 ? softened_projectors(theta, cfg.eta)
                         : projective_qubit(theta);
  };
  Scenario sc;
  sc.dims = SiteDims{{2, 2}};
  sc.site_positions = {Vec3{0.0, 0.0, 0.0}, Vec3{cfg.separation, 0.0, 0.0}};
  sc.initial = {WeightedState{1.0, perturbed_singlet(cfg.eps)}};
  sc.events = {
      ReductionEvent{0, 0, SpacetimePoint{Vec3{0.0, 0.0, 0.0},
                                          cfg.arrival_time + delta_a},
                     kraus_for(theta_a)},
      ReductionEvent{1, 1, SpacetimePoint{Vec3{cfg.separation, 0.0, 0.0},
                                          cfg.arrival_time + delta_b},
                     kraus_for(theta_b)},
  };
  return sc;
}

namespace detail {

// Stream-id layout: per-pair delay and outcome streams plus a dedicated
// spacelike-probability stream, all independent of the swept parameter so
// that sweep grid points share their random draws.
inline constexpr std::uint64_t kTagDelayBase = 8;     // 8..15: pair*2 + wing
inline constexpr std::uint64_t kTagOutcomeBase = 64;  // 64..67: pair
inline constexpr std::uint64_t kTagPspace = 128;      // 128, 129: wing

inline std::uint64_t delay_stream(std::uint64_t seed, std::uint64_t pair,
                                  std::uint64_t wing) {
  return derive_seed(seed, kTagDelayBase + pair * 2 + wing);
}

// Outcome labels map to values +1 (label 0) and -1 (label 1); E is the
// mean of the two wings' value product.
inline double correlation_value(const OutcomeDistribution& dist) {
  if (dist.truncated_mass > 0.0)
    throw ZeroNormState(dist.truncations.empty() ? ZeroNormState::Chain{}
                                                 : dist.truncations.front().chain);
  double e = 0.0;
  for (std::size_t idx = 0; idx < dist.probabilities.size(); ++idx) {
    const auto tuple = dist.tuple_of(idx);
    const double v = (tuple[0] == 0 ? 1.0 : -1.0) * (tuple[1] == 0 ? 1.0 : -1.0);
    e += v * dist.probabilities[idx];
  }
  return e;
}

inline double sampled_product(const std::vector<int>& tuple) {
  return (tuple[0] == 0 ? 1.0 : -1.0) * (tuple[1] == 0 ? 1.0 : -1.0);
}

struct TrialStats {
  std::uint64_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  Estimate estimate() const {
    const double mean = sum / static_cast<double>(n);
    if (n < 2) return Estimate{mean, 0.0};
    const double var =
        std::max(0.0, (sum_sq - static_cast<double>(n) * mean * mean) /
                          static_cast<double>(n - 1));
    return Estimate{mean, std::sqrt(var / static_cast<double>(n))};
  }
};

inline Estimate trial_mean(std::uint64_t trials, int threads,
                           const std::function<double(std::uint64_t)>& value_of) {
  auto blocks = run_blocks<TrialStats>(
      trials, threads, [&](std::uint64_t begin, std::uint64_t end) {
        TrialStats s;
        for (std::uint64_t t = begin; t < end; ++t) {
          const double v = value_of(t);
          s.n += 1;
          s.sum += v;
          s.sum_sq += v * v;
        }
        return s;
      });
  TrialStats total;
  for (const auto& b : blocks) {
    total.n += b.n;
    total.sum += b.sum;
    total.sum_sq += b.sum_sq;
  }
  return total.estimate();
}

}  // namespace detail

// E(theta_a, theta_b) under the configured engine, geometry, and mode.
// `pair_tag` (0..3) selects independent random streams per angle pair.
inline Estimate correlation(const BellConfig& cfg, double theta_a,
                            double theta_b, std::uint64_t pair_tag = 0) {
  cfg.validate();
  if (!cfg.stochastic()) {
    const double da = cfg.delay_a.delta0;
    const double db = cfg.delay_b.delta0;
    const Scenario sc = build_bell_scenario(cfg, da, db, theta_a, theta_b);
    if (cfg.exact)
      return Estimate{detail::correlation_value(distribution(sc, cfg.engine)), 0.0};
    const std::uint64_t outcome_seed =
        derive_seed(cfg.seed, detail::kTagOutcomeBase + pair_tag);
    return detail::trial_mean(cfg.trials, cfg.threads, [&](std::uint64_t trial) {
      return detail::sampled_product(
          sample_run(sc, cfg.engine, derive_seed(outcome_seed, trial)));
    });
  }
  const std::uint64_t seed_da = detail::delay_stream(cfg.seed, pair_tag, 0);
  const std::uint64_t seed_db = detail::delay_stream(cfg.seed, pair_tag, 1);
  const std::uint64_t outcome_seed =
      derive_seed(cfg.seed, detail::kTagOutcomeBase + pair_tag);
  return detail::trial_mean(cfg.trials, cfg.threads, [&](std::uint64_t trial) {
    RandomStream sa(derive_seed(seed_da, trial));
    RandomStream sb(derive_seed(seed_db, trial));
    const double da = sample_delay(cfg.delay_a, sa);
    const double db = sample_delay(cfg.delay_b, sb);
    const Scenario sc = build_bell_scenario(cfg, da, db, theta_a, theta_b);
    if (cfg.exact) return detail::correlation_value(distribution(sc, cfg.engine));
    return detail::sampled_product(
        sample_run(sc, cfg.engine, derive_seed(outcome_seed, trial)));
  });
}

struct ChshResult {
  Estimate e_ab, e_abp, e_apb, e_apbp;
  Estimate s;            // E(a,b) + E(a,b') + E(a',b) - E(a',b')
  Estimate p_spacelike;  // probability the two reductions are spacelike
};

inline ChshResult chsh(const BellConfig& cfg) {
  cfg.validate();
  ChshResult r;
  r.e_ab = correlation(cfg, cfg.angle_a, cfg.angle_b, 0);
  r.e_abp = correlation(cfg, cfg.angle_a, cfg.angle_bp, 1);
  r.e_apb = correlation(cfg, cfg.angle_ap, cfg.angle_b, 2);
  r.e_apbp = correlation(cfg, cfg.angle_ap, cfg.angle_bp, 3);
  r.s.value = r.e_ab.value + r.e_abp.value + r.e_apb.value - r.e_apbp.value;
  r.s.std_error = std::sqrt(
      r.e_ab.std_error * r.e_ab.std_error + r.e_abp.std_error * r.e_abp.std_error +
      r.e_apb.std_error * r.e_apb.std_error +
      r.e_apbp.std_error * r.e_apbp.std_error);
  if (!cfg.stochastic()) {
    const bool spacelike =
        std::abs(cfg.delay_a.delta0 - cfg.delay_b.delta0) < cfg.separation;
    r.p_spacelike = Estimate{spacelike ? 1.0 : 0.0, 0.0};
  } else {
    const std::uint64_t sa0 = derive_seed(cfg.seed, detail::kTagPspace);
    const std::uint64_t sb0 = derive_seed(cfg.seed, detail::kTagPspace + 1);
    const Estimate ind =
        detail::trial_mean(cfg.trials, cfg.threads, [&](std::uint64_t trial) {
          RandomStream sa(derive_seed(sa0, trial));
          RandomStream sb(derive_seed(sb0, trial));
          const double da = sample_delay(cfg.delay_a, sa);
          const double db = sample_delay(cfg.delay_b, sb);
          return std::abs(da - db) < cfg.separation ? 1.0 : 0.0;
        });
    const double p = ind.value;
    const double n = static_cast<double>(cfg.trials);
    r.p_spacelike = Estimate{p, std::sqrt(std::max(0.0, p * (1.0 - p)) / n)};
  }
  return r;
}

enum class SweepParam { SeparationL, DelayRate };

struct SweepRow {
  double value = 0.0;     // grid value of the swept parameter
  ChshResult chsh;        // direct estimate at this grid point
  double s_mixture = 0.0; // (1 - p_spacelike) * S_standard prediction
};

// Sweeps the wing separation or the exponential delay rate.  Each row also
// carries the mixture prediction built from the standard-engine S at the
// same angles, eps, and eta.
inline std::vector<SweepRow> sweep(const BellConfig& base, SweepParam param,
                                   const std::vector<double>& grid) {
  base.validate();
  if (grid.empty()) throw ParamError("sweep grid must be nonempty");
  for (double g : grid)
    if (!(g > 0.0) || !std::isfinite(g))
      throw ParamError("sweep grid values must be finite and > 0");
  if (param == SweepParam::DelayRate &&
      (base.delay_a.family != DelayFamily::Exponential ||
       base.delay_b.family != DelayFamily::Exponential))
    throw ParamError("delay-rate sweeps need exponential delays on both wings");

  BellConfig std_cfg = base;
  std_cfg.engine = EngineKind::Standard;
  std_cfg.exact = true;
  std_cfg.delay_a = DelayModel{DelayFamily::Deterministic, 0.0, 0.0};
  std_cfg.delay_b = DelayModel{DelayFamily::Deterministic, 0.0, 0.0};
  const double s_standard = chsh(std_cfg).s.value;

  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (double g : grid) {
    BellConfig cfg = base;
    if (param == SweepParam::SeparationL) {
      cfg.separation = g;
    } else {
      cfg.delay_a.rate = g;
      cfg.delay_b.rate = g;
    }
    SweepRow row;
    row.value = g;
    row.chsh = chsh(cfg);
    row.s_mixture = (1.0 - row.chsh.p_spacelike.value) * s_standard;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace causalqt
