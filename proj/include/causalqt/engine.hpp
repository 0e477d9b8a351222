#pragma once

// Outcome engines for scenarios of localized state reductions.
//
// Both engines walk the reduction events forward in coordinate time (ties
// broken by site index) and branch over outcome labels; they differ in the
// state each event's outcome probabilities are computed from.
//
//   standard: one globally evolved state per branch.  Every earlier
//     reduction conditions every later one, regardless of geometry.
//
//   causal: each event gets its own local state, built from the initial
//     state by applying, in time order, only the reductions that lie in
//     that event's past light cone.  Spacelike-separated outcomes never
//     condition each other, and a branch's joint probability is the
//     product of its per-event cone-conditioned factors.
//
// With purely projective reductions the causal rule can drive a local
// state to zero norm (the branch assigns positive probability to a cone
// history whose conditional state does not exist).  Exact enumeration
// reports such branches as truncated_mass plus a diagnostic chain instead
// of inventing a continuation; sampling aborts with the same diagnostic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "causalqt/collapse.hpp"
#include "causalqt/errors.hpp"
#include "causalqt/linalg.hpp"
#include "causalqt/parallel.hpp"
#include "causalqt/rng.hpp"
#include "causalqt/spacetime.hpp"

namespace causalqt {

// Exact enumeration refuses to build more outcome tuples than this.
inline constexpr std::uint64_t kTupleBudget = 1000000;

enum class EngineKind { Causal, Standard };

// One reduction: a Kraus set applied to `site` at a spacetime point.
struct ReductionEvent {
  int id = 0;
  int site = 0;
  SpacetimePoint point;
  KrausSet kraus;
};

struct WeightedState {
  double weight = 1.0;
  PureState state;
};

struct Scenario {
  SiteDims dims;
  std::vector<Vec3> site_positions;
  std::vector<WeightedState> initial;  // convex mixture; usually one entry
  std::vector<ReductionEvent> events;

  void validate() const {
    dims.validate();
    if (site_positions.size() != static_cast<std::size_t>(dims.site_count()))
      throw DimensionError("site_positions count does not match site count");
    for (const auto& p : site_positions)
      if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
        throw ParamError("site positions must be finite");
    if (initial.empty()) throw ParamError("scenario needs an initial state");
    double weight_sum = 0.0;
    for (const auto& comp : initial) {
      if (!(comp.weight >= 0.0) || !std::isfinite(comp.weight))
        throw ParamError("mixture weights must be finite and >= 0");
      weight_sum += comp.weight;
      if (comp.state.dims != dims)
        throw DimensionError("initial state dims do not match scenario dims");
      if (static_cast<std::int64_t>(comp.state.amp.size()) != dims.total_dim())
        throw DimensionError("initial state has wrong amplitude count");
      for (const auto& c : comp.state.amp)
        if (!is_finite(c)) throw ParamError("initial amplitudes must be finite");
      const double n = std::sqrt(norm_sq(comp.state.amp));
      if (std::abs(n - 1.0) > kNormTol)
        throw ParamError("initial component norm is not 1 within tolerance");
    }
    if (std::abs(weight_sum - 1.0) > kNormTol)
      throw ParamError("mixture weights must sum to 1");
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& ev = events[i];
      const std::string where = "event " + std::to_string(i);
      if (ev.site < 0 || ev.site >= dims.site_count())
        throw DimensionError(where + ": site index out of range");
      if (ev.kraus.dim != dims.dims[ev.site])
        throw DimensionError(where + ": Kraus dimension does not match site");
      if (ev.kraus.outcome_count() < 1)
        throw ParamError(where + ": empty Kraus set");
      if (!std::isfinite(ev.point.t) || !std::isfinite(ev.point.pos.x) ||
          !std::isfinite(ev.point.pos.y) || !std::isfinite(ev.point.pos.z))
        throw ParamError(where + ": coordinates must be finite");
      if (!(ev.point.t > 0.0))
        throw ParamError(where + ": time must be > 0 (initial state sits at t = 0)");
      for (std::size_t j = 0; j < i; ++j) {
        const auto& other = events[j];
        if (other.id == ev.id)
          throw ParamError(where + ": duplicate event id " + std::to_string(ev.id));
        if (other.site == ev.site && other.point.t == ev.point.t)
          throw ParamError(where + ": same site measured twice at t = " +
                           std::to_string(ev.point.t));
        if (other.site != ev.site && other.point == ev.point)
          throw ParamError(where + ": two sites share the exact same point");
      }
    }
  }

  // Processing order: by time, ties broken by site index.  Valid scenarios
  // admit no remaining ties.
  std::vector<std::size_t> processing_order() const {
    std::vector<std::size_t> order(events.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (events[a].point.t != events[b].point.t)
        return events[a].point.t < events[b].point.t;
      return events[a].site < events[b].site;
    });
    return order;
  }
};

// Outcomes of already-settled events, keyed by event id.
struct PastData {
  std::map<int, int> assignments;
};

// Restriction of a full outcome history to the past cone of `target`.
inline PastData past_data_for(const Scenario& sc, const SpacetimePoint& target,
                              const std::map<int, int>& full_history) {
  PastData past;
  for (std::size_t idx : past_cone_indices(target, sc.events)) {
    const int id = sc.events[idx].id;
    const auto it = full_history.find(id);
    if (it == full_history.end())
      throw ParamError("history is missing an outcome for event " +
                       std::to_string(id));
    past.assignments.emplace(id, it->second);
  }
  return past;
}

namespace detail {

inline PureState reduce_once(const PureState& state, const ReductionEvent& ev,
                             int outcome, ZeroNormState::Chain& chain) {
  if (outcome < 0 || outcome >= ev.kraus.outcome_count())
    throw ParamError("outcome label " + std::to_string(outcome) +
                     " out of range for event " + std::to_string(ev.id));
  auto res = apply_and_norm(ev.kraus.site_operator(ev.site, outcome), state);
  chain.emplace_back(ev.id, outcome);
  if (!(res.norm_sq > kEpsZero)) throw ZeroNormState(chain);
  return normalize(state.dims, std::move(res.vec), res.norm_sq);
}

}  // namespace detail

// The state at `target` under the causal rule: the (single-component)
// initial state with every past-cone reduction applied in time order.
// `past` must assign an outcome to exactly the cone events.
inline PureState local_state(const Scenario& sc, const SpacetimePoint& target,
                             const PastData& past) {
  sc.validate();
  if (sc.initial.size() != 1)
    throw ParamError("local_state needs a single initial component; "
                     "mixtures are combined at the distribution level");
  const auto cone = past_cone_indices(target, sc.events);
  if (past.assignments.size() != cone.size())
    throw ParamError("past data must cover exactly the past-cone events (" +
                     std::to_string(cone.size()) + " expected, " +
                     std::to_string(past.assignments.size()) + " given)");
  PureState state = sc.initial.front().state;
  ZeroNormState::Chain chain;
  for (std::size_t idx : cone) {
    const auto& ev = sc.events[idx];
    const auto it = past.assignments.find(ev.id);
    if (it == past.assignments.end())
      throw ParamError("past data is missing event " + std::to_string(ev.id));
    state = detail::reduce_once(state, ev, it->second, chain);
  }
  return state;
}

namespace detail {

inline std::vector<double> outcome_probs(const PureState& state,
                                         const ReductionEvent& ev) {
  std::vector<double> probs(ev.kraus.outcome_count());
  for (int j = 0; j < ev.kraus.outcome_count(); ++j)
    probs[static_cast<std::size_t>(j)] =
        apply_and_norm(ev.kraus.site_operator(ev.site, j), state).norm_sq;
  return probs;
}

}  // namespace detail

// Outcome probabilities for `event` conditioned only on its own past cone.
inline std::vector<double> event_probabilities(const Scenario& sc,
                                               const ReductionEvent& event,
                                               const PastData& past) {
  return detail::outcome_probs(local_state(sc, event.point, past), event);
}

// A branch whose enumeration stopped because a cone-conditioned state was
// annihilated; `weight` is the joint probability of the settled prefix.
struct Truncation {
  double weight = 0.0;
  ZeroNormState::Chain chain;
};

// Exact distribution over outcome tuples.  Tuple slot k corresponds to
// event_ids[k] (processing order); probabilities are stored densely in
// lexicographic order, slot 0 most significant.
struct OutcomeDistribution {
  std::vector<int> event_ids;
  std::vector<int> radices;
  std::vector<double> probabilities;
  double truncated_mass = 0.0;
  std::vector<Truncation> truncations;

  std::size_t index_of(const std::vector<int>& outcomes) const {
    if (outcomes.size() != radices.size())
      throw DimensionError("outcome tuple has wrong length");
    std::size_t idx = 0;
    for (std::size_t k = 0; k < radices.size(); ++k) {
      if (outcomes[k] < 0 || outcomes[k] >= radices[k])
        throw DimensionError("outcome label out of range");
      idx = idx * static_cast<std::size_t>(radices[k]) +
            static_cast<std::size_t>(outcomes[k]);
    }
    return idx;
  }

  std::vector<int> tuple_of(std::size_t index) const {
    std::vector<int> outcomes(radices.size());
    for (std::size_t k = radices.size(); k-- > 0;) {
      outcomes[k] = static_cast<int>(index % static_cast<std::size_t>(radices[k]));
      index /= static_cast<std::size_t>(radices[k]);
    }
    return outcomes;
  }

  double probability_of(const std::vector<int>& outcomes) const {
    return probabilities[index_of(outcomes)];
  }

  double enumerated_mass() const {
    double acc = 0.0;
    for (double p : probabilities) acc += p;
    return acc;
  }
};

namespace detail {

struct EventPlan {
  std::vector<std::size_t> order;                    // slot -> event index
  std::vector<int> radices;                          // slot -> outcome count
  std::vector<std::vector<std::size_t>> cone_slots;  // slot -> earlier slots in cone
  std::uint64_t tuple_count = 1;                     // saturates at budget + 1

  static EventPlan build(const Scenario& sc) {
    EventPlan plan;
    plan.order = sc.processing_order();
    const std::size_t m = plan.order.size();
    plan.radices.reserve(m);
    plan.cone_slots.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      const auto& ev = sc.events[plan.order[k]];
      plan.radices.push_back(ev.kraus.outcome_count());
      if (plan.tuple_count <= kTupleBudget)
        plan.tuple_count *= static_cast<std::uint64_t>(ev.kraus.outcome_count());
      for (std::size_t j = 0; j < k; ++j) {
        const auto& earlier = sc.events[plan.order[j]];
        if (relate(earlier.point, ev.point) == CausalRelation::Past)
          plan.cone_slots[k].push_back(j);
      }
    }
    return plan;
  }
};

// Initial state reduced by the cone events of `slot`, using the branch
// outcomes settled so far.  Cone slots are already in time order.
inline PureState state_after_cone(const Scenario& sc, const PureState& initial,
                                  const EventPlan& plan, std::size_t slot,
                                  const std::vector<int>& outcomes_by_slot) {
  PureState state = initial;
  ZeroNormState::Chain chain;
  for (std::size_t j : plan.cone_slots[slot]) {
    const auto& ev = sc.events[plan.order[j]];
    state = reduce_once(state, ev, outcomes_by_slot[j], chain);
  }
  return state;
}

struct Enumerator {
  const Scenario& sc;
  const EventPlan& plan;
  EngineKind kind;
  OutcomeDistribution& out;
  std::vector<int> outcomes;

  void walk(std::size_t slot, double weight, const PureState& component_initial,
            const PureState& global_state) {
    if (slot == plan.order.size()) {
      out.probabilities[out.index_of(outcomes)] += weight;
      return;
    }
    const auto& ev = sc.events[plan.order[slot]];
    std::vector<double> probs;
    PureState cone_state{SiteDims{}, {}};
    if (kind == EngineKind::Causal) {
      try {
        cone_state = state_after_cone(sc, component_initial, plan, slot, outcomes);
      } catch (const ZeroNormState& z) {
        out.truncated_mass += weight;
        out.truncations.push_back(Truncation{weight, z.chain});
        return;
      }
      probs = outcome_probs(cone_state, ev);
    } else {
      probs = outcome_probs(global_state, ev);
    }
    for (int j = 0; j < ev.kraus.outcome_count(); ++j) {
      const double p = probs[static_cast<std::size_t>(j)];
      // Zero-probability subtrees stay at their preinitialized 0 entries;
      // no conditional state exists to descend with, and none is needed.
      if (!(p > kEpsZero)) continue;
      outcomes.push_back(j);
      if (kind == EngineKind::Standard) {
        auto res = apply_and_norm(ev.kraus.site_operator(ev.site, j), global_state);
        PureState next = normalize(global_state.dims, std::move(res.vec), res.norm_sq);
        walk(slot + 1, weight * p, component_initial, next);
      } else {
        walk(slot + 1, weight * p, component_initial, global_state);
      }
      outcomes.pop_back();
    }
  }
};

inline OutcomeDistribution enumerate_distribution(const Scenario& sc,
                                                  EngineKind kind) {
  sc.validate();
  const EventPlan plan = EventPlan::build(sc);
  if (plan.tuple_count > kTupleBudget)
    throw BudgetError("exact enumeration would exceed the outcome-tuple "
                      "budget of " + std::to_string(kTupleBudget) +
                      "; use sampling instead");
  OutcomeDistribution out;
  out.event_ids.reserve(plan.order.size());
  for (std::size_t idx : plan.order) out.event_ids.push_back(sc.events[idx].id);
  out.radices = plan.radices;
  out.probabilities.assign(static_cast<std::size_t>(plan.tuple_count), 0.0);
  for (const auto& comp : sc.initial) {
    if (comp.weight == 0.0) continue;
    Enumerator en{sc, plan, kind, out, {}};
    en.outcomes.reserve(plan.order.size());
    en.walk(0, comp.weight, comp.state, comp.state);
  }
  return out;
}

inline int draw_categorical(RandomStream& stream, const std::vector<double>& probs) {
  double total = 0.0;
  for (double p : probs)
    if (p > kEpsZero) total += p;
  if (!(total > 0.0)) throw ZeroNormState{};
  const double u = stream.next_u01() * total;
  double acc = 0.0;
  int last_live = -1;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (!(probs[j] > kEpsZero)) continue;
    last_live = static_cast<int>(j);
    acc += probs[j];
    if (u < acc) return last_live;
  }
  return last_live;
}

}  // namespace detail

inline OutcomeDistribution causal_distribution(const Scenario& sc) {
  return detail::enumerate_distribution(sc, EngineKind::Causal);
}

inline OutcomeDistribution standard_distribution(const Scenario& sc) {
  return detail::enumerate_distribution(sc, EngineKind::Standard);
}

// Convex mixtures are combined entrywise at the distribution level; both
// named engines already accept multi-component scenarios.
inline OutcomeDistribution mixture_distribution(const Scenario& sc,
                                                EngineKind kind) {
  return detail::enumerate_distribution(sc, kind);
}

inline OutcomeDistribution distribution(const Scenario& sc, EngineKind kind) {
  return detail::enumerate_distribution(sc, kind);
}

// One sampled trajectory; returns outcome labels in processing order.
// Reaching an annihilated cone state aborts with the diagnostic chain.
inline std::vector<int> sample_run(const Scenario& sc, EngineKind kind,
                                   std::uint64_t seed) {
  sc.validate();
  const auto plan = detail::EventPlan::build(sc);
  RandomStream stream(seed);
  const WeightedState* comp = &sc.initial.front();
  if (sc.initial.size() > 1) {
    const double u = stream.next_u01();
    double acc = 0.0;
    for (const auto& candidate : sc.initial) {
      acc += candidate.weight;
      comp = &candidate;
      if (u < acc) break;
    }
  }
  PureState state = comp->state;
  std::vector<int> outcomes;
  outcomes.reserve(plan.order.size());
  for (std::size_t slot = 0; slot < plan.order.size(); ++slot) {
    const auto& ev = sc.events[plan.order[slot]];
    std::vector<double> probs;
    if (kind == EngineKind::Causal) {
      const PureState cone_state =
          detail::state_after_cone(sc, comp->state, plan, slot, outcomes);
      probs = detail::outcome_probs(cone_state, ev);
    } else {
      probs = detail::outcome_probs(state, ev);
    }
    const int j = detail::draw_categorical(stream, probs);
    outcomes.push_back(j);
    if (kind == EngineKind::Standard) {
      auto res = apply_and_norm(ev.kraus.site_operator(ev.site, j), state);
      state = normalize(state.dims, std::move(res.vec), res.norm_sq);
    }
  }
  return outcomes;
}

struct SampleCounts {
  std::vector<int> event_ids;
  std::vector<int> radices;
  std::map<std::vector<int>, std::uint64_t> counts;
  std::uint64_t trials = 0;
};

// Repeated sampling with per-trial derived seeds; the result is identical
// for every thread count.
inline SampleCounts sample_many(const Scenario& sc, EngineKind kind,
                                std::uint64_t seed, std::uint64_t trials,
                                int threads = 1) {
  sc.validate();
  if (trials == 0) throw ParamError("trials must be > 0");
  const auto plan = detail::EventPlan::build(sc);
  SampleCounts result;
  result.event_ids.reserve(plan.order.size());
  for (std::size_t idx : plan.order)
    result.event_ids.push_back(sc.events[idx].id);
  result.radices = plan.radices;
  result.trials = trials;

  using BlockCounts = std::map<std::vector<int>, std::uint64_t>;
  auto blocks = run_blocks<BlockCounts>(
      trials, threads, [&](std::uint64_t begin, std::uint64_t end) {
        BlockCounts local;
        for (std::uint64_t trial = begin; trial < end; ++trial)
          ++local[sample_run(sc, kind, derive_seed(seed, trial))];
        return local;
      });
  for (const auto& block : blocks)
    for (const auto& [tuple, count] : block) result.counts[tuple] += count;
  return result;
}

}  // namespace causalqt
