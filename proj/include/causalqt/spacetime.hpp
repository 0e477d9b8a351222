#pragma once

// Minkowski geometry with c = 1: times in seconds, positions in
// light-seconds.  The light cone is closed, so lightlike separation counts
// as causal.

#include <algorithm>
#include <cstddef>
#include <vector>

namespace causalqt {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Vec3&) const = default;
};

struct SpacetimePoint {
  Vec3 pos;
  double t = 0.0;

  bool operator==(const SpacetimePoint&) const = default;
};

enum class CausalRelation { Past, Future, Spacelike, Coincident };

// (Delta t)^2 - |Delta x|^2; positive timelike, zero lightlike,
// negative spacelike.
inline double interval_sq(const SpacetimePoint& a, const SpacetimePoint& b) {
  const double dt = b.t - a.t;
  const double dx = b.pos.x - a.pos.x;
  const double dy = b.pos.y - a.pos.y;
  const double dz = b.pos.z - a.pos.z;
  return dt * dt - (dx * dx + dy * dy + dz * dz);
}

// Relation of p to q: Past means p is in the (closed) past light cone of q.
// Distinct simultaneous points are spacelike, so equal-time events never
// influence each other.
inline CausalRelation relate(const SpacetimePoint& p, const SpacetimePoint& q) {
  if (p == q) return CausalRelation::Coincident;
  if (interval_sq(p, q) < 0.0) return CausalRelation::Spacelike;
  return p.t < q.t ? CausalRelation::Past : CausalRelation::Future;
}

// Indices of the events whose points lie in the closed past light cone of
// `target`, ordered by time with ties broken by site index.  Events at the
// target point itself are coincident, not past, and are excluded.
template <typename Event>
std::vector<std::size_t> past_cone_indices(const SpacetimePoint& target,
                                           const std::vector<Event>& events) {
  std::vector<std::size_t> in_cone;
  for (std::size_t i = 0; i < events.size(); ++i)
    if (relate(events[i].point, target) == CausalRelation::Past)
      in_cone.push_back(i);
  std::sort(in_cone.begin(), in_cone.end(), [&](std::size_t a, std::size_t b) {
    if (events[a].point.t != events[b].point.t)
      return events[a].point.t < events[b].point.t;
    return events[a].site < events[b].site;
  });
  return in_cone;
}

}  // namespace causalqt
