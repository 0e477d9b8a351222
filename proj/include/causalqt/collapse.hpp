#pragma once

// Measurement (reduction) models: validated Kraus sets, the qubit projector
// family, its softened strictly-positive variant, near-singlet initial
// states, and the detector-delay models used by the Bell harness.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "causalqt/linalg.hpp"
#include "causalqt/rng.hpp"

namespace causalqt {

// A complete set of Kraus operators on one site's internal space.  Outcome
// labels are the operator indices 0..m-1.
struct KrausSet {
  int dim = 0;
  std::vector<CVector> ops;  // each row-major dim x dim

  int outcome_count() const { return static_cast<int>(ops.size()); }

  SiteOperator site_operator(int site, int outcome) const {
    return SiteOperator{site, dim, ops[static_cast<std::size_t>(outcome)]};
  }

  // Checks shapes and sum_j A_j^dag A_j = I within kCompleteTol.
  static KrausSet validated(int dim, std::vector<CVector> ops) {
    if (dim < 2) throw ParamError("Kraus set dimension must be >= 2");
    if (ops.empty()) throw ParamError("Kraus set needs at least one operator");
    const std::size_t entries = static_cast<std::size_t>(dim) * dim;
    std::vector<Complex> sum(entries, Complex{0.0, 0.0});
    for (const auto& a : ops) {
      if (a.size() != entries)
        throw ParamError("Kraus operator has wrong entry count");
      for (const auto& c : a)
        if (!is_finite(c)) throw ParamError("Kraus entries must be finite");
      // sum += A^dag A
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
          Complex acc{0.0, 0.0};
          for (int k = 0; k < dim; ++k)
            acc += std::conj(a[static_cast<std::size_t>(k) * dim + r]) *
                   a[static_cast<std::size_t>(k) * dim + c];
          sum[static_cast<std::size_t>(r) * dim + c] += acc;
        }
    }
    double worst = 0.0;
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) {
        const Complex expect = (r == c) ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
        worst = std::max(worst,
                         std::abs(sum[static_cast<std::size_t>(r) * dim + c] -
                                  expect));
      }
    if (worst > kCompleteTol)
      throw ParamError("Kraus set is not complete: max deviation " +
                       std::to_string(worst));
    return KrausSet{dim, std::move(ops)};
  }
};

namespace detail {

// Qubit basis rotated by theta: e0 = (cos t2, sin t2), e1 = (-sin t2, cos t2).
inline std::pair<std::array<double, 2>, std::array<double, 2>> rotated_basis(
    double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  return {{c, s}, {-s, c}};
}

inline CVector real_projector(const std::array<double, 2>& e) {
  return CVector{Complex{e[0] * e[0], 0.0}, Complex{e[0] * e[1], 0.0},
                 Complex{e[1] * e[0], 0.0}, Complex{e[1] * e[1], 0.0}};
}

}  // namespace detail

// Two rank-1 projectors onto the rotated qubit basis at angle theta.
// theta = 0 is the computational basis, theta = pi/2 the Hadamard basis.
inline KrausSet projective_qubit(double theta) {
  if (!std::isfinite(theta)) throw ParamError("theta must be finite");
  const auto [e0, e1] = detail::rotated_basis(theta);
  return KrausSet::validated(
      2, {detail::real_projector(e0), detail::real_projector(e1)});
}

// Strictly positive two-outcome softening of projective_qubit:
//   A_j = sqrt((1 - eta) P_j + (eta / 2) I)
// Diagonal in the rotated basis with eigenvalues sqrt(1 - eta/2) and
// sqrt(eta/2), so no outcome ever annihilates a state.
inline KrausSet softened_projectors(double theta, double eta) {
  if (!std::isfinite(theta)) throw ParamError("theta must be finite");
  if (!(eta > 0.0 && eta < 1.0))
    throw ParamError("eta must lie strictly between 0 and 1");
  const auto [e0, e1] = detail::rotated_basis(theta);
  const double hi = std::sqrt(1.0 - eta / 2.0);
  const double lo = std::sqrt(eta / 2.0);
  auto blend = [&](const std::array<double, 2>& keep,
                   const std::array<double, 2>& other) {
    CVector a(4, Complex{0.0, 0.0});
    const CVector pk = detail::real_projector(keep);
    const CVector po = detail::real_projector(other);
    for (std::size_t i = 0; i < 4; ++i) a[i] = hi * pk[i] + lo * po[i];
    return a;
  };
  return KrausSet::validated(2, {blend(e0, e1), blend(e1, e0)});
}

// Two-qubit state close to the singlet:
//   a01 = -a10 = sqrt((1 - 2 eps^2) / 2),  a00 = a11 = eps.
// eps = 0 gives the exact singlet; any eps > 0 leaves every computational
// outcome pair with nonzero amplitude.
inline PureState perturbed_singlet(double eps) {
  if (!(eps >= 0.0 && eps < 0.5))
    throw ParamError("eps must lie in [0, 0.5)");
  const double c = std::sqrt((1.0 - 2.0 * eps * eps) / 2.0);
  CVector amp{Complex{eps, 0.0}, Complex{c, 0.0}, Complex{-c, 0.0},
              Complex{eps, 0.0}};
  return PureState::make(SiteDims{{2, 2}}, std::move(amp));
}

// Detector delay: the lag between a particle's arrival and its reduction
// event.  Exponential delays make the spacelike/timelike character of a
// Bell pair's reductions stochastic.
enum class DelayFamily { Deterministic, Exponential };

struct DelayModel {
  DelayFamily family = DelayFamily::Deterministic;
  double delta0 = 0.0;  // Deterministic: fixed delay in seconds
  double rate = 0.0;    // Exponential: rate lambda in 1/seconds

  void validate() const {
    if (family == DelayFamily::Deterministic) {
      if (!(delta0 >= 0.0) || !std::isfinite(delta0))
        throw ParamError("deterministic delay must be finite and >= 0");
    } else {
      if (!(rate > 0.0) || !std::isfinite(rate))
        throw ParamError("exponential delay rate must be finite and > 0");
    }
  }
};

inline double sample_delay(const DelayModel& model, RandomStream& stream) {
  model.validate();
  if (model.family == DelayFamily::Deterministic) return model.delta0;
  return stream.next_exponential(model.rate);
}

// Stream ids for the two wings of a delay pair.
inline constexpr std::uint64_t kStreamWingA = 1;
inline constexpr std::uint64_t kStreamWingB = 2;

// Probability that two independently delayed reductions separated by
// `separation` light-seconds end up spacelike, i.e. |delta_a - delta_b| <
// separation.  A deterministic pair needs no sampling; stochastic pairs are
// estimated by Monte Carlo with one independent stream per wing.
inline double spacelike_probability(const DelayModel& wing_a,
                                    const DelayModel& wing_b, double separation,
                                    std::uint64_t n_trials, std::uint64_t seed) {
  wing_a.validate();
  wing_b.validate();
  if (!(separation > 0.0) || !std::isfinite(separation))
    throw ParamError("separation must be finite and > 0");
  if (wing_a.family == DelayFamily::Deterministic &&
      wing_b.family == DelayFamily::Deterministic)
    return std::abs(wing_a.delta0 - wing_b.delta0) < separation ? 1.0 : 0.0;
  if (n_trials == 0) throw ParamError("n_trials must be > 0");
  RandomStream sa(derive_seed(seed, kStreamWingA));
  RandomStream sb(derive_seed(seed, kStreamWingB));
  std::uint64_t hits = 0;
  for (std::uint64_t i = 0; i < n_trials; ++i) {
    const double da = sample_delay(wing_a, sa);
    const double db = sample_delay(wing_b, sb);
    if (std::abs(da - db) < separation) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n_trials);
}

// Both wings drawing from the same model.
inline double spacelike_probability(const DelayModel& model, double separation,
                                    std::uint64_t n_trials, std::uint64_t seed) {
  return spacelike_probability(model, model, separation, n_trials, seed);
}

}  // namespace causalqt
