#pragma once

// Dense complex state vectors over a tensor product of small sites.
//
// Basis convention is big-endian in site order: the flat index of the
// product basis state |i_0 i_1 ... i_{n-1}> is
//
//   index = sum_k i_k * prod_{m > k} d_m
//
// so site 0 varies slowest.  Single-site operators are applied in place,
// slice by slice, without ever materializing the D x D matrix.

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "causalqt/errors.hpp"

namespace causalqt {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

// Squared-norm threshold below which a state counts as annihilated.
inline constexpr double kEpsZero = 1e-12;
// Unit-norm tolerance for states.
inline constexpr double kNormTol = 1e-9;
// Completeness tolerance for Kraus sets (max entrywise deviation from I).
inline constexpr double kCompleteTol = 1e-9;
// Cap on the total Hilbert-space dimension; dense vectors only.
inline constexpr std::int64_t kMaxTotalDim = 65536;

inline bool is_finite(Complex c) {
  return std::isfinite(c.real()) && std::isfinite(c.imag());
}

inline double norm_sq(const CVector& v) {
  double acc = 0.0;
  for (const auto& c : v) acc += std::norm(c);
  return acc;
}

// Per-site internal dimensions of the composite space.
struct SiteDims {
  std::vector<int> dims;

  int site_count() const { return static_cast<int>(dims.size()); }

  std::int64_t total_dim() const {
    std::int64_t d = 1;
    for (int dk : dims) d *= dk;
    return d;
  }

  // prod_{m > site} d_m, the block length over which index i_site is constant.
  std::int64_t stride(int site) const {
    std::int64_t s = 1;
    for (std::size_t m = static_cast<std::size_t>(site) + 1; m < dims.size(); ++m)
      s *= dims[m];
    return s;
  }

  void validate() const {
    if (dims.empty()) throw DimensionError("at least one site is required");
    std::int64_t d = 1;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      if (dims[k] < 2)
        throw DimensionError("site " + std::to_string(k) +
                             " has dimension < 2");
      d *= dims[k];
      if (d > kMaxTotalDim)
        throw DimensionError("total dimension exceeds " +
                             std::to_string(kMaxTotalDim));
    }
  }

  bool operator==(const SiteDims&) const = default;
};

// Normalized pure state on the composite space.
struct PureState {
  SiteDims dims;
  CVector amp;

  // Validating constructor: shape, finiteness, unit norm within kNormTol.
  static PureState make(SiteDims dims, CVector amp) {
    dims.validate();
    if (static_cast<std::int64_t>(amp.size()) != dims.total_dim())
      throw DimensionError("amplitude count " + std::to_string(amp.size()) +
                           " does not match total dimension " +
                           std::to_string(dims.total_dim()));
    for (const auto& c : amp)
      if (!is_finite(c)) throw ParamError("state amplitudes must be finite");
    const double n = std::sqrt(norm_sq(amp));
    if (std::abs(n - 1.0) > kNormTol)
      throw ParamError("state norm " + std::to_string(n) +
                       " is not 1 within tolerance");
    return PureState{std::move(dims), std::move(amp)};
  }
};

// A d x d operator acting on one site, stored row-major.
struct SiteOperator {
  int site = 0;
  int dim = 0;
  CVector m;

  Complex at(int r, int c) const { return m[static_cast<std::size_t>(r) * dim + c]; }

  void validate_against(const SiteDims& dims) const {
    if (site < 0 || site >= dims.site_count())
      throw DimensionError("site index " + std::to_string(site) +
                           " out of range");
    if (dim != dims.dims[site])
      throw DimensionError("operator dimension " + std::to_string(dim) +
                           " does not match site dimension " +
                           std::to_string(dims.dims[site]));
    if (m.size() != static_cast<std::size_t>(dim) * dim)
      throw DimensionError("operator matrix has wrong entry count");
    for (const auto& c : m)
      if (!is_finite(c)) throw ParamError("operator entries must be finite");
  }
};

// Action of I x ... x A x ... x I on a full-space vector.  Within each
// (outer, inner) slice the site index strides by `inner`.
inline CVector embed_apply(const SiteOperator& op, const SiteDims& dims,
                           const CVector& v) {
  op.validate_against(dims);
  if (static_cast<std::int64_t>(v.size()) != dims.total_dim())
    throw DimensionError("vector length does not match total dimension");
  const int d = op.dim;
  const std::int64_t inner = dims.stride(op.site);
  const std::int64_t outer = dims.total_dim() / (inner * d);
  CVector out(v.size(), Complex{0.0, 0.0});
  for (std::int64_t o = 0; o < outer; ++o) {
    const std::int64_t block = o * d * inner;
    for (std::int64_t in = 0; in < inner; ++in) {
      for (int r = 0; r < d; ++r) {
        Complex acc{0.0, 0.0};
        for (int c = 0; c < d; ++c) acc += op.at(r, c) * v[block + c * inner + in];
        out[block + r * inner + in] = acc;
      }
    }
  }
  return out;
}

// Full-space operator, represented implicitly by its single-site factor.
struct EmbeddedOperator {
  SiteOperator op;
  SiteDims dims;

  CVector apply(const CVector& v) const { return embed_apply(op, dims, v); }
};

inline EmbeddedOperator embed(SiteOperator op, SiteDims dims) {
  dims.validate();
  op.validate_against(dims);
  return EmbeddedOperator{std::move(op), std::move(dims)};
}

struct ApplyResult {
  CVector vec;      // unnormalized
  double norm_sq;   // outcome probability when the input state is a unit vector
};

inline ApplyResult apply_and_norm(const SiteOperator& op, const PureState& psi) {
  CVector out = embed_apply(op, psi.dims, psi.amp);
  const double n2 = causalqt::norm_sq(out);
  return ApplyResult{std::move(out), n2};
}

// Rescales to a unit vector.  Throws ZeroNormState when the squared norm is
// at or below kEpsZero; callers that know the reduction chain attach it.
inline PureState normalize(SiteDims dims, CVector vec, double vec_norm_sq) {
  if (!(vec_norm_sq > kEpsZero)) throw ZeroNormState{};
  const double inv = 1.0 / std::sqrt(vec_norm_sq);
  for (auto& c : vec) c *= inv;
  return PureState{std::move(dims), std::move(vec)};
}

}  // namespace causalqt
