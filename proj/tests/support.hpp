#pragma once

// Shared test-side machinery.  The matrix oracle here is deliberately
// written from scratch (dense row-major, explicit Kronecker products,
// textbook Gram-Schmidt) so library results are checked against an
// independent code path, not against themselves.

#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <sys/wait.h>
#include <utility>
#include <vector>

#include "causalqt/collapse.hpp"
#include "causalqt/engine.hpp"

namespace testsupport {

using causalqt::Complex;
using causalqt::CVector;

struct TestMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<Complex> a;

  TestMatrix() = default;
  TestMatrix(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c) {}

  Complex& at(int r, int c) { return a[static_cast<std::size_t>(r) * cols + c]; }
  const Complex& at(int r, int c) const {
    return a[static_cast<std::size_t>(r) * cols + c];
  }
};

inline TestMatrix identity(int n) {
  TestMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

inline TestMatrix matmul(const TestMatrix& x, const TestMatrix& y) {
  if (x.cols != y.rows) throw std::logic_error("matmul shape mismatch");
  TestMatrix out(x.rows, y.cols);
  for (int r = 0; r < x.rows; ++r)
    for (int k = 0; k < x.cols; ++k) {
      const Complex v = x.at(r, k);
      for (int c = 0; c < y.cols; ++c) out.at(r, c) += v * y.at(k, c);
    }
  return out;
}

inline TestMatrix dagger(const TestMatrix& x) {
  TestMatrix out(x.cols, x.rows);
  for (int r = 0; r < x.rows; ++r)
    for (int c = 0; c < x.cols; ++c) out.at(c, r) = std::conj(x.at(r, c));
  return out;
}

inline TestMatrix kron(const TestMatrix& x, const TestMatrix& y) {
  TestMatrix out(x.rows * y.rows, x.cols * y.cols);
  for (int xr = 0; xr < x.rows; ++xr)
    for (int xc = 0; xc < x.cols; ++xc)
      for (int yr = 0; yr < y.rows; ++yr)
        for (int yc = 0; yc < y.cols; ++yc)
          out.at(xr * y.rows + yr, xc * y.cols + yc) = x.at(xr, xc) * y.at(yr, yc);
  return out;
}

inline CVector matvec(const TestMatrix& x, const CVector& v) {
  if (x.cols != static_cast<int>(v.size()))
    throw std::logic_error("matvec shape mismatch");
  CVector out(static_cast<std::size_t>(x.rows));
  for (int r = 0; r < x.rows; ++r) {
    Complex acc = 0.0;
    for (int c = 0; c < x.cols; ++c) acc += x.at(r, c) * v[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
  return out;
}

inline TestMatrix as_matrix(const causalqt::SiteOperator& op) {
  TestMatrix m(op.dim, op.dim);
  m.a = op.m;
  return m;
}

// Full-space embedding by an explicit Kronecker chain of identities.
inline TestMatrix explicit_embed(const causalqt::SiteOperator& op,
                                 const causalqt::SiteDims& dims) {
  TestMatrix out = identity(1);
  for (int s = 0; s < dims.site_count(); ++s) {
    const TestMatrix factor = s == op.site
                                  ? as_matrix(op)
                                  : identity(dims.dims[static_cast<std::size_t>(s)]);
    out = kron(out, factor);
  }
  return out;
}

inline double max_abs_diff(const CVector& x, const CVector& y) {
  if (x.size() != y.size()) throw std::logic_error("length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    worst = std::max(worst, std::abs(x[i] - y[i]));
  return worst;
}

inline double max_abs_diff(const std::vector<double>& x,
                           const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::logic_error("length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    worst = std::max(worst, std::abs(x[i] - y[i]));
  return worst;
}

inline CVector random_state(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVector v(static_cast<std::size_t>(dim));
  double nsq = 0.0;
  while (nsq < 1e-6) {
    for (auto& z : v) z = Complex{g(rng), g(rng)};
    nsq = 0.0;
    for (const auto& z : v) nsq += std::norm(z);
  }
  const double inv = 1.0 / std::sqrt(nsq);
  for (auto& z : v) z *= inv;
  return v;
}

// Random complete Kraus set: Gram-Schmidt the columns of a Gaussian
// (n_outcomes*dim) x dim matrix into an isometry V, then slice V into
// n_outcomes row blocks.  Sum A_j^dag A_j = V^dag V = I by construction.
inline causalqt::KrausSet random_kraus(std::mt19937_64& rng, int dim,
                                       int n_outcomes) {
  std::normal_distribution<double> g(0.0, 1.0);
  const int tall = n_outcomes * dim;
  TestMatrix v(tall, dim);
  for (auto& z : v.a) z = Complex{g(rng), g(rng)};
  for (int pass = 0; pass < 2; ++pass) {
    for (int c = 0; c < dim; ++c) {
      for (int prev = 0; prev < c; ++prev) {
        Complex overlap = 0.0;
        for (int r = 0; r < tall; ++r)
          overlap += std::conj(v.at(r, prev)) * v.at(r, c);
        for (int r = 0; r < tall; ++r) v.at(r, c) -= overlap * v.at(r, prev);
      }
      double nsq = 0.0;
      for (int r = 0; r < tall; ++r) nsq += std::norm(v.at(r, c));
      const double inv = 1.0 / std::sqrt(nsq);
      for (int r = 0; r < tall; ++r) v.at(r, c) *= inv;
    }
  }
  std::vector<CVector> ops;
  for (int j = 0; j < n_outcomes; ++j) {
    CVector op;
    op.reserve(static_cast<std::size_t>(dim) * dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) op.push_back(v.at(j * dim + r, c));
    ops.push_back(std::move(op));
  }
  return causalqt::KrausSet::validated(dim, std::move(ops));
}

// Closed-form eigenvalues of a 2x2 Hermitian matrix, ascending.
inline std::array<double, 2> hermitian2x2_eigs(const TestMatrix& m) {
  const double a = m.at(0, 0).real();
  const double d = m.at(1, 1).real();
  const double mean = 0.5 * (a + d);
  const double rad = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(m.at(0, 1)));
  return {mean - rad, mean + rad};
}

// ── random scenarios ──────────────────────────────────────────────────────

inline causalqt::KrausSet random_site_kraus(std::mt19937_64& rng, int dim) {
  std::uniform_real_distribution<double> angle(-3.1, 3.1);
  std::uniform_int_distribution<int> outcomes(2, 3);
  if (dim == 2) {
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
      case 0: return causalqt::projective_qubit(angle(rng));
      case 1:
        return causalqt::softened_projectors(
            angle(rng), std::uniform_real_distribution<double>(0.05, 0.5)(rng));
      default: return random_kraus(rng, 2, outcomes(rng));
    }
  }
  return random_kraus(rng, dim, outcomes(rng));
}

inline causalqt::ReductionEvent make_event(int id, int site,
                                           causalqt::Vec3 pos, double t,
                                           causalqt::KrausSet kraus) {
  causalqt::ReductionEvent ev;
  ev.id = id;
  ev.site = site;
  ev.point = causalqt::SpacetimePoint{pos, t};
  ev.kraus = std::move(kraus);
  return ev;
}

// Three sites scattered in a unit box, events with spaced-out times so the
// causal graph mixes spacelike and timelike pairs.
inline causalqt::Scenario random_scenario(std::mt19937_64& rng,
                                          int n_events = 4) {
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> jitter(0.0, 0.3);
  std::uniform_int_distribution<int> dim_pick(2, 3);
  causalqt::Scenario sc;
  sc.dims.dims = {dim_pick(rng), dim_pick(rng), dim_pick(rng)};
  for (int s = 0; s < 3; ++s)
    sc.site_positions.push_back(
        causalqt::Vec3{coord(rng), coord(rng), coord(rng)});
  sc.initial.push_back(causalqt::WeightedState{
      1.0, causalqt::PureState::make(
               sc.dims, random_state(rng, static_cast<int>(sc.dims.total_dim())))});
  std::uniform_int_distribution<int> site_pick(0, 2);
  for (int k = 0; k < n_events; ++k) {
    const int site = site_pick(rng);
    const double t = 0.4 + 0.6 * k + jitter(rng);
    sc.events.push_back(make_event(
        k, site, sc.site_positions[static_cast<std::size_t>(site)], t,
        random_site_kraus(rng, sc.dims.dims[static_cast<std::size_t>(site)])));
  }
  sc.validate();
  return sc;
}

// Every pair of events timelike: sites within diameter 0.1 light-seconds,
// consecutive event times at least 0.3 s apart.
inline causalqt::Scenario random_chain_scenario(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim_pick(2, 3);
  std::uniform_int_distribution<int> nsite_pick(2, 3);
  std::uniform_real_distribution<double> jitter(0.0, 0.2);
  causalqt::Scenario sc;
  const int n_sites = nsite_pick(rng);
  for (int s = 0; s < n_sites; ++s) {
    sc.dims.dims.push_back(dim_pick(rng));
    sc.site_positions.push_back(causalqt::Vec3{0.05 * s / (n_sites - 1), 0.0, 0.0});
  }
  sc.initial.push_back(causalqt::WeightedState{
      1.0, causalqt::PureState::make(
               sc.dims, random_state(rng, static_cast<int>(sc.dims.total_dim())))});
  std::uniform_int_distribution<int> site_pick(0, n_sites - 1);
  const int n_events = std::uniform_int_distribution<int>(2, 4)(rng);
  for (int k = 0; k < n_events; ++k) {
    const int site = site_pick(rng);
    const double t = 1.0 + 0.5 * k + jitter(rng);
    sc.events.push_back(make_event(
        k, site, sc.site_positions[static_cast<std::size_t>(site)], t,
        random_site_kraus(rng, sc.dims.dims[static_cast<std::size_t>(site)])));
  }
  sc.validate();
  return sc;
}

// Random outcome for every event, keyed by id.
inline std::map<int, int> random_history(std::mt19937_64& rng,
                                         const causalqt::Scenario& sc) {
  std::map<int, int> history;
  for (const auto& ev : sc.events)
    history[ev.id] = std::uniform_int_distribution<int>(
        0, ev.kraus.outcome_count() - 1)(rng);
  return history;
}

// ── CLI harness ───────────────────────────────────────────────────────────

struct CliResult {
  int exit_code = -1;
  std::string out;
};

inline CliResult run_cli(const std::string& command, bool merge_stderr = false) {
  const std::string full =
      command + (merge_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* pipe = popen(full.c_str(), "r");
  if (!pipe) throw std::runtime_error("popen failed for: " + full);
  CliResult res;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, n);
  const int status = pclose(pipe);
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

}  // namespace testsupport
