#pragma once

// Ruelle transfer operator of a locally constant potential, its Perron data,
// the linear pressure and the Gibbs (linear equilibrium) measure.
//
// For a potential f of memory m the operator acts on functions of the
// leading m-1 symbols:
//   (L g)(b) = sum_a m_a exp(f(a b)) g((a b)_{1..m-1}),
// so it is a k^{m-1} square matrix stored as logarithms of its entries.
// Memory-1 potentials give a scalar operator.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "thermoflat/common.hpp"
#include "thermoflat/measures.hpp"

namespace thermoflat {

struct TransferMatrix {
  CylinderPotential potential;
  AprioriAlphabet alphabet;
  int memory = 1;
  std::size_t states = 1;
  /// log L(b, c); -inf where state c cannot precede state b
  SquareMatrix log_entries;

  double entry(std::size_t b, std::size_t c) const { return std::exp(log_entries(b, c)); }
};

inline TransferMatrix build_transfer(const CylinderPotential& phi) {
  TransferMatrix t;
  t.potential = phi;
  t.alphabet = phi.alphabet();
  t.memory = phi.memory();
  const std::size_t k = phi.k();
  t.states = ipow(k, phi.memory() - 1);
  t.log_entries = SquareMatrix(t.states, -std::numeric_limits<double>::infinity());
  if (phi.memory() == 1) {
    Vector terms(k);
    for (std::size_t a = 0; a < k; ++a) terms[a] = std::log(t.alphabet.weight(a)) + phi.at(a);
    t.log_entries(0, 0) = log_sum_exp(terms);
    return t;
  }
  const std::size_t n = t.states;
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t a = 0; a < k; ++a) {
      const std::size_t word = a * n + b;  // a prepended to b
      const std::size_t c = word / k;      // leading m-1 symbols
      t.log_entries(b, c) = std::log(t.alphabet.weight(a)) + phi.at(word);
    }
  return t;
}

struct RPFData {
  double log_lambda = 0.0;
  Vector h;      ///< right eigenvector, max entry 1
  Vector log_h;
  Vector nu;     ///< left eigenvector, probability vector over states
  MarkovMeasure gibbs;
  CylinderPotential normalized_potential;
  double eigen_residual = 0.0;    ///< |L h - lambda h|_inf / lambda
  double adjoint_residual = 0.0;  ///< |nu L - lambda nu|_inf / lambda
};

namespace detail {

/// out(i) = logsumexp_j (A(i, j) + v(j))
inline Vector log_matvec(const SquareMatrix& a, const Vector& v) {
  Vector out(a.n);
  Vector terms(a.n);
  for (std::size_t i = 0; i < a.n; ++i) {
    for (std::size_t j = 0; j < a.n; ++j) terms[j] = a(i, j) + v[j];
    out[i] = log_sum_exp(terms);
  }
  return out;
}

inline SquareMatrix log_transpose(const SquareMatrix& a) {
  SquareMatrix t(a.n);
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t j = 0; j < a.n; ++j) t(j, i) = a(i, j);
  return t;
}

/// Log-domain product renormalized so that its largest entry is 0.
inline SquareMatrix log_square(const SquareMatrix& a) {
  SquareMatrix out(a.n);
  Vector terms(a.n);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t j = 0; j < a.n; ++j) {
      for (std::size_t m = 0; m < a.n; ++m) terms[m] = a(i, m) + a(m, j);
      out(i, j) = log_sum_exp(terms);
      mx = std::max(mx, out(i, j));
    }
  for (double& v : out.a) v -= mx;
  return out;
}

/// Polishes a Perron vector estimate when its residual is poor (slow power
/// iteration, e.g. nearly periodic operators): the similarity transform
/// D^-1 A D / lambda with D = diag(v) is well scaled and its dominant
/// eigenvector, found by a dense eigensolver, corrects v.
inline Vector refine_perron(const SquareMatrix& a, Vector v) {
  const std::size_t n = a.n;
  const auto idx = [](std::size_t i) { return static_cast<Eigen::Index>(i); };
  for (int pass = 0; pass < 3; ++pass) {
    const Vector w = log_matvec(a, v);
    const std::size_t top = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    const double ll = w[top] - v[top];
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) res = std::max(res, std::abs(std::exp(w[i] - ll) - std::exp(v[i])));
    if (res < 1e-13) break;
    Eigen::MatrixXd b(idx(n), idx(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) b(idx(i), idx(j)) = std::exp(a(i, j) + v[j] - v[i] - ll);
    Eigen::EigenSolver<Eigen::MatrixXd> es(b);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < idx(n); ++i)
      if (es.eigenvalues()[i].real() > es.eigenvalues()[best].real()) best = i;
    Eigen::VectorXd u = es.eigenvectors().col(best).real();
    if (u.sum() < 0) u = -u;
    if (u.minCoeff() <= 0.0) break;
    for (std::size_t i = 0; i < n; ++i) v[i] += std::log(u[idx(i)]);
    const double mx = *std::max_element(v.begin(), v.end());
    for (double& x : v) x -= mx;
  }
  return v;
}

/// Perron vector of a primitive nonnegative matrix given in log form,
/// normalized so that its largest log-entry is 0. Power iteration; every
/// 32 steps the operator is squared, which leaves the Perron vector unchanged
/// and squares the convergence ratio.
inline Vector log_perron_vector(const SquareMatrix& original) {
  SquareMatrix a = original;
  Vector v(a.n, 0.0);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < Tolerances::power_iteration_cap; ++it) {
    Vector w = log_matvec(a, v);
    const double mx = *std::max_element(w.begin(), w.end());
    if (!std::isfinite(mx)) throw SolverError("power iteration: degenerate operator");
    double delta = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] -= mx;
      const double d = (std::isinf(w[i]) && std::isinf(v[i])) ? 0.0 : std::abs(w[i] - v[i]);
      delta = std::max(delta, d);
    }
    v.swap(w);
    // remaining error ~ delta * rho / (1 - rho), rho the observed contraction
    const double rho = prev > 0 ? delta / prev : 0.0;
    prev = delta;
    if (it > 0 && (delta == 0.0 || (rho < 1.0 && delta / (1.0 - rho) < Tolerances::power_iteration)))
      return refine_perron(original, std::move(v));
    if (it % 32 == 31) {
      a = log_square(a);
      prev = std::numeric_limits<double>::infinity();
    }
  }
  throw SolverError("power iteration did not converge");
}

}  // namespace detail

inline RPFData rpf_solve(const TransferMatrix& t) {
  RPFData out;
  const CylinderPotential& phi = t.potential;
  const AprioriAlphabet& alpha = t.alphabet;
  const std::size_t k = alpha.size();
  if (t.memory == 1) {
    out.log_lambda = t.log_entries(0, 0);
    out.h = {1.0};
    out.log_h = {0.0};
    out.nu = {1.0};
    Vector p(k), table(k);
    for (std::size_t a = 0; a < k; ++a) {
      p[a] = std::exp(std::log(alpha.weight(a)) + phi.at(a) - out.log_lambda);
      table[a] = phi.at(a) - out.log_lambda;
    }
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= s;
    out.gibbs = MarkovMeasure::product(k, std::move(p));
    out.normalized_potential = CylinderPotential(alpha, 1, std::move(table), phi.name() + "~");
    return out;
  }
  const std::size_t n = t.states;
  out.log_h = detail::log_perron_vector(t.log_entries);
  const SquareMatrix adjoint = detail::log_transpose(t.log_entries);
  Vector log_nu = detail::log_perron_vector(adjoint);
  {
    const double lz = log_sum_exp(log_nu);
    for (double& v : log_nu) v -= lz;
  }
  // Rayleigh quotient log(nu L h) - log(nu h)
  const Vector lh = detail::log_matvec(t.log_entries, out.log_h);
  Vector num(n), den(n);
  for (std::size_t i = 0; i < n; ++i) {
    num[i] = log_nu[i] + lh[i];
    den[i] = log_nu[i] + out.log_h[i];
  }
  out.log_lambda = log_sum_exp(num) - log_sum_exp(den);

  out.h.resize(n);
  out.nu.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.h[i] = std::exp(out.log_h[i]);
    out.nu[i] = std::exp(log_nu[i]);
  }
  const Vector lnu_l = detail::log_matvec(adjoint, log_nu);
  for (std::size_t i = 0; i < n; ++i) {
    out.eigen_residual = std::max(out.eigen_residual, std::abs(std::exp(lh[i] - out.log_lambda) - out.h[i]));
    out.adjoint_residual =
        std::max(out.adjoint_residual, std::abs(std::exp(lnu_l[i] - out.log_lambda) - out.nu[i]));
  }
  if (out.eigen_residual > Tolerances::eigen_residual || out.adjoint_residual > Tolerances::eigen_residual)
    throw SolverError("rpf_solve: eigen residual above tolerance");

  // Forward chain on states: Q(u, v) = L(v, u) nu(v) / (lambda nu(u)),
  // stationary law proportional to h(u) nu(u).
  SquareMatrix q(n);
  for (std::size_t u = 0; u < n; ++u) {
    double row = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      const double l = t.log_entries(v, u);
      if (std::isinf(l)) continue;
      q(u, v) = std::exp(l + log_nu[v] - out.log_lambda - log_nu[u]);
      row += q(u, v);
    }
    for (std::size_t v = 0; v < n; ++v) q(u, v) /= row;
  }
  Vector lpi(n);
  for (std::size_t i = 0; i < n; ++i) lpi[i] = out.log_h[i] + log_nu[i];
  const double lz = log_sum_exp(lpi);
  Vector pi(n);
  for (std::size_t i = 0; i < n; ++i) pi[i] = std::exp(lpi[i] - lz);
  out.gibbs = MarkovMeasure::chain(k, t.memory - 1, q, pi);

  // f + ln h(w_{1..m-1}) - ln h(w_{2..m}) - ln lambda
  Vector table(phi.words());
  for (std::size_t w = 0; w < table.size(); ++w)
    table[w] = phi.at(w) + out.log_h[w / k] - out.log_h[w % n] - out.log_lambda;
  out.normalized_potential = CylinderPotential(alpha, phi.memory(), std::move(table), phi.name() + "~");
  return out;
}

/// Perron data, Gibbs measure and normalized potential of phi.
inline RPFData rpf_solve(const CylinderPotential& phi) { return rpf_solve(build_transfer(phi)); }

/// Linear pressure log lambda_phi = sup_mu { h(mu) + mu(phi) }.
inline double linear_pressure(const CylinderPotential& phi) {
  const TransferMatrix t = build_transfer(phi);
  if (phi.memory() == 1) return t.log_entries(0, 0);
  // h has max log-entry 0; read lambda off that coordinate
  const Vector lh = detail::log_perron_vector(t.log_entries);
  const Vector next = detail::log_matvec(t.log_entries, lh);
  const std::size_t top = static_cast<std::size_t>(std::max_element(lh.begin(), lh.end()) - lh.begin());
  return next[top] - lh[top];
}

/// Entropy of the Gibbs measure through the variational identity
/// h(mu_phi) = log lambda - mu_phi(phi).
inline double entropy_of_gibbs(const RPFData& rpf, const CylinderPotential& phi) {
  return rpf.log_lambda - expectation(rpf.gibbs, phi);
}

/// Transfer operator of phi applied to the constant function 1, per state.
inline Vector apply_to_one(const CylinderPotential& phi) {
  const TransferMatrix t = build_transfer(phi);
  Vector out(t.states);
  Vector row(t.states);
  for (std::size_t b = 0; b < t.states; ++b) {
    for (std::size_t c = 0; c < t.states; ++c) row[c] = t.log_entries(b, c);
    out[b] = std::exp(log_sum_exp(row));
  }
  return out;
}

}  // namespace thermoflat
