#pragma once

// Brute-force references for the nonlinear pressure that share no code with
// the linearization solver:
//  * direct_pressure scans product measures (memory 1) or order-1 Markov
//    chains (memory 2, binary alphabet) and evaluates P(mu) directly;
//  * bkl_pressure maximizes F(z) + h(z) over reachable order parameters z,
//    with the constrained entropy h(z) = inf_y {P_L(y.psi) - y.z}.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "thermoflat/common.hpp"
#include "thermoflat/measures.hpp"
#include "thermoflat/model.hpp"
#include "thermoflat/optim.hpp"
#include "thermoflat/parallel.hpp"
#include "thermoflat/ruelle.hpp"

namespace thermoflat {

struct DirectResult {
  double value = 0.0;
  MarkovMeasure argmax;
  Vector params;  ///< free simplex coordinates, or (Q01, Q10) for chains
};

namespace detail {

inline int max_memory(const ModelSpec& model) {
  int mem = model.base ? model.base->memory() : 1;
  for (const auto& p : model.plus) mem = std::max(mem, p.memory());
  for (const auto& p : model.minus) mem = std::max(mem, p.memory());
  return mem;
}

/// Grid scan over a box of free coordinates followed by three rounds of
/// local rescans at ten times the density, each over +-3 previous cells.
/// `measure` returns nullopt for infeasible parameters.
template <class MakeMeasure>
DirectResult refine_scan(const ModelSpec& model, std::size_t dim, int resolution, const MakeMeasure& measure,
                         const std::vector<Vector>& extra) {
  auto value_at = [&](const Vector& x) -> ExtReal {
    const std::optional<MarkovMeasure> mu = measure(x);
    if (!mu) return ExtReal::neg_inf();
    return direct_nonlinear_pressure(model, *mu);
  };
  auto scan = [&](const std::vector<Vector>& pts, std::size_t& best, ExtReal& best_v) {
    std::vector<ExtReal> v(pts.size());
    parallel_for(pts.size(), [&](std::size_t i) { v[i] = value_at(pts[i]); });
    for (std::size_t i = 0; i < pts.size(); ++i)
      if (v[i] > best_v) {
        best_v = v[i];
        best = i;
      }
  };
  auto lattice = [&](const Vector& centre, double h, int half) {
    std::vector<Vector> pts;
    const int side = 2 * half + 1;
    const std::size_t total = ipow(static_cast<std::size_t>(side), static_cast<int>(dim));
    for (std::size_t t = 0; t < total; ++t) {
      Vector x(dim);
      std::size_t rest = t;
      bool inside = true;
      for (std::size_t i = 0; i < dim; ++i) {
        x[i] = centre[i] + h * (static_cast<int>(rest % side) - half);
        rest /= side;
        if (x[i] < -1e-15 || x[i] > 1 + 1e-15) inside = false;
        x[i] = std::clamp(x[i], 0.0, 1.0);
      }
      if (inside) pts.push_back(x);
    }
    return pts;
  };

  double h = 1.0 / (resolution - 1);
  std::vector<Vector> pts = lattice(Vector(dim, 0.5), h, (resolution - 1) / 2);
  if ((resolution - 1) % 2 != 0) pts = lattice(Vector(dim, 0.0), h, resolution - 1);
  pts.insert(pts.end(), extra.begin(), extra.end());
  std::size_t best = 0;
  ExtReal best_v = ExtReal::neg_inf();
  scan(pts, best, best_v);
  Vector incumbent = pts[best];
  for (int round = 0; round < 3; ++round) {
    h /= 10.0;
    pts = lattice(incumbent, h, 30);
    std::size_t b = 0;
    ExtReal v = best_v;
    scan(pts, b, v);
    if (v > best_v) {
      best_v = v;
      incumbent = pts[b];
    }
  }
  if (!best_v.is_finite()) throw SolverError("direct oracle: no finite value found");
  return {best_v.value(), *measure(incumbent), incumbent};
}

}  // namespace detail

/// Brute-force sup of P(mu) over product measures (memory-1 models) or
/// order-1 Markov chains on a binary alphabet (memory-2 models).
inline DirectResult direct_pressure(const ModelSpec& model, int resolution = 101) {
  model.validate();
  if (resolution < 11) throw ModelError("direct oracle: resolution below 11 is too coarse");
  const std::size_t k = model.alphabet.size();
  const int mem = detail::max_memory(model);
  if (mem == 1) {
    if (k > 4) throw ModelError("direct oracle: product scan supports k <= 4");
    const std::size_t dim = k - 1;
    auto measure = [k, dim](const Vector& x) -> std::optional<MarkovMeasure> {
      double s = 0.0;
      for (double v : x) s += v;
      if (s > 1.0 + 1e-12) return std::nullopt;
      Vector p(x.begin(), x.end());
      p.push_back(std::max(0.0, 1.0 - s));
      const double z = s + p[dim];
      for (double& v : p) v /= z;
      return MarkovMeasure::product(k, std::move(p));
    };
    std::vector<Vector> extra{Vector(dim, 1.0 / static_cast<double>(k))};
    for (std::size_t i = 0; i < dim; ++i) {
      Vector v(dim, 0.0);
      v[i] = 1.0;
      extra.push_back(v);
    }
    extra.emplace_back(dim, 0.0);
    return detail::refine_scan(model, dim, resolution, measure, extra);
  }
  if (mem == 2) {
    if (k != 2) throw ModelError("direct oracle: memory-2 scan supports the binary alphabet only");
    auto measure = [](const Vector& x) -> std::optional<MarkovMeasure> {
      return MarkovMeasure::chain({{1.0 - x[0], x[0]}, {x[1], 1.0 - x[1]}}, false);
    };
    return detail::refine_scan(model, 2, resolution, measure, {{0.5, 0.5}});
  }
  throw ModelError("direct oracle: potentials of memory > 2 are not supported");
}

// ---------------------------------------------------------------- BKL route

/// Potentials reduced modulo constants and coboundaries: for every
/// invariant mu, mu(phi_i) = mean_i + sum_j A(i, j) mu(psi_j), with the psi_j
/// orthonormal in table space.
struct ReducedPotentials {
  std::vector<CylinderPotential> psi;
  Eigen::MatrixXd a;   ///< inputs x reduced
  Vector mean;         ///< per input
  Vector z_lo, z_hi;   ///< range of each psi_j
};

inline ReducedPotentials reduce_potentials(const AprioriAlphabet& alphabet, const std::vector<CylinderPotential>& phis) {
  const std::size_t k = alphabet.size();
  int mem = 1;
  for (const auto& p : phis) mem = std::max(mem, p.memory());
  const std::size_t words = ipow(k, mem);
  // null space: constants and g(w_2..m) - g(w_1..m-1)
  std::vector<Eigen::VectorXd> null_gen{Eigen::VectorXd::Ones(static_cast<Eigen::Index>(words))};
  if (mem > 1) {
    const std::size_t states = ipow(k, mem - 1);
    for (std::size_t u = 0; u < states; ++u) {
      Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(words));
      for (std::size_t w = 0; w < words; ++w) {
        if (w % states == u) c[static_cast<Eigen::Index>(w)] += 1.0;
        if (w / k == u) c[static_cast<Eigen::Index>(w)] -= 1.0;
      }
      null_gen.push_back(c);
    }
  }
  Eigen::MatrixXd nmat(static_cast<Eigen::Index>(words), static_cast<Eigen::Index>(null_gen.size()));
  for (std::size_t j = 0; j < null_gen.size(); ++j) nmat.col(static_cast<Eigen::Index>(j)) = null_gen[j];
  Eigen::JacobiSVD<Eigen::MatrixXd> nsvd(nmat, Eigen::ComputeThinU);
  const Eigen::Index nrank = (nsvd.singularValues().array() > 1e-10).count();
  const Eigen::MatrixXd nbasis = nsvd.matrixU().leftCols(nrank);

  Eigen::MatrixXd proj(static_cast<Eigen::Index>(words), static_cast<Eigen::Index>(phis.size()));
  for (std::size_t i = 0; i < phis.size(); ++i) {
    phis[i].check_alphabet(alphabet);
    const Vector t = phis[i].padded(mem).table();
    const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(t.data(), static_cast<Eigen::Index>(words));
    proj.col(static_cast<Eigen::Index>(i)) = v - nbasis * (nbasis.transpose() * v);
  }
  ReducedPotentials r;
  Eigen::Index rank = 0;
  Eigen::MatrixXd basis;
  if (proj.cols() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(proj, Eigen::ComputeThinU);
    rank = (svd.singularValues().array() > 1e-10 * std::max(1.0, svd.singularValues()(0))).count();
    basis = svd.matrixU().leftCols(rank);
  }
  r.a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(phis.size()), rank);
  for (Eigen::Index j = 0; j < rank; ++j) {
    Eigen::VectorXd col = basis.col(j);
    // fix the sign for reproducibility: first significant entry positive
    for (Eigen::Index w = 0; w < col.size(); ++w)
      if (std::abs(col[w]) > 1e-12) {
        if (col[w] < 0) col = -col;
        break;
      }
    Vector t(col.data(), col.data() + col.size());
    r.z_lo.push_back(col.minCoeff());
    r.z_hi.push_back(col.maxCoeff());
    r.psi.emplace_back(alphabet, mem, std::move(t), "psi" + std::to_string(j));
    for (std::size_t i = 0; i < phis.size(); ++i) r.a(static_cast<Eigen::Index>(i), j) = proj.col(static_cast<Eigen::Index>(i)).dot(col);
  }
  // mean_i: expectation of the null-space part under the uniform product measure
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const Vector t = phis[i].padded(mem).table();
    double s = 0.0;
    for (std::size_t w = 0; w < words; ++w) {
      double v = t[w];
      for (Eigen::Index j = 0; j < rank; ++j) v -= r.a(static_cast<Eigen::Index>(i), j) * r.psi[j].at(w);
      s += v;
    }
    r.mean.push_back(s / static_cast<double>(words));
  }
  return r;
}

struct BklEntropy {
  double value = 0.0;
  Vector y;               ///< minimizing tilt
  bool boundary = false;  ///< minimizer on the search box
  bool feasible = true;   ///< false when the infimum diverges (z unreachable)
};

namespace detail {

inline CylinderPotential tilt(const std::vector<CylinderPotential>& psi, std::span<const double> y) {
  Vector t(psi.front().words(), 0.0);
  for (std::size_t j = 0; j < psi.size(); ++j)
    for (std::size_t w = 0; w < t.size(); ++w) t[w] += y[j] * psi[j].at(w);
  return {psi.front().alphabet(), psi.front().memory(), std::move(t)};
}

inline double bkl_objective(const std::vector<CylinderPotential>& psi, std::span<const double> z,
                            std::span<const double> y) {
  return linear_pressure(tilt(psi, y)) - dot(y, z);
}

/// Gradient of P_L(y.psi): Gibbs expectations of psi.
inline Vector gibbs_means(const std::vector<CylinderPotential>& psi, std::span<const double> y) {
  const MarkovMeasure mu = rpf_solve(tilt(psi, y)).gibbs;
  return expectations(mu, psi);
}

}  // namespace detail

/// Constrained entropy h(z) = inf_{|y_j| <= R} {P_L(y.psi) - y.z} by a damped
/// Newton method on the convex objective (finite-difference Hessian).
inline BklEntropy bkl_entropy(const std::vector<CylinderPotential>& psi, std::span<const double> z, double radius) {
  const std::size_t d = psi.size();
  if (z.size() != d) throw ModelError("bkl_entropy: dimension mismatch");
  BklEntropy out;
  out.y.assign(d, 0.0);
  auto f = [&](const Vector& y) { return detail::bkl_objective(psi, z, y); };
  if (d == 0) {
    out.value = 0.0;
    return out;
  }
  Vector y(d, 0.0);
  double fy = f(y);
  for (int it = 0; it < 200; ++it) {
    Vector g = detail::gibbs_means(psi, y);
    for (std::size_t j = 0; j < d; ++j) g[j] -= z[j];
    // projected gradient norm
    double gn = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const bool pinned = (y[j] >= radius && g[j] < 0) || (y[j] <= -radius && g[j] > 0);
      if (!pinned) gn = std::max(gn, std::abs(g[j]));
    }
    if (gn < 1e-13) break;
    const double eps = 1e-5;
    Eigen::MatrixXd hess(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) {
      Vector yp = y, ym = y;
      yp[j] += eps;
      ym[j] -= eps;
      const Vector gp = detail::gibbs_means(psi, yp), gm = detail::gibbs_means(psi, ym);
      for (std::size_t i = 0; i < d; ++i)
        hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (gp[i] - gm[i]) / (2 * eps);
    }
    hess = 0.5 * (hess + hess.transpose()).eval();
    hess += 1e-12 * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    const Eigen::VectorXd gv = Eigen::Map<const Eigen::VectorXd>(g.data(), static_cast<Eigen::Index>(d));
    Eigen::VectorXd step = -hess.ldlt().solve(gv);
    if (!step.allFinite() || step.dot(gv) >= 0) step = -gv;
    double t = 1.0;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      Vector cand(d);
      for (std::size_t j = 0; j < d; ++j) cand[j] = std::clamp(y[j] + t * step[static_cast<Eigen::Index>(j)], -radius, radius);
      const double fc = f(cand);
      if (fc < fy - 1e-4 * t * std::abs(step.dot(gv)) || (fc < fy && t < 1e-6)) {
        y = cand;
        fy = fc;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  out.y = y;
  out.value = fy;
  for (double v : y)
    if (std::abs(v) >= radius * (1 - 1e-12)) out.boundary = true;
  if (out.boundary) {
    Vector far = y;
    for (double& v : far) v *= 2.0;
    if (f(far) < fy - 1e-6 * radius) out.feasible = false;
  }
  return out;
}

struct BklResult {
  double value = 0.0;
  Vector z;  ///< maximizing reduced order parameters
  ReducedPotentials reduced;
};

/// sup over reachable z of F(z) + h(z), where F collects the affine part and
/// the nonlinearities expressed through the reduced order parameters.
/// Requires a reduced dimension of at most 2.
inline BklResult bkl_pressure(const ModelSpec& model, int resolution = 41, double radius = 40.0) {
  model.validate();
  if (resolution < 5) throw ModelError("bkl oracle: resolution below 5");
  std::vector<CylinderPotential> all;
  if (model.base) all.push_back(*model.base);
  const std::size_t off_plus = all.size();
  if (model.g_plus) all.insert(all.end(), model.plus.begin(), model.plus.end());
  const std::size_t off_minus = all.size();
  if (model.g_minus) all.insert(all.end(), model.minus.begin(), model.minus.end());
  BklResult res;
  res.reduced = reduce_potentials(model.alphabet, all);
  const ReducedPotentials& red = res.reduced;
  const std::size_t d = red.psi.size();
  if (d > 2) throw ModelError("bkl oracle: reduced dimension above 2");

  auto tau = [&](std::span<const double> z, std::size_t from, std::size_t count) {
    Vector t(count);
    for (std::size_t i = 0; i < count; ++i) {
      t[i] = red.mean[from + i];
      for (std::size_t j = 0; j < d; ++j) t[i] += red.a(static_cast<Eigen::Index>(from + i), static_cast<Eigen::Index>(j)) * z[j];
    }
    return t;
  };
  const optim::Objective objective = [&](std::span<const double> z) -> ExtReal {
    const BklEntropy h = bkl_entropy(red.psi, z, radius);
    if (!h.feasible) return ExtReal::neg_inf();
    ExtReal v = h.value;
    if (model.base) v = v + tau(z, 0, 1)[0];
    if (model.g_plus) v = v + model.g_plus->value(tau(z, off_plus, model.plus.size()));
    if (model.g_minus) {
      const ExtReal gm = model.g_minus->value(tau(z, off_minus, model.minus.size()));
      if (gm.is_pos_inf()) return ExtReal::neg_inf();
      v = v - gm;
    }
    return v;
  };
  if (d == 0) {
    res.value = objective(Vector{}).to_double();
    return res;
  }
  // coarse grid over the box of ranges, then local refinement
  std::vector<Vector> axes(d);
  for (std::size_t j = 0; j < d; ++j) axes[j] = linspace(red.z_lo[j], red.z_hi[j], static_cast<std::size_t>(resolution));
  const std::size_t total = ipow(static_cast<std::size_t>(resolution), static_cast<int>(d));
  std::vector<ExtReal> vals(total);
  auto node = [&](std::size_t t) {
    Vector z(d);
    for (std::size_t j = d; j-- > 0;) {
      z[j] = axes[j][t % resolution];
      t /= resolution;
    }
    return z;
  };
  parallel_for(total, [&](std::size_t t) { vals[t] = objective(node(t)); });
  // refine the best few grid nodes
  std::vector<std::size_t> order(total);
  for (std::size_t t = 0; t < total; ++t) order[t] = t;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[b] < vals[a]; });
  const std::size_t starts = std::min<std::size_t>(d == 1 ? 4 : 6, total);
  std::vector<optim::Point> refined(starts);
  parallel_for(starts, [&](std::size_t s) {
    const Vector z0 = node(order[s]);
    if (d == 1) {
      const double h = axes[0][1] - axes[0][0];
      const auto p = optim::golden_max([&](double z) { return objective(Vector{z}); },
                                       std::max(red.z_lo[0], z0[0] - h), std::min(red.z_hi[0], z0[0] + h));
      refined[s] = p.value >= vals[order[s]] ? optim::Point{{p.x}, p.value} : optim::Point{z0, vals[order[s]]};
    } else {
      const double h = std::min(axes[0][1] - axes[0][0], axes[1][1] - axes[1][0]);
      const double lo = std::min(red.z_lo[0], red.z_lo[1]), hi = std::max(red.z_hi[0], red.z_hi[1]);
      optim::Point p = optim::nelder_mead_max(objective, z0, 0.5 * h, lo, hi);
      refined[s] = optim::coordinate_polish_max(objective, p, 0.25 * h, lo, hi);
    }
  });
  optim::Point best = refined.front();
  for (const auto& p : refined)
    if (p.value > best.value) best = p;
  if (!best.value.is_finite()) throw SolverError("bkl oracle: no feasible order parameter found");
  res.value = best.value.value();
  res.z = best.x;
  return res;
}

}  // namespace thermoflat
