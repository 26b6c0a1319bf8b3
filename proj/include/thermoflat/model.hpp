#pragma once

// The nonlinear model: an affine part `base`, order parameters
// tau+-(mu) = (mu(phi+-_i))_i and convex nonlinearities g+-, i.e.
//   P(mu) = h(mu) + mu(base) - g-(tau-(mu)) + g+(tau+(mu)).

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "thermoflat/convex.hpp"
#include "thermoflat/measures.hpp"

namespace thermoflat {

struct ModelSpec {
  AprioriAlphabet alphabet;
  std::vector<CylinderPotential> plus;
  std::vector<CylinderPotential> minus;
  std::optional<ConvexSpec> g_plus;
  std::optional<ConvexSpec> g_minus;
  std::optional<CylinderPotential> base;
  std::string label;

  /// Dual dimensions; an absent g drops its side entirely.
  std::size_t n_plus() const { return g_plus ? plus.size() : 0; }
  std::size_t n_minus() const { return g_minus ? minus.size() : 0; }

  void validate() const {
    if (!g_plus && !g_minus) throw ModelError("model: at least one of g_plus, g_minus is required");
    auto side = [&](const std::vector<CylinderPotential>& phis, const std::optional<ConvexSpec>& g, const char* name) {
      if (!g) return;
      if (phis.empty()) throw ModelError(std::string("model: ") + name + " side has no potentials");
      if (g->dim() != phis.size())
        throw ModelError(std::string("model: dimension of g_") + name + " does not match its potentials");
      for (const auto& p : phis) p.check_alphabet(alphabet);
    };
    side(plus, g_plus, "plus");
    side(minus, g_minus, "minus");
    if (base) base->check_alphabet(alphabet);
  }

  /// Euclidean norm of the vector of sup norms: bounds |tau(mu)| and the
  /// Lipschitz constant of y -> P_L(y . phi).
  static double lipschitz(const std::vector<CylinderPotential>& phis) {
    double s = 0.0;
    for (const auto& p : phis) s += p.sup_norm() * p.sup_norm();
    return std::sqrt(s);
  }
};

/// Order parameters tau(mu) on one side.
inline Vector order_parameters(const std::vector<CylinderPotential>& phis, const MarkovMeasure& mu) {
  return expectations(mu, phis);
}

/// Nonlinear pressure functional evaluated directly at mu.
inline ExtReal direct_nonlinear_pressure(const ModelSpec& model, const MarkovMeasure& mu) {
  ExtReal v = entropy_rate(mu, model.alphabet);
  if (model.base) v = v + expectation(mu, *model.base);
  if (model.g_minus) {
    const ExtReal gm = model.g_minus->value(order_parameters(model.minus, mu));
    if (gm.is_pos_inf()) return ExtReal::neg_inf();
    v = v - gm;
  }
  if (model.g_plus) v = v + model.g_plus->value(order_parameters(model.plus, mu));
  return v;
}

}  // namespace thermoflat
