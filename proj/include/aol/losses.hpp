#pragma once

#include <array>
#include <string_view>

namespace aol {

enum class Loss {
  hinge,
  squared_hinge,
  least_squares,
  huberized_hinge,
  logistic,
  dwd,
  exponential,
};

inline constexpr std::array<Loss, 7> kAllLosses = {
    Loss::hinge,          Loss::squared_hinge, Loss::least_squares, Loss::huberized_hinge,
    Loss::logistic,       Loss::dwd,           Loss::exponential};

const char* loss_name(Loss loss);
Loss loss_from_name(std::string_view name);

double loss_value(Loss loss, double u);

// Right-hand derivative at kinks (hinge at u = 1 gives 0); all other
// losses here are differentiable.
double loss_derivative(Loss loss, double u);

// Numeric criterion: the two one-sided derivatives at 0, estimated by
// Richardson-extrapolated difference quotients, agree and are negative.
bool fisher_consistent(Loss loss);

// Class-probability weights for the pointwise risk
// Q(alpha) = eta1 * phi(alpha) + eta2 * phi(-alpha), both >= 0.
struct ConditionalRisk {
  double eta1 = 0.0;
  double eta2 = 0.0;
};

double conditional_risk(Loss loss, const ConditionalRisk& q, double alpha);

struct OptimalConditionalRisk {
  double alpha_star = 0.0;  // +-inf when the infimum is not attained
  double value = 0.0;       // inf_alpha Q(alpha)
  bool minimizer_bounded = true;
};

// Closed forms. Conventions for flat or degenerate cases: eta1 == eta2
// picks alpha* = 0; a single zero eta gives the attained boundary
// minimizer for hinge-family losses and an unbounded flag (value = the
// infimum) for logistic, dwd, and exponential; eta1 == eta2 == 0 gives
// {0, 0, bounded} since every alpha is a minimizer.
OptimalConditionalRisk optimal_conditional_risk(Loss loss, const ConditionalRisk& q);

// Golden-section search with interval expansion; the independent check
// used by the tests. Reports minimizer_bounded = false when the argmin
// keeps escaping to the expansion cap.
OptimalConditionalRisk minimize_conditional_risk_numeric(Loss loss, const ConditionalRisk& q,
                                                         double tol = 1e-10);

// Loss-specific comparison between the excess target risk at alpha = 0 and
// the excess surrogate risk Q(0) - H; holds must be true for every
// admissible (eta1, eta2).
struct ExcessBoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

ExcessBoundCheck excess_bound_check(Loss loss, const ConditionalRisk& q);

}  // namespace aol
