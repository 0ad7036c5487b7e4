#include "aol/losses.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace aol {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_etas(const ConditionalRisk& q) {
  if (!(q.eta1 >= 0.0) || !(q.eta2 >= 0.0) || !std::isfinite(q.eta1) || !std::isfinite(q.eta2))
    throw std::invalid_argument("eta1 and eta2 must be finite and nonnegative");
}

}  // namespace

const char* loss_name(Loss loss) {
  switch (loss) {
    case Loss::hinge: return "hinge";
    case Loss::squared_hinge: return "squared_hinge";
    case Loss::least_squares: return "least_squares";
    case Loss::huberized_hinge: return "huberized_hinge";
    case Loss::logistic: return "logistic";
    case Loss::dwd: return "dwd";
    case Loss::exponential: return "exponential";
  }
  throw std::logic_error("unknown loss");
}

Loss loss_from_name(std::string_view name) {
  for (Loss loss : kAllLosses)
    if (name == loss_name(loss)) return loss;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

double loss_value(Loss loss, double u) {
  switch (loss) {
    case Loss::hinge:
      return u < 1.0 ? 1.0 - u : 0.0;
    case Loss::squared_hinge: {
      const double t = u < 1.0 ? 1.0 - u : 0.0;
      return t * t;
    }
    case Loss::least_squares: {
      const double t = 1.0 - u;
      return t * t;
    }
    case Loss::huberized_hinge:
      if (u >= 1.0) return 0.0;
      if (u >= -1.0) {
        const double t = 1.0 - u;
        return 0.25 * t * t;
      }
      return -u;
    case Loss::logistic:
      // log(1 + e^-u) without overflow on either tail
      return u >= 0.0 ? std::log1p(std::exp(-u)) : -u + std::log1p(std::exp(u));
    case Loss::dwd:
      return u >= 1.0 ? 1.0 / u : 2.0 - u;
    case Loss::exponential:
      return std::exp(-u);
  }
  throw std::logic_error("unknown loss");
}

double loss_derivative(Loss loss, double u) {
  switch (loss) {
    case Loss::hinge:
      return u < 1.0 ? -1.0 : 0.0;
    case Loss::squared_hinge:
      return u < 1.0 ? -2.0 * (1.0 - u) : 0.0;
    case Loss::least_squares:
      return -2.0 * (1.0 - u);
    case Loss::huberized_hinge:
      if (u >= 1.0) return 0.0;
      if (u >= -1.0) return -0.5 * (1.0 - u);
      return -1.0;
    case Loss::logistic: {
      // -1 / (1 + e^u)
      if (u >= 0.0) {
        const double t = std::exp(-u);
        return -t / (1.0 + t);
      }
      return -1.0 / (1.0 + std::exp(u));
    }
    case Loss::dwd:
      return u >= 1.0 ? -1.0 / (u * u) : -1.0;
    case Loss::exponential:
      return -std::exp(-u);
  }
  throw std::logic_error("unknown loss");
}

bool fisher_consistent(Loss loss) {
  // One-sided derivative estimates at 0 from difference quotients
  // D(h) = (phi(+-h) - phi(0)) / h with two rounds of Richardson
  // extrapolation (error O(h^3) for smooth phi).
  auto one_sided = [&](double sign) {
    const double h0 = 1e-3;
    double d[3];
    for (int k = 0; k < 3; ++k) {
      const double h = h0 / (1 << k);
      d[k] = (loss_value(loss, sign * h) - loss_value(loss, 0.0)) / (sign * h);
    }
    const double r1 = 2.0 * d[1] - d[0];
    const double r2 = 2.0 * d[2] - d[1];
    return (4.0 * r2 - r1) / 3.0;
  };
  const double right = one_sided(+1.0);
  const double left = one_sided(-1.0);
  const double tol = 1e-6;
  return std::abs(left - right) <= tol && right < -tol;
}

double conditional_risk(Loss loss, const ConditionalRisk& q, double alpha) {
  require_etas(q);
  return q.eta1 * loss_value(loss, alpha) + q.eta2 * loss_value(loss, -alpha);
}

OptimalConditionalRisk optimal_conditional_risk(Loss loss, const ConditionalRisk& q) {
  require_etas(q);
  const double e1 = q.eta1, e2 = q.eta2;
  const double s = e1 + e2, d = e1 - e2;
  if (s == 0.0) return {0.0, 0.0, true};

  switch (loss) {
    case Loss::hinge:
      if (d == 0.0) return {0.0, 2.0 * e1, true};
      return {d > 0.0 ? 1.0 : -1.0, 2.0 * std::min(e1, e2), true};
    case Loss::squared_hinge:
    case Loss::least_squares:
      return {d / s, 4.0 * e1 * e2 / s, true};
    case Loss::huberized_hinge:
      return {d / s, e1 * e2 / s, true};
    case Loss::logistic:
      if (e1 == 0.0) return {-kInf, 0.0, false};
      if (e2 == 0.0) return {kInf, 0.0, false};
      return {std::log(e1 / e2), e1 * std::log(s / e1) + e2 * std::log(s / e2), true};
    case Loss::dwd:
      if (e1 == 0.0) return {-kInf, 0.0, false};
      if (e2 == 0.0) return {kInf, 0.0, false};
      if (d == 0.0) return {0.0, 4.0 * e1, true};
      if (d > 0.0) return {std::sqrt(e1 / e2), 2.0 * e2 + 2.0 * std::sqrt(e1 * e2), true};
      return {-std::sqrt(e2 / e1), 2.0 * e1 + 2.0 * std::sqrt(e1 * e2), true};
    case Loss::exponential:
      if (e1 == 0.0) return {-kInf, 0.0, false};
      if (e2 == 0.0) return {kInf, 0.0, false};
      return {0.5 * std::log(e1 / e2), 2.0 * std::sqrt(e1 * e2), true};
  }
  throw std::logic_error("unknown loss");
}

OptimalConditionalRisk minimize_conditional_risk_numeric(Loss loss, const ConditionalRisk& q,
                                                         double tol) {
  require_etas(q);
  if (q.eta1 + q.eta2 == 0.0) return {0.0, 0.0, true};

  auto f = [&](double a) { return conditional_risk(loss, q, a); };

  // Q is convex, so it is unimodal; expand until the interior beats both
  // endpoints or the cap is reached.
  double lo = -8.0, hi = 8.0;
  const double cap = 1e6;
  bool bounded = true;
  while (true) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) <= f(lo) && f(mid) <= f(hi)) break;
    lo *= 2.0;
    hi *= 2.0;
    if (hi > cap) {
      bounded = false;
      break;
    }
  }

  const double gr = 0.6180339887498949;  // (sqrt(5) - 1) / 2
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 300 && (b - a) > tol; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
  }
  const double xm = 0.5 * (a + b);
  if (!bounded) {
    const double inf_value = std::min(f(lo), f(hi));
    return {xm > 0.0 ? kInf : -kInf, inf_value, false};
  }
  return {xm, f(xm), true};
}

ExcessBoundCheck excess_bound_check(Loss loss, const ConditionalRisk& q) {
  require_etas(q);
  const double s = q.eta1 + q.eta2;
  const double d = q.eta1 - q.eta2;
  const double excess = conditional_risk(loss, q, 0.0) - optimal_conditional_risk(loss, q).value;

  ExcessBoundCheck out;
  switch (loss) {
    case Loss::hinge:
    case Loss::dwd:
      out.lhs = std::abs(d);
      out.rhs = excess;
      break;
    case Loss::squared_hinge:
    case Loss::least_squares:
      out.lhs = d * d;
      out.rhs = s * excess;
      break;
    case Loss::huberized_hinge:
      out.lhs = d * d;
      out.rhs = 4.0 * s * excess;
      break;
    case Loss::logistic:
      out.lhs = d * d;
      out.rhs = 8.0 * s * excess;
      break;
    case Loss::exponential:
      out.lhs = d * d;
      out.rhs = 2.0 * s * excess;
      break;
  }
  const double slack = 1e-9 * std::max({1.0, out.lhs, out.rhs});
  out.holds = out.lhs <= out.rhs + slack;
  return out;
}

}  // namespace aol
