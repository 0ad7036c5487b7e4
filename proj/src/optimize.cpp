#include "aol/optimize.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace aol {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_opts(const SolverOptions& opts) {
  if (opts.memory < 1) throw std::invalid_argument("solver memory must be >= 1");
  if (opts.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(opts.gradient_tolerance > 0.0)) throw std::invalid_argument("gradient_tolerance must be > 0");
  if (!(opts.wolfe_c1 > 0.0 && opts.wolfe_c1 < opts.wolfe_c2 && opts.wolfe_c2 < 1.0))
    throw std::invalid_argument("need 0 < c1 < c2 < 1");
}

struct Evaluator {
  const ObjectiveHandle* obj;
  int count = 0;

  // Strict evaluation: non-finite results are a caller error (bad data or
  // an unusable initial point).
  double strict(const Eigen::VectorXd& x, Eigen::VectorXd& g, int iteration) {
    const double f = raw(x, g);
    if (!std::isfinite(f) || !g.allFinite())
      throw std::runtime_error("non-finite objective or gradient at iteration " +
                               std::to_string(iteration));
    return f;
  }

  // Probe evaluation for line searches: non-finite means "too far".
  double probe(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double f = raw(x, g);
    if (!std::isfinite(f) || !g.allFinite()) return kInf;
    return f;
  }

 private:
  double raw(const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    ++count;
    g.resize(x.size());
    return obj->eval(x, g);
  }
};

struct History {
  std::deque<Eigen::VectorXd> s, y;
  std::deque<double> rho;

  void push(const Eigen::VectorXd& si, const Eigen::VectorXd& yi, int memory) {
    const double sy = si.dot(yi);
    if (!(sy > 1e-10 * si.norm() * yi.norm())) return;
    s.push_back(si);
    y.push_back(yi);
    rho.push_back(1.0 / sy);
    while (static_cast<int>(s.size()) > memory) {
      s.pop_front();
      y.pop_front();
      rho.pop_front();
    }
  }

  void clear() {
    s.clear();
    y.clear();
    rho.clear();
  }

  // Two-loop recursion; H0 = gamma * I from the newest pair.
  Eigen::VectorXd apply(const Eigen::VectorXd& g) const {
    Eigen::VectorXd q = g;
    const int m = static_cast<int>(s.size());
    if (m == 0) return q;
    std::vector<double> alpha(static_cast<std::size_t>(m));
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho[i] * s[i].dot(q);
      q -= alpha[i] * y[i];
    }
    const double gamma = s[m - 1].dot(y[m - 1]) / y[m - 1].squaredNorm();
    q *= gamma;
    for (int i = 0; i < m; ++i) {
      const double beta = rho[i] * y[i].dot(q);
      q += (alpha[i] - beta) * s[i];
    }
    return q;
  }
};

// Cubic minimizer for zoom; falls back to bisection when the cubic is
// degenerate or lands outside the safeguarded interior.
double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc < 0.0) return 0.5 * (a + b);
  const double d2 = (b > a ? 1.0 : -1.0) * std::sqrt(disc);
  double t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double margin = 0.05 * (hi - lo);
  if (!std::isfinite(t) || t < lo + margin || t > hi - margin) return 0.5 * (a + b);
  return t;
}

struct LineSearchResult {
  bool ok = false;
  double alpha = 0.0;
  double f = 0.0;
  Eigen::VectorXd x, g;
};

// Strong-Wolfe search (bracket then zoom).
LineSearchResult wolfe_search(Evaluator& ev, const Eigen::VectorXd& x0, double f0,
                              const Eigen::VectorXd& d, double dphi0, double alpha0,
                              const SolverOptions& opts) {
  LineSearchResult out;
  Eigen::VectorXd xt, gt;
  auto eval_at = [&](double a, double& f, double& dphi) {
    xt = x0 + a * d;
    f = ev.probe(xt, gt);
    dphi = std::isfinite(f) ? gt.dot(d) : kInf;
  };
  auto accept = [&](double a, double f) {
    out.ok = true;
    out.alpha = a;
    out.f = f;
    out.x = xt;
    out.g = gt;
  };

  auto zoom = [&](double alo, double flo, double dlo, double ahi, double fhi, double dhi) {
    for (int it = 0; it < 40; ++it) {
      double a;
      if (std::isfinite(fhi) && std::isfinite(dhi))
        a = cubic_step(alo, flo, dlo, ahi, fhi, dhi);
      else
        a = 0.5 * (alo + ahi);
      double f, dphi;
      eval_at(a, f, dphi);
      if (f > f0 + opts.wolfe_c1 * a * dphi0 || f >= flo) {
        ahi = a;
        fhi = f;
        dhi = dphi;
      } else {
        if (std::abs(dphi) <= -opts.wolfe_c2 * dphi0) {
          accept(a, f);
          return;
        }
        if (dphi * (ahi - alo) >= 0.0) {
          ahi = alo;
          fhi = flo;
          dhi = dlo;
        }
        alo = a;
        flo = f;
        dlo = dphi;
      }
      if (std::abs(ahi - alo) < 1e-16 * std::max(1.0, std::abs(alo))) break;
    }
    // Interval collapsed; take the best sufficient-decrease point seen.
    if (flo < f0) {
      double f, dphi;
      eval_at(alo, f, dphi);
      if (std::isfinite(f)) accept(alo, f);
    }
  };

  double aprev = 0.0, fprev = f0, dprev = dphi0;
  double a = alpha0;
  for (int it = 0; it < 30; ++it) {
    double f, dphi;
    eval_at(a, f, dphi);
    if (f > f0 + opts.wolfe_c1 * a * dphi0 || (it > 0 && f >= fprev)) {
      zoom(aprev, fprev, dprev, a, f, dphi);
      return out;
    }
    if (std::abs(dphi) <= -opts.wolfe_c2 * dphi0) {
      accept(a, f);
      return out;
    }
    if (dphi >= 0.0) {
      zoom(a, f, dphi, aprev, fprev, dprev);
      return out;
    }
    aprev = a;
    fprev = f;
    dprev = dphi;
    a *= 2.0;
    if (a > 1e10) break;
  }
  return out;
}

}  // namespace

SolveResult lbfgs_minimize(const ObjectiveHandle& obj, const Eigen::VectorXd& x0,
                           const SolverOptions& opts) {
  check_opts(opts);
  if (x0.size() != obj.dimension) throw std::invalid_argument("x0 dimension mismatch");
  Evaluator ev{&obj};
  History hist;

  Eigen::VectorXd x = x0, g;
  double f = ev.strict(x, g, 0);

  SolveResult res;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <=
        opts.gradient_tolerance * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
      res.status = SolveStatus::converged;
      res.iterations = iter;
      break;
    }
    Eigen::VectorXd d = -hist.apply(g);
    double dphi0 = g.dot(d);
    if (!(dphi0 < 0.0)) {
      hist.clear();
      d = -g;
      dphi0 = g.dot(d);
    }
    const double alpha0 =
        hist.s.empty() ? std::min(1.0, 1.0 / std::max(1e-12, g.lpNorm<Eigen::Infinity>())) : 1.0;
    LineSearchResult ls = wolfe_search(ev, x, f, d, dphi0, alpha0, opts);
    if (!ls.ok) {
      res.iterations = iter;
      break;
    }
    hist.push(ls.x - x, ls.g - g, opts.memory);
    x = ls.x;
    f = ls.f;
    g = ls.g;
    res.iterations = iter + 1;
  }
  if (res.status != SolveStatus::converged &&
      g.lpNorm<Eigen::Infinity>() <=
          opts.gradient_tolerance * std::max(1.0, x.lpNorm<Eigen::Infinity>()))
    res.status = SolveStatus::converged;
  res.x = std::move(x);
  res.f = f;
  res.evaluations = ev.count;
  return res;
}

namespace {

Eigen::VectorXd pseudo_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g, double l1,
                                const std::vector<bool>& mask) {
  Eigen::VectorXd pg = g;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (!mask[static_cast<std::size_t>(j)]) continue;
    if (x[j] > 0.0)
      pg[j] = g[j] + l1;
    else if (x[j] < 0.0)
      pg[j] = g[j] - l1;
    else if (g[j] + l1 < 0.0)
      pg[j] = g[j] + l1;
    else if (g[j] - l1 > 0.0)
      pg[j] = g[j] - l1;
    else
      pg[j] = 0.0;
  }
  return pg;
}

}  // namespace

SolveResult pss_minimize(const ObjectiveHandle& smooth_obj, double l1_weight,
                         const std::vector<bool>& penalized, const Eigen::VectorXd& x0,
                         const SolverOptions& opts) {
  check_opts(opts);
  if (x0.size() != smooth_obj.dimension) throw std::invalid_argument("x0 dimension mismatch");
  if (static_cast<Eigen::Index>(penalized.size()) != x0.size())
    throw std::invalid_argument("penalized mask dimension mismatch");
  if (!(l1_weight >= 0.0)) throw std::invalid_argument("l1 weight must be >= 0");

  Evaluator ev{&smooth_obj};
  History hist;
  auto l1_term = [&](const Eigen::VectorXd& z) {
    double t = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j)
      if (penalized[static_cast<std::size_t>(j)]) t += std::abs(z[j]);
    return l1_weight * t;
  };

  Eigen::VectorXd x = x0, g;
  double f = ev.strict(x, g, 0);
  double F = f + l1_term(x);

  SolveResult res;
  Eigen::VectorXd xt, gt;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    const Eigen::VectorXd pg = pseudo_gradient(x, g, l1_weight, penalized);
    if (pg.lpNorm<Eigen::Infinity>() <=
        opts.gradient_tolerance * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
      res.status = SolveStatus::converged;
      res.iterations = iter;
      break;
    }
    Eigen::VectorXd d = -hist.apply(pg);
    // Align with the pseudo-gradient: coordinates it leaves at rest stay at
    // rest, otherwise the two-loop history can push a zero coordinate into
    // l1 territory and stall the line search.
    for (Eigen::Index j = 0; j < d.size(); ++j)
      if (d[j] * pg[j] > 0.0 || pg[j] == 0.0) d[j] = 0.0;
    if (!(d.dot(pg) < 0.0)) {
      hist.clear();
      d = -pg;
    }

    // Orthant of the current iterate; sign comes from -pg at zeros.
    Eigen::VectorXd xi = x;
    for (Eigen::Index j = 0; j < x.size(); ++j)
      if (penalized[static_cast<std::size_t>(j)] && x[j] == 0.0) xi[j] = -pg[j];

    bool accepted = false;
    double alpha = hist.s.empty()
                       ? std::min(1.0, 1.0 / std::max(1e-12, pg.lpNorm<Eigen::Infinity>()))
                       : 1.0;
    for (int t = 0; t < 60; ++t) {
      xt = x + alpha * d;
      for (Eigen::Index j = 0; j < xt.size(); ++j)
        if (penalized[static_cast<std::size_t>(j)] && xt[j] * xi[j] < 0.0) xt[j] = 0.0;
      const double ft = ev.probe(xt, gt);
      if (std::isfinite(ft)) {
        const double Ft = ft + l1_term(xt);
        const double pred = pg.dot(xt - x);
        if (pred < 0.0 && Ft <= F + opts.wolfe_c1 * pred) {
          hist.push(xt - x, gt - g, opts.memory);
          x = xt;
          f = ft;
          g = gt;
          F = Ft;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      res.iterations = iter;
      break;
    }
    res.iterations = iter + 1;
  }
  if (res.status != SolveStatus::converged) {
    const Eigen::VectorXd pg = pseudo_gradient(x, g, l1_weight, penalized);
    if (pg.lpNorm<Eigen::Infinity>() <=
        opts.gradient_tolerance * std::max(1.0, x.lpNorm<Eigen::Infinity>()))
      res.status = SolveStatus::converged;
  }
  res.x = std::move(x);
  res.f = F;
  res.evaluations = ev.count;
  return res;
}

SolveResult lbfgsb_minimize(const ObjectiveHandle& obj, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const Eigen::VectorXd& x0,
                            const SolverOptions& opts) {
  check_opts(opts);
  const Eigen::Index n = x0.size();
  if (n != obj.dimension) throw std::invalid_argument("x0 dimension mismatch");
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("bound dimension mismatch");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (lower[j] > upper[j]) throw std::invalid_argument("lower bound exceeds upper bound");
    if (x0[j] < lower[j] || x0[j] > upper[j])
      throw std::invalid_argument("x0 outside the box");
  }
  auto project = [&](Eigen::VectorXd z) {
    for (Eigen::Index j = 0; j < n; ++j) z[j] = std::min(std::max(z[j], lower[j]), upper[j]);
    return z;
  };

  Evaluator ev{&obj};
  History hist;
  Eigen::VectorXd x = x0, g;
  double f = ev.strict(x, g, 0);

  SolveResult res;
  Eigen::VectorXd xt, gt;
  auto pg_norm = [&]() { return (project(x - g) - x).lpNorm<Eigen::Infinity>(); };
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (pg_norm() <= opts.gradient_tolerance) {
      res.status = SolveStatus::converged;
      res.iterations = iter;
      break;
    }
    Eigen::VectorXd d = -hist.apply(g);
    // Drop components that immediately leave the box; the projected step
    // would zero them anyway and they pollute the directional derivative.
    for (Eigen::Index j = 0; j < n; ++j) {
      if (x[j] <= lower[j] && d[j] < 0.0) d[j] = 0.0;
      if (x[j] >= upper[j] && d[j] > 0.0) d[j] = 0.0;
    }

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      if (attempt == 1) {
        hist.clear();
        d = -g;
        for (Eigen::Index j = 0; j < n; ++j) {
          if (x[j] <= lower[j] && d[j] < 0.0) d[j] = 0.0;
          if (x[j] >= upper[j] && d[j] > 0.0) d[j] = 0.0;
        }
      }
      double alpha = hist.s.empty()
                         ? std::min(1.0, 1.0 / std::max(1e-12, g.lpNorm<Eigen::Infinity>()))
                         : 1.0;
      for (int t = 0; t < 60; ++t) {
        xt = project(x + alpha * d);
        const Eigen::VectorXd step = xt - x;
        const double pred = g.dot(step);
        if (pred < 0.0) {
          const double ft = ev.probe(xt, gt);
          if (std::isfinite(ft) && ft <= f + opts.wolfe_c1 * pred) {
            hist.push(step, gt - g, opts.memory);
            x = xt;
            f = ft;
            g = gt;
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
    }
    if (!accepted) {
      res.iterations = iter;
      break;
    }
    res.iterations = iter + 1;
  }
  if (res.status != SolveStatus::converged && pg_norm() <= opts.gradient_tolerance)
    res.status = SolveStatus::converged;
  res.x = std::move(x);
  res.f = f;
  res.evaluations = ev.count;
  return res;
}

double gradient_check(const ObjectiveHandle& obj, const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  obj.eval(x, g);
  Eigen::VectorXd dummy(x.size());
  double worst = 0.0;
  Eigen::VectorXd xp = x, xm = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    xp[j] = x[j] + h;
    xm[j] = x[j] - h;
    const double fd = (obj.eval(xp, dummy) - obj.eval(xm, dummy)) / (2.0 * h);
    worst = std::max(worst, std::abs(g[j] - fd));
    xp[j] = x[j];
    xm[j] = x[j];
  }
  return worst / std::max(1.0, g.lpNorm<Eigen::Infinity>());
}

}  // namespace aol
