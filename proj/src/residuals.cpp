#include "aol/residuals.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "aol/simulate.hpp"

namespace aol {

namespace {

using nlohmann::json;

constexpr double kPropClip = 1e-3;

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd D(X.rows(), X.cols() + 1);
  D.col(0).setOnes();
  D.rightCols(X.cols()) = X;
  return D;
}

// Weighted least squares with a tiny ridge fallback when the weighted
// design is rank-deficient.
LinearRegressionModel wls(const Eigen::MatrixXd& X, const Eigen::VectorXd& r,
                          const Eigen::VectorXd& w, bool* used_ridge) {
  const Eigen::MatrixXd D = with_intercept(X);
  const Eigen::VectorXd sw = w.array().sqrt();
  const Eigen::MatrixXd Dw = sw.asDiagonal() * D;
  const Eigen::VectorXd rw = sw.asDiagonal() * r;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Dw);
  LinearRegressionModel model;
  if (qr.rank() == D.cols()) {
    model.coefficients = qr.solve(rw);
    return model;
  }

  if (used_ridge) *used_ridge = true;
  std::fprintf(stderr, "warning: rank-deficient regression design, using ridge fallback\n");
  Eigen::MatrixXd A = Dw.transpose() * Dw;
  const double penalty =
      1e-8 * A.bottomRightCorner(X.cols(), X.cols()).trace() / static_cast<double>(X.cols());
  // Intercept left unpenalized.
  for (Eigen::Index j = 1; j < A.rows(); ++j) A(j, j) += std::max(penalty, 1e-12);
  model.coefficients = A.ldlt().solve(Dw.transpose() * rw);
  return model;
}

double pi_plus_of_row(const TrialDataset& data, Eigen::Index i) {
  return data.treatments[i] > 0 ? data.propensities[i] : 1.0 - data.propensities[i];
}

}  // namespace

const char* g_kind_name(GKind kind) {
  switch (kind) {
    case GKind::g_tilde: return "g_tilde";
    case GKind::g1: return "g1";
    case GKind::g2: return "g2";
  }
  throw std::logic_error("unknown g kind");
}

GKind g_kind_from_name(std::string_view name) {
  if (name == "g_tilde") return GKind::g_tilde;
  if (name == "g1") return GKind::g1;
  if (name == "g2") return GKind::g2;
  throw std::invalid_argument("unknown g variant '" + std::string(name) + "'");
}

const char* g_estimator_name(GEstimator est) {
  switch (est) {
    case GEstimator::pooled_weighted: return "pooled_weighted";
    case GEstimator::armwise_plugin: return "armwise_plugin";
  }
  throw std::logic_error("unknown g estimator");
}

GEstimator g_estimator_from_name(std::string_view name) {
  if (name == "pooled_weighted") return GEstimator::pooled_weighted;
  if (name == "armwise_plugin") return GEstimator::armwise_plugin;
  throw std::invalid_argument("unknown g estimator '" + std::string(name) + "'");
}

double regression_weight(GKind kind, double a, double pi_received) {
  if (a != 1.0 && a != -1.0) throw std::invalid_argument("arm must be +1 or -1");
  if (!(pi_received > 0.0 && pi_received < 1.0))
    throw std::invalid_argument("propensity must lie in (0,1)");
  switch (kind) {
    case GKind::g_tilde: return (1.0 - pi_received) / pi_received;
    case GKind::g1: return 1.0 / (2.0 * pi_received);
    case GKind::g2: return 1.0;
  }
  throw std::logic_error("unknown g kind");
}

double LinearRegressionModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() + 1 != coefficients.size())
    throw std::invalid_argument("regression model dimension mismatch");
  return coefficients[0] + coefficients.tail(x.size()).dot(x);
}

Eigen::VectorXd LinearRegressionModel::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() + 1 != coefficients.size())
    throw std::invalid_argument("regression model dimension mismatch");
  return (X * coefficients.tail(X.cols())).array() + coefficients[0];
}

double GModel::evaluate(const Eigen::VectorXd& x, double pi_plus) const {
  if (variant.estimator == GEstimator::pooled_weighted) return pooled.predict(x);
  const double mp = mu_plus.predict(x);
  const double mm = mu_minus.predict(x);
  switch (variant.kind) {
    case GKind::g_tilde: return (1.0 - pi_plus) * mp + pi_plus * mm;
    case GKind::g1: return 0.5 * (mp + mm);
    case GKind::g2: return pi_plus * mp + (1.0 - pi_plus) * mm;
  }
  throw std::logic_error("unknown g kind");
}

GModel fit_g(const TrialDataset& data, GVariant variant) {
  validate_dataset(data);
  GModel model;
  model.variant = variant;
  if (variant.estimator == GEstimator::pooled_weighted) {
    Eigen::VectorXd w(data.n());
    for (Eigen::Index i = 0; i < data.n(); ++i)
      w[i] = regression_weight(variant.kind, data.treatments[i], data.propensities[i]);
    model.pooled = wls(data.covariates, data.outcomes, w, &model.ridge_fallback);
    return model;
  }

  std::vector<Eigen::Index> plus, minus;
  for (Eigen::Index i = 0; i < data.n(); ++i)
    (data.treatments[i] > 0 ? plus : minus).push_back(i);
  const Eigen::Index need = data.p() + 2;
  if (static_cast<Eigen::Index>(plus.size()) < need ||
      static_cast<Eigen::Index>(minus.size()) < need)
    throw std::invalid_argument("armwise g fit needs at least p+2 subjects per arm");
  const TrialDataset dp = subset(data, plus);
  const TrialDataset dm = subset(data, minus);
  const Eigen::VectorXd ones_p = Eigen::VectorXd::Ones(dp.n());
  const Eigen::VectorXd ones_m = Eigen::VectorXd::Ones(dm.n());
  model.mu_plus = wls(dp.covariates, dp.outcomes, ones_p, &model.ridge_fallback);
  model.mu_minus = wls(dm.covariates, dm.outcomes, ones_m, &model.ridge_fallback);
  return model;
}

Eigen::VectorXd compute_residuals(const TrialDataset& data, const GModel& model) {
  Eigen::VectorXd res(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Eigen::VectorXd x = data.covariates.row(i).transpose();
    res[i] = data.outcomes[i] - model.evaluate(x, pi_plus_of_row(data, i));
  }
  return res;
}

double oracle_g_value(int scenario_id, GKind kind, double pi_plus, const Eigen::VectorXd& x) {
  const double mp = oracle_mu(scenario_id, x, +1);
  const double mm = oracle_mu(scenario_id, x, -1);
  switch (kind) {
    case GKind::g_tilde: return (1.0 - pi_plus) * mp + pi_plus * mm;
    case GKind::g1: return 0.5 * (mp + mm);
    case GKind::g2: return pi_plus * mp + (1.0 - pi_plus) * mm;
  }
  throw std::logic_error("unknown g kind");
}

Eigen::VectorXd oracle_residuals(const TrialDataset& data, int scenario_id, GKind kind) {
  Eigen::VectorXd res(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Eigen::VectorXd x = data.covariates.row(i).transpose();
    res[i] = data.outcomes[i] - oracle_g_value(scenario_id, kind, pi_plus_of_row(data, i), x);
  }
  return res;
}

WeightedClassificationProblem reflect(const TrialDataset& data, const Eigen::VectorXd& residuals) {
  if (residuals.size() != data.n()) throw std::invalid_argument("residual length mismatch");
  WeightedClassificationProblem prob;
  prob.covariates = data.covariates;
  prob.labels.resize(data.n());
  prob.weights.resize(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double r = residuals[i];
    const double sign = r < 0.0 ? -1.0 : 1.0;
    prob.labels[i] = data.treatments[i] * sign;
    prob.weights[i] = std::abs(r) / data.propensities[i];
  }
  return prob;
}

double PropensityModel::prob_plus(const Eigen::VectorXd& x) const {
  if (x.size() + 1 != coefficients.size())
    throw std::invalid_argument("propensity model dimension mismatch");
  const double t = coefficients[0] + coefficients.tail(x.size()).dot(x);
  const double p = 1.0 / (1.0 + std::exp(-t));
  return std::min(std::max(p, kPropClip), 1.0 - kPropClip);
}

PropensityModel estimate_propensity(const TrialDataset& data) {
  validate_dataset(data);
  const Eigen::Index n = data.n();
  bool has_plus = false, has_minus = false;
  for (Eigen::Index i = 0; i < n; ++i) (data.treatments[i] > 0 ? has_plus : has_minus) = true;
  if (!has_plus || !has_minus)
    throw std::invalid_argument("propensity estimation needs both arms present");

  const Eigen::MatrixXd D = with_intercept(data.covariates);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = data.treatments[i] > 0 ? 1.0 : 0.0;

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(D.cols());
  auto nll = [&](const Eigen::VectorXd& b) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = D.row(i).dot(b);
      // log(1 + e^t) - y t, stable on both tails
      s += (t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t))) - y[i] * t;
    }
    return s;
  };

  double f = nll(beta);
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd prob(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = D.row(i).dot(beta);
      prob[i] = 1.0 / (1.0 + std::exp(-t));
    }
    const Eigen::VectorXd grad = D.transpose() * (prob - y);
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-8) break;
    const Eigen::VectorXd v = (prob.array() * (1.0 - prob.array())).matrix();
    Eigen::MatrixXd H = D.transpose() * v.asDiagonal() * D;
    for (Eigen::Index j = 0; j < H.rows(); ++j) H(j, j) += 1e-10;
    Eigen::VectorXd step = H.ldlt().solve(grad);
    // Halve until the objective stops increasing (separation guard).
    double scale = 1.0;
    for (int t = 0; t < 50; ++t) {
      const Eigen::VectorXd cand = beta - scale * step;
      const double fc = nll(cand);
      if (fc <= f) {
        beta = cand;
        f = fc;
        break;
      }
      scale *= 0.5;
    }
  }

  PropensityModel model;
  model.coefficients = beta;
  Eigen::Index clipped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = D.row(i).dot(beta);
    const double p = 1.0 / (1.0 + std::exp(-t));
    if (p < kPropClip || p > 1.0 - kPropClip) ++clipped;
  }
  if (2 * clipped > n) {
    model.separation_detected = true;
    std::fprintf(stderr, "warning: propensity model near-separates the arms; probabilities clipped\n");
  }
  return model;
}

TrialDataset with_estimated_propensities(const TrialDataset& data, const PropensityModel& model) {
  TrialDataset out = data;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double pp = model.prob_plus(data.covariates.row(i).transpose());
    out.propensities[i] = data.treatments[i] > 0 ? pp : 1.0 - pp;
  }
  return out;
}

ReflectionIdentity reflection_identity_check(const TrialDataset& data,
                                             const Eigen::VectorXd& residuals,
                                             const Eigen::VectorXd& regime_labels) {
  if (residuals.size() != data.n() || regime_labels.size() != data.n())
    throw std::invalid_argument("reflection_identity_check length mismatch");
  const double n = static_cast<double>(data.n());
  double lhs = 0.0, rhs_signed = 0.0, rhs_neg = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double r = residuals[i];
    const double pi = data.propensities[i];
    const double a = data.treatments[i];
    const double d = regime_labels[i];
    const double sign = r < 0.0 ? -1.0 : 1.0;
    if (a * sign != d) lhs += std::abs(r) / pi;
    if (a != d) rhs_signed += r / pi;
    if (r < 0.0) rhs_neg += -r / pi;
  }
  ReflectionIdentity out;
  out.lhs = lhs / n;
  out.rhs = rhs_signed / n + rhs_neg / n;
  out.gap = std::abs(out.lhs - out.rhs);
  return out;
}

namespace {

json coefficients_json(const LinearRegressionModel& m) {
  return json(std::vector<double>(m.coefficients.data(),
                                  m.coefficients.data() + m.coefficients.size()));
}

LinearRegressionModel coefficients_from_json(const json& j) {
  const std::vector<double> v = j.get<std::vector<double>>();
  LinearRegressionModel m;
  m.coefficients = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return m;
}

}  // namespace

std::string to_json(const GModel& model) {
  json j;
  j["kind"] = g_kind_name(model.variant.kind);
  j["estimator"] = g_estimator_name(model.variant.estimator);
  if (model.variant.estimator == GEstimator::pooled_weighted) {
    j["coefficients"] = coefficients_json(model.pooled);
  } else {
    j["mu_plus"] = coefficients_json(model.mu_plus);
    j["mu_minus"] = coefficients_json(model.mu_minus);
  }
  j["ridge_fallback"] = model.ridge_fallback;
  return j.dump(2);
}

GModel g_model_from_json(const std::string& text) {
  const json j = json::parse(text);
  GModel model;
  model.variant.kind = g_kind_from_name(j.at("kind").get<std::string>());
  model.variant.estimator = g_estimator_from_name(j.at("estimator").get<std::string>());
  if (model.variant.estimator == GEstimator::pooled_weighted) {
    model.pooled = coefficients_from_json(j.at("coefficients"));
  } else {
    model.mu_plus = coefficients_from_json(j.at("mu_plus"));
    model.mu_minus = coefficients_from_json(j.at("mu_minus"));
  }
  model.ridge_fallback = j.value("ridge_fallback", false);
  return model;
}

std::string to_json(const PropensityModel& model) {
  json j;
  j["kind"] = "propensity";
  j["coefficients"] = json(std::vector<double>(
      model.coefficients.data(), model.coefficients.data() + model.coefficients.size()));
  j["separation_detected"] = model.separation_detected;
  return j.dump(2);
}

PropensityModel propensity_model_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("kind", "") != "propensity")
    throw std::invalid_argument("not a propensity model document");
  const std::vector<double> v = j.at("coefficients").get<std::vector<double>>();
  PropensityModel model;
  model.coefficients =
      Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  model.separation_detected = j.value("separation_detected", false);
  return model;
}

}  // namespace aol
