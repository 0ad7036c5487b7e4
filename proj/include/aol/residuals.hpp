#pragma once

#include <string>
#include <string_view>

#include "aol/dataset.hpp"

namespace aol {

// Baseline variants subtracted from the outcome. g_tilde mixes the arm
// means with the opposite arm's assignment probabilities, g1 averages
// them equally, and g2 is the overall outcome regression E(R|X).
enum class GKind { g_tilde, g1, g2 };
enum class GEstimator { pooled_weighted, armwise_plugin };

struct GVariant {
  GKind kind = GKind::g_tilde;
  GEstimator estimator = GEstimator::pooled_weighted;
};

const char* g_kind_name(GKind kind);
GKind g_kind_from_name(std::string_view name);
const char* g_estimator_name(GEstimator est);
GEstimator g_estimator_from_name(std::string_view name);

// Weight attached to a subject in the pooled regression; pi_received is
// the propensity of the arm actually received.
double regression_weight(GKind kind, double a, double pi_received);

struct LinearRegressionModel {
  Eigen::VectorXd coefficients;  // intercept first, then one slope per covariate

  double predict(const Eigen::VectorXd& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

struct GModel {
  GVariant variant;
  LinearRegressionModel pooled;    // pooled_weighted
  LinearRegressionModel mu_plus;   // armwise_plugin
  LinearRegressionModel mu_minus;  //
  bool ridge_fallback = false;

  // pi_plus = P(A = +1 | x); only the armwise combination uses it.
  double evaluate(const Eigen::VectorXd& x, double pi_plus) const;
};

GModel fit_g(const TrialDataset& data, GVariant variant);

Eigen::VectorXd compute_residuals(const TrialDataset& data, const GModel& model);

// Closed-form g for simulated scenarios; pi_plus is P(A = +1 | x).
double oracle_g_value(int scenario_id, GKind kind, double pi_plus, const Eigen::VectorXd& x);
Eigen::VectorXd oracle_residuals(const TrialDataset& data, int scenario_id, GKind kind);

// Classification form of the weighted-residual risk: nonnegative weights
// |residual| / pi and labels a * sign(residual). Zero residuals get
// weight 0 and label +1; they contribute nothing either way.
struct WeightedClassificationProblem {
  Eigen::MatrixXd covariates;
  Eigen::VectorXd labels;
  Eigen::VectorXd weights;

  Eigen::Index n() const { return covariates.rows(); }
  Eigen::Index p() const { return covariates.cols(); }
};

WeightedClassificationProblem reflect(const TrialDataset& data, const Eigen::VectorXd& residuals);

struct PropensityModel {
  Eigen::VectorXd coefficients;  // logistic model for P(A=+1|x), intercept first
  bool separation_detected = false;

  // clipped to [1e-3, 1 - 1e-3]
  double prob_plus(const Eigen::VectorXd& x) const;
};

PropensityModel estimate_propensity(const TrialDataset& data);

// Copy with propensities replaced by the model's received-arm probabilities.
TrialDataset with_estimated_propensities(const TrialDataset& data, const PropensityModel& model);

// Both empirical sides of the reflection identity: the reflected
// misclassification form on the left, the signed form plus the
// negative-part offset on the right. They agree to rounding for every
// dataset/regime pair.
struct ReflectionIdentity {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;
};

ReflectionIdentity reflection_identity_check(const TrialDataset& data,
                                             const Eigen::VectorXd& residuals,
                                             const Eigen::VectorXd& regime_labels);

std::string to_json(const GModel& model);
GModel g_model_from_json(const std::string& text);
std::string to_json(const PropensityModel& model);
PropensityModel propensity_model_from_json(const std::string& text);

}  // namespace aol
