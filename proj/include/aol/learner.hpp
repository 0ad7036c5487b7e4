#pragma once

#include <string>

#include "aol/kernels.hpp"
#include "aol/losses.hpp"
#include "aol/optimize.hpp"
#include "aol/residuals.hpp"

namespace aol {

// Per-feature affine transform applied before any inner product or kernel
// evaluation. Scale is the population standard deviation; constant
// features keep scale 1 so they pass through centered.
struct Standardization {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
};

Standardization compute_standardization(const Eigen::MatrixXd& X);

enum class RuleKind { linear, kernel };

// Fitted decision rule. Linear rules use (w, b) on standardized inputs.
// Kernel rules store their support points already standardized, so
// f(x) = sum_j v_j K(standardize(x), support_j) + b.
struct DecisionRule {
  RuleKind kind = RuleKind::linear;
  Standardization standardization;

  Eigen::VectorXd w;
  double b = 0.0;

  Eigen::VectorXd v;
  Eigen::MatrixXd support;
  KernelSpec kernel;

  Eigen::Index input_dimension() const { return standardization.mean.size(); }
};

struct FitConfig {
  Loss loss = Loss::huberized_hinge;
  double lambda = 1.0;   // ridge weight for the plain fits
  double lambda1 = 0.0;  // L1 weight (VS fits)
  double lambda2 = 0.0;  // ridge weight (VS fits)
  KernelSpec kernel;     // kernel fits; scaled_rbf eta doubles as eta0
  SolverOptions solver;
  int n_starts = 1;  // scaled-kernel VS restarts
  std::uint64_t seed = 0;
};

struct FitReport {
  double objective = 0.0;
  int iterations = 0;
  int evaluations = 0;
  SolveStatus status = SolveStatus::converged;
  int starts_used = 1;
};

// Objective builders over an already-standardized problem; exposed so the
// gradient and convexity checks can probe exactly what the fits minimize.
// Layouts: linear [w(p); b], kernel [v(n); b], scaled-kernel [v(n); b;
// eta(p)]. The scaled-kernel objective includes lambda1 * sum(eta) and
// reassembles the Gram matrix on every evaluation.
ObjectiveHandle linear_objective(const Eigen::MatrixXd& Xstd, const Eigen::VectorXd& labels,
                                 const Eigen::VectorXd& weights, Loss loss, double lambda);
ObjectiveHandle kernel_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& labels,
                                 const Eigen::VectorXd& weights, Loss loss, double lambda);
ObjectiveHandle scaled_kernel_objective(const Eigen::MatrixXd& Xstd, const Eigen::VectorXd& labels,
                                        const Eigen::VectorXd& weights, Loss loss, double lambda1,
                                        double lambda2);

DecisionRule fit_linear_aol(const WeightedClassificationProblem& problem, const FitConfig& cfg,
                            FitReport* report = nullptr);
DecisionRule fit_kernel_aol(const WeightedClassificationProblem& problem, const FitConfig& cfg,
                            FitReport* report = nullptr);
DecisionRule fit_linear_aol_vs(const WeightedClassificationProblem& problem, const FitConfig& cfg,
                               FitReport* report = nullptr);
DecisionRule fit_kernel_aol_vs(const WeightedClassificationProblem& problem, const FitConfig& cfg,
                               FitReport* report = nullptr);

Eigen::VectorXd decision_values(const DecisionRule& rule, const Eigen::MatrixXd& X);

// +1 iff the decision value is strictly positive; exactly 0 maps to -1.
Eigen::VectorXd predict(const DecisionRule& rule, const Eigen::MatrixXd& X);

std::string to_json(const DecisionRule& rule);
DecisionRule rule_from_json(const std::string& text);
void save_rule(const std::string& path, const DecisionRule& rule);
DecisionRule load_rule(const std::string& path);

}  // namespace aol
