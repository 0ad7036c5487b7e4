#pragma once

#include <string>
#include <vector>

#include "aol/learner.hpp"
#include "aol/simulate.hpp"

namespace aol {

struct ValueEstimate {
  double value = 0.0;
  Eigen::Index n_matched = 0;
};

// Inverse-probability-weighted value of following `recommendations`.
// Normalized divides by the weighted match fraction; the unnormalized
// form is the plain sample mean of r * I(match) / pi.
ValueEstimate ipw_value(const TrialDataset& data, const Eigen::VectorXd& recommendations,
                        bool normalized);

// Augmented estimator: mu_plus / mu_minus are per-subject predictions of
// the arm means; the augmentation uses whichever arm is recommended.
double aipwe_value(const TrialDataset& data, const Eigen::VectorXd& recommendations,
                   const Eigen::VectorXd& mu_plus, const Eigen::VectorXd& mu_minus);

enum class MethodTag { aol_linear, aol_gaussian, aol_vs_linear, aol_vs_gaussian };

const char* method_name(MethodTag tag);
MethodTag method_from_name(std::string_view name);

// Where the residual baseline comes from when the pipeline runs: fitted
// from the training data, the closed-form scenario version, or a fixed
// constant (robustness experiments). estimate_propensities replaces the
// dataset propensities with a logistic fit on the same training data
// before anything else happens.
struct GSource {
  enum class Mode { fitted, oracle, constant };
  Mode mode = Mode::fitted;
  GVariant variant;
  int scenario_id = 0;          // oracle mode
  double constant_value = 0.0;  // constant mode
  bool estimate_propensities = false;
};

Eigen::VectorXd pipeline_residuals(const TrialDataset& train, const GSource& gsource);

// Residuals -> reflection -> fit with the method's learner.
DecisionRule fit_pipeline(const TrialDataset& train, const GSource& gsource, MethodTag method,
                          const FitConfig& cfg, FitReport* report = nullptr);

struct CvReport {
  std::vector<FitConfig> grid;
  std::vector<double> values;  // pooled out-of-fold normalized IPW per config
  int chosen = -1;
  std::uint64_t fold_seed = 0;
};

// Arm-stratified seeded folds; g is refit inside each training fold.
// Configs within half a standard error of the best held-out value count
// as tied with it; ties prefer larger lambda (lexicographic (lambda1,
// lambda2) for VS fits), then smaller sigma, then earlier grid position.
CvReport cross_validate(const TrialDataset& data, const GSource& gsource, MethodTag method,
                        const std::vector<FitConfig>& grid, int folds, std::uint64_t seed);

// Outer folds produce out-of-fold recommendations from inner-CV-tuned
// fits; the pooled recommendations are scored with normalized IPW.
ValueEstimate nested_cv(const TrialDataset& data, const GSource& gsource, MethodTag method,
                        const std::vector<FitConfig>& grid, int outer_folds, int inner_folds,
                        std::uint64_t seed);

// Default hyperparameter grid: lambda in {2^k/n : k = -8..8}; Gaussian
// methods cross it with sigma = median_heuristic(standardized X) x
// {1/4, 1/2, 1, 2, 4}; VS methods reuse the lambda grid for lambda1 and
// fix lambda2 = 1/n.
std::vector<FitConfig> default_grid(const TrialDataset& data, MethodTag method,
                                    std::uint64_t seed);

struct BenchmarkRow {
  int scenario = 0;
  Eigen::Index n = 0;
  int p = 0;
  double allocation = 0.5;
  std::string method;
  double mean_value = 0.0;
  double sd_value = 0.0;
  int replications = 0;
  std::uint64_t seed = 0;
};

struct BenchmarkRequest {
  ScenarioSpec scenario;  // n, p, allocation; per-replication seeds derive from `seed`
  std::vector<MethodTag> methods;
  GSource gsource;
  int replications = 1;
  Eigen::Index test_n = 10000;
  int folds = 10;
  std::uint64_t seed = 0;
  std::vector<FitConfig> grid;  // empty -> default_grid per training set
};

// Mean of oracle_mu(x, rec(x)) over rows of X: the exact value of a
// regime up to covariate sampling.
double empirical_regime_value(int scenario_id, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& recommendations);

// Per replication: simulate training data, tune by CV, refit, score the
// rule on a fresh covariate draw with oracle means. Replication results
// are stored per-index and aggregated serially, so the output does not
// depend on how many workers ran them.
std::vector<BenchmarkRow> run_benchmark(const BenchmarkRequest& request);

void write_benchmark_csv(const std::string& path, const std::vector<BenchmarkRow>& rows);
std::string benchmark_json(const std::vector<BenchmarkRow>& rows);

}  // namespace aol
