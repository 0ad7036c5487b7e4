#include "aol/simulate.hpp"

#include <cmath>
#include <stdexcept>

#include "aol/rng.hpp"

namespace aol {

namespace {

void require_scenario(int scenario_id, const Eigen::VectorXd& x) {
  if (scenario_id < 1 || scenario_id > 4) throw std::invalid_argument("scenario_id must be 1..4");
  if (x.size() < 5) throw std::invalid_argument("scenario covariates need p >= 5");
}

// Exponent pieces shared by the linear scenario and its exponentiated twin.
double baseline_term(int scenario_id, const Eigen::VectorXd& x) {
  const double c1 = (scenario_id <= 2) ? 0.5 : 0.6;
  return 0.5 + c1 * x[0] + 0.8 * x[1] + 0.3 * x[2] - 0.5 * x[3] + 0.7 * x[4];
}

double interaction_term(int scenario_id, const Eigen::VectorXd& x) {
  if (scenario_id <= 2) return 0.2 - 0.6 * x[0] - 0.8 * x[1];
  return 0.6 - x[0] * x[0] - x[1] * x[1];
}

}  // namespace

double oracle_mu(int scenario_id, const Eigen::VectorXd& x, int arm) {
  require_scenario(scenario_id, x);
  if (arm != 1 && arm != -1) throw std::invalid_argument("arm must be +1 or -1");
  const double m = baseline_term(scenario_id, x) + arm * interaction_term(scenario_id, x);
  return (scenario_id == 2 || scenario_id == 4) ? std::exp(m) : m;
}

double oracle_contrast(int scenario_id, const Eigen::VectorXd& x) {
  return oracle_mu(scenario_id, x, +1) - oracle_mu(scenario_id, x, -1);
}

int oracle_regime(int scenario_id, const Eigen::VectorXd& x) {
  return oracle_contrast(scenario_id, x) > 0.0 ? 1 : -1;
}

TrialDataset simulate_scenario(const ScenarioSpec& spec) {
  if (spec.scenario_id < 1 || spec.scenario_id > 4)
    throw std::invalid_argument("scenario_id must be 1..4");
  if (spec.n < 1) throw std::invalid_argument("n must be >= 1");
  if (spec.p < 5) throw std::invalid_argument("p must be >= 5");
  if (!(spec.allocation > 0.0 && spec.allocation < 1.0))
    throw std::invalid_argument("allocation must lie in (0,1)");

  TrialDataset data;
  data.covariates.resize(spec.n, spec.p);
  data.treatments.resize(spec.n);
  data.outcomes.resize(spec.n);
  data.propensities.resize(spec.n);

  Rng rng(mix_seed(spec.seed, 0));
  Eigen::VectorXd x(spec.p);
  for (Eigen::Index i = 0; i < spec.n; ++i) {
    for (int j = 0; j < spec.p; ++j) x[j] = rng.uniform(-1.0, 1.0);
    const int a = rng.uniform() < spec.allocation ? 1 : -1;
    const double noise = rng.normal();
    data.covariates.row(i) = x.transpose();
    data.treatments[i] = a;
    data.outcomes[i] = oracle_mu(spec.scenario_id, x, a) + noise;
    data.propensities[i] = a > 0 ? spec.allocation : 1.0 - spec.allocation;
  }
  return data;
}

Eigen::MatrixXd simulate_covariates(Eigen::Index n, int p, std::uint64_t seed) {
  if (n < 1 || p < 1) throw std::invalid_argument("need n >= 1 and p >= 1");
  Eigen::MatrixXd X(n, p);
  Rng rng(mix_seed(seed, 0));
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
  return X;
}

}  // namespace aol
