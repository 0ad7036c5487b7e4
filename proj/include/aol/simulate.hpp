#pragma once

#include <cstdint>

#include "aol/dataset.hpp"

namespace aol {

// Synthetic two-arm studies with known arm means. Covariates are i.i.d.
// U(-1,1); outcomes are N(Q0(x,a), 1); treatment is +1 with probability
// `allocation`, independent of x.
struct ScenarioSpec {
  int scenario_id = 1;      // 1..4
  Eigen::Index n = 100;     // >= 1
  int p = 5;                // >= 5; covariates beyond the first five are noise
  double allocation = 0.5;  // P(A = +1), in (0, 1)
  std::uint64_t seed = 0;
};

// Mean outcome Q0(x, arm). Scenarios 2 and 4 exponentiate the scenario 1
// and 3 means respectively.
double oracle_mu(int scenario_id, const Eigen::VectorXd& x, int arm);

// oracle_mu(x, +1) - oracle_mu(x, -1), computed as that difference.
double oracle_contrast(int scenario_id, const Eigen::VectorXd& x);

// Arm with the larger mean; ties go to -1.
int oracle_regime(int scenario_id, const Eigen::VectorXd& x);

// Draw order per subject: p uniforms for the covariates, one uniform for
// the arm (u < allocation means +1), one normal for the outcome noise.
// Subjects are drawn in order from Rng(mix_seed(seed, 0)). This order is
// frozen; changing it silently changes every seeded dataset.
TrialDataset simulate_scenario(const ScenarioSpec& spec);

// Covariate-only draws with the same per-subject layout (p uniforms).
Eigen::MatrixXd simulate_covariates(Eigen::Index n, int p, std::uint64_t seed);

}  // namespace aol
