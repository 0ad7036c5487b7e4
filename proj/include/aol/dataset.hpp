#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace aol {

// Two-arm study data. propensities[i] is the probability of the arm the
// subject actually received, P(A = a_i | X = x_i), and must lie in (0,1).
struct TrialDataset {
  Eigen::MatrixXd covariates;    // n x p
  Eigen::VectorXd treatments;    // entries +1 or -1
  Eigen::VectorXd outcomes;      // larger is better
  Eigen::VectorXd propensities;  // in (0, 1)

  Eigen::Index n() const { return covariates.rows(); }
  Eigen::Index p() const { return covariates.cols(); }
};

// Throws std::invalid_argument on the first violated invariant.
void validate_dataset(const TrialDataset& data);

TrialDataset subset(const TrialDataset& data, const std::vector<Eigen::Index>& rows);

// CSV schema: header "x1,...,xp,a,r" with an optional trailing "pi"
// column; lines starting with '#' are comments. Values are plain decimal,
// locale-independent.
bool csv_has_propensity_column(const std::string& path);

// When has_propensity is true the pi column is required; otherwise it must
// be absent and propensities are filled with default_propensity for arm +1
// rows and 1 - default_propensity for arm -1 rows.
TrialDataset load_dataset(const std::string& path, bool has_propensity,
                          double default_propensity = 0.5);

// Writes the full schema including pi, 17 significant digits.
void save_dataset(const std::string& path, const TrialDataset& data);

// Covariates for prediction: accepts the full schema (extra columns are
// ignored) or a bare x1..xp file.
Eigen::MatrixXd load_covariates(const std::string& path);

}  // namespace aol
