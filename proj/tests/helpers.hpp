#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include "aol/dataset.hpp"
#include "aol/rng.hpp"

namespace testutil {

// Random two-arm dataset with constant propensity.
inline aol::TrialDataset random_dataset(Eigen::Index n, Eigen::Index p, std::uint64_t seed,
                                        double allocation = 0.5) {
  aol::Rng rng(aol::mix_seed(seed, 0));
  aol::TrialDataset data;
  data.covariates.resize(n, p);
  data.treatments.resize(n);
  data.outcomes.resize(n);
  data.propensities.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) data.covariates(i, j) = rng.uniform(-1.0, 1.0);
    const bool plus = rng.uniform() < allocation;
    data.treatments[i] = plus ? 1.0 : -1.0;
    data.propensities[i] = plus ? allocation : 1.0 - allocation;
    data.outcomes[i] = rng.normal();
  }
  return data;
}

// Self-deleting scratch file path in the build directory.
struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("tmp_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }

  void write(const std::string& content) const {
    std::ofstream out(path);
    out << content;
  }
  std::string read() const {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
};

}  // namespace testutil
