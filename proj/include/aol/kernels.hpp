#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace aol {

enum class KernelKind { linear, rbf, scaled_rbf };

// rbf uses an inverse-width convention: K(x,z) = exp(-sigma^2 ||x-z||^2),
// so larger sigma means a narrower kernel. scaled_rbf is
// K(x,z) = exp(-sum_j eta_j (x_j - z_j)^2); eta_j = 0 discards covariate
// j, and eta = sigma^2 * ones reproduces rbf.
struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  double sigma = 1.0;
  Eigen::VectorXd eta;
};

const char* kernel_kind_name(KernelKind kind);
KernelKind kernel_kind_from_name(std::string_view name);

void validate_kernel(const KernelSpec& spec, Eigen::Index p);

double kernel_value(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& z);

// Row-parallel when OpenMP is enabled. Entries are pure per-pair
// formulas, so the result is independent of the thread count.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& Z);

// Serial reference kept for tests and the kernel benchmark; must produce
// bitwise-identical output to kernel_matrix.
Eigen::MatrixXd kernel_matrix_serial(const KernelSpec& spec, const Eigen::MatrixXd& X,
                                     const Eigen::MatrixXd& Z);

// dK/deta_j over the Gram matrix of X: entry (i,l) of matrix j is
// -(X(i,j) - X(l,j))^2 * K(i,l). Dense; intended for small test probes.
std::vector<Eigen::MatrixXd> kernel_eta_gradient(const KernelSpec& spec, const Eigen::MatrixXd& X);

// d/deta_j of sum_{i,l} M(i,l) * K(i,l) for the scaled-rbf Gram of X,
// evaluated for all j at once. This is the contraction the scaled-kernel
// fit needs per gradient call; O(n^2 p) via one matrix product.
Eigen::VectorXd scaled_kernel_eta_derivative(const Eigen::MatrixXd& X, const Eigen::MatrixXd& K,
                                             const Eigen::MatrixXd& M);

// sigma with 1/sigma^2 = lower median of squared pairwise Euclidean
// distances; all pairs when n^2 <= 1e6, else 1e6 seeded sampled pairs.
double median_heuristic(const Eigen::MatrixXd& X, std::uint64_t seed = 0);

}  // namespace aol
