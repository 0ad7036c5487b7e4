#include "aol/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "aol/rng.hpp"

namespace aol {

const char* kernel_kind_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::linear: return "linear";
    case KernelKind::rbf: return "rbf";
    case KernelKind::scaled_rbf: return "scaled_rbf";
  }
  throw std::logic_error("unknown kernel kind");
}

KernelKind kernel_kind_from_name(std::string_view name) {
  if (name == "linear") return KernelKind::linear;
  if (name == "rbf") return KernelKind::rbf;
  if (name == "scaled_rbf") return KernelKind::scaled_rbf;
  throw std::invalid_argument("unknown kernel '" + std::string(name) + "'");
}

void validate_kernel(const KernelSpec& spec, Eigen::Index p) {
  switch (spec.kind) {
    case KernelKind::linear:
      return;
    case KernelKind::rbf:
      if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma))
        throw std::invalid_argument("rbf sigma must be positive");
      return;
    case KernelKind::scaled_rbf:
      if (spec.eta.size() != p) throw std::invalid_argument("eta dimension mismatch");
      if (!(spec.eta.array() >= 0.0).all() || !spec.eta.allFinite())
        throw std::invalid_argument("eta must be componentwise nonnegative");
      return;
  }
  throw std::logic_error("unknown kernel kind");
}

namespace {

// Shared exponent so the isotropic kernel is bit-identical to the scaled
// kernel with a constant weight vector.
double scaled_exponent(const Eigen::ArrayXd& eta, const Eigen::ArrayXd& d) {
  return (eta * d * d).sum();
}

}  // namespace

double kernel_value(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& z) {
  if (x.size() != z.size()) throw std::invalid_argument("kernel_value dimension mismatch");
  switch (spec.kind) {
    case KernelKind::linear:
      return x.dot(z);
    case KernelKind::rbf:
      return std::exp(-scaled_exponent(
          Eigen::ArrayXd::Constant(x.size(), spec.sigma * spec.sigma), (x - z).array()));
    case KernelKind::scaled_rbf: {
      if (spec.eta.size() != x.size()) throw std::invalid_argument("eta dimension mismatch");
      return std::exp(-scaled_exponent(spec.eta.array(), (x - z).array()));
    }
  }
  throw std::logic_error("unknown kernel kind");
}

namespace {

template <typename EntryFn>
void fill_rows(Eigen::MatrixXd& K, EntryFn&& entry, bool parallel) {
  const Eigen::Index n = K.rows();
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) entry(i);
  } else {
    for (Eigen::Index i = 0; i < n; ++i) entry(i);
  }
}

Eigen::MatrixXd kernel_matrix_impl(const KernelSpec& spec, const Eigen::MatrixXd& X,
                                   const Eigen::MatrixXd& Z, bool parallel) {
  if (X.cols() != Z.cols()) throw std::invalid_argument("kernel_matrix column counts differ");
  validate_kernel(spec, X.cols());
  Eigen::MatrixXd K(X.rows(), Z.rows());
  const Eigen::Index m = Z.rows();
  switch (spec.kind) {
    case KernelKind::linear:
      // Row-by-row so the serial and parallel paths share the arithmetic.
      fill_rows(K, [&](Eigen::Index i) { K.row(i) = X.row(i) * Z.transpose(); }, parallel);
      break;
    case KernelKind::rbf:
    case KernelKind::scaled_rbf: {
      const Eigen::ArrayXd eta =
          spec.kind == KernelKind::rbf
              ? Eigen::ArrayXd::Constant(X.cols(), spec.sigma * spec.sigma).eval()
              : spec.eta.array().eval();
      fill_rows(
          K,
          [&](Eigen::Index i) {
            for (Eigen::Index j = 0; j < m; ++j) {
              const Eigen::ArrayXd d = (X.row(i) - Z.row(j)).transpose().array();
              K(i, j) = std::exp(-scaled_exponent(eta, d));
            }
          },
          parallel);
      break;
    }
  }
  return K;
}

}  // namespace

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::MatrixXd& Z) {
  return kernel_matrix_impl(spec, X, Z, true);
}

Eigen::MatrixXd kernel_matrix_serial(const KernelSpec& spec, const Eigen::MatrixXd& X,
                                     const Eigen::MatrixXd& Z) {
  return kernel_matrix_impl(spec, X, Z, false);
}

std::vector<Eigen::MatrixXd> kernel_eta_gradient(const KernelSpec& spec, const Eigen::MatrixXd& X) {
  if (spec.kind != KernelKind::scaled_rbf)
    throw std::invalid_argument("kernel_eta_gradient needs a scaled_rbf spec");
  validate_kernel(spec, X.cols());
  const Eigen::MatrixXd K = kernel_matrix_serial(spec, X, X);
  const Eigen::Index n = X.rows(), p = X.cols();
  std::vector<Eigen::MatrixXd> grads(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::MatrixXd& G = grads[static_cast<std::size_t>(j)];
    G.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index l = 0; l < n; ++l) {
        const double d = X(i, j) - X(l, j);
        G(i, l) = -d * d * K(i, l);
      }
  }
  return grads;
}

Eigen::VectorXd scaled_kernel_eta_derivative(const Eigen::MatrixXd& X, const Eigen::MatrixXd& K,
                                             const Eigen::MatrixXd& M) {
  const Eigen::Index n = X.rows();
  if (K.rows() != n || K.cols() != n || M.rows() != n || M.cols() != n)
    throw std::invalid_argument("scaled_kernel_eta_derivative size mismatch");
  // d/deta_j sum M.K = -sum_{i,l} M_il K_il (X_ij - X_lj)^2; expand the
  // square so the cross term becomes one matrix product.
  const Eigen::MatrixXd G = M.cwiseProduct(K);
  const Eigen::VectorXd r = G.rowwise().sum();
  const Eigen::VectorXd c = G.colwise().sum().transpose();
  const Eigen::MatrixXd X2 = X.cwiseProduct(X);
  const Eigen::MatrixXd H = G * X;
  Eigen::VectorXd out = X2.transpose() * r + X2.transpose() * c;
  out.noalias() -= 2.0 * X.cwiseProduct(H).colwise().sum().transpose();
  return -out;
}

double median_heuristic(const Eigen::MatrixXd& X, std::uint64_t seed) {
  const Eigen::Index n = X.rows();
  if (n < 2) throw std::invalid_argument("median_heuristic needs n >= 2");

  std::vector<double> d2;
  if (n * n <= 1000000) {
    d2.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        d2.push_back((X.row(i) - X.row(j)).squaredNorm());
  } else {
    Rng rng(mix_seed(seed, 0x6d656469));
    d2.resize(1000000);
    for (double& v : d2) {
      Eigen::Index i = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n));
      Eigen::Index j = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n - 1));
      if (j >= i) ++j;
      v = (X.row(i) - X.row(j)).squaredNorm();
    }
  }
  const std::size_t mid = (d2.size() - 1) / 2;
  std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
  const double med = d2[mid];
  if (!(med > 0.0)) throw std::invalid_argument("median_heuristic: all points identical");
  return 1.0 / std::sqrt(med);
}

}  // namespace aol
