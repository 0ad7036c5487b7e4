#include "aol/learner.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "aol/rng.hpp"

namespace aol {

namespace {

using nlohmann::json;

void require_problem(const WeightedClassificationProblem& prob) {
  if (prob.n() < 1) throw std::invalid_argument("empty classification problem");
  if (prob.labels.size() != prob.n() || prob.weights.size() != prob.n())
    throw std::invalid_argument("classification problem lengths disagree");
  for (Eigen::Index i = 0; i < prob.n(); ++i) {
    if (prob.labels[i] != 1.0 && prob.labels[i] != -1.0)
      throw std::invalid_argument("labels must be +1 or -1");
    if (!(prob.weights[i] >= 0.0) || !std::isfinite(prob.weights[i]))
      throw std::invalid_argument("weights must be finite and nonnegative");
  }
}

// 1/n sum_i c_i phi(l_i f_i) and d/df_i; shared by every objective. Owns
// copies of the labels and weights so the returned handles are
// self-contained.
struct RiskTerms {
  Eigen::VectorXd labels;
  Eigen::VectorXd weights;
  Loss loss;

  double value(const Eigen::VectorXd& f, Eigen::VectorXd& dfdv) const {
    const Eigen::Index n = f.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    double total = 0.0;
    dfdv.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double l = labels[i];
      const double c = weights[i] * inv_n;
      const double u = l * f[i];
      total += c * loss_value(loss, u);
      dfdv[i] = c * loss_derivative(loss, u) * l;
    }
    return total;
  }
};

}  // namespace

Eigen::MatrixXd Standardization::apply(const Eigen::MatrixXd& X) const {
  if (X.cols() != mean.size()) throw std::invalid_argument("standardization dimension mismatch");
  return (X.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::VectorXd Standardization::apply(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("standardization dimension mismatch");
  return (x - mean).cwiseQuotient(scale);
}

Standardization compute_standardization(const Eigen::MatrixXd& X) {
  Standardization s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean();
  s.scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean[j]).square().sum() / n;
    const double sd = std::sqrt(var);
    s.scale[j] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

ObjectiveHandle linear_objective(const Eigen::MatrixXd& Xstd, const Eigen::VectorXd& labels,
                                 const Eigen::VectorXd& weights, Loss loss, double lambda) {
  const Eigen::Index p = Xstd.cols();
  RiskTerms risk{labels, weights, loss};
  return ObjectiveHandle{
      p + 1, [Xstd, risk, lambda, p](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        const auto w = theta.head(p);
        const double b = theta[p];
        const Eigen::VectorXd f = (Xstd * w).array() + b;
        Eigen::VectorXd t;
        double value = risk.value(f, t);
        grad.resize(p + 1);
        grad.head(p) = Xstd.transpose() * t + lambda * w;
        grad[p] = t.sum();
        value += 0.5 * lambda * w.squaredNorm();
        return value;
      }};
}

ObjectiveHandle kernel_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& labels,
                                 const Eigen::VectorXd& weights, Loss loss, double lambda) {
  const Eigen::Index n = K.rows();
  if (K.cols() != n) throw std::invalid_argument("Gram matrix must be square");
  RiskTerms risk{labels, weights, loss};
  return ObjectiveHandle{
      n + 1, [K, risk, lambda, n](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        const auto v = theta.head(n);
        const double b = theta[n];
        const Eigen::VectorXd Kv = K * v;
        const Eigen::VectorXd f = Kv.array() + b;
        Eigen::VectorXd t;
        double value = risk.value(f, t);
        grad.resize(n + 1);
        grad.head(n) = K * t + lambda * Kv;
        grad[n] = t.sum();
        value += 0.5 * lambda * v.dot(Kv);
        return value;
      }};
}

ObjectiveHandle scaled_kernel_objective(const Eigen::MatrixXd& Xstd, const Eigen::VectorXd& labels,
                                        const Eigen::VectorXd& weights, Loss loss, double lambda1,
                                        double lambda2) {
  const Eigen::Index n = Xstd.rows(), p = Xstd.cols();
  RiskTerms risk{labels, weights, loss};
  return ObjectiveHandle{
      n + 1 + p,
      [Xstd, risk, lambda1, lambda2, n, p](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
        const auto v = theta.head(n);
        const double b = theta[n];
        const auto eta = theta.tail(p);

        KernelSpec spec;
        spec.kind = KernelKind::scaled_rbf;
        spec.eta = eta.cwiseMax(0.0);  // probes may wander; the fit keeps eta >= 0
        const Eigen::MatrixXd K = kernel_matrix(spec, Xstd, Xstd);

        const Eigen::VectorXd Kv = K * v;
        const Eigen::VectorXd f = Kv.array() + b;
        Eigen::VectorXd t;
        double value = risk.value(f, t);
        value += 0.5 * lambda2 * v.dot(Kv) + lambda1 * eta.sum();

        grad.resize(n + 1 + p);
        grad.head(n) = K * t + lambda2 * Kv;
        grad[n] = t.sum();
        const Eigen::MatrixXd M =
            t * v.transpose() + (0.5 * lambda2) * (v * v.transpose());
        grad.tail(p) = scaled_kernel_eta_derivative(Xstd, K, M).array() + lambda1;
        return value;
      }};
}

namespace {

DecisionRule make_linear_rule(const Standardization& s, const Eigen::VectorXd& theta,
                              Eigen::Index p) {
  DecisionRule rule;
  rule.kind = RuleKind::linear;
  rule.standardization = s;
  rule.w = theta.head(p);
  rule.b = theta[p];
  return rule;
}

void fill_report(FitReport* report, const SolveResult& res, int starts) {
  if (!report) return;
  report->objective = res.f;
  report->iterations = res.iterations;
  report->evaluations = res.evaluations;
  report->status = res.status;
  report->starts_used = starts;
}

}  // namespace

DecisionRule fit_linear_aol(const WeightedClassificationProblem& problem, const FitConfig& cfg,
                            FitReport* report) {
  require_problem(problem);
  if (!(cfg.lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  const Standardization s = compute_standardization(problem.covariates);
  const Eigen::MatrixXd Xstd = s.apply(problem.covariates);
  const ObjectiveHandle obj =
      linear_objective(Xstd, problem.labels, problem.weights, cfg.loss, cfg.lambda);
  const SolveResult res =
      lbfgs_minimize(obj, Eigen::VectorXd::Zero(obj.dimension), cfg.solver);
  fill_report(report, res, 1);
  return make_linear_rule(s, res.x, Xstd.cols());
}

DecisionRule fit_kernel_aol(const WeightedClassificationProblem& problem, const FitConfig& cfg,
                            FitReport* report) {
  require_problem(problem);
  if (!(cfg.lambda >= 0.0)) throw std::invalid_argument("lambda must be >= 0");
  const Standardization s = compute_standardization(problem.covariates);
  const Eigen::MatrixXd Xstd = s.apply(problem.covariates);
  validate_kernel(cfg.kernel, Xstd.cols());
  const Eigen::MatrixXd K = kernel_matrix(cfg.kernel, Xstd, Xstd);
  const ObjectiveHandle obj =
      kernel_objective(K, problem.labels, problem.weights, cfg.loss, cfg.lambda);
  const SolveResult res =
      lbfgs_minimize(obj, Eigen::VectorXd::Zero(obj.dimension), cfg.solver);
  fill_report(report, res, 1);

  DecisionRule rule;
  rule.kind = RuleKind::kernel;
  rule.standardization = s;
  rule.v = res.x.head(Xstd.rows());
  rule.b = res.x[Xstd.rows()];
  rule.support = Xstd;
  rule.kernel = cfg.kernel;
  return rule;
}

DecisionRule fit_linear_aol_vs(const WeightedClassificationProblem& problem, const FitConfig& cfg,
                               FitReport* report) {
  require_problem(problem);
  if (!(cfg.lambda1 > 0.0)) throw std::invalid_argument("lambda1 must be > 0");
  if (!(cfg.lambda2 >= 0.0)) throw std::invalid_argument("lambda2 must be >= 0");
  const Standardization s = compute_standardization(problem.covariates);
  const Eigen::MatrixXd Xstd = s.apply(problem.covariates);
  const ObjectiveHandle smooth =
      linear_objective(Xstd, problem.labels, problem.weights, cfg.loss, cfg.lambda2);
  std::vector<bool> mask(static_cast<std::size_t>(Xstd.cols()) + 1, true);
  mask.back() = false;  // intercept unpenalized
  const SolveResult res = pss_minimize(smooth, cfg.lambda1, mask,
                                       Eigen::VectorXd::Zero(smooth.dimension), cfg.solver);
  fill_report(report, res, 1);
  return make_linear_rule(s, res.x, Xstd.cols());
}

DecisionRule fit_kernel_aol_vs(const WeightedClassificationProblem& problem, const FitConfig& cfg,
                               FitReport* report) {
  require_problem(problem);
  if (!(cfg.lambda1 > 0.0 && cfg.lambda2 > 0.0))
    throw std::invalid_argument("scaled-kernel fit needs lambda1 > 0 and lambda2 > 0");
  if (cfg.n_starts < 1) throw std::invalid_argument("n_starts must be >= 1");
  const Standardization s = compute_standardization(problem.covariates);
  const Eigen::MatrixXd Xstd = s.apply(problem.covariates);
  const Eigen::Index n = Xstd.rows(), p = Xstd.cols();

  Eigen::VectorXd eta0;
  if (cfg.kernel.kind == KernelKind::scaled_rbf && cfg.kernel.eta.size() == p) {
    eta0 = cfg.kernel.eta;
  } else {
    const double sigma = median_heuristic(Xstd, cfg.seed);
    eta0 = Eigen::VectorXd::Constant(p, sigma * sigma / static_cast<double>(p));
  }

  const ObjectiveHandle obj = scaled_kernel_objective(Xstd, problem.labels, problem.weights,
                                                      cfg.loss, cfg.lambda1, cfg.lambda2);
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(obj.dimension, -1e30);
  Eigen::VectorXd upper = Eigen::VectorXd::Constant(obj.dimension, 1e30);
  lower.tail(p).setZero();

  SolveResult best;
  bool have_best = false;
  for (int start = 0; start < cfg.n_starts; ++start) {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(obj.dimension);
    if (start == 0) {
      x0.tail(p) = eta0;
    } else {
      Rng rng(mix_seed(cfg.seed, 0x657461 + static_cast<std::uint64_t>(start)));
      for (Eigen::Index j = 0; j < p; ++j) x0[n + 1 + j] = eta0[j] * std::exp(0.5 * rng.normal());
    }
    SolveResult res = lbfgsb_minimize(obj, lower, upper, x0, cfg.solver);
    if (!have_best || res.f < best.f) {
      best = std::move(res);
      have_best = true;
    }
  }
  fill_report(report, best, cfg.n_starts);

  DecisionRule rule;
  rule.kind = RuleKind::kernel;
  rule.standardization = s;
  rule.v = best.x.head(n);
  rule.b = best.x[n];
  rule.support = Xstd;
  rule.kernel.kind = KernelKind::scaled_rbf;
  rule.kernel.eta = best.x.tail(p);
  return rule;
}

Eigen::VectorXd decision_values(const DecisionRule& rule, const Eigen::MatrixXd& X) {
  if (X.cols() != rule.input_dimension())
    throw std::invalid_argument("rule expects p = " + std::to_string(rule.input_dimension()) +
                                " covariates, got " + std::to_string(X.cols()));
  const Eigen::MatrixXd Xstd = rule.standardization.apply(X);
  if (rule.kind == RuleKind::linear) return (Xstd * rule.w).array() + rule.b;
  const Eigen::MatrixXd K = kernel_matrix(rule.kernel, Xstd, rule.support);
  return (K * rule.v).array() + rule.b;
}

Eigen::VectorXd predict(const DecisionRule& rule, const Eigen::MatrixXd& X) {
  const Eigen::VectorXd f = decision_values(rule, X);
  Eigen::VectorXd d(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) d[i] = f[i] > 0.0 ? 1.0 : -1.0;
  return d;
}

namespace {

json vector_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
  const std::vector<double> v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string to_json(const DecisionRule& rule) {
  json j;
  j["version"] = "aol-rule/1";
  j["standardization"] = {{"mean", vector_json(rule.standardization.mean)},
                          {"scale", vector_json(rule.standardization.scale)}};
  if (rule.kind == RuleKind::linear) {
    j["kind"] = "linear";
    j["w"] = vector_json(rule.w);
    j["b"] = rule.b;
  } else {
    j["kind"] = "kernel";
    j["v"] = vector_json(rule.v);
    j["b"] = rule.b;
    json kern;
    kern["kind"] = kernel_kind_name(rule.kernel.kind);
    if (rule.kernel.kind == KernelKind::rbf) kern["sigma"] = rule.kernel.sigma;
    if (rule.kernel.kind == KernelKind::scaled_rbf) kern["eta"] = vector_json(rule.kernel.eta);
    j["kernel"] = kern;
    // Support points are stored in the standardized coordinate system.
    json rows = json::array();
    for (Eigen::Index i = 0; i < rule.support.rows(); ++i)
      rows.push_back(vector_json(rule.support.row(i).transpose()));
    j["support"] = rows;
  }
  return j.dump(2);
}

DecisionRule rule_from_json(const std::string& text) {
  const json j = json::parse(text);
  if (j.value("version", "") != "aol-rule/1")
    throw std::invalid_argument("unsupported model version");
  DecisionRule rule;
  rule.standardization.mean = vector_from_json(j.at("standardization").at("mean"));
  rule.standardization.scale = vector_from_json(j.at("standardization").at("scale"));
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear") {
    rule.kind = RuleKind::linear;
    rule.w = vector_from_json(j.at("w"));
    rule.b = j.at("b").get<double>();
    if (rule.w.size() != rule.standardization.mean.size())
      throw std::invalid_argument("model dimensions inconsistent");
    return rule;
  }
  if (kind != "kernel") throw std::invalid_argument("unknown rule kind '" + kind + "'");
  rule.kind = RuleKind::kernel;
  rule.v = vector_from_json(j.at("v"));
  rule.b = j.at("b").get<double>();
  const json& kern = j.at("kernel");
  rule.kernel.kind = kernel_kind_from_name(kern.at("kind").get<std::string>());
  if (rule.kernel.kind == KernelKind::rbf) rule.kernel.sigma = kern.at("sigma").get<double>();
  if (rule.kernel.kind == KernelKind::scaled_rbf)
    rule.kernel.eta = vector_from_json(kern.at("eta"));
  const json& rows = j.at("support");
  rule.support.resize(static_cast<Eigen::Index>(rows.size()), rule.standardization.mean.size());
  for (Eigen::Index i = 0; i < rule.support.rows(); ++i) {
    const Eigen::VectorXd r = vector_from_json(rows[static_cast<std::size_t>(i)]);
    if (r.size() != rule.support.cols())
      throw std::invalid_argument("support row dimension mismatch");
    rule.support.row(i) = r.transpose();
  }
  if (rule.v.size() != rule.support.rows())
    throw std::invalid_argument("model dimensions inconsistent");
  validate_kernel(rule.kernel, rule.support.cols());
  return rule;
}

void save_rule(const std::string& path, const DecisionRule& rule) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument(path + ": cannot open for writing");
  out << to_json(rule) << "\n";
  if (!out) throw std::runtime_error(path + ": write failed");
}

DecisionRule load_rule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return rule_from_json(ss.str());
}

}  // namespace aol
