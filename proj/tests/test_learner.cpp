#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "aol/evaluate.hpp"
#include "helpers.hpp"

using namespace aol;

namespace {

WeightedClassificationProblem random_problem(Eigen::Index n, Eigen::Index p,
                                             std::uint64_t seed) {
  Rng rng(mix_seed(seed, 1));
  WeightedClassificationProblem prob;
  prob.covariates.resize(n, p);
  prob.labels.resize(n);
  prob.weights.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) prob.covariates(i, j) = rng.uniform(-1.0, 1.0);
    prob.labels[i] = rng.uniform() < 0.5 ? 1.0 : -1.0;
    prob.weights[i] = rng.uniform(0.0, 2.0);
  }
  return prob;
}

FitConfig tight_config() {
  FitConfig cfg;
  cfg.solver.gradient_tolerance = 1e-10;
  cfg.solver.max_iterations = 2000;
  return cfg;
}

}  // namespace

TEST_CASE("standardization uses population moments and guards constants") {
  Eigen::MatrixXd X(2, 3);
  X << -1.0, 5.0, 2.0,
        1.0, 5.0, 4.0;
  const Standardization s = compute_standardization(X);
  CHECK(s.mean[0] == 0.0);
  CHECK(s.scale[0] == 1.0);  // population sd of {-1, 1}
  CHECK(s.mean[1] == 5.0);
  CHECK(s.scale[1] == 1.0);  // constant column passes through centered
  CHECK(s.scale[2] == 1.0);
  const Eigen::MatrixXd Xs = s.apply(X);
  CHECK(Xs(0, 0) == -1.0);
  CHECK(Xs(1, 2) == 1.0);
  CHECK(Xs(0, 1) == 0.0);
}

TEST_CASE("zero weights give the zero rule") {
  WeightedClassificationProblem prob = random_problem(10, 2, 1);
  prob.weights.setZero();
  FitConfig cfg;
  const DecisionRule lin = fit_linear_aol(prob, cfg);
  CHECK(lin.w == Eigen::VectorXd::Zero(2));
  CHECK(lin.b == 0.0);

  cfg.kernel.kind = KernelKind::rbf;
  cfg.kernel.sigma = 1.0;
  const DecisionRule ker = fit_kernel_aol(prob, cfg);
  CHECK(ker.v == Eigen::VectorXd::Zero(10));
  CHECK(ker.b == 0.0);
}

TEST_CASE("symmetric two-point problem has a closed-form fit") {
  WeightedClassificationProblem prob;
  prob.covariates.resize(2, 1);
  prob.covariates << 1.0, -1.0;
  prob.labels.resize(2);
  prob.labels << 1.0, -1.0;
  prob.weights = Eigen::VectorXd::Ones(2);
  FitConfig cfg = tight_config();
  cfg.lambda = 0.25;
  FitReport report;
  const DecisionRule rule = fit_linear_aol(prob, cfg, &report);
  // stationarity in the quadratic branch: -(1 - w)/2 + w/4 = 0
  CHECK(rule.w[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK(rule.b == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  CHECK(report.status == SolveStatus::converged);
  // J(2/3, 0) = (1/3)^2/4 + (0.25/2)(2/3)^2 = 1/36 + 1/18
  CHECK(report.objective == doctest::Approx(1.0 / 12.0).epsilon(1e-9));
}

TEST_CASE("huge ridge shrinks the slope away") {
  const WeightedClassificationProblem prob = random_problem(30, 3, 2);
  FitConfig cfg;
  cfg.lambda = 1e6;
  const DecisionRule rule = fit_linear_aol(prob, cfg);
  CHECK(rule.w.norm() <= 1e-3);
}

TEST_CASE("linear kernel reproduces the linear fit") {
  const WeightedClassificationProblem prob = random_problem(25, 3, 3);
  FitConfig cfg = tight_config();
  cfg.lambda = 0.5;
  const DecisionRule lin = fit_linear_aol(prob, cfg);
  cfg.kernel.kind = KernelKind::linear;
  const DecisionRule ker = fit_kernel_aol(prob, cfg);
  const Eigen::VectorXd fl = decision_values(lin, prob.covariates);
  const Eigen::VectorXd fk = decision_values(ker, prob.covariates);
  CHECK((fl - fk).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("duplicating every training point keeps the decision function") {
  // each copy keeps its weight, so the weighted mean risk is untouched and
  // the minimizing function must coincide
  const WeightedClassificationProblem prob = random_problem(15, 2, 4);
  WeightedClassificationProblem doubled;
  doubled.covariates.resize(30, 2);
  doubled.labels.resize(30);
  doubled.weights.resize(30);
  for (Eigen::Index i = 0; i < 15; ++i) {
    for (int copy = 0; copy < 2; ++copy) {
      doubled.covariates.row(2 * i + copy) = prob.covariates.row(i);
      doubled.labels[2 * i + copy] = prob.labels[i];
      doubled.weights[2 * i + copy] = prob.weights[i];
    }
  }
  FitConfig cfg = tight_config();
  cfg.lambda = 0.3;
  cfg.kernel.kind = KernelKind::rbf;
  cfg.kernel.sigma = 0.8;
  const DecisionRule a = fit_kernel_aol(prob, cfg);
  const DecisionRule b = fit_kernel_aol(doubled, cfg);
  const Eigen::MatrixXd probes =
      random_problem(20, 2, 5).covariates;
  CHECK((decision_values(a, probes) - decision_values(b, probes)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("elastic net shrinks everything under a huge l1 weight") {
  const WeightedClassificationProblem prob = random_problem(40, 3, 6);
  FitConfig cfg;
  cfg.lambda1 = 1e6;
  cfg.lambda2 = 0.1;
  const DecisionRule rule = fit_linear_aol_vs(prob, cfg);
  CHECK(rule.w == Eigen::VectorXd::Zero(3));
  // the free intercept still has to be stationary
  const Standardization s = compute_standardization(prob.covariates);
  const ObjectiveHandle obj =
      linear_objective(s.apply(prob.covariates), prob.labels, prob.weights,
                       cfg.loss, cfg.lambda2);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(4);
  theta[3] = rule.b;
  Eigen::VectorXd grad(4);
  obj.eval(theta, grad);
  CHECK(std::abs(grad[3]) < 1e-5);
}

TEST_CASE("vanishing l1 weight recovers the ridge fit") {
  const WeightedClassificationProblem prob = random_problem(50, 3, 7);
  FitConfig ridge = tight_config();
  ridge.lambda = 0.2;
  const DecisionRule plain = fit_linear_aol(prob, ridge);

  FitConfig net = tight_config();
  net.lambda1 = 1e-8;
  net.lambda2 = 0.2;
  const DecisionRule vs = fit_linear_aol_vs(prob, net);
  CHECK((plain.w - vs.w).cwiseAbs().maxCoeff() < 1e-3);
  CHECK(std::abs(plain.b - vs.b) < 1e-3);
}

TEST_CASE("elastic net zeros are exact, not rounded") {
  const WeightedClassificationProblem prob = random_problem(60, 4, 8);
  FitConfig cfg;
  cfg.lambda1 = 0.2;
  cfg.lambda2 = 0.05;
  const DecisionRule rule = fit_linear_aol_vs(prob, cfg);
  bool some_zero = false;
  for (Eigen::Index j = 0; j < 4; ++j) {
    if (rule.w[j] == 0.0) some_zero = true;
    CHECK((rule.w[j] == 0.0 || std::abs(rule.w[j]) > 1e-12));
  }
  CHECK(some_zero);  // random labels with this penalty kill at least one coordinate
}

TEST_CASE("scaled kernel discards everything under a huge eta penalty") {
  const WeightedClassificationProblem prob = random_problem(25, 3, 9);
  FitConfig cfg;
  cfg.lambda1 = 1e5;
  cfg.lambda2 = 0.5;
  const DecisionRule rule = fit_kernel_aol_vs(prob, cfg);
  REQUIRE(rule.kernel.kind == KernelKind::scaled_rbf);
  CHECK(rule.kernel.eta == Eigen::VectorXd::Zero(3));
}

TEST_CASE("freezing eta reduces the joint objective to the fixed-kernel one") {
  const WeightedClassificationProblem prob = random_problem(30, 3, 10);
  const Standardization s = compute_standardization(prob.covariates);
  const Eigen::MatrixXd Xstd = s.apply(prob.covariates);
  const Eigen::VectorXd eta = Eigen::VectorXd::Constant(3, 0.3);
  const double lambda1 = 0.05, lambda2 = 0.4;

  SolverOptions opts;
  opts.gradient_tolerance = 1e-12;
  opts.max_iterations = 20000;

  const ObjectiveHandle joint =
      scaled_kernel_objective(Xstd, prob.labels, prob.weights, Loss::huberized_hinge,
                              lambda1, lambda2);
  const double inf = std::numeric_limits<double>::infinity();
  Eigen::VectorXd lower = Eigen::VectorXd::Constant(34, -inf);
  Eigen::VectorXd upper = Eigen::VectorXd::Constant(34, inf);
  lower.tail(3) = eta;
  upper.tail(3) = eta;
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(34);
  x0.tail(3) = eta;
  const SolveResult frozen = lbfgsb_minimize(joint, lower, upper, x0, opts);

  KernelSpec spec;
  spec.kind = KernelKind::scaled_rbf;
  spec.eta = eta;
  const Eigen::MatrixXd K = kernel_matrix(spec, Xstd, Xstd);
  const ObjectiveHandle fixed =
      kernel_objective(K, prob.labels, prob.weights, Loss::huberized_hinge, lambda2);
  const SolveResult direct = lbfgs_minimize(fixed, Eigen::VectorXd::Zero(31), opts);

  // objectives differ by the constant lambda1 * sum(eta)
  CHECK(frozen.f - lambda1 * eta.sum() == doctest::Approx(direct.f).epsilon(1e-7));
  const Eigen::VectorXd f1 = K * frozen.x.head(30) + Eigen::VectorXd::Constant(30, frozen.x[30]);
  const Eigen::VectorXd f2 = K * direct.x.head(30) + Eigen::VectorXd::Constant(30, direct.x[30]);
  CHECK((f1 - f2).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("objectives are convex along random chords") {
  const WeightedClassificationProblem prob = random_problem(20, 2, 11);
  const Standardization s = compute_standardization(prob.covariates);
  const Eigen::MatrixXd Xstd = s.apply(prob.covariates);
  KernelSpec spec;
  spec.kind = KernelKind::rbf;
  spec.sigma = 0.9;
  const Eigen::MatrixXd K = kernel_matrix(spec, Xstd, Xstd);
  Rng rng(12);
  for (Loss loss : kAllLosses) {
    const ObjectiveHandle lin = linear_objective(Xstd, prob.labels, prob.weights, loss, 0.3);
    const ObjectiveHandle ker = kernel_objective(K, prob.labels, prob.weights, loss, 0.3);
    for (const ObjectiveHandle* obj : {&lin, &ker}) {
      Eigen::VectorXd a(obj->dimension), b(obj->dimension), g(obj->dimension);
      for (int rep = 0; rep < 40; ++rep) {
        for (Eigen::Index j = 0; j < obj->dimension; ++j) {
          a[j] = rng.uniform(-1.0, 1.0);
          b[j] = rng.uniform(-1.0, 1.0);
        }
        const double t = rng.uniform();
        const double mid = obj->eval((t * a + (1 - t) * b).eval(), g);
        const double chord = t * obj->eval(a, g) + (1 - t) * obj->eval(b, g);
        CHECK(mid <= chord + 1e-10);
      }
    }
  }
}

TEST_CASE("flipping labels negates the minimizing parameters exactly") {
  const WeightedClassificationProblem prob = random_problem(20, 2, 13);
  const Standardization s = compute_standardization(prob.covariates);
  const Eigen::MatrixXd Xstd = s.apply(prob.covariates);
  const ObjectiveHandle plus =
      linear_objective(Xstd, prob.labels, prob.weights, Loss::hinge, 0.3);
  const ObjectiveHandle minus =
      linear_objective(Xstd, (-prob.labels).eval(), prob.weights, Loss::hinge, 0.3);
  Rng rng(14);
  Eigen::VectorXd theta(3), g(3);
  for (int rep = 0; rep < 50; ++rep) {
    for (int j = 0; j < 3; ++j) theta[j] = rng.uniform(-2.0, 2.0);
    CHECK(minus.eval(theta, g) == plus.eval((-theta).eval(), g));
  }
}

TEST_CASE("co-scaling weights and penalty by 8 scales the objective by 8") {
  const WeightedClassificationProblem prob = random_problem(20, 2, 15);
  const Standardization s = compute_standardization(prob.covariates);
  const Eigen::MatrixXd Xstd = s.apply(prob.covariates);
  const ObjectiveHandle base =
      linear_objective(Xstd, prob.labels, prob.weights, Loss::hinge, 0.25);
  const ObjectiveHandle scaled =
      linear_objective(Xstd, prob.labels, (8.0 * prob.weights).eval(), Loss::hinge, 2.0);
  Rng rng(16);
  Eigen::VectorXd theta(3), g(3);
  for (int rep = 0; rep < 50; ++rep) {
    for (int j = 0; j < 3; ++j) theta[j] = rng.uniform(-2.0, 2.0);
    CHECK(scaled.eval(theta, g) == 8.0 * base.eval(theta, g));
  }
}

TEST_CASE("fitted objective beats random probes") {
  const WeightedClassificationProblem prob = random_problem(35, 3, 17);
  FitConfig cfg;
  cfg.lambda = 0.15;
  FitReport report;
  const DecisionRule rule = fit_linear_aol(prob, cfg, &report);
  const Standardization s = compute_standardization(prob.covariates);
  const ObjectiveHandle obj =
      linear_objective(s.apply(prob.covariates), prob.labels, prob.weights, cfg.loss, cfg.lambda);
  Eigen::VectorXd theta(4), g(4);
  theta.head(3) = rule.w;
  theta[3] = rule.b;
  CHECK(obj.eval(theta, g) == doctest::Approx(report.objective).epsilon(1e-12));
  Rng rng(18);
  for (int rep = 0; rep < 50; ++rep) {
    for (int j = 0; j < 4; ++j) theta[j] = rng.uniform(-2.0, 2.0);
    CHECK(obj.eval(theta, g) >= report.objective - 1e-9);
  }
}

TEST_CASE("fits succeed with every loss") {
  const WeightedClassificationProblem prob = random_problem(24, 2, 19);
  for (Loss loss : kAllLosses) {
    FitConfig cfg;
    cfg.loss = loss;
    cfg.lambda = 0.5;
    FitReport report;
    const DecisionRule rule = fit_linear_aol(prob, cfg, &report);
    CHECK(std::isfinite(report.objective));
    CHECK(rule.w.allFinite());
  }
}

TEST_CASE("prediction rules at pinned points") {
  DecisionRule rule;
  rule.kind = RuleKind::linear;
  rule.standardization.mean = Eigen::VectorXd::Zero(2);
  rule.standardization.scale = Eigen::VectorXd::Ones(2);
  rule.w = Eigen::VectorXd::Zero(2);
  rule.b = 0.0;
  Eigen::MatrixXd X(3, 2);
  X << 0.5, 0.0, -0.3, 0.2, 0.0, 0.0;
  CHECK(predict(rule, X) == Eigen::VectorXd::Constant(3, -1.0));  // ties go to -1

  rule.w << 1.0, 0.0;
  CHECK(predict(rule, X)[0] == 1.0);
  CHECK(predict(rule, X)[1] == -1.0);

  rule.b = -0.5;
  CHECK(decision_values(rule, X)[0] == 0.0);
  CHECK(predict(rule, X)[0] == -1.0);
}

TEST_CASE("kernel rule with zero coefficients is the constant intercept") {
  DecisionRule rule;
  rule.kind = RuleKind::kernel;
  rule.standardization.mean = Eigen::VectorXd::Zero(2);
  rule.standardization.scale = Eigen::VectorXd::Ones(2);
  rule.support = Eigen::MatrixXd::Zero(4, 2);
  rule.v = Eigen::VectorXd::Zero(4);
  rule.b = 0.7;
  rule.kernel.kind = KernelKind::rbf;
  rule.kernel.sigma = 1.0;
  const Eigen::MatrixXd X = random_problem(6, 2, 20).covariates;
  CHECK(decision_values(rule, X) == Eigen::VectorXd::Constant(6, 0.7));
}

TEST_CASE("predict agrees with the sign rule on random probes") {
  const WeightedClassificationProblem prob = random_problem(30, 2, 21);
  FitConfig cfg;
  cfg.lambda = 0.1;
  cfg.kernel.kind = KernelKind::rbf;
  cfg.kernel.sigma = 1.1;
  const DecisionRule rule = fit_kernel_aol(prob, cfg);
  const Eigen::MatrixXd probes = random_problem(1000, 2, 22).covariates;
  const Eigen::VectorXd f = decision_values(rule, probes);
  const Eigen::VectorXd d = predict(rule, probes);
  for (Eigen::Index i = 0; i < probes.rows(); ++i)
    CHECK(d[i] == (f[i] > 0.0 ? 1.0 : -1.0));
}

TEST_CASE("dimension mismatch names the expected width") {
  const WeightedClassificationProblem prob = random_problem(12, 3, 23);
  FitConfig cfg;
  const DecisionRule rule = fit_linear_aol(prob, cfg);
  const Eigen::MatrixXd wrong = Eigen::MatrixXd::Zero(2, 5);
  CHECK_THROWS_WITH_AS(static_cast<void>(predict(rule, wrong)), doctest::Contains("3"),
                       std::invalid_argument);
}

TEST_CASE("rule serialization round trips bit for bit") {
  const WeightedClassificationProblem prob = random_problem(18, 2, 24);
  FitConfig cfg;
  cfg.lambda = 0.2;

  const DecisionRule lin = fit_linear_aol(prob, cfg);
  const DecisionRule lin2 = rule_from_json(to_json(lin));
  const Eigen::MatrixXd probes = random_problem(40, 2, 25).covariates;
  CHECK(decision_values(lin, probes) == decision_values(lin2, probes));
  CHECK(predict(lin, probes) == predict(lin2, probes));

  cfg.kernel.kind = KernelKind::rbf;
  cfg.kernel.sigma = 0.7;
  const DecisionRule ker = fit_kernel_aol(prob, cfg);
  testutil::TempFile f("rule_rt.json");
  save_rule(f.path, ker);
  const DecisionRule ker2 = load_rule(f.path);
  CHECK(decision_values(ker, probes) == decision_values(ker2, probes));

  FitConfig vs;
  vs.lambda1 = 0.02;
  vs.lambda2 = 0.1;
  const DecisionRule scaled = fit_kernel_aol_vs(prob, vs);
  const DecisionRule scaled2 = rule_from_json(to_json(scaled));
  CHECK(scaled2.kernel.eta == scaled.kernel.eta);
  CHECK(decision_values(scaled, probes) == decision_values(scaled2, probes));

  CHECK_THROWS_WITH_AS(static_cast<void>(rule_from_json("{\"version\":\"aol-rule/9\"}")),
                       doctest::Contains("version"), std::invalid_argument);
}

TEST_CASE("restarts never worsen the scaled-kernel objective") {
  const WeightedClassificationProblem prob = random_problem(30, 3, 26);
  FitConfig one;
  one.lambda1 = 0.05;
  one.lambda2 = 0.3;
  one.n_starts = 1;
  one.seed = 7;
  FitReport rep_one;
  fit_kernel_aol_vs(prob, one, &rep_one);

  FitConfig three = one;
  three.n_starts = 3;
  FitReport rep_three;
  fit_kernel_aol_vs(prob, three, &rep_three);
  CHECK(rep_three.objective <= rep_one.objective + 1e-12);
  CHECK(rep_three.starts_used == 3);
}

TEST_CASE("noise coordinate is dropped at the tuned elastic-net penalty") {
  // appended noise covariate: the regime depends only on x1, x2
  int zeroed = 0;
  const int runs = 50;
  for (int run = 0; run < runs; ++run) {
    ScenarioSpec spec;
    spec.scenario_id = 1;
    spec.n = 400;
    spec.p = 6;
    spec.seed = 900 + static_cast<std::uint64_t>(run);
    const TrialDataset data = simulate_scenario(spec);
    GSource gsource;
    const std::vector<FitConfig> grid = default_grid(data, MethodTag::aol_vs_linear, spec.seed);
    const CvReport cv =
        cross_validate(data, gsource, MethodTag::aol_vs_linear, grid, 10, spec.seed);
    const DecisionRule rule = fit_pipeline(data, gsource, MethodTag::aol_vs_linear,
                                           cv.grid[static_cast<std::size_t>(cv.chosen)]);
    if (rule.w[5] == 0.0) ++zeroed;
  }
  CHECK(zeroed >= 45);
}

TEST_CASE("noise eta components vanish at tuned scaled-kernel penalties") {
  // Outcome depends on x1, x2 alone (main effect plus a quadratic
  // treatment contrast); x3..x5 carry no signal, so the scaled kernel
  // should drop them.
  int clean = 0;
  const int runs = 20;
  for (int run = 0; run < runs; ++run) {
    const std::uint64_t seed = 1700 + static_cast<std::uint64_t>(run);
    const Eigen::Index n = 400;
    TrialDataset data;
    data.covariates = simulate_covariates(n, 5, seed);
    data.treatments.resize(n);
    data.outcomes.resize(n);
    data.propensities = Eigen::VectorXd::Constant(n, 0.5);
    Rng rng(mix_seed(seed, 1));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x1 = data.covariates(i, 0);
      const double x2 = data.covariates(i, 1);
      const double a = rng.uniform() < 0.5 ? 1.0 : -1.0;
      data.treatments[i] = a;
      data.outcomes[i] =
          0.5 + 0.6 * x1 + 0.8 * x2 + a * (0.6 - x1 * x1 - x2 * x2) + rng.normal();
    }
    GSource gsource;
    // penalties fixed at values tuned once offline; grid search here would
    // dominate the suite's runtime without changing what is being tested
    FitConfig cfg;
    cfg.lambda1 = 0.06;
    cfg.lambda2 = 0.02;
    cfg.kernel.kind = KernelKind::scaled_rbf;
    cfg.seed = seed;
    const DecisionRule rule = fit_pipeline(data, gsource, MethodTag::aol_vs_gaussian, cfg);
    if (rule.kernel.eta[2] == 0.0 && rule.kernel.eta[3] == 0.0 && rule.kernel.eta[4] == 0.0)
      ++clean;
  }
  CHECK(clean >= 11);
}
