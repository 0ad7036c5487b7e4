#include "aol/evaluate.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "aol/rng.hpp"

namespace aol {

namespace {

double kahan_sum(const std::vector<double>& xs) {
  double sum = 0.0, comp = 0.0;
  for (double x : xs) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return sum;
}

}  // namespace

ValueEstimate ipw_value(const TrialDataset& data, const Eigen::VectorXd& recommendations,
                        bool normalized) {
  if (recommendations.size() != data.n())
    throw std::invalid_argument("recommendation length mismatch");
  double num = 0.0, den = 0.0;
  Eigen::Index matched = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (data.treatments[i] != recommendations[i]) continue;
    ++matched;
    num += data.outcomes[i] / data.propensities[i];
    den += 1.0 / data.propensities[i];
  }
  ValueEstimate out;
  out.n_matched = matched;
  if (normalized) {
    if (matched == 0) throw std::runtime_error("no matched subjects");
    out.value = num / den;
  } else {
    out.value = num / static_cast<double>(data.n());
  }
  return out;
}

double aipwe_value(const TrialDataset& data, const Eigen::VectorXd& recommendations,
                   const Eigen::VectorXd& mu_plus, const Eigen::VectorXd& mu_minus) {
  const Eigen::Index n = data.n();
  if (recommendations.size() != n || mu_plus.size() != n || mu_minus.size() != n)
    throw std::invalid_argument("aipwe_value length mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = recommendations[i];
    const double m = d > 0 ? mu_plus[i] : mu_minus[i];
    double term = m;
    if (data.treatments[i] == d)
      term += (data.outcomes[i] - m) / data.propensities[i];
    total += term;
  }
  return total / static_cast<double>(n);
}

const char* method_name(MethodTag tag) {
  switch (tag) {
    case MethodTag::aol_linear: return "aol_linear";
    case MethodTag::aol_gaussian: return "aol_gaussian";
    case MethodTag::aol_vs_linear: return "aol_vs_linear";
    case MethodTag::aol_vs_gaussian: return "aol_vs_gaussian";
  }
  throw std::logic_error("unknown method");
}

MethodTag method_from_name(std::string_view name) {
  if (name == "aol_linear") return MethodTag::aol_linear;
  if (name == "aol_gaussian") return MethodTag::aol_gaussian;
  if (name == "aol_vs_linear") return MethodTag::aol_vs_linear;
  if (name == "aol_vs_gaussian") return MethodTag::aol_vs_gaussian;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

namespace {

TrialDataset prepare(const TrialDataset& train, const GSource& gsource) {
  if (!gsource.estimate_propensities) return train;
  return with_estimated_propensities(train, estimate_propensity(train));
}

Eigen::VectorXd residuals_on(const TrialDataset& prepped, const GSource& gsource) {
  switch (gsource.mode) {
    case GSource::Mode::fitted:
      return compute_residuals(prepped, fit_g(prepped, gsource.variant));
    case GSource::Mode::oracle:
      return oracle_residuals(prepped, gsource.scenario_id, gsource.variant.kind);
    case GSource::Mode::constant:
      return prepped.outcomes.array() - gsource.constant_value;
  }
  throw std::logic_error("unknown g source mode");
}

}  // namespace

Eigen::VectorXd pipeline_residuals(const TrialDataset& train, const GSource& gsource) {
  return residuals_on(prepare(train, gsource), gsource);
}

DecisionRule fit_pipeline(const TrialDataset& train, const GSource& gsource, MethodTag method,
                          const FitConfig& cfg, FitReport* report) {
  const TrialDataset prepped = prepare(train, gsource);
  const WeightedClassificationProblem problem = reflect(prepped, residuals_on(prepped, gsource));
  switch (method) {
    case MethodTag::aol_linear: return fit_linear_aol(problem, cfg, report);
    case MethodTag::aol_gaussian: return fit_kernel_aol(problem, cfg, report);
    case MethodTag::aol_vs_linear: return fit_linear_aol_vs(problem, cfg, report);
    case MethodTag::aol_vs_gaussian: return fit_kernel_aol_vs(problem, cfg, report);
  }
  throw std::logic_error("unknown method");
}

namespace {

// Stratified fold labels: each arm is shuffled and dealt round-robin.
std::vector<int> stratified_folds(const Eigen::VectorXd& treatments, int folds,
                                  std::uint64_t seed) {
  const Eigen::Index n = treatments.size();
  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int arm = 0; arm < 2; ++arm) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i)
      if ((treatments[i] > 0) == (arm == 0)) idx.push_back(i);
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(arm)));
    for (std::size_t i = idx.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
      std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
    }
    for (std::size_t k = 0; k < idx.size(); ++k)
      assignment[static_cast<std::size_t>(idx[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));
  }
  return assignment;
}

bool folds_have_both_arms(const std::vector<int>& assignment, const Eigen::VectorXd& treatments,
                          int folds) {
  std::vector<int> plus(static_cast<std::size_t>(folds), 0), minus(static_cast<std::size_t>(folds), 0);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (treatments[static_cast<Eigen::Index>(i)] > 0)
      ++plus[static_cast<std::size_t>(assignment[i])];
    else
      ++minus[static_cast<std::size_t>(assignment[i])];
  }
  for (int k = 0; k < folds; ++k)
    if (plus[static_cast<std::size_t>(k)] == 0 || minus[static_cast<std::size_t>(k)] == 0)
      return false;
  return true;
}

// Larger regularization first, then wider kernels, so ties resolve
// toward the simpler rule.
bool prefer_config(const FitConfig& a, const FitConfig& b) {
  if (a.lambda1 != b.lambda1) return a.lambda1 > b.lambda1;
  if (a.lambda2 != b.lambda2) return a.lambda2 > b.lambda2;
  if (a.lambda != b.lambda) return a.lambda > b.lambda;
  if (a.kernel.kind == KernelKind::rbf && b.kernel.kind == KernelKind::rbf &&
      a.kernel.sigma != b.kernel.sigma)
    return a.kernel.sigma < b.kernel.sigma;
  return false;
}

// Delta-method standard error of the normalized IPW value: the value is a
// ratio of weighted sums, so its influence terms are (a_i - V b_i) / sum(b).
double value_standard_error(const TrialDataset& data, const Eigen::VectorXd& rec, double value) {
  if (!std::isfinite(value)) return 0.0;
  double denom = 0.0, sumsq = 0.0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const double matched = data.treatments[i] == rec[i] ? 1.0 : 0.0;
    const double b = matched / data.propensities[i];
    const double a = data.outcomes[i] * b;
    denom += b;
    sumsq += (a - value * b) * (a - value * b);
  }
  if (denom <= 0.0) return 0.0;
  return std::sqrt(sumsq) / denom;
}

// Out-of-fold recommendations for one config.
Eigen::VectorXd oof_recommendations(const TrialDataset& data, const std::vector<int>& assignment,
                                    int folds, const GSource& gsource, MethodTag method,
                                    const FitConfig& cfg) {
  Eigen::VectorXd rec(data.n());
  for (int k = 0; k < folds; ++k) {
    std::vector<Eigen::Index> train_rows, test_rows;
    for (Eigen::Index i = 0; i < data.n(); ++i)
      (assignment[static_cast<std::size_t>(i)] == k ? test_rows : train_rows).push_back(i);
    const TrialDataset train = subset(data, train_rows);
    const TrialDataset test = subset(data, test_rows);
    const DecisionRule rule = fit_pipeline(train, gsource, method, cfg);
    const Eigen::VectorXd pred = predict(rule, test.covariates);
    for (std::size_t t = 0; t < test_rows.size(); ++t)
      rec[test_rows[t]] = pred[static_cast<Eigen::Index>(t)];
  }
  return rec;
}

std::vector<int> make_folds(const TrialDataset& data, int folds, std::uint64_t seed) {
  for (int attempt = 0; attempt < 10; ++attempt) {
    std::vector<int> assignment =
        stratified_folds(data.treatments, folds, mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    if (folds_have_both_arms(assignment, data.treatments, folds)) return assignment;
  }
  throw std::runtime_error("could not build folds with both arms present");
}

}  // namespace

CvReport cross_validate(const TrialDataset& data, const GSource& gsource, MethodTag method,
                        const std::vector<FitConfig>& grid, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (grid.empty()) throw std::invalid_argument("empty config grid");
  if (data.n() < folds) throw std::invalid_argument("fewer subjects than folds");

  // The held-out score needs usable propensities even when the pipeline
  // estimates them; fold fits still re-estimate within their own folds.
  const TrialDataset scored = prepare(data, gsource);

  CvReport report;
  report.grid = grid;
  report.fold_seed = seed;
  const std::vector<int> assignment = make_folds(scored, folds, seed);

  const int m = static_cast<int>(grid.size());
  report.values.assign(static_cast<std::size_t>(m), 0.0);
  std::vector<Eigen::VectorXd> recs(static_cast<std::size_t>(m));
  // Cells are independent; each writes only its own slot, so the result
  // does not depend on the worker count.
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < m; ++c) {
    const Eigen::VectorXd rec =
        oof_recommendations(scored, assignment, folds, gsource, method,
                            grid[static_cast<std::size_t>(c)]);
    double value;
    try {
      value = ipw_value(scored, rec, true).value;
    } catch (const std::runtime_error&) {
      value = -std::numeric_limits<double>::infinity();
    }
    report.values[static_cast<std::size_t>(c)] = value;
    recs[static_cast<std::size_t>(c)] = rec;
  }

  int best = 0;
  for (int c = 1; c < m; ++c) {
    const double dv = report.values[static_cast<std::size_t>(c)] -
                      report.values[static_cast<std::size_t>(best)];
    if (dv > 1e-12)
      best = c;
    else if (dv >= -1e-12 && prefer_config(grid[static_cast<std::size_t>(c)],
                                           grid[static_cast<std::size_t>(best)]))
      best = c;
  }

  // Configs whose held-out value sits within a fraction of a standard
  // error of the winner are statistically tied with it; resolve those
  // ties toward the larger regularization like the exact ties above.
  constexpr double kTieSpanSe = 0.5;
  const double span = kTieSpanSe *
                      value_standard_error(scored, recs[static_cast<std::size_t>(best)],
                                           report.values[static_cast<std::size_t>(best)]);
  const double floor = report.values[static_cast<std::size_t>(best)] - std::max(span, 1e-12);
  int chosen = best;
  for (int c = 0; c < m; ++c) {
    if (report.values[static_cast<std::size_t>(c)] < floor) continue;
    if (prefer_config(grid[static_cast<std::size_t>(c)], grid[static_cast<std::size_t>(chosen)]))
      chosen = c;
  }
  report.chosen = chosen;
  return report;
}

ValueEstimate nested_cv(const TrialDataset& data, const GSource& gsource, MethodTag method,
                        const std::vector<FitConfig>& grid, int outer_folds, int inner_folds,
                        std::uint64_t seed) {
  if (outer_folds < 2 || inner_folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (grid.empty()) throw std::invalid_argument("empty config grid");
  const TrialDataset scored = prepare(data, gsource);
  const std::vector<int> assignment = make_folds(scored, outer_folds, mix_seed(seed, 0xA1));
  Eigen::VectorXd rec(scored.n());
  for (int k = 0; k < outer_folds; ++k) {
    std::vector<Eigen::Index> train_rows, test_rows;
    for (Eigen::Index i = 0; i < scored.n(); ++i)
      (assignment[static_cast<std::size_t>(i)] == k ? test_rows : train_rows).push_back(i);
    const TrialDataset train = subset(scored, train_rows);
    const TrialDataset test = subset(scored, test_rows);
    const CvReport inner = cross_validate(train, gsource, method, grid, inner_folds,
                                          mix_seed(seed, 0x100 + static_cast<std::uint64_t>(k)));
    const DecisionRule rule =
        fit_pipeline(train, gsource, method, grid[static_cast<std::size_t>(inner.chosen)]);
    const Eigen::VectorXd pred = predict(rule, test.covariates);
    for (std::size_t t = 0; t < test_rows.size(); ++t)
      rec[test_rows[t]] = pred[static_cast<Eigen::Index>(t)];
  }
  return ipw_value(scored, rec, true);
}

std::vector<FitConfig> default_grid(const TrialDataset& data, MethodTag method,
                                    std::uint64_t seed) {
  const double n = static_cast<double>(data.n());
  std::vector<double> lambdas;
  for (int k = -8; k <= 8; ++k) lambdas.push_back(std::ldexp(1.0, k) / n);

  std::vector<FitConfig> grid;
  switch (method) {
    case MethodTag::aol_linear:
      for (double l : lambdas) {
        FitConfig cfg;
        cfg.lambda = l;
        grid.push_back(cfg);
      }
      break;
    case MethodTag::aol_gaussian: {
      const Standardization s = compute_standardization(data.covariates);
      const double sigma = median_heuristic(s.apply(data.covariates), seed);
      for (double mult : {0.25, 0.5, 1.0, 2.0, 4.0})
        for (double l : lambdas) {
          FitConfig cfg;
          cfg.lambda = l;
          cfg.kernel.kind = KernelKind::rbf;
          cfg.kernel.sigma = sigma * mult;
          grid.push_back(cfg);
        }
      break;
    }
    case MethodTag::aol_vs_linear:
      for (double l : lambdas) {
        FitConfig cfg;
        cfg.lambda1 = l;
        cfg.lambda2 = 1.0 / n;
        grid.push_back(cfg);
      }
      break;
    case MethodTag::aol_vs_gaussian:
      for (double l : lambdas) {
        FitConfig cfg;
        cfg.lambda1 = l;
        cfg.lambda2 = 1.0 / n;
        cfg.kernel.kind = KernelKind::scaled_rbf;  // eta0 resolved inside the fit
        grid.push_back(cfg);
      }
      break;
  }
  return grid;
}

double empirical_regime_value(int scenario_id, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& recommendations) {
  if (recommendations.size() != X.rows())
    throw std::invalid_argument("recommendation length mismatch");
  std::vector<double> vals(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    vals[static_cast<std::size_t>(i)] =
        oracle_mu(scenario_id, X.row(i).transpose(), recommendations[i] > 0 ? 1 : -1);
  return kahan_sum(vals) / static_cast<double>(X.rows());
}

namespace {

std::string gsource_suffix(const GSource& g) {
  std::string s;
  switch (g.mode) {
    case GSource::Mode::fitted:
      s = std::string("/") + g_kind_name(g.variant.kind);
      if (g.variant.estimator == GEstimator::armwise_plugin) s += "-armwise";
      break;
    case GSource::Mode::oracle:
      s = std::string("/oracle-") + g_kind_name(g.variant.kind);
      break;
    case GSource::Mode::constant:
      s = "/constant-g";
      break;
  }
  if (g.estimate_propensities) s += "-estpi";
  return s;
}

}  // namespace

std::vector<BenchmarkRow> run_benchmark(const BenchmarkRequest& request) {
  if (request.replications < 1) throw std::invalid_argument("replications must be >= 1");
  if (request.methods.empty()) throw std::invalid_argument("no methods requested");
  if (request.gsource.mode == GSource::Mode::oracle &&
      request.gsource.scenario_id != request.scenario.scenario_id)
    throw std::invalid_argument("oracle g scenario does not match the simulated scenario");

  std::vector<BenchmarkRow> rows;
  for (MethodTag method : request.methods) {
    const int R = request.replications;
    std::vector<double> values(static_cast<std::size_t>(R), 0.0);
    // Replications write disjoint slots; aggregation below is serial.
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < R; ++r) {
      const std::uint64_t rep_seed =
          mix_seed(request.seed, static_cast<std::uint64_t>(r) * 4 + 0);
      ScenarioSpec spec = request.scenario;
      spec.seed = rep_seed;
      const TrialDataset train = simulate_scenario(spec);

      const std::uint64_t cv_seed = mix_seed(request.seed, static_cast<std::uint64_t>(r) * 4 + 1);
      const std::vector<FitConfig> grid =
          request.grid.empty() ? default_grid(train, method, cv_seed) : request.grid;
      const CvReport cv =
          cross_validate(train, request.gsource, method, grid, request.folds, cv_seed);
      const DecisionRule rule = fit_pipeline(train, request.gsource, method,
                                             grid[static_cast<std::size_t>(cv.chosen)]);

      const std::uint64_t test_seed =
          mix_seed(request.seed, static_cast<std::uint64_t>(r) * 4 + 2);
      const Eigen::MatrixXd Xtest =
          simulate_covariates(request.test_n, request.scenario.p, test_seed);
      values[static_cast<std::size_t>(r)] = empirical_regime_value(
          request.scenario.scenario_id, Xtest, predict(rule, Xtest));
    }

    const double mean = kahan_sum(values) / static_cast<double>(R);
    double sd = 0.0;
    if (R > 1) {
      std::vector<double> sq(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double d = values[i] - mean;
        sq[i] = d * d;
      }
      sd = std::sqrt(kahan_sum(sq) / static_cast<double>(R - 1));
    }

    BenchmarkRow row;
    row.scenario = request.scenario.scenario_id;
    row.n = request.scenario.n;
    row.p = request.scenario.p;
    row.allocation = request.scenario.allocation;
    row.method = method_name(method) + gsource_suffix(request.gsource);
    row.mean_value = mean;
    row.sd_value = sd;
    row.replications = R;
    row.seed = request.seed;
    rows.push_back(row);
  }
  return rows;
}

void write_benchmark_csv(const std::string& path, const std::vector<BenchmarkRow>& rows) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument(path + ": cannot open for writing");
  out << "scenario,n,p,allocation,method,mean_value,sd_value,replications,seed\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  for (const BenchmarkRow& r : rows) {
    out << r.scenario << ',' << r.n << ',' << r.p << ',' << num(r.allocation) << ',' << r.method
        << ',' << num(r.mean_value) << ',' << num(r.sd_value) << ',' << r.replications << ','
        << r.seed << "\n";
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

std::string benchmark_json(const std::vector<BenchmarkRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const BenchmarkRow& r : rows) {
    nlohmann::json j;
    j["scenario"] = r.scenario;
    j["n"] = r.n;
    j["p"] = r.p;
    j["allocation"] = r.allocation;
    j["method"] = r.method;
    j["mean_value"] = r.mean_value;
    j["sd_value"] = r.sd_value;
    j["replications"] = r.replications;
    j["seed"] = r.seed;
    arr.push_back(j);
  }
  return arr.dump(2);
}

}  // namespace aol
