// Command-line front end for the treatment-regime pipeline.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "aol/evaluate.hpp"

namespace {

bool g_machine = false;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), g_machine ? "%.17g" : "%.4g", v);
  return buf;
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct PropensityFlags {
  double propensity = -1.0;  // negative means unset
  bool estimate = false;
};

// Shared loading contract: a pi column wins; otherwise the caller must
// say where propensities come from.
aol::TrialDataset load_trial(const std::string& path, const PropensityFlags& flags) {
  const bool has_pi = aol::csv_has_propensity_column(path);
  if (has_pi) {
    if (flags.propensity >= 0.0)
      throw std::runtime_error(path + ": has a pi column; drop --propensity");
    return aol::load_dataset(path, true);
  }
  if (flags.propensity >= 0.0) return aol::load_dataset(path, false, flags.propensity);
  if (flags.estimate) {
    aol::TrialDataset data = aol::load_dataset(path, false, 0.5);
    return aol::with_estimated_propensities(data, aol::estimate_propensity(data));
  }
  throw std::runtime_error(path +
                           ": no pi column; pass --propensity P or --estimate-propensity");
}

void add_propensity_flags(CLI::App* cmd, PropensityFlags& flags) {
  cmd->add_option("--propensity", flags.propensity,
                  "P(A=+1) when the data file has no pi column")
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  cmd->add_flag("--estimate-propensity", flags.estimate,
                "fit a logistic model for the propensities");
}

std::string config_string(const aol::FitConfig& cfg, aol::MethodTag method) {
  std::ostringstream os;
  os << "loss=" << aol::loss_name(cfg.loss);
  switch (method) {
    case aol::MethodTag::aol_linear:
      os << " lambda=" << fmt(cfg.lambda);
      break;
    case aol::MethodTag::aol_gaussian:
      os << " lambda=" << fmt(cfg.lambda) << " sigma=" << fmt(cfg.kernel.sigma);
      break;
    case aol::MethodTag::aol_vs_linear:
      os << " lambda1=" << fmt(cfg.lambda1) << " lambda2=" << fmt(cfg.lambda2);
      break;
    case aol::MethodTag::aol_vs_gaussian:
      os << " lambda1=" << fmt(cfg.lambda1) << " lambda2=" << fmt(cfg.lambda2);
      break;
  }
  return os.str();
}

nlohmann::json config_json(const aol::FitConfig& cfg) {
  nlohmann::json j;
  j["loss"] = aol::loss_name(cfg.loss);
  j["lambda"] = cfg.lambda;
  j["lambda1"] = cfg.lambda1;
  j["lambda2"] = cfg.lambda2;
  if (cfg.kernel.kind == aol::KernelKind::rbf) j["sigma"] = cfg.kernel.sigma;
  return j;
}

int selected_covariates(const aol::DecisionRule& rule) {
  int count = 0;
  if (rule.kind == aol::RuleKind::linear) {
    for (Eigen::Index j = 0; j < rule.w.size(); ++j)
      if (rule.w[j] != 0.0) ++count;
  } else {
    for (Eigen::Index j = 0; j < rule.kernel.eta.size(); ++j)
      if (rule.kernel.eta[j] > 0.0) ++count;
  }
  return count;
}

// Parse the d column of a predictions CSV (the cmd_predict output format).
Eigen::VectorXd load_recommendations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  int d_col = -1, col = 0;
  std::stringstream header(line);
  std::string field;
  while (std::getline(header, field, ',')) {
    if (field == "d") d_col = col;
    ++col;
  }
  if (d_col < 0) throw std::runtime_error(path + ": header has no d column");
  std::vector<double> vals;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream row(line);
    std::string cell;
    for (int c = 0; std::getline(row, cell, ','); ++c) {
      if (c != d_col) continue;
      const double d = std::stod(cell);
      if (d != 1.0 && d != -1.0)
        throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                 ": d must be 1 or -1");
      vals.push_back(d);
    }
  }
  Eigen::VectorXd rec(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) rec[static_cast<Eigen::Index>(i)] = vals[i];
  return rec;
}

struct FitFlags {
  std::string data, model_out;
  std::string method = "aol_linear";
  std::string g_kind = "g_tilde";
  std::string g_estimator = "pooled_weighted";
  std::string loss = "huberized_hinge";
  double lambda = 1.0, lambda1 = 0.0, lambda2 = 0.0;
  double sigma = 0.0;  // 0 means median heuristic
  int n_starts = 1;
  bool grid = false;
  int folds = 10;
  std::uint64_t seed = 0;
  double constant_g = std::numeric_limits<double>::quiet_NaN();
  PropensityFlags pi;
};

void add_fit_flags(CLI::App* cmd, FitFlags& f, bool with_model_out) {
  cmd->add_option("--data", f.data, "training CSV")->required();
  if (with_model_out) cmd->add_option("--model-out", f.model_out, "rule JSON path")->required();
  cmd->add_option("--method", f.method, "aol_linear|aol_gaussian|aol_vs_linear|aol_vs_gaussian");
  cmd->add_option("--g", f.g_kind, "residual baseline: g_tilde|g1|g2");
  cmd->add_option("--g-estimator", f.g_estimator, "pooled_weighted|armwise_plugin");
  cmd->add_option("--constant-g", f.constant_g, "subtract this constant instead of a fitted g");
  cmd->add_option("--loss", f.loss, "surrogate loss name");
  cmd->add_option("--lambda", f.lambda, "ridge weight");
  cmd->add_option("--lambda1", f.lambda1, "L1 weight (VS methods)");
  cmd->add_option("--lambda2", f.lambda2, "ridge weight (VS methods)");
  cmd->add_option("--sigma", f.sigma, "kernel inverse width; 0 = median heuristic");
  cmd->add_option("--n-starts", f.n_starts, "scaled-kernel restarts");
  cmd->add_flag("--grid", f.grid, "tune over the default grid by cross-validation");
  cmd->add_option("--folds", f.folds, "cross-validation folds")->check(CLI::Range(2, 1000));
  cmd->add_option("--seed", f.seed, "RNG seed");
  add_propensity_flags(cmd, f.pi);
}

aol::GSource gsource_from(const FitFlags& f) {
  aol::GSource g;
  if (std::isnan(f.constant_g)) {
    g.mode = aol::GSource::Mode::fitted;
  } else {
    g.mode = aol::GSource::Mode::constant;
    g.constant_value = f.constant_g;
  }
  g.variant.kind = aol::g_kind_from_name(f.g_kind);
  g.variant.estimator = aol::g_estimator_from_name(f.g_estimator);
  g.estimate_propensities = f.pi.estimate;
  return g;
}

aol::FitConfig config_from(const FitFlags& f, const aol::TrialDataset& data,
                           aol::MethodTag method) {
  aol::FitConfig cfg;
  cfg.loss = aol::loss_from_name(f.loss);
  cfg.lambda = f.lambda;
  cfg.lambda1 = f.lambda1;
  cfg.lambda2 = f.lambda2;
  cfg.n_starts = f.n_starts;
  cfg.seed = f.seed;
  if (method == aol::MethodTag::aol_gaussian) {
    cfg.kernel.kind = aol::KernelKind::rbf;
    cfg.kernel.sigma = f.sigma;
    if (cfg.kernel.sigma <= 0.0) {
      const aol::Standardization s = aol::compute_standardization(data.covariates);
      cfg.kernel.sigma = aol::median_heuristic(s.apply(data.covariates), f.seed);
    }
  } else if (method == aol::MethodTag::aol_vs_gaussian) {
    cfg.kernel.kind = aol::KernelKind::scaled_rbf;
  }
  return cfg;
}

int run_fit(const FitFlags& f) {
  const aol::TrialDataset data = load_trial(f.data, f.pi);
  const aol::MethodTag method = aol::method_from_name(f.method);
  const aol::GSource gsource = gsource_from(f);

  aol::FitConfig cfg;
  nlohmann::json out;
  if (f.grid) {
    const std::vector<aol::FitConfig> grid = aol::default_grid(data, method, f.seed);
    const aol::CvReport cv = aol::cross_validate(data, gsource, method, grid, f.folds, f.seed);
    cfg = grid[static_cast<std::size_t>(cv.chosen)];
    cfg.seed = f.seed;
    out["cv_value"] = cv.values[static_cast<std::size_t>(cv.chosen)];
    out["cv_configs"] = cv.grid.size();
    if (!g_machine)
      std::cout << "cv chose " << config_string(cfg, method)
                << " (value " << fmt(cv.values[static_cast<std::size_t>(cv.chosen)]) << ")\n";
  } else {
    cfg = config_from(f, data, method);
  }

  aol::FitReport report;
  const aol::DecisionRule rule = aol::fit_pipeline(data, gsource, method, cfg, &report);
  aol::save_rule(f.model_out, rule);

  const bool vs = method == aol::MethodTag::aol_vs_linear ||
                  method == aol::MethodTag::aol_vs_gaussian;
  if (g_machine) {
    out["method"] = aol::method_name(method);
    out["config"] = config_json(cfg);
    out["objective"] = report.objective;
    out["iterations"] = report.iterations;
    out["evaluations"] = report.evaluations;
    out["converged"] = report.status == aol::SolveStatus::converged;
    out["model"] = f.model_out;
    if (vs) out["covariates_selected"] = selected_covariates(rule);
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "fit " << aol::method_name(method) << ": " << config_string(cfg, method)
              << "\nobjective " << fmt(report.objective) << " after " << report.iterations
              << " iterations (" << report.evaluations << " evaluations, "
              << (report.status == aol::SolveStatus::converged ? "converged" : "iteration cap")
              << ")\n";
    if (vs) std::cout << selected_covariates(rule) << " covariates selected\n";
    std::cout << "wrote " << f.model_out << "\n";
  }
  return 0;
}

int run_predict(const std::string& model, const std::string& data, const std::string& out_path) {
  const aol::DecisionRule rule = aol::load_rule(model);
  const Eigen::MatrixXd X = aol::load_covariates(data);
  const Eigen::VectorXd f = aol::decision_values(rule, X);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error(out_path + ": cannot open for writing");
  out << "f,d\n";
  for (Eigen::Index i = 0; i < f.size(); ++i)
    out << fmt17(f[i]) << ',' << (f[i] > 0.0 ? "1" : "-1") << "\n";
  if (!out) throw std::runtime_error(out_path + ": write failed");
  if (!g_machine) std::cout << "wrote " << out_path << " (" << f.size() << " rows)\n";
  return 0;
}

int run_value(const std::string& data_path, const std::string& pred_path,
              const std::string& estimator, const PropensityFlags& pi) {
  const aol::TrialDataset data = load_trial(data_path, pi);
  const Eigen::VectorXd rec = load_recommendations(pred_path);
  if (rec.size() != data.n())
    throw std::runtime_error("predictions cover " + std::to_string(rec.size()) +
                             " subjects, data has " + std::to_string(data.n()));

  double value = 0.0;
  Eigen::Index matched = -1;
  if (estimator == "ipw" || estimator == "ipw-unnormalized") {
    const aol::ValueEstimate est = aol::ipw_value(data, rec, estimator == "ipw");
    value = est.value;
    matched = est.n_matched;
  } else if (estimator == "aipwe") {
    aol::GVariant variant;
    variant.kind = aol::GKind::g2;
    variant.estimator = aol::GEstimator::armwise_plugin;
    const aol::GModel m = aol::fit_g(data, variant);
    value = aol::aipwe_value(data, rec, m.mu_plus.predict(data.covariates),
                             m.mu_minus.predict(data.covariates));
  } else {
    throw std::runtime_error("unknown estimator '" + estimator +
                             "' (ipw|ipw-unnormalized|aipwe)");
  }

  if (g_machine) {
    nlohmann::json j;
    j["estimator"] = estimator;
    j["value"] = value;
    if (matched >= 0) j["n_matched"] = matched;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "value " << fmt(value);
    if (matched >= 0) std::cout << " (" << matched << " matched)";
    std::cout << "\n";
  }
  return 0;
}

int run_cv(const FitFlags& f, bool nested, int outer_folds) {
  const aol::TrialDataset data = load_trial(f.data, f.pi);
  const aol::MethodTag method = aol::method_from_name(f.method);
  const aol::GSource gsource = gsource_from(f);
  const std::vector<aol::FitConfig> grid = aol::default_grid(data, method, f.seed);

  if (nested) {
    const aol::ValueEstimate est =
        aol::nested_cv(data, gsource, method, grid, outer_folds, f.folds, f.seed);
    if (g_machine) {
      nlohmann::json j;
      j["nested_value"] = est.value;
      j["n_matched"] = est.n_matched;
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "nested cv value " << fmt(est.value) << " (" << est.n_matched
                << " matched)\n";
    }
    return 0;
  }

  const aol::CvReport cv = aol::cross_validate(data, gsource, method, grid, f.folds, f.seed);
  if (g_machine) {
    nlohmann::json j;
    j["chosen"] = cv.chosen;
    j["values"] = cv.values;
    nlohmann::json configs = nlohmann::json::array();
    for (const aol::FitConfig& c : cv.grid) configs.push_back(config_json(c));
    j["grid"] = configs;
    std::cout << j.dump(2) << "\n";
  } else {
    for (std::size_t c = 0; c < cv.grid.size(); ++c)
      std::cout << (static_cast<int>(c) == cv.chosen ? "> " : "  ")
                << config_string(cv.grid[c], method) << "  value "
                << fmt(cv.values[c]) << "\n";
  }
  return 0;
}

struct BenchFlags {
  std::string preset;
  int scenario = 1;
  Eigen::Index n = 400;
  int p = 0;  // 0 = preset default
  double allocation = 0.5;
  int reps = 10;
  Eigen::Index test_n = 10000;
  int folds = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> methods;
};

int run_bench(const BenchFlags& b) {
  aol::BenchmarkRequest req;
  req.scenario.scenario_id = b.scenario;
  req.scenario.n = b.n;
  req.scenario.allocation = b.allocation;
  req.replications = b.reps;
  req.test_n = b.test_n;
  req.folds = b.folds;
  req.seed = b.seed;

  std::vector<aol::GSource> gsources;
  if (b.preset == "table1") {
    req.scenario.p = b.p > 0 ? b.p : 5;
    req.methods = {aol::MethodTag::aol_linear};
    for (aol::GKind kind : {aol::GKind::g_tilde, aol::GKind::g1, aol::GKind::g2}) {
      aol::GSource g;
      g.mode = aol::GSource::Mode::oracle;
      g.scenario_id = b.scenario;
      g.variant.kind = kind;
      gsources.push_back(g);
    }
  } else if (b.preset == "table2-aol") {
    req.scenario.p = b.p > 0 ? b.p : 5;
    req.methods = {aol::MethodTag::aol_linear, aol::MethodTag::aol_gaussian};
    gsources.push_back(aol::GSource{});
  } else if (b.preset == "table3-aol") {
    req.scenario.p = b.p > 0 ? b.p : 25;
    req.methods = {aol::MethodTag::aol_vs_linear, aol::MethodTag::aol_vs_gaussian};
    gsources.push_back(aol::GSource{});
  } else {
    throw std::runtime_error("unknown preset '" + b.preset +
                             "' (table1|table2-aol|table3-aol)");
  }
  if (!b.methods.empty()) {
    req.methods.clear();
    for (const std::string& m : b.methods) req.methods.push_back(aol::method_from_name(m));
  }

  std::vector<aol::BenchmarkRow> rows;
  for (const aol::GSource& g : gsources) {
    req.gsource = g;
    for (const aol::BenchmarkRow& r : aol::run_benchmark(req)) rows.push_back(r);
  }

  if (!b.out.empty()) aol::write_benchmark_csv(b.out, rows);
  if (g_machine) {
    std::cout << aol::benchmark_json(rows) << "\n";
  } else {
    for (const aol::BenchmarkRow& r : rows)
      std::cout << "scenario " << r.scenario << " n=" << r.n << " " << r.method << ": mean "
                << fmt(r.mean_value) << " sd " << fmt(r.sd_value) << " (" << r.replications
                << " reps)\n";
    if (!b.out.empty()) std::cout << "wrote " << b.out << "\n";
  }
  return 0;
}

struct RiskFlags {
  std::vector<std::string> losses;
  int grid_points = 200;
  double max_eta = 10.0;
  double eta1 = std::numeric_limits<double>::quiet_NaN();
  double eta2 = std::numeric_limits<double>::quiet_NaN();
  std::string out;
};

std::string alpha_string(const aol::OptimalConditionalRisk& opt) {
  if (!opt.minimizer_bounded) return "unbounded";
  return fmt17(opt.alpha_star);
}

int run_risk_check(const RiskFlags& rf) {
  std::vector<aol::Loss> losses;
  if (rf.losses.empty())
    losses.assign(aol::kAllLosses.begin(), aol::kAllLosses.end());
  else
    for (const std::string& name : rf.losses) losses.push_back(aol::loss_from_name(name));

  const bool single = !std::isnan(rf.eta1) || !std::isnan(rf.eta2);
  if (single) {
    if (std::isnan(rf.eta1) || std::isnan(rf.eta2))
      throw std::runtime_error("single-point mode needs both --eta1 and --eta2");
    const aol::ConditionalRisk eta{rf.eta1, rf.eta2};
    std::cout << "loss,alpha_star,optimal_risk,excess_lhs,excess_rhs,holds\n";
    for (aol::Loss loss : losses) {
      const aol::OptimalConditionalRisk opt = aol::optimal_conditional_risk(loss, eta);
      const aol::ExcessBoundCheck chk = aol::excess_bound_check(loss, eta);
      std::cout << aol::loss_name(loss) << ',' << alpha_string(opt) << ','
                << fmt17(opt.value) << ',' << fmt17(chk.lhs) << ',' << fmt17(chk.rhs) << ','
                << (chk.holds ? "1" : "0") << "\n";
    }
    return 0;
  }

  if (rf.grid_points < 2) throw std::runtime_error("--grid-points must be >= 2");
  std::ostringstream csv;
  csv << "loss,points,violations,max_violation,max_equality_gap\n";
  bool any_violation = false;
  for (aol::Loss loss : losses) {
    long points = 0, violations = 0;
    double max_violation = 0.0, max_equality_gap = 0.0;
    const bool equality_case = loss == aol::Loss::hinge || loss == aol::Loss::squared_hinge ||
                               loss == aol::Loss::least_squares ||
                               loss == aol::Loss::huberized_hinge;
    for (int i = 0; i < rf.grid_points; ++i)
      for (int j = 0; j < rf.grid_points; ++j) {
        const double e1 = rf.max_eta * i / (rf.grid_points - 1);
        const double e2 = rf.max_eta * j / (rf.grid_points - 1);
        const aol::ExcessBoundCheck chk = aol::excess_bound_check(loss, {e1, e2});
        ++points;
        if (!chk.holds) {
          ++violations;
          max_violation = std::max(max_violation, chk.lhs - chk.rhs);
        }
        if (equality_case) max_equality_gap = std::max(max_equality_gap, std::abs(chk.lhs - chk.rhs));
      }
    if (violations > 0) any_violation = true;
    csv << aol::loss_name(loss) << ',' << points << ',' << violations << ','
        << fmt17(max_violation) << ',' << fmt17(max_equality_gap) << "\n";
  }

  if (!rf.out.empty()) {
    std::ofstream out(rf.out);
    if (!out) throw std::runtime_error(rf.out + ": cannot open for writing");
    out << csv.str();
    if (!out) throw std::runtime_error(rf.out + ": write failed");
    if (!g_machine) std::cout << "wrote " << rf.out << "\n";
  } else {
    std::cout << csv.str();
  }
  return any_violation ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"augmented outcome-weighted learning for treatment regimes"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value defaults; command-line flags override");
  int jobs = 0;
  app.add_flag("--json", g_machine, "machine-readable output, 17 significant digits");
  app.add_option("--jobs", jobs, "worker threads for bench/cv (results do not depend on it)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "draw a synthetic trial and write it as CSV");
  aol::ScenarioSpec spec;
  std::string sim_out;
  sim->add_option("--scenario", spec.scenario_id, "1..4")->required()->check(CLI::Range(1, 4));
  sim->add_option("--n", spec.n, "subjects")->required();
  sim->add_option("--p", spec.p, "covariates (>= 5)");
  sim->add_option("--allocation", spec.allocation, "P(A=+1)");
  sim->add_option("--seed", spec.seed, "RNG seed");
  sim->add_option("--out", sim_out, "output CSV")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "estimate a treatment rule from a trial CSV");
  FitFlags fitf;
  add_fit_flags(fit, fitf, true);

  // predict
  auto* pred = app.add_subcommand("predict", "apply a saved rule to covariates");
  std::string pred_model, pred_data, pred_out;
  pred->add_option("--model", pred_model, "rule JSON")->required();
  pred->add_option("--data", pred_data, "covariate CSV")->required();
  pred->add_option("--out", pred_out, "output CSV with columns f,d")->required();

  // value
  auto* val = app.add_subcommand("value", "estimate the value of recommendations");
  std::string val_data, val_pred, val_est = "ipw";
  PropensityFlags val_pi;
  val->add_option("--data", val_data, "trial CSV")->required();
  val->add_option("--predictions", val_pred, "CSV with a d column")->required();
  val->add_option("--estimator", val_est, "ipw|ipw-unnormalized|aipwe");
  add_propensity_flags(val, val_pi);

  // cv
  auto* cv = app.add_subcommand("cv", "cross-validate over the default grid");
  FitFlags cvf;
  add_fit_flags(cv, cvf, false);
  bool nested = false;
  int outer_folds = 5;
  cv->add_flag("--nested", nested, "nested cross-validation value estimate");
  cv->add_option("--outer-folds", outer_folds, "outer folds for --nested");

  // bench
  auto* bench = app.add_subcommand("bench", "replicate simulation benchmarks");
  BenchFlags bf;
  bench->add_option("--preset", bf.preset, "table1|table2-aol|table3-aol")->required();
  bench->add_option("--scenario", bf.scenario, "1..4")->required()->check(CLI::Range(1, 4));
  bench->add_option("--n", bf.n, "training subjects");
  bench->add_option("--p", bf.p, "covariates (0 = preset default)");
  bench->add_option("--allocation", bf.allocation, "P(A=+1)");
  bench->add_option("--reps", bf.reps, "replications");
  bench->add_option("--test-n", bf.test_n, "evaluation covariate draws");
  bench->add_option("--folds", bf.folds, "cross-validation folds");
  bench->add_option("--seed", bf.seed, "RNG seed");
  bench->add_option("--out", bf.out, "benchmark CSV path");
  bench->add_option("--method", bf.methods, "restrict to these methods");

  // risk-check
  auto* risk = app.add_subcommand("risk-check", "verify surrogate risk bounds on a grid");
  RiskFlags rf;
  risk->add_option("--loss", rf.losses, "losses to check (default all)");
  risk->add_option("--grid-points", rf.grid_points, "points per axis");
  risk->add_option("--max", rf.max_eta, "grid upper bound per weight");
  risk->add_option("--eta1", rf.eta1, "single-point mode weight for label +1");
  risk->add_option("--eta2", rf.eta2, "single-point mode weight for label -1");
  risk->add_option("--out", rf.out, "write the sweep CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

#ifdef _OPENMP
  if (jobs > 0) omp_set_num_threads(jobs);
#endif

  try {
    if (app.got_subcommand(sim)) {
      const aol::TrialDataset data = aol::simulate_scenario(spec);
      aol::save_dataset(sim_out, data);
      if (!g_machine) std::cout << "wrote " << sim_out << " (" << data.n() << " rows)\n";
      return 0;
    }
    if (app.got_subcommand(fit)) return run_fit(fitf);
    if (app.got_subcommand(pred)) return run_predict(pred_model, pred_data, pred_out);
    if (app.got_subcommand(val)) return run_value(val_data, val_pred, val_est, val_pi);
    if (app.got_subcommand(cv)) return run_cv(cvf, nested, outer_folds);
    if (app.got_subcommand(bench)) return run_bench(bf);
    if (app.got_subcommand(risk)) return run_risk_check(rf);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
