#include "aol/dataset.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace aol {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

[[noreturn]] void fail(const std::string& path, std::size_t lineno, const std::string& what) {
  throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": " + what);
}

double parse_double(const std::string& tok, const std::string& path, std::size_t lineno) {
  double v = 0.0;
  const char* b = tok.data();
  const char* e = b + tok.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) fail(path, lineno, "cannot parse number '" + tok + "'");
  return v;
}

struct Header {
  int p = 0;
  bool has_pi = false;
};

// Consumes comment/blank lines; returns the parsed header and leaves the
// stream positioned at the first data line.
Header read_header(std::ifstream& in, const std::string& path, std::size_t& lineno) {
  std::string line;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> cols = split_csv(t);
    Header h;
    std::size_t i = 0;
    while (i < cols.size() && cols[i] == "x" + std::to_string(i + 1)) ++i;
    h.p = static_cast<int>(i);
    if (h.p == 0) fail(path, lineno, "header must start with x1");
    if (i >= cols.size() || cols[i] != "a") fail(path, lineno, "expected column 'a' after covariates");
    ++i;
    if (i >= cols.size() || cols[i] != "r") fail(path, lineno, "expected column 'r' after 'a'");
    ++i;
    if (i < cols.size()) {
      if (cols[i] != "pi" || i + 1 != cols.size())
        fail(path, lineno, "unexpected trailing columns after 'r' (only 'pi' is allowed)");
      h.has_pi = true;
    }
    return h;
  }
  throw std::invalid_argument(path + ": no header line found");
}

}  // namespace

void validate_dataset(const TrialDataset& data) {
  const Eigen::Index n = data.covariates.rows();
  if (n < 1) throw std::invalid_argument("dataset is empty");
  if (data.covariates.cols() < 1) throw std::invalid_argument("dataset has no covariates");
  if (data.treatments.size() != n || data.outcomes.size() != n || data.propensities.size() != n)
    throw std::invalid_argument("dataset column lengths disagree");
  if (!data.covariates.allFinite()) throw std::invalid_argument("non-finite covariate");
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = data.treatments[i];
    if (a != 1.0 && a != -1.0)
      throw std::invalid_argument("treatment must be +1 or -1 (subject " + std::to_string(i + 1) + ")");
    if (!std::isfinite(data.outcomes[i]))
      throw std::invalid_argument("non-finite outcome (subject " + std::to_string(i + 1) + ")");
    const double pi = data.propensities[i];
    if (!(pi > 0.0 && pi < 1.0))
      throw std::invalid_argument("propensity must lie in (0,1) (subject " + std::to_string(i + 1) + ")");
  }
}

TrialDataset subset(const TrialDataset& data, const std::vector<Eigen::Index>& rows) {
  TrialDataset out;
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  out.covariates.resize(m, data.p());
  out.treatments.resize(m);
  out.outcomes.resize(m);
  out.propensities.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index i = rows[static_cast<std::size_t>(k)];
    out.covariates.row(k) = data.covariates.row(i);
    out.treatments[k] = data.treatments[i];
    out.outcomes[k] = data.outcomes[i];
    out.propensities[k] = data.propensities[i];
  }
  return out;
}

bool csv_has_propensity_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(path + ": cannot open");
  std::size_t lineno = 0;
  return read_header(in, path, lineno).has_pi;
}

TrialDataset load_dataset(const std::string& path, bool has_propensity, double default_propensity) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(path + ": cannot open");
  std::size_t lineno = 0;
  const Header h = read_header(in, path, lineno);
  if (has_propensity && !h.has_pi)
    throw std::invalid_argument(path + ": pi column expected but not present");
  if (!has_propensity && h.has_pi)
    throw std::invalid_argument(path + ": pi column present but not expected");
  if (!has_propensity && !(default_propensity > 0.0 && default_propensity < 1.0))
    throw std::invalid_argument("default propensity must lie in (0,1)");

  std::vector<std::vector<double>> rows;
  std::string line;
  const std::size_t want = static_cast<std::size_t>(h.p) + 2 + (h.has_pi ? 1 : 0);
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> cols = split_csv(t);
    if (cols.size() != want)
      fail(path, lineno, "expected " + std::to_string(want) + " fields, got " + std::to_string(cols.size()));
    std::vector<double> vals(want);
    for (std::size_t j = 0; j < want; ++j) vals[j] = parse_double(cols[j], path, lineno);
    const double a = vals[static_cast<std::size_t>(h.p)];
    if (a != 1.0 && a != -1.0) fail(path, lineno, "treatment must be +1 or -1");
    if (!std::isfinite(vals[static_cast<std::size_t>(h.p) + 1]))
      fail(path, lineno, "non-finite outcome");
    if (h.has_pi) {
      const double pi = vals[static_cast<std::size_t>(h.p) + 2];
      if (!(pi > 0.0 && pi < 1.0)) fail(path, lineno, "propensity must lie in (0,1)");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no data rows");

  TrialDataset data;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  data.covariates.resize(n, h.p);
  data.treatments.resize(n);
  data.outcomes.resize(n);
  data.propensities.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::vector<double>& v = rows[static_cast<std::size_t>(i)];
    for (int j = 0; j < h.p; ++j) data.covariates(i, j) = v[static_cast<std::size_t>(j)];
    data.treatments[i] = v[static_cast<std::size_t>(h.p)];
    data.outcomes[i] = v[static_cast<std::size_t>(h.p) + 1];
    if (h.has_pi) {
      data.propensities[i] = v[static_cast<std::size_t>(h.p) + 2];
    } else {
      data.propensities[i] =
          data.treatments[i] > 0 ? default_propensity : 1.0 - default_propensity;
    }
  }
  validate_dataset(data);
  return data;
}

void save_dataset(const std::string& path, const TrialDataset& data) {
  validate_dataset(data);
  std::ofstream out(path);
  if (!out) throw std::invalid_argument(path + ": cannot open for writing");
  for (Eigen::Index j = 0; j < data.p(); ++j) out << "x" << (j + 1) << ",";
  out << "a,r,pi\n";
  char buf[64];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf << sep;
  };
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index j = 0; j < data.p(); ++j) put(data.covariates(i, j), ',');
    out << (data.treatments[i] > 0 ? "1" : "-1") << ',';
    put(data.outcomes[i], ',');
    put(data.propensities[i], '\n');
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

Eigen::MatrixXd load_covariates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(path + ": cannot open");
  std::size_t lineno = 0;
  std::string line;
  int p = 0;
  std::size_t ncols = 0;
  // Header: x1..xp, optionally followed by the full-schema columns.
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> cols = split_csv(t);
    std::size_t i = 0;
    while (i < cols.size() && cols[i] == "x" + std::to_string(i + 1)) ++i;
    if (i == 0) fail(path, lineno, "header must start with x1");
    if (i < cols.size() && cols[i] != "a")
      fail(path, lineno, "unexpected column '" + cols[i] + "'");
    p = static_cast<int>(i);
    ncols = cols.size();
    break;
  }
  if (p == 0) throw std::invalid_argument(path + ": no header line found");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<std::string> cols = split_csv(t);
    if (cols.size() != ncols)
      fail(path, lineno, "expected " + std::to_string(ncols) + " fields, got " + std::to_string(cols.size()));
    std::vector<double> vals(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) vals[static_cast<std::size_t>(j)] = parse_double(cols[static_cast<std::size_t>(j)], path, lineno);
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": no data rows");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), p);
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (int j = 0; j < p; ++j) X(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  if (!X.allFinite()) throw std::invalid_argument(path + ": non-finite covariate");
  return X;
}

}  // namespace aol
