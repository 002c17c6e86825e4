#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "svykit/errors.hpp"
#include "svykit/linalg.hpp"
#include "svykit/rng.hpp"
#include "svykit/sums.hpp"

namespace svykit {

/// One population unit, materialized on demand from the columnar store.
struct Unit {
  std::size_t id = 0;  // 1-based, equals CSV data-row number / generation order
  double y = 0.0;
  Vector x;
  int stratum = -1;  // -1 when the population carries no strata
  int cluster = -1;  // -1 when the population carries no clusters
};

/// Immutable finite population: y, a p-vector x per unit, optional stratum
/// and cluster labels, and precomputed (compensated) totals. All mutation
/// happens at construction; afterwards the object is safe to share across
/// threads.
class Population {
 public:
  Population(std::vector<double> y, std::vector<double> x_flat, std::size_t dim,
             std::vector<int> stratum, std::vector<int> cluster,
             std::vector<std::string> stratum_labels,
             std::vector<std::string> cluster_labels)
      : y_(std::move(y)),
        x_(std::move(x_flat)),
        dim_(dim),
        stratum_(std::move(stratum)),
        cluster_(std::move(cluster)),
        stratum_labels_(std::move(stratum_labels)),
        cluster_labels_(std::move(cluster_labels)) {
    const std::size_t n = y_.size();
    if (n == 0) throw SchemaError("population has no units");
    if (dim_ == 0) throw SchemaError("population has no covariate columns");
    if (x_.size() != n * dim_) throw SchemaError("covariate storage size mismatch");
    if (!stratum_.empty() && stratum_.size() != n)
      throw SchemaError("stratum column length mismatch");
    if (!cluster_.empty() && cluster_.size() != n)
      throw SchemaError("cluster column length mismatch");
    build_groups();
    recompute_totals(&t_y_, &t_x_);
  }

  std::size_t size() const noexcept { return y_.size(); }
  std::size_t dim() const noexcept { return dim_; }

  double y(std::size_t i) const noexcept { return y_[i]; }
  double x(std::size_t i, std::size_t k) const noexcept { return x_[i * dim_ + k]; }
  Eigen::Map<const Vector> x_row(std::size_t i) const noexcept {
    return Eigen::Map<const Vector>(x_.data() + i * dim_, Eigen::Index(dim_));
  }

  bool has_strata() const noexcept { return !strata_groups_.empty(); }
  bool has_clusters() const noexcept { return !cluster_groups_.empty(); }
  int stratum_of(std::size_t i) const noexcept {
    return stratum_.empty() ? -1 : stratum_[i];
  }
  int cluster_of(std::size_t i) const noexcept {
    return cluster_.empty() ? -1 : cluster_[i];
  }

  /// Unit indices per stratum, in first-appearance label order.
  const std::vector<std::vector<std::size_t>>& strata_groups() const noexcept {
    return strata_groups_;
  }
  const std::vector<std::vector<std::size_t>>& cluster_groups() const noexcept {
    return cluster_groups_;
  }
  const std::vector<std::string>& stratum_labels() const noexcept {
    return stratum_labels_;
  }
  const std::vector<std::string>& cluster_labels() const noexcept {
    return cluster_labels_;
  }

  double t_y() const noexcept { return t_y_; }
  const Vector& t_x() const noexcept { return t_x_; }

  /// Recomputes totals from the units with the same accumulation scheme used
  /// at construction (compensated, unit order). Exposed so callers can verify
  /// stored totals bit-for-bit.
  void recompute_totals(double* ty, Vector* tx) const {
    KahanSum sy;
    KahanVec sx{Eigen::Index(dim_)};
    for (std::size_t i = 0; i < size(); ++i) {
      sy.add(y_[i]);
      for (std::size_t k = 0; k < dim_; ++k) sx.add_at(Eigen::Index(k), x(i, k));
    }
    *ty = sy.value();
    *tx = sx.value();
  }

  Unit unit(std::size_t i) const {
    Unit u;
    u.id = i + 1;
    u.y = y_[i];
    u.x = x_row(i);
    u.stratum = stratum_of(i);
    u.cluster = cluster_of(i);
    return u;
  }

 private:
  void build_groups() {
    if (!stratum_.empty()) {
      int n_groups = 0;
      for (int s : stratum_) n_groups = std::max(n_groups, s + 1);
      strata_groups_.resize(std::size_t(n_groups));
      for (std::size_t i = 0; i < stratum_.size(); ++i) {
        if (stratum_[i] < 0) throw SchemaError("negative stratum label id");
        strata_groups_[std::size_t(stratum_[i])].push_back(i);
      }
      for (const auto& g : strata_groups_)
        if (g.empty()) throw SchemaError("empty stratum group");
    }
    if (!cluster_.empty()) {
      int n_groups = 0;
      for (int c : cluster_) n_groups = std::max(n_groups, c + 1);
      cluster_groups_.resize(std::size_t(n_groups));
      for (std::size_t i = 0; i < cluster_.size(); ++i) {
        if (cluster_[i] < 0) throw SchemaError("negative cluster label id");
        cluster_groups_[std::size_t(cluster_[i])].push_back(i);
      }
      for (const auto& g : cluster_groups_)
        if (g.empty()) throw SchemaError("empty cluster group");
    }
  }

  std::vector<double> y_;
  std::vector<double> x_;  // row-major, stride = dim_
  std::size_t dim_;
  std::vector<int> stratum_;
  std::vector<int> cluster_;
  std::vector<std::string> stratum_labels_;
  std::vector<std::string> cluster_labels_;
  std::vector<std::vector<std::size_t>> strata_groups_;
  std::vector<std::vector<std::size_t>> cluster_groups_;
  double t_y_ = 0.0;
  Vector t_x_;
};

/// Column mapping for CSV input. Empty x list means "all columns named
/// x1, x2, ... in order". Stratum and cluster columns are picked up when the
/// named header is present.
struct CsvSchema {
  std::string y = "y";
  std::vector<std::string> x;
  std::string stratum = "stratum";
  std::string cluster = "cluster";
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    const auto a = f.find_first_not_of(" \t");
    const auto b = f.find_last_not_of(" \t");
    f = (a == std::string::npos) ? std::string() : f.substr(a, b - a + 1);
  }
  return fields;
}

inline double parse_cell(const std::string& cell, std::size_t row,
                         const std::string& column) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    std::ostringstream msg;
    msg << "row " << row << ", column '" << column << "': cannot parse '"
        << cell << "' as a number";
    throw ParseError(msg.str());
  }
  return v;
}

inline int intern_label(const std::string& label, std::vector<std::string>& table) {
  for (std::size_t i = 0; i < table.size(); ++i)
    if (table[i] == label) return int(i);
  table.push_back(label);
  return int(table.size() - 1);
}

}  // namespace detail

/// Loads a population from a header-bearing CSV file. Rows are numbered from
/// 1 (first data row) in error messages.
inline Population load_population(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open population file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("population file is empty: " + path);
  const auto header = detail::split_csv_line(line);

  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };

  const auto y_col = find_col(schema.y);
  if (!y_col) throw SchemaError("missing required column '" + schema.y + "'");

  std::vector<std::pair<std::string, std::size_t>> x_cols;
  if (schema.x.empty()) {
    for (std::size_t k = 1;; ++k) {
      const std::string name = "x" + std::to_string(k);
      const auto col = find_col(name);
      if (!col) break;
      x_cols.emplace_back(name, *col);
    }
  } else {
    for (const auto& name : schema.x) {
      const auto col = find_col(name);
      if (!col) throw SchemaError("missing covariate column '" + name + "'");
      x_cols.emplace_back(name, *col);
    }
  }
  if (x_cols.empty())
    throw SchemaError("no covariate columns found (expected x1, x2, ...)");

  const auto stratum_col = find_col(schema.stratum);
  const auto cluster_col = find_col(schema.cluster);

  std::vector<double> y;
  std::vector<double> x_flat;
  std::vector<int> stratum, cluster;
  std::vector<std::string> stratum_labels, cluster_labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const auto fields = detail::split_csv_line(line);
    auto cell = [&](std::size_t col, const std::string& name) -> const std::string& {
      if (col >= fields.size()) {
        std::ostringstream msg;
        msg << "row " << row << ": missing column '" << name << "'";
        throw ParseError(msg.str());
      }
      return fields[col];
    };
    y.push_back(detail::parse_cell(cell(*y_col, schema.y), row, schema.y));
    for (const auto& [name, col] : x_cols)
      x_flat.push_back(detail::parse_cell(cell(col, name), row, name));
    if (stratum_col)
      stratum.push_back(detail::intern_label(cell(*stratum_col, schema.stratum),
                                             stratum_labels));
    if (cluster_col)
      cluster.push_back(detail::intern_label(cell(*cluster_col, schema.cluster),
                                             cluster_labels));
  }
  if (y.empty()) throw SchemaError("population file has no data rows: " + path);

  return Population(std::move(y), std::move(x_flat), x_cols.size(),
                    std::move(stratum), std::move(cluster),
                    std::move(stratum_labels), std::move(cluster_labels));
}

// --- Synthetic populations -------------------------------------------------
//
// Draw order inside each generator is fixed and documented so that a given
// (params, seed) pair always produces the same population bit-for-bit.

/// Two equal strata; y is the stratum sign (-1, +1), x is stratum sign plus
/// Normal(0, sigma^2) noise. With exact_moments each stratum's x values are
/// standardized so the stratum mean is the sign exactly and the stratum
/// variance (1/N_h divisor) is exactly sigma^2.
struct Example1Params {
  std::size_t n_per_stratum = 1000;
  double sigma = 1.0;
  bool exact_moments = false;
};

inline Population generate_example1(const Example1Params& p, std::uint64_t seed) {
  if (p.n_per_stratum == 0) throw ArgumentError("n_per_stratum must be positive");
  if (!(p.sigma >= 0.0)) throw ArgumentError("sigma must be nonnegative");
  const std::size_t n = 2 * p.n_per_stratum;
  std::vector<double> y(n), x(n);
  std::vector<int> stratum(n);
  Rng rng = Rng::stream(seed, /*domain=*/0, /*index=*/0);
  // Stratum h (h = 0, 1) occupies indices [h*N_h, (h+1)*N_h); draws are made
  // stratum by stratum, unit by unit.
  for (int h = 0; h < 2; ++h) {
    const double mu = (h == 0) ? -1.0 : 1.0;
    const std::size_t base = std::size_t(h) * p.n_per_stratum;
    std::vector<double> z(p.n_per_stratum, 0.0);
    for (auto& v : z) v = rng.normal();
    if (p.exact_moments && p.n_per_stratum > 1) {
      KahanSum sm;
      for (double v : z) sm.add(v);
      const double mean = sm.value() / double(p.n_per_stratum);
      KahanSum sv;
      for (double v : z) sv.add((v - mean) * (v - mean));
      const double sd = std::sqrt(sv.value() / double(p.n_per_stratum));
      for (auto& v : z) v = (sd > 0.0) ? (v - mean) / sd : 0.0;
    }
    for (std::size_t i = 0; i < p.n_per_stratum; ++i) {
      y[base + i] = mu;
      x[base + i] = mu + p.sigma * z[i];
      stratum[base + i] = h;
    }
  }
  return Population(std::move(y), std::move(x), 1, std::move(stratum), {},
                    {"1", "2"}, {});
}

/// Clustered population with a shared cluster effect: x = s_j + eps,
/// y = s_j + gamma * nu, all effects independent normals with the given
/// variances. Draw order per cluster j: s_j, then eps for k = 1..K, then nu
/// for k = 1..K.
struct Example2Params {
  std::size_t n_clusters = 5000;
  std::size_t cluster_size = 5;
  double var_s = 1.0;
  double var_eps = 1.0;
  double var_nu = 1.0;
  double gamma = 1.0;
};

inline Population generate_example2(const Example2Params& p, std::uint64_t seed) {
  if (p.n_clusters == 0 || p.cluster_size == 0)
    throw ArgumentError("cluster counts must be positive");
  if (!(p.var_s >= 0.0) || !(p.var_eps >= 0.0) || !(p.var_nu >= 0.0))
    throw ArgumentError("variance parameters must be nonnegative");
  const std::size_t n = p.n_clusters * p.cluster_size;
  std::vector<double> y(n), x(n);
  std::vector<int> cluster(n);
  std::vector<std::string> labels(p.n_clusters);
  const double sd_s = std::sqrt(p.var_s);
  const double sd_eps = std::sqrt(p.var_eps);
  const double sd_nu = std::sqrt(p.var_nu);
  Rng rng = Rng::stream(seed, 0, 0);
  std::size_t at = 0;
  for (std::size_t j = 0; j < p.n_clusters; ++j) {
    labels[j] = std::to_string(j + 1);
    const double s = sd_s * rng.normal();
    std::vector<double> eps(p.cluster_size), nu(p.cluster_size);
    for (auto& v : eps) v = sd_eps * rng.normal();
    for (auto& v : nu) v = sd_nu * rng.normal();
    for (std::size_t k = 0; k < p.cluster_size; ++k, ++at) {
      x[at] = s + eps[k];
      y[at] = s + p.gamma * nu[k];
      cluster[at] = int(j);
    }
  }
  return Population(std::move(y), std::move(x), 1, {}, std::move(cluster), {},
                    std::move(labels));
}

/// Clustered population with exchangeable within-cluster x correlation rho
/// (covariance sigma^2 [(1-rho) I + rho 11']) and y = beta x + eps with eps
/// iid Normal(0, sigma_eps^2). rho must lie in [-1/(K-1), 1]; the boundary
/// eigenvalues are clamped at zero within 1e-12. Draw order per cluster:
/// K z-draws, then K eps-draws.
struct Example3Params {
  std::size_t n_clusters = 10000;
  std::size_t cluster_size = 4;
  double beta = 1.0;
  double sigma = 1.0;
  double rho = 0.2;
  double sigma_eps = 0.0;
};

inline Population generate_example3(const Example3Params& p, std::uint64_t seed) {
  if (p.n_clusters == 0 || p.cluster_size == 0)
    throw ArgumentError("cluster counts must be positive");
  if (!(p.sigma >= 0.0) || !(p.sigma_eps >= 0.0))
    throw ArgumentError("scale parameters must be nonnegative");
  const double k = double(p.cluster_size);
  const double rho_min = (p.cluster_size > 1) ? -1.0 / (k - 1.0) : 0.0;
  if (p.rho < rho_min - 1e-12 || p.rho > 1.0 + 1e-12) {
    std::ostringstream msg;
    msg << "rho must lie in [" << rho_min << ", 1]";
    throw ArgumentError(msg.str());
  }
  // Eigenvalues of the exchangeable covariance; clamp boundary negatives
  // produced by rounding.
  double lam_mean = p.sigma * p.sigma * (1.0 + (k - 1.0) * p.rho);
  double lam_dev = p.sigma * p.sigma * (1.0 - p.rho);
  if (lam_mean < 0.0 && lam_mean > -1e-12) lam_mean = 0.0;
  if (lam_dev < 0.0 && lam_dev > -1e-12) lam_dev = 0.0;
  if (lam_mean < 0.0 || lam_dev < 0.0)
    throw ArgumentError("within-cluster covariance is not positive semidefinite");
  const double a = std::sqrt(lam_mean);
  const double b = std::sqrt(lam_dev);

  const std::size_t n = p.n_clusters * p.cluster_size;
  std::vector<double> y(n), x(n);
  std::vector<int> cluster(n);
  std::vector<std::string> labels(p.n_clusters);
  Rng rng = Rng::stream(seed, 0, 0);
  std::vector<double> z(p.cluster_size);
  std::size_t at = 0;
  for (std::size_t j = 0; j < p.n_clusters; ++j) {
    labels[j] = std::to_string(j + 1);
    KahanSum zs;
    for (auto& v : z) {
      v = rng.normal();
      zs.add(v);
    }
    const double zbar = zs.value() / k;
    for (std::size_t u = 0; u < p.cluster_size; ++u, ++at) {
      // x_k = b z_k + (a - b) zbar realizes the exchangeable covariance.
      x[at] = b * z[u] + (a - b) * zbar;
      y[at] = p.beta * x[at] + p.sigma_eps * rng.normal();
      cluster[at] = int(j);
    }
  }
  return Population(std::move(y), std::move(x), 1, {}, std::move(cluster), {},
                    std::move(labels));
}

}  // namespace svykit
