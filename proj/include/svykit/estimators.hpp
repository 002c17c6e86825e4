#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <variant>
#include <vector>

#include "svykit/covariance.hpp"
#include "svykit/design.hpp"
#include "svykit/errors.hpp"
#include "svykit/linalg.hpp"
#include "svykit/population.hpp"
#include "svykit/sums.hpp"

namespace svykit {

/// Expansion-weighted totals from one sample: y total, x totals and the
/// estimated population count (sum of weights). Compensated summation in
/// sample order keeps results reproducible and tight.
struct Totals {
  double y = 0.0;
  Vector x;
  double count = 0.0;
};

namespace detail {

template <class WeightFn>
inline Totals weighted_totals(const Population& pop,
                              const std::vector<std::size_t>& indices,
                              WeightFn&& weight_of) {
  const Eigen::Index p = Eigen::Index(pop.dim());
  KahanSum ty, tc;
  KahanVec tx(p);
  for (std::size_t i : indices) {
    const double w = weight_of(i);
    ty.add(w * pop.y(i));
    tc.add(w);
    for (Eigen::Index k = 0; k < p; ++k)
      tx.add_at(k, w * pop.x(i, std::size_t(k)));
  }
  Totals t;
  t.y = ty.value();
  t.x = tx.value();
  t.count = tc.value();
  return t;
}

}  // namespace detail

/// 1/pi-weighted totals of y, x and the unit count.
inline Totals ht_totals(const Design& design, const Sample& sample) {
  return detail::weighted_totals(design.population(), sample.indices,
                                 [&](std::size_t i) { return design.weight(i); });
}

struct NestedTotals {
  Totals s1;  // measured-unit estimates (weight scaled up by cluster size)
  Totals s2;  // full-cluster estimates
};

inline NestedTotals nested_totals(const Design& design, const NestedSample& ns) {
  NestedTotals t;
  t.s1 = detail::weighted_totals(design.population(), ns.s1.indices,
                                 [&](std::size_t i) { return design.s1_weight(i); });
  t.s2 = detail::weighted_totals(design.population(), ns.s2.indices,
                                 [&](std::size_t i) { return design.s2_weight(i); });
  return t;
}

/// The common combination step t_y - beta' (t_x - t_ref), shared by every
/// estimator in the T(beta) family so that algebraically identical inputs
/// produce identical floating-point results.
inline double recal_combine(double t_y, const Vector& t_x, const Vector& t_ref,
                            const Vector& beta) {
  return t_y - beta.dot(t_x - t_ref);
}

/// True when every unit is sampled with probability one, i.e. a draw always
/// reproduces the whole population and estimated totals are exact.
inline bool is_census(const Design& design) {
  if (const auto* s = std::get_if<Srswor>(&design.kind()))
    return s->n == design.population_size();
  if (const auto* st = std::get_if<StratifiedSrswor>(&design.kind())) {
    const auto& groups = design.population().strata_groups();
    for (std::size_t h = 0; h < groups.size(); ++h)
      if (st->n_per_stratum[h] != groups[h].size()) return false;
    return true;
  }
  if (const auto* c = std::get_if<ClusterSrswor>(&design.kind())) {
    if (c->n_clusters != design.n_clusters()) return false;
    if (c->take_per_cluster == 0) return true;
    for (const auto& g : design.population().cluster_groups())
      if (g.size() != c->take_per_cluster) return false;
    return true;
  }
  return false;
}

// --- Regression calibration ------------------------------------------------------

struct GregOptions {
  /// Optional per-unit variance weights (length = population size, all
  /// positive); empty means all ones.
  std::vector<double> q;
  double max_cond = 1e12;
};

struct GregResult {
  Totals ht;
  Vector lambda;            // multiplier of the calibration adjustment
  Vector beta;              // weighted regression slope
  std::vector<double> weights;  // calibrated weights, aligned with the sample
  double estimate_weights = 0.0;  // sum of w_i y_i
  double estimate_beta = 0.0;     // t_y - beta' (t_x - known totals)
  double estimate = 0.0;          // canonical value (the beta form)
  SymSolveInfo info;
};

/// Classical regression calibration: adjusts the expansion weights by the
/// smallest chi-square perturbation that reproduces the known covariate
/// totals exactly. The weight form and the slope form of the estimate agree
/// algebraically; both are reported.
inline GregResult greg(const Design& design, const Sample& sample,
                       const Vector& known_t_x, const GregOptions& opt = {}) {
  const Population& pop = design.population();
  const Eigen::Index p = Eigen::Index(pop.dim());
  if (known_t_x.size() != p)
    throw ArgumentError("known covariate totals have the wrong dimension");
  if (!opt.q.empty() && opt.q.size() != pop.size())
    throw ArgumentError("variance-weight vector must have one entry per "
                        "population unit");
  for (double qv : opt.q)
    if (!(qv > 0.0)) throw ArgumentError("variance weights must be positive");
  auto q_of = [&](std::size_t i) { return opt.q.empty() ? 1.0 : opt.q[i]; };

  GregResult r;
  r.ht = ht_totals(design, sample);

  Matrix h = Matrix::Zero(p, p);
  Vector xy = Vector::Zero(p);
  for (std::size_t i : sample.indices) {
    const double dq = design.weight(i) * q_of(i);
    const auto xi = pop.x_row(i);
    h.noalias() += dq * (xi * xi.transpose());
    xy.noalias() += dq * pop.y(i) * xi;
  }
  r.lambda = solve_spd_strict(h, known_t_x - r.ht.x, opt.max_cond, &r.info);
  r.beta = solve_spd_strict(h, xy, opt.max_cond);

  KahanSum wy;
  r.weights.reserve(sample.size());
  for (std::size_t i : sample.indices) {
    const double w =
        design.weight(i) * (1.0 + q_of(i) * r.lambda.dot(pop.x_row(i)));
    r.weights.push_back(w);
    wy.add(w * pop.y(i));
  }
  r.estimate_weights = wy.value();
  r.estimate_beta = recal_combine(r.ht.y, r.ht.x, known_t_x, r.beta);
  r.estimate = r.estimate_beta;
  return r;
}

// --- Minimum-variance recalibration ------------------------------------------------

struct RecalOptions {
  /// Pair-sum constant; NaN selects the design's recommended value.
  double c = std::numeric_limits<double>::quiet_NaN();
};

struct RecalResult {
  Totals ht;
  Vector beta;
  double estimate = 0.0;
  CovMatrices cov;
  SymSolveInfo info;
};

namespace detail {

inline void recal_from_blocks(double t_y, const Vector& t_x, const Vector& t_ref,
                              const Matrix& sxx, const Vector& sxy, double gross,
                              Vector& beta, double& estimate, SymSolveInfo* info) {
  beta = solve_sym_projected(sxx, sxy, gross, info);
  estimate = recal_combine(t_y, t_x, t_ref, beta);
}

}  // namespace detail

/// Replaces the regression slope by the variance-minimizing coefficient
/// estimated from the pair-sum covariance blocks: beta solves
/// Cov(t_x_hat) beta = Cov(t_x_hat, t_y_hat). The combination stays unbiased
/// for any coefficient, so estimation noise in beta costs only higher-order
/// terms.
inline RecalResult optimal_recal(const Design& design, const Sample& sample,
                                 const Vector& known_t_x,
                                 const RecalOptions& opt = {}) {
  const double c = std::isnan(opt.c) ? recommended_c(design) : opt.c;
  RecalResult r;
  r.ht = ht_totals(design, sample);
  const Vector center = known_t_x / double(design.population_size());
  r.cov = cov_hat(design, sample, center, c);
  detail::recal_from_blocks(r.ht.y, r.ht.x, known_t_x, r.cov.xx, r.cov.xy,
                            r.cov.gross, r.beta, r.estimate, &r.info);
  return r;
}

/// Variance-minimizing coefficient computed from the exact design
/// covariance (population data required); the fixed-coefficient benchmark
/// the estimated version chases.
inline Vector optimal_beta_exact(const Design& design, const Vector& known_t_x,
                                 SymSolveInfo* info = nullptr) {
  const Vector center = known_t_x / double(design.population_size());
  const CovMatrices cov = cov_exact(design, center);
  return solve_sym_projected(cov.xx, cov.xy, cov.gross, info);
}

struct OptimalWeightsResult {
  std::vector<double> weights;  // aligned with the sample; functions of x only
  Vector t_x_centered;          // expansion total of the centered covariates
  Vector beta;
  double estimate_weights = 0.0;  // sum of w_i y_i
  double estimate_beta = 0.0;     // t_y_hat - beta' t_x_centered_hat
  SymSolveInfo info;
};

/// Weight representation of the minimum-variance recalibration: each
/// sampled unit's expansion weight is shifted by a combination of the
/// pair-sum rows, built from the covariates and inclusion probabilities
/// alone (never from y). The weights reproduce the benchmark on the
/// centered covariates exactly: sum of w_i (x_i - known_t_x/N) = 0, which
/// is the raw-total calibration whenever the benchmark totals are zero.
inline OptimalWeightsResult optimal_weights(const Design& design,
                                            const Sample& sample,
                                            const Vector& known_t_x,
                                            const RecalOptions& opt = {}) {
  const double c = std::isnan(opt.c) ? recommended_c(design) : opt.c;
  const Population& pop = design.population();
  const Eigen::Index p = Eigen::Index(pop.dim());
  const Eigen::Index q = p + 1;
  const Vector center = known_t_x / double(design.population_size());

  const detail::CovGroupSet set = detail::build_cov_groups(design, sample, center, c);
  auto [acc, gross] = detail::assemble_cov(set, q);
  const CovMatrices cov = detail::slice_blocks(acc, gross);

  OptimalWeightsResult r;
  const Totals tot = ht_totals(design, sample);
  {
    KahanVec txc(p);
    for (std::size_t i : sample.indices) {
      const double w = design.weight(i);
      for (Eigen::Index k = 0; k < p; ++k)
        txc.add_at(k, w * (pop.x(i, std::size_t(k)) - center[k]));
    }
    r.t_x_centered = txc.value();
  }

  const Vector gvec = solve_sym_projected(cov.xx, r.t_x_centered, cov.gross, &r.info);
  r.beta = solve_sym_projected(cov.xx, cov.xy, cov.gross);

  // Row sums of the pair matrix against the centered covariates: for unit j
  // in group g, r_j = (a_g - b_g) x~_j + b_g s_g + kappa u_g (US - u_g s_g).
  Vector us = Vector::Zero(p);
  for (const auto& g : set.groups) us += g.u * g.s.head(p);
  KahanSum wy;
  r.weights.reserve(sample.size());
  Vector xt(p);
  for (std::size_t a = 0; a < sample.size(); ++a) {
    const std::size_t i = sample.indices[a];
    const auto& g = set.groups[std::size_t(set.group_of[a])];
    for (Eigen::Index k = 0; k < p; ++k) xt[k] = pop.x(i, std::size_t(k)) - center[k];
    const Vector row = (g.a - g.b) * xt + g.b * g.s.head(p) +
                       set.kappa * g.u * (us - g.u * g.s.head(p));
    const double w = design.weight(i) - gvec.dot(row);
    r.weights.push_back(w);
    wy.add(w * pop.y(i));
  }
  r.estimate_weights = wy.value();
  r.estimate_beta = tot.y - r.beta.dot(r.t_x_centered);
  return r;
}

/// Full-population least-squares coefficient (no intercept), the
/// model-based comparator: argmin over b of the sum of (y_i - b'x_i)^2.
inline Vector ols_beta_population(const Population& pop, double max_cond = 1e12,
                                  SymSolveInfo* info = nullptr) {
  const Eigen::Index p = Eigen::Index(pop.dim());
  Matrix gram = Matrix::Zero(p, p);
  Vector xy = Vector::Zero(p);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    const auto xi = pop.x_row(i);
    gram.noalias() += xi * xi.transpose();
    xy.noalias() += pop.y(i) * xi;
  }
  return solve_spd_strict(gram, xy, max_cond, info);
}

// --- Two-sample recalibration -------------------------------------------------------

struct TwoSampleResult {
  Totals ht1, ht2;
  Vector beta;
  double estimate = 0.0;
  bool census2 = false;
  SymSolveInfo info;
};

/// How the two samples' covariance blocks are obtained: estimated from each
/// realized sample by the pair sum, or computed exactly from population data
/// (a validation mode — it presumes the population is fully known).
enum class TwoSampleCovMode { Plugin, Exact };

/// Benchmarks the first sample's totals against a second, independent
/// sample's estimate of the same covariate totals:
/// T = t_y_hat_1 - beta' (t_x_hat_1 - t_x_hat_2), with
/// beta = (Cov_1 + Cov_2)^-1 Cov(t_x_hat_1, t_y_hat_1). When the second
/// sample is a census its totals are exact, its covariance contribution is
/// identically zero, and the result coincides with the single-sample
/// estimator benchmarked at those totals.
inline TwoSampleResult two_sample_recal(const Design& d1, const Sample& s1,
                                        const Design& d2, const Sample& s2,
                                        const RecalOptions& opt1 = {},
                                        const RecalOptions& opt2 = {},
                                        TwoSampleCovMode mode = TwoSampleCovMode::Plugin) {
  if (d1.population().dim() != d2.population().dim())
    throw ArgumentError("the two samples measure covariates of different "
                        "dimensions");
  const double c1 = std::isnan(opt1.c) ? recommended_c(d1) : opt1.c;
  const double c2 = std::isnan(opt2.c) ? recommended_c(d2) : opt2.c;
  const Eigen::Index p = Eigen::Index(d1.population().dim());

  TwoSampleResult r;
  r.ht1 = ht_totals(d1, s1);
  r.ht2 = ht_totals(d2, s2);
  r.census2 = is_census(d2);

  CovMatrices cov1, cov2;
  if (mode == TwoSampleCovMode::Exact) {
    const Vector center1 = d1.population().t_x() / double(d1.population_size());
    cov1 = cov_exact(d1, center1);
    const Vector center2 = d2.population().t_x() / double(d2.population_size());
    cov2 = cov_exact(d2, center2);
  } else {
    // Each sample's covariance is centered at the other sample's mean
    // estimate, so neither recycles its own data as its benchmark.
    const Vector center1 = r.ht2.x / r.ht2.count;
    cov1 = cov_hat(d1, s1, center1, c1);
    if (r.census2) {
      // A census has zero design variance by definition; skip estimation so
      // the degeneracy is exact rather than a rounding residual.
      cov2.xx = Matrix::Zero(p, p);
      cov2.xy = Vector::Zero(p);
      cov2.yy = 0.0;
      cov2.gross = 0.0;
    } else {
      const Vector center2 = r.ht1.x / r.ht1.count;
      cov2 = cov_hat(d2, s2, center2, c2);
    }
  }

  // The y side lives only in sample 1, so the cross block is sample 1's.
  const Matrix sxx = cov1.xx + cov2.xx;
  detail::recal_from_blocks(r.ht1.y, r.ht1.x, r.ht2.x, sxx, cov1.xy,
                            cov1.gross + cov2.gross, r.beta, r.estimate, &r.info);
  return r;
}

// --- Supersample-difference recalibration --------------------------------------------

struct DeltaResult {
  NestedTotals ht;
  Vector delta;  // measured-unit minus full-cluster x-total estimates
  Vector beta;
  double estimate = 0.0;
};

/// Variance-minimizing coefficient for the supersample difference,
/// Cov(delta)^-1 Cov(delta, t_y_hat_s1), from the exact design covariance.
inline Vector delta_beta_exact(const Design& design, SymSolveInfo* info = nullptr) {
  const CovMatrices cov = exact_nested_cov(design);
  return solve_sym_projected(cov.xx, cov.xy, cov.gross, info);
}

/// Corrects the measured-unit y total by the observed gap between the
/// measured-unit and full-cluster x totals:
/// T = t_y_hat_s1 - beta' (t_x_hat_s1 - t_x_hat_s2). The gap has zero
/// expectation whenever the measured unit is representative of its cluster,
/// so the correction is free of bias for any fixed beta.
inline DeltaResult delta_recal(const Design& design, const NestedSample& ns,
                               const Vector& beta) {
  DeltaResult r;
  r.ht = nested_totals(design, ns);
  if (beta.size() != r.ht.s1.x.size())
    throw ArgumentError("coefficient dimension does not match the covariates");
  r.delta = r.ht.s1.x - r.ht.s2.x;
  r.beta = beta;
  r.estimate = recal_combine(r.ht.s1.y, r.ht.s1.x, r.ht.s2.x, beta);
  return r;
}

}  // namespace svykit
