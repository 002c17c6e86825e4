#pragma once

#include <cmath>
#include <cstddef>
#include <sstream>
#include <variant>
#include <vector>

#include "svykit/design.hpp"
#include "svykit/errors.hpp"
#include "svykit/linalg.hpp"
#include "svykit/population.hpp"

namespace svykit {

/// Joint second-moment blocks of the estimated totals. xx refers to the
/// internally centered covariate totals (x shifted by the benchmark mean so
/// the population total of the shifted covariate is zero); y is never
/// shifted. gross is the largest entry of the same aggregation run on
/// absolute contributions — the natural magnitude against which a
/// near-cancelled entry should be judged.
struct CovMatrices {
  Matrix xx;
  Vector xy;
  double yy = 0.0;
  double gross = 0.0;
};

/// Var(t_y_hat - beta' (t_x_hat - t_x)) as a quadratic in beta.
inline double quad_variance(const CovMatrices& cov, const Vector& beta) {
  return cov.yy - 2.0 * beta.dot(cov.xy) + beta.dot(cov.xx * beta);
}

/// Weight attached to the (i, j) cross-product in the pair-sum covariance
/// estimator: 1/(pi_i pi_j) - c/pi_ij, with pi_ii = pi_i. Every choice of c
/// yields the same expectation once the covariate totals are centered to
/// zero; c only moves finite-sample behaviour.
inline double pair_coefficient(const Design& design, std::size_t i, std::size_t j,
                               double c) {
  const double pi_i = design.pi_first(i);
  if (i == j) return 1.0 / (pi_i * pi_i) - c / pi_i;
  const double pi_j = design.pi_first(j);
  const double pi_ij = design.pi_joint(i, j);
  if (!(pi_ij > 0.0)) {
    std::ostringstream msg;
    msg << "pair (" << i << ", " << j
        << ") has zero joint inclusion probability under " << design.describe();
    throw SupportError(msg.str());
  }
  return 1.0 / (pi_i * pi_j) - c / pi_ij;
}

/// c that zeroes every off-diagonal pair coefficient under simple random
/// sampling without replacement (the estimator then collapses to a positive
/// multiple of the sample second-moment matrix); 1 for all other kinds.
inline double recommended_c(const Design& design) {
  if (const auto* s = std::get_if<Srswor>(&design.kind())) {
    const double n = double(s->n), nn = double(design.population_size());
    if (nn < 2.0) return 1.0;
    return (n - 1.0) * nn / (n * (nn - 1.0));
  }
  return 1.0;
}

namespace detail {

/// One aggregation group: all sampled units sharing identical design
/// coefficients (the whole sample, a stratum, or a sampled cluster).
struct CovGroup {
  double a = 0.0;  // diagonal coefficient
  double b = 0.0;  // within-group pair coefficient
  double u = 0.0;  // between-group cross weight (expansion weight level)
  Vector s, s_abs;
  Matrix m2, m2_abs;
  std::size_t count = 0;

  explicit CovGroup(Eigen::Index q)
      : s(Vector::Zero(q)),
        s_abs(Vector::Zero(q)),
        m2(Matrix::Zero(q, q)),
        m2_abs(Matrix::Zero(q, q)) {}

  void add(const Vector& z) {
    s += z;
    s_abs += z.cwiseAbs();
    m2 += z * z.transpose();
    m2_abs += z.cwiseAbs() * z.cwiseAbs().transpose();
    ++count;
  }
};

inline void fill_augmented(const Population& pop, std::size_t i, const Vector& center,
                           Vector& z) {
  const Eigen::Index p = Eigen::Index(pop.dim());
  for (Eigen::Index k = 0; k < p; ++k) z[k] = pop.x(i, std::size_t(k)) - center[k];
  z[p] = pop.y(i);
}

inline CovMatrices slice_blocks(const Matrix& full, double gross) {
  const Eigen::Index p = full.rows() - 1;
  CovMatrices out;
  out.xx = full.topLeftCorner(p, p);
  out.xy = full.topRightCorner(p, 1);
  out.yy = full(p, p);
  out.gross = gross;
  return out;
}

/// Grouped pair-sum state: within a group every unit shares the diagonal
/// coefficient a and the within-pair coefficient b; pairs across groups get
/// kappa * u_g * u_h. group_of maps sample positions to groups.
struct CovGroupSet {
  std::vector<CovGroup> groups;
  double kappa = 0.0;
  std::vector<int> group_of;
};

/// Buckets the sample into coefficient groups for the pair-sum estimator.
/// Throws when the design kind admits no pair-sum estimator or the sample
/// does not match the design.
inline CovGroupSet build_cov_groups(const Design& design, const Sample& sample,
                                    const Vector& center, double c) {
  if (design.with_replacement() || design.is_nested())
    throw UnsupportedError(
        "pair-sum covariance estimation is undefined for with-replacement "
        "design kind '" +
        design.kind_name() + "'");
  if (!design.all_pairs_reachable())
    throw SupportError(
        "design " + design.describe() +
        " leaves some pairs with zero joint inclusion probability; the "
        "pair-sum covariance estimator is undefined");
  const Population& pop = design.population();
  if (center.size() != Eigen::Index(pop.dim()))
    throw ArgumentError("benchmark mean dimension does not match the covariate "
                        "dimension");
  const Eigen::Index q = Eigen::Index(pop.dim()) + 1;

  CovGroupSet set;
  set.group_of.reserve(sample.size());
  Vector z(q);
  if (const auto* s = std::get_if<Srswor>(&design.kind())) {
    const double nn = double(pop.size()), n = double(s->n);
    if (sample.size() != s->n)
      throw ArgumentError("sample size does not match the design");
    CovGroup g(q);
    const double d = nn / n;
    g.a = d * d - c * d;
    g.b = (s->n >= 2) ? d * d - c * nn * (nn - 1.0) / (n * (n - 1.0)) : 0.0;
    g.u = d;
    for (std::size_t i : sample.indices) {
      fill_augmented(pop, i, center, z);
      g.add(z);
      set.group_of.push_back(0);
    }
    set.groups.push_back(std::move(g));
    set.kappa = 0.0;  // single group: no cross pairs
    return set;
  }
  if (const auto* st = std::get_if<StratifiedSrswor>(&design.kind())) {
    const auto& pgroups = pop.strata_groups();
    set.groups.assign(pgroups.size(), CovGroup(q));
    for (std::size_t h = 0; h < pgroups.size(); ++h) {
      const double nn = double(pgroups[h].size());
      const double n = double(st->n_per_stratum[h]);
      const double d = nn / n;
      set.groups[h].a = d * d - c * d;
      set.groups[h].b =
          (n >= 2.0) ? d * d - c * nn * (nn - 1.0) / (n * (n - 1.0)) : 0.0;
      set.groups[h].u = d;
    }
    for (std::size_t i : sample.indices) {
      fill_augmented(pop, i, center, z);
      const auto h = std::size_t(pop.stratum_of(i));
      set.groups[h].add(z);
      set.group_of.push_back(int(h));
    }
    for (std::size_t h = 0; h < pgroups.size(); ++h)
      if (set.groups[h].count != st->n_per_stratum[h])
        throw ArgumentError("sample does not match the stratified design");
    set.kappa = 1.0 - c;
    return set;
  }
  const auto& cl = std::get<ClusterSrswor>(design.kind());
  const double mm = double(design.n_clusters()), m = double(cl.n_clusters);
  // Bucket sampled units by cluster, in order of first appearance (sample
  // indices ascend, so this is deterministic).
  std::vector<int> bucket_of(design.n_clusters(), -1);
  std::vector<std::size_t> bucket_cluster;
  for (std::size_t i : sample.indices) {
    const auto ci = std::size_t(pop.cluster_of(i));
    if (bucket_of[ci] < 0) {
      bucket_of[ci] = int(set.groups.size());
      bucket_cluster.push_back(ci);
      set.groups.emplace_back(q);
    }
    fill_augmented(pop, i, center, z);
    set.groups[std::size_t(bucket_of[ci])].add(z);
    set.group_of.push_back(bucket_of[ci]);
  }
  if (set.groups.size() != cl.n_clusters)
    throw ArgumentError("sample does not match the cluster design");
  for (std::size_t gidx = 0; gidx < set.groups.size(); ++gidx) {
    const double kc = double(pop.cluster_groups()[bucket_cluster[gidx]].size());
    const double t = cl.take_per_cluster == 0 ? kc : double(cl.take_per_cluster);
    if (set.groups[gidx].count != std::size_t(t))
      throw ArgumentError("sample does not match the cluster design");
    const double u = (mm / m) * (kc / t);
    set.groups[gidx].u = u;
    set.groups[gidx].a = u * u - c * u;
    if (set.groups[gidx].count < 2) {
      set.groups[gidx].b = 0.0;
    } else if (cl.take_per_cluster == 0) {
      set.groups[gidx].b = u * u - c * mm / m;
    } else {
      set.groups[gidx].b =
          u * u - c * (mm / m) * kc * (kc - 1.0) / (t * (t - 1.0));
    }
  }
  set.kappa = (m >= 2.0) ? 1.0 - c * m * (mm - 1.0) / (mm * (m - 1.0)) : 0.0;
  return set;
}

/// Collapses the grouped pair sum into the full augmented matrix plus the
/// absolute-contribution scale.
inline std::pair<Matrix, double> assemble_cov(const CovGroupSet& set,
                                              Eigen::Index q) {
  Matrix acc = Matrix::Zero(q, q);
  Matrix acc_abs = Matrix::Zero(q, q);
  Vector us = Vector::Zero(q), us_abs = Vector::Zero(q);
  Matrix usq = Matrix::Zero(q, q), usq_abs = Matrix::Zero(q, q);
  for (const auto& g : set.groups) {
    acc += (g.a - g.b) * g.m2 + g.b * (g.s * g.s.transpose());
    acc_abs += std::abs(g.a) * g.m2_abs +
               std::abs(g.b) * (g.s_abs * g.s_abs.transpose() - g.m2_abs);
    us += g.u * g.s;
    us_abs += g.u * g.s_abs;
    usq += (g.u * g.u) * (g.s * g.s.transpose());
    usq_abs += (g.u * g.u) * (g.s_abs * g.s_abs.transpose());
  }
  acc += set.kappa * (us * us.transpose() - usq);
  acc_abs += std::abs(set.kappa) * (us_abs * us_abs.transpose() - usq_abs);
  acc = 0.5 * (acc + acc.transpose());
  return {std::move(acc), acc_abs.maxCoeff()};
}

}  // namespace detail

/// Unbiased estimate of the covariance of the (centered-x, y) estimated
/// totals from one realized sample, computed by closed-form aggregation of
/// the pair sum (groups of units share coefficients, so the quadratic pair
/// loop collapses to group moments). Requires every population pair to be
/// reachable; with-replacement designs are rejected.
inline CovMatrices cov_hat(const Design& design, const Sample& sample,
                           const Vector& center, double c) {
  const Eigen::Index q = Eigen::Index(design.population().dim()) + 1;
  const detail::CovGroupSet set = detail::build_cov_groups(design, sample, center, c);
  auto [acc, gross] = detail::assemble_cov(set, q);
  return detail::slice_blocks(acc, gross);
}

/// Reference implementation of the same estimator as a literal double sum
/// over sampled pairs via pair_coefficient. Quadratic in the sample size;
/// intended for validation against cov_hat.
inline CovMatrices cov_hat_pairwise(const Design& design, const Sample& sample,
                                    const Vector& center, double c) {
  if (design.with_replacement() || design.is_nested())
    throw UnsupportedError(
        "pair-sum covariance estimation is undefined for with-replacement "
        "design kind '" +
        design.kind_name() + "'");
  const Population& pop = design.population();
  const Eigen::Index q = Eigen::Index(pop.dim()) + 1;
  const std::size_t n = sample.size();
  std::vector<Vector> z(n, Vector(q));
  for (std::size_t a = 0; a < n; ++a)
    detail::fill_augmented(pop, sample.indices[a], center, z[a]);
  Matrix acc = Matrix::Zero(q, q);
  Matrix acc_abs = Matrix::Zero(q, q);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      const double coef =
          pair_coefficient(design, sample.indices[a], sample.indices[b], c);
      acc += coef * (z[a] * z[b].transpose());
      acc_abs += std::abs(coef) * (z[a].cwiseAbs() * z[b].cwiseAbs().transpose());
    }
  }
  acc = 0.5 * (acc + acc.transpose());
  return detail::slice_blocks(acc, acc_abs.maxCoeff());
}

/// Exact design covariance of the (centered-x, y) estimated totals, from
/// population data and the design's closed-form variance. For unequal
/// cluster sizes this is the covariance of the centered totals, which is
/// what the pair-sum estimator targets.
inline CovMatrices cov_exact(const Design& design, const Vector& center) {
  const Population& pop = design.population();
  if (center.size() != Eigen::Index(pop.dim()))
    throw ArgumentError("benchmark mean dimension does not match the covariate "
                        "dimension");
  const Eigen::Index q = Eigen::Index(pop.dim()) + 1;
  Vector z(q);

  // Scatter of (z - mean) over a list of units, divisor (count - 1).
  auto unit_scatter = [&](const std::vector<std::size_t>& units) -> Matrix {
    const std::size_t n = units.size();
    Vector mean = Vector::Zero(q);
    for (std::size_t i : units) {
      detail::fill_augmented(pop, i, center, z);
      mean += z;
    }
    mean /= double(n);
    Matrix s = Matrix::Zero(q, q);
    if (n < 2) return s;
    for (std::size_t i : units) {
      detail::fill_augmented(pop, i, center, z);
      s += (z - mean) * (z - mean).transpose();
    }
    return s / double(n - 1);
  };

  auto cluster_totals = [&]() -> std::vector<Vector> {
    std::vector<Vector> totals;
    totals.reserve(pop.cluster_groups().size());
    for (const auto& g : pop.cluster_groups()) {
      Vector t = Vector::Zero(q);
      for (std::size_t i : g) {
        detail::fill_augmented(pop, i, center, z);
        t += z;
      }
      totals.push_back(std::move(t));
    }
    return totals;
  };

  auto scatter_of = [&](const std::vector<Vector>& vs, double divisor) -> Matrix {
    Vector mean = Vector::Zero(q);
    for (const auto& v : vs) mean += v;
    mean /= double(vs.size());
    Matrix s = Matrix::Zero(q, q);
    for (const auto& v : vs) s += (v - mean) * (v - mean).transpose();
    return s / divisor;
  };

  Matrix cov = Matrix::Zero(q, q);
  if (const auto* s = std::get_if<Srswor>(&design.kind())) {
    const double nn = double(pop.size()), n = double(s->n);
    std::vector<std::size_t> all(pop.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    cov = nn * (nn - n) / n * unit_scatter(all);
  } else if (const auto* st = std::get_if<StratifiedSrswor>(&design.kind())) {
    const auto& groups = pop.strata_groups();
    for (std::size_t h = 0; h < groups.size(); ++h) {
      const double nn = double(groups[h].size()), n = double(st->n_per_stratum[h]);
      cov += nn * (nn - n) / n * unit_scatter(groups[h]);
    }
  } else if (const auto* cl = std::get_if<ClusterSrswor>(&design.kind())) {
    const double mm = double(design.n_clusters()), m = double(cl->n_clusters);
    const auto totals = cluster_totals();
    if (totals.size() >= 2)
      cov = mm * (mm - m) / m * scatter_of(totals, double(totals.size()) - 1.0);
    if (cl->take_per_cluster > 0) {
      const double t = double(cl->take_per_cluster);
      const auto& groups = pop.cluster_groups();
      for (const auto& g : groups) {
        const double kc = double(g.size());
        cov += (mm / m) * kc * (kc - t) / t * unit_scatter(g);
      }
    }
  } else if (const auto* w = std::get_if<ClusterWr>(&design.kind())) {
    const double mm = double(design.n_clusters());
    const auto totals = cluster_totals();
    // n iid draws of M * Z_c, so Var = (M^2 / n) * population variance.
    cov = (mm * mm / double(w->n_draws)) * scatter_of(totals, mm);
  } else {
    const auto& nc = std::get<NestedCluster>(design.kind());
    const double mm = double(design.n_clusters());
    const auto totals = cluster_totals();
    if (nc.with_replacement) {
      cov = (mm * mm / double(nc.n_outer)) * scatter_of(totals, mm);
    } else if (totals.size() >= 2) {
      const double m = double(nc.n_outer);
      cov = mm * (mm - m) / m * scatter_of(totals, double(totals.size()) - 1.0);
    }
  }
  cov = 0.5 * (cov + cov.transpose());
  return detail::slice_blocks(cov, cov.cwiseAbs().maxCoeff());
}

/// Exact design covariance of (delta_x, t_y_hat_s1) for the supersample
/// design, where delta_x is the S1-minus-S2 difference of estimated x
/// totals and t_y_hat_s1 the S1 estimate of the y total. Centering cancels
/// inside delta_x, so none is applied.
inline CovMatrices exact_nested_cov(const Design& design) {
  const auto* nc = std::get_if<NestedCluster>(&design.kind());
  if (!nc)
    throw UnsupportedError(
        "exact_nested_cov requires the supersample design kind");
  const Population& pop = design.population();
  const Eigen::Index p = Eigen::Index(pop.dim());
  const Eigen::Index q = p + 1;
  const auto& groups = pop.cluster_groups();
  const double mm = double(groups.size());

  // Per cluster-draw contribution g(k) = (K x_k - X_c, K y_k), with k the
  // measured unit. mean_g = inner expectation, v_g = inner covariance.
  std::vector<Vector> mean_g;
  std::vector<Matrix> var_g;
  mean_g.reserve(groups.size());
  var_g.reserve(groups.size());
  Vector g(q);
  for (const auto& cg : groups) {
    const double kc = double(cg.size());
    Vector xtot = Vector::Zero(p);
    for (std::size_t i : cg)
      for (Eigen::Index k = 0; k < p; ++k) xtot[k] += pop.x(i, std::size_t(k));
    auto fill_g = [&](std::size_t i) {
      for (Eigen::Index k = 0; k < p; ++k)
        g[k] = kc * pop.x(i, std::size_t(k)) - xtot[k];
      g[p] = kc * pop.y(i);
    };
    if (nc->measured == MeasuredUnit::First) {
      fill_g(cg.front());
      mean_g.push_back(g);
      var_g.push_back(Matrix::Zero(q, q));
    } else {
      Vector mean = Vector::Zero(q);
      for (std::size_t i : cg) {
        fill_g(i);
        mean += g;
      }
      mean /= kc;
      Matrix v = Matrix::Zero(q, q);
      for (std::size_t i : cg) {
        fill_g(i);
        v += (g - mean) * (g - mean).transpose();
      }
      v /= kc;  // uniform inner draw: population divisor
      mean_g.push_back(std::move(mean));
      var_g.push_back(std::move(v));
    }
  }

  Vector grand = Vector::Zero(q);
  for (const auto& m : mean_g) grand += m;
  grand /= mm;

  Matrix cov = Matrix::Zero(q, q);
  if (nc->with_replacement) {
    // iid draws: (M^2/n) * Cov_one_draw, second moment includes inner noise.
    Matrix second = Matrix::Zero(q, q);
    for (std::size_t c = 0; c < groups.size(); ++c)
      second += var_g[c] + mean_g[c] * mean_g[c].transpose();
    second /= mm;
    cov = (mm * mm / double(nc->n_outer)) *
          (second - grand * grand.transpose());
  } else {
    const double m = double(nc->n_outer);
    Matrix sb = Matrix::Zero(q, q);
    for (const auto& mu : mean_g)
      sb += (mu - grand) * (mu - grand).transpose();
    if (groups.size() >= 2) sb /= (mm - 1.0);
    cov = mm * (mm - m) / m * sb;
    Matrix inner = Matrix::Zero(q, q);
    for (const auto& v : var_g) inner += v;
    cov += (mm / m) * inner;
  }
  cov = 0.5 * (cov + cov.transpose());
  return detail::slice_blocks(cov, cov.cwiseAbs().maxCoeff());
}

}  // namespace svykit
