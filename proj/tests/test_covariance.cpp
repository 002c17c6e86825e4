#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"

using namespace svytest;

namespace {

// Exact moments of the pair (centered x totals, y total) over all samples.
struct TotalsMoments {
  Vector mean;
  Matrix cov;
};

TotalsMoments enumerate_totals(const Design& d, const Vector& center) {
  const Population& pop = d.population();
  const Eigen::Index p = Eigen::Index(pop.dim());
  const auto mom = enumeration_oracle_vec(d, [&](const Sample& s) {
    Vector v = Vector::Zero(p + 1);
    for (std::size_t i : s.indices) {
      const double w = d.weight(i);
      v.head(p) += w * (pop.x_row(i) - center);
      v[p] += w * pop.y(i);
    }
    return v;
  });
  return {mom.mean, mom.covariance};
}

// Enumeration mean of every entry of the pair-sum covariance estimate.
Matrix enumerate_cov_hat_mean(const Design& d, const Vector& center, double c) {
  const Eigen::Index p = Eigen::Index(d.population().dim());
  const auto mom = enumeration_oracle_vec(d, [&](const Sample& s) {
    const CovMatrices cm = cov_hat(d, s, center, c);
    Vector v(p * p + p + 1);
    Eigen::Index at = 0;
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) v[at++] = cm.xx(i, j);
    for (Eigen::Index i = 0; i < p; ++i) v[at++] = cm.xy[i];
    v[at] = cm.yy;
    return v;
  });
  Matrix full(p + 1, p + 1);
  Eigen::Index at = 0;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) full(i, j) = mom.mean[at++];
  for (Eigen::Index i = 0; i < p; ++i) {
    full(i, p) = mom.mean[at];
    full(p, i) = mom.mean[at];
    ++at;
  }
  full(p, p) = mom.mean[at];
  return full;
}

Matrix cov_blocks_to_full(const CovMatrices& cm) {
  const Eigen::Index p = cm.xy.size();
  Matrix full(p + 1, p + 1);
  full.topLeftCorner(p, p) = cm.xx;
  full.topRightCorner(p, 1) = cm.xy;
  full.bottomLeftCorner(1, p) = cm.xy.transpose();
  full(p, p) = cm.yy;
  return full;
}

void check_unbiased_for_all_c(const Design& d) {
  const Population& pop = d.population();
  const Eigen::Index p = Eigen::Index(pop.dim());
  const Vector center = pop.t_x() / double(pop.size());
  const double c_rec = recommended_c(d);
  const Matrix exact = cov_blocks_to_full(cov_exact(d, center));
  const double scale = std::max(1.0, exact.cwiseAbs().maxCoeff());
  for (const double c : {0.0, 0.5, 1.0, c_rec}) {
    const Matrix mean = enumerate_cov_hat_mean(d, center, c);
    Matrix dev = mean - exact;
    // Centering zeroes the population x totals, so the xx and xy entries
    // are unbiased for every c. The yy entry keeps the raw y total and
    // carries a (1 - c) * t_y^2 offset; pin it instead of hiding it.
    const double yy_offset = (1.0 - c) * pop.t_y() * pop.t_y();
    dev(p, p) -= yy_offset;
    const double yy_scale = std::max(scale, yy_offset);
    CHECK(dev.topLeftCorner(p + 1, p).cwiseAbs().maxCoeff() / scale < 1e-10);
    CHECK(dev.col(p).cwiseAbs().maxCoeff() / yy_scale < 1e-10);
  }
  // With c = 1 the estimator is unbiased for any centering, even none.
  const Vector zero = Vector::Zero(Eigen::Index(pop.dim()));
  const Matrix exact0 = cov_blocks_to_full(cov_exact(d, zero));
  const Matrix mean0 = enumerate_cov_hat_mean(d, zero, 1.0);
  const double scale0 = std::max(1.0, exact0.cwiseAbs().maxCoeff());
  CHECK((mean0 - exact0).cwiseAbs().maxCoeff() / scale0 < 1e-10);
}

Population pop9_clustered(std::vector<int> cluster, std::uint64_t seed = 99) {
  std::vector<double> y, x;
  Rng r = Rng::stream(seed, 0, 2);
  for (std::size_t i = 0; i < cluster.size(); ++i) {
    y.push_back(r.normal() * 2.0);
    x.push_back(r.normal() + 0.3 * y.back());
  }
  return clust_pop(std::move(y), std::move(x), 1, std::move(cluster));
}

}  // namespace

TEST_SUITE("covariance") {

TEST_CASE("pair-sum estimate is unbiased for every c once x is centered") {
  const Population pop6 = load_population(data_path("pop6.csv"));
  check_unbiased_for_all_c(Design(Srswor{3}, pop6));

  std::vector<double> y, x;
  Rng r = Rng::stream(2, 0, 0);
  for (int i = 0; i < 9; ++i) {
    y.push_back(r.normal());
    x.push_back(r.normal());
  }
  const Population spop = strat_pop(std::move(y), std::move(x), 1,
                                    {0, 0, 0, 0, 1, 1, 1, 1, 1});
  check_unbiased_for_all_c(Design(StratifiedSrswor{{2, 3}}, spop));

  const Population cpop = pop9_clustered({0, 0, 1, 1, 1, 2, 2, 3, 3});
  check_unbiased_for_all_c(Design(ClusterSrswor{2, 0}, cpop));

  const Population cpop_eq = pop9_clustered({0, 0, 0, 1, 1, 1, 2, 2, 2}, 5);
  check_unbiased_for_all_c(Design(ClusterSrswor{2, 2}, cpop_eq));
}

TEST_CASE("exact covariance closed forms match enumeration") {
  const Population pop6 = load_population(data_path("pop6.csv"));
  const Population cpop = pop9_clustered({0, 0, 1, 1, 1, 2, 2, 3, 3});
  std::vector<double> y, x;
  Rng r = Rng::stream(3, 0, 0);
  for (int i = 0; i < 9; ++i) {
    y.push_back(r.normal());
    x.push_back(r.normal());
  }
  const Population spop = strat_pop(std::move(y), std::move(x), 1,
                                    {0, 0, 0, 0, 1, 1, 1, 1, 1});
  const Population cpop_eq = pop9_clustered({0, 0, 0, 1, 1, 1, 2, 2, 2}, 7);

  const std::vector<std::pair<DesignKind, const Population*>> cases = {
      {Srswor{3}, &pop6},
      {Srswor{6}, &pop6},  // census: exact covariance must vanish
      {StratifiedSrswor{{2, 3}}, &spop},
      {ClusterSrswor{2, 0}, &cpop},
      {ClusterSrswor{2, 2}, &cpop_eq},
      {ClusterWr{3}, &cpop},
  };
  for (const auto& [kind, pop] : cases) {
    const Design d(kind, *pop);
    const Vector center = pop->t_x() / double(pop->size());
    const auto enumerated = enumerate_totals(d, center);
    const Matrix exact = cov_blocks_to_full(cov_exact(d, center));
    const double scale = std::max(1.0, exact.cwiseAbs().maxCoeff());
    CHECK((enumerated.cov - exact).cwiseAbs().maxCoeff() / scale < 1e-10);
  }
}

TEST_CASE("grouped assembly equals the literal pair double sum") {
  for (std::uint64_t idx = 0; idx < 40; ++idx) {
    const RandomInstance inst = random_instance(idx, 60, 3);
    const Design d(inst.kind, inst.pop);
    Rng rng = Rng::stream(1000 + idx, 1, 0);
    const Sample s = d.draw(rng);
    const Vector center = inst.pop.t_x() / double(inst.pop.size());
    for (const double c : {0.0, 1.0, recommended_c(d), 2.5}) {
      const CovMatrices fast = cov_hat(d, s, center, c);
      const CovMatrices slow = cov_hat_pairwise(d, s, center, c);
      const double scale = std::max(1.0, slow.gross);
      CHECK((cov_blocks_to_full(fast) - cov_blocks_to_full(slow))
                .cwiseAbs()
                .maxCoeff() /
                scale <
            1e-9);
      // Same no-cancellation bound from both assembly routes; it is zero
      // exactly when every pair coefficient vanishes (cluster census, c=1).
      CHECK(std::abs(fast.gross - slow.gross) <= 1e-9 * scale);
      CHECK(fast.gross >=
            cov_blocks_to_full(fast).cwiseAbs().maxCoeff() * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("grouped assembly handles take-subsets and singleton clusters") {
  const Population take2 = pop9_clustered({0, 0, 0, 1, 1, 1, 2, 2, 2}, 21);
  const Population lopsided = pop9_clustered({0, 1, 1, 1, 2, 2, 3, 3, 3}, 22);
  const std::vector<std::pair<DesignKind, const Population*>> cases = {
      {ClusterSrswor{2, 2}, &take2},
      {ClusterSrswor{3, 1}, &take2},
      {ClusterSrswor{3, 0}, &lopsided},  // includes a singleton cluster
  };
  for (const auto& [kind, pop] : cases) {
    const Design d(kind, *pop);
    const Vector center = pop->t_x() / double(pop->size());
    Rng rng = Rng::stream(5, 1, 1);
    for (int rep = 0; rep < 20; ++rep) {
      const Sample s = d.draw(rng);
      for (const double c : {0.0, 1.0, 0.7}) {
        if (!d.all_pairs_reachable()) {
          CHECK_THROWS_AS(cov_hat(d, s, center, c), SupportError);
          continue;
        }
        const CovMatrices fast = cov_hat(d, s, center, c);
        const CovMatrices slow = cov_hat_pairwise(d, s, center, c);
        const double scale = std::max(1.0, slow.gross);
        CHECK((cov_blocks_to_full(fast) - cov_blocks_to_full(slow))
                  .cwiseAbs()
                  .maxCoeff() /
                  scale <
              1e-9);
      }
    }
  }
}

TEST_CASE("recommended c diagonalizes simple random sampling pair terms") {
  const Population pop6 = load_population(data_path("pop6.csv"));
  const Design d(Srswor{3}, pop6);
  const double c = recommended_c(d);
  CHECK(c == doctest::Approx((3.0 - 1.0) * 6.0 / (3.0 * 5.0)));
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      if (i != j) CHECK(std::abs(pair_coefficient(d, i, j, c)) <= 1e-14);

  const Population cpop = pop9_clustered({0, 0, 1, 1, 1, 2, 2, 3, 3});
  CHECK(recommended_c(Design(ClusterSrswor{2, 0}, cpop)) == 1.0);
}

TEST_CASE("unreachable pairs and replacement designs are rejected") {
  const Population cpop = pop9_clustered({0, 0, 0, 1, 1, 1, 2, 2, 2});
  const Design take1(ClusterSrswor{2, 1}, cpop);
  CHECK_THROWS_AS(pair_coefficient(take1, 0, 1, 1.0), SupportError);

  const Design wr(ClusterWr{2}, cpop);
  Rng rng = Rng::stream(6, 1, 0);
  const Sample s = wr.draw(rng);
  const Vector center = Vector::Zero(1);
  CHECK_THROWS_AS(cov_hat(wr, s, center, 1.0), UnsupportedError);
}

TEST_CASE("supersample exact covariance matches nested enumeration") {
  const Population pop = pop9_clustered({0, 0, 1, 1, 1, 2, 2, 3, 3}, 31);
  for (const bool wr : {true, false}) {
    for (const auto rule : {MeasuredUnit::First, MeasuredUnit::Random}) {
      const Design d(NestedCluster{2, wr, rule}, pop);
      // Enumerate the pair (delta_x, t_y1) exactly.
      KahanSum sw;
      std::vector<Vector> vals;
      std::vector<double> probs;
      d.enumerate_nested(
          [&](const NestedSample& ns, double prob) {
            const NestedTotals nt = nested_totals(d, ns);
            Vector v(2);
            v[0] = nt.s1.x[0] - nt.s2.x[0];
            v[1] = nt.s1.y;
            vals.push_back(v);
            probs.push_back(prob);
            sw.add(prob);
          },
          kDefaultEnumerationCap);
      Vector mean = Vector::Zero(2);
      for (std::size_t i = 0; i < vals.size(); ++i) mean += probs[i] * vals[i];
      mean /= sw.value();
      Matrix cov = Matrix::Zero(2, 2);
      for (std::size_t i = 0; i < vals.size(); ++i) {
        const Vector dlt = vals[i] - mean;
        cov += probs[i] * (dlt * dlt.transpose());
      }
      cov /= sw.value();

      const CovMatrices exact = exact_nested_cov(d);
      const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
      CHECK(std::abs(exact.xx(0, 0) - cov(0, 0)) / scale < 1e-10);
      CHECK(std::abs(exact.xy[0] - cov(0, 1)) / scale < 1e-10);
      CHECK(std::abs(exact.yy - cov(1, 1)) / scale < 1e-10);
    }
  }
}

TEST_CASE("quadratic form reproduces the variance of the recalibrated total") {
  const Population pop6 = load_population(data_path("pop6.csv"));
  const Design d(Srswor{3}, pop6);
  const Vector center = pop6.t_x() / 6.0;
  const CovMatrices exact = cov_exact(d, center);
  for (const double beta : {-0.5, 0.0, 0.7, 1.3}) {
    const auto mom = enumeration_oracle(d, [&](const Sample& s) {
      const Totals t = ht_totals(d, s);
      return t.y - beta * (t.x[0] - pop6.t_x()[0]);
    });
    const Vector b = Vector::Constant(1, beta);
    CHECK(mom.variance ==
          doctest::Approx(quad_variance(exact, b)).epsilon(1e-10));
  }
}

}  // TEST_SUITE
