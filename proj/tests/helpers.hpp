#pragma once

#include <string>
#include <vector>

#include <svykit/svykit.hpp>

namespace svytest {

using namespace svykit;

inline std::string data_path(const std::string& name) {
  return std::string(SVYKIT_TEST_DATA_DIR) + "/" + name;
}

inline Population plain_pop(std::vector<double> y, std::vector<double> x_flat,
                            std::size_t dim = 1) {
  return Population(std::move(y), std::move(x_flat), dim, {}, {}, {}, {});
}

inline Population strat_pop(std::vector<double> y, std::vector<double> x_flat,
                            std::size_t dim, std::vector<int> stratum) {
  int n_strata = 0;
  for (int h : stratum) n_strata = std::max(n_strata, h + 1);
  std::vector<std::string> labels;
  for (int h = 0; h < n_strata; ++h) labels.push_back(std::to_string(h + 1));
  return Population(std::move(y), std::move(x_flat), dim, std::move(stratum), {},
                    std::move(labels), {});
}

inline Population clust_pop(std::vector<double> y, std::vector<double> x_flat,
                            std::size_t dim, std::vector<int> cluster) {
  int n_clusters = 0;
  for (int c : cluster) n_clusters = std::max(n_clusters, c + 1);
  std::vector<std::string> labels;
  for (int c = 0; c < n_clusters; ++c) labels.push_back(std::to_string(c + 1));
  return Population(std::move(y), std::move(x_flat), dim, {}, std::move(cluster),
                    {}, std::move(labels));
}

/// Group id columns of an existing population, in constructor form (empty
/// when the population has no such grouping).
inline std::vector<int> labels_of(const Population& pop) {
  if (!pop.has_strata()) return {};
  std::vector<int> v(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) v[i] = pop.stratum_of(i);
  return v;
}

inline std::vector<int> cluster_labels_of(const Population& pop) {
  if (!pop.has_clusters()) return {};
  std::vector<int> v(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) v[i] = pop.cluster_of(i);
  return v;
}

/// Random single-phase instance for property tests: a population of size at
/// most max_n with at most max_p covariates, plus a compatible design.
struct RandomInstance {
  Population pop;
  DesignKind kind;
};

inline RandomInstance random_instance(std::uint64_t index, std::size_t max_n = 200,
                                      std::size_t max_p = 3,
                                      bool center_x = false) {
  Rng rng = Rng::stream(0x5eed5eedULL, 7, index);
  const std::size_t p = 1 + rng.uniform_below(max_p);
  const std::size_t n = 8 + rng.uniform_below(max_n - 7);
  std::vector<double> y(n), x(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = rng.normal() * 3.0 + 1.0;
    for (std::size_t k = 0; k < p; ++k)
      x[i * p + k] = rng.normal() + (k == 0 ? 0.5 * y[i] : 0.0);
  }
  if (center_x) {
    for (std::size_t k = 0; k < p; ++k) {
      KahanSum s;
      for (std::size_t i = 0; i < n; ++i) s.add(x[i * p + k]);
      const double mean = s.value() / double(n);
      for (std::size_t i = 0; i < n; ++i) x[i * p + k] -= mean;
    }
  }

  switch (rng.uniform_below(3)) {
    case 0: {
      const std::size_t draw = 2 + p + rng.uniform_below(n - p - 2);
      return {plain_pop(std::move(y), std::move(x), p), Srswor{draw}};
    }
    case 1: {
      const std::size_t max_strata = std::min<std::size_t>(4, n / 3);
      const std::size_t n_strata = 2 + rng.uniform_below(max_strata - 1);
      std::vector<int> stratum(n);
      // Contiguous strata, each at least 3 units.
      std::vector<std::size_t> sizes(n_strata, 3);
      std::size_t rest = n - 3 * n_strata;
      for (std::size_t h = 0; h + 1 < n_strata; ++h) {
        const std::size_t extra = rng.uniform_below(rest + 1);
        sizes[h] += extra;
        rest -= extra;
      }
      sizes[n_strata - 1] += rest;
      StratifiedSrswor st;
      std::size_t at = 0;
      for (std::size_t h = 0; h < n_strata; ++h) {
        for (std::size_t i = 0; i < sizes[h]; ++i) stratum[at + i] = int(h);
        st.n_per_stratum.push_back(2 + rng.uniform_below(sizes[h] - 1));
        at += sizes[h];
      }
      return {strat_pop(std::move(y), std::move(x), p, std::move(stratum)),
              std::move(st)};
    }
    default: {
      const std::size_t n_clusters = 4 + rng.uniform_below(5);
      std::vector<int> cluster(n);
      for (std::size_t i = 0; i < n; ++i)
        cluster[i] = int(i * n_clusters / n);  // contiguous, sizes within 1
      const std::size_t m = 2 + rng.uniform_below(n_clusters - 1);
      return {clust_pop(std::move(y), std::move(x), p, std::move(cluster)),
              ClusterSrswor{m, 0}};
    }
  }
}

}  // namespace svytest
