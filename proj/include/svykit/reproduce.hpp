#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "svykit/montecarlo.hpp"
#include "svykit/population.hpp"
#include "svykit/textutil.hpp"

namespace svykit {

/// Packaged studies on the three synthetic populations. Each builds the
/// population, runs a seeded experiment, and attaches the analytic targets
/// the results should reproduce as report extras.

namespace detail {

inline const ChannelStats& channel_named(const SimulationReport& rep,
                                         const std::string& name) {
  for (const auto& ch : rep.channels)
    if (ch.name == name) return ch;
  throw Error("report has no channel named '" + name + "'");
}

inline const PairStats& pair_named(const SimulationReport& rep,
                                   const std::string& a, const std::string& b) {
  for (const auto& pr : rep.pairs)
    if (pr.a == a && pr.b == b) return pr;
  throw Error("report has no pair (" + a + ", " + b + ")");
}

}  // namespace detail

/// Two-stratum study: y is constant within each stratum, x is y plus noise.
/// The regression coefficient concentrates near 1/(1+sigma^2) while the
/// minimum-variance coefficient is essentially zero, so the recalibrated
/// estimator keeps the zero-variance expansion estimate.
struct Example1Run {
  Example1Params pop{1000, 1.0, true};
  std::size_t n_sampled_per_stratum = 50;
  std::uint64_t replications = 10000;
  std::uint64_t seed = 20240501;
  std::size_t workers = 0;
};

inline SimulationReport reproduce_example1(const Example1Run& run) {
  const Population pop = generate_example1(run.pop, run.seed);

  ExperimentSpec spec;
  spec.design = StratifiedSrswor{{run.n_sampled_per_stratum, run.n_sampled_per_stratum}};
  spec.replications = run.replications;
  spec.seed = run.seed;
  spec.workers = run.workers;
  spec.label = "example1(n_per_stratum=" + std::to_string(run.pop.n_per_stratum) +
               ", sigma=" + format_double17(run.pop.sigma) +
               ", exact_moments=" + (run.pop.exact_moments ? "true" : "false") +
               ", sampled=" + std::to_string(run.n_sampled_per_stratum) +
               ", replications=" + std::to_string(run.replications) + ")";

  EstimatorSpec opt;
  opt.kind = EstimatorSpec::Kind::Optimal;
  EstimatorSpec greg;
  greg.kind = EstimatorSpec::Kind::Greg;
  EstimatorSpec beta_greg;
  beta_greg.kind = EstimatorSpec::Kind::GregBeta;
  EstimatorSpec beta_opt;
  beta_opt.kind = EstimatorSpec::Kind::OptimalBeta;
  EstimatorSpec ht;
  ht.kind = EstimatorSpec::Kind::Ht;
  spec.estimators = {opt, greg, beta_greg, beta_opt, ht};  // pair 0 = (t_opt, t_greg)

  SimulationReport rep = run_experiment(pop, spec);
  const double s2 = run.pop.sigma * run.pop.sigma;
  rep.extras.emplace_back("target_beta_limit", 1.0 / (1.0 + s2));
  return rep;
}

/// Clustered study with a shared component: x = s + e per unit, y = s + g*v,
/// all clusters fully measured. The minimum-variance coefficient
/// K*var_s/(K*var_s + var_eps) beats the regression limit
/// var_s/(var_s + var_eps) because the shared component aggregates over the
/// cluster while the unit noise averages out.
struct Example2Run {
  Example2Params pop{5000, 5, 1.0, 1.0, 1.0, 1.0};
  std::size_t n_sampled_clusters = 200;
  std::uint64_t replications = 10000;
  std::uint64_t seed = 20240502;
  std::size_t workers = 0;
};

/// Variance of the fixed-coefficient estimator per sampled cluster, up to the
/// common design factor (which cancels in ratios).
inline double example2_cluster_variance(const Example2Params& p, double beta) {
  const double K = double(p.cluster_size);
  const double om = 1.0 - beta;
  return K * K * om * om * p.var_s + p.gamma * p.gamma * K * p.var_nu +
         beta * beta * K * p.var_eps;
}

inline double example2_beta_optimal(const Example2Params& p) {
  const double K = double(p.cluster_size);
  return K * p.var_s / (K * p.var_s + p.var_eps);
}

inline double example2_beta_limit(const Example2Params& p) {
  return p.var_s / (p.var_s + p.var_eps);
}

inline SimulationReport reproduce_example2(const Example2Run& run) {
  const Population pop = generate_example2(run.pop, run.seed);
  const double beta_opt_model = example2_beta_optimal(run.pop);
  const double beta_lim_model = example2_beta_limit(run.pop);

  ExperimentSpec spec;
  spec.design = ClusterSrswor{run.n_sampled_clusters, 0};
  spec.replications = run.replications;
  spec.seed = run.seed;
  spec.workers = run.workers;
  spec.label = "example2(clusters=" + std::to_string(run.pop.n_clusters) +
               ", size=" + std::to_string(run.pop.cluster_size) +
               ", var_s=" + format_double17(run.pop.var_s) +
               ", var_eps=" + format_double17(run.pop.var_eps) +
               ", var_nu=" + format_double17(run.pop.var_nu) +
               ", gamma=" + format_double17(run.pop.gamma) +
               ", sampled=" + std::to_string(run.n_sampled_clusters) +
               ", replications=" + std::to_string(run.replications) + ")";

  EstimatorSpec fixed_opt;
  fixed_opt.kind = EstimatorSpec::Kind::FixedBeta;
  fixed_opt.beta = Vector::Constant(1, beta_opt_model);
  fixed_opt.name = "t_fixed_opt";
  EstimatorSpec fixed_lim;
  fixed_lim.kind = EstimatorSpec::Kind::FixedBeta;
  fixed_lim.beta = Vector::Constant(1, beta_lim_model);
  fixed_lim.name = "t_fixed_lim";
  EstimatorSpec opt;
  opt.kind = EstimatorSpec::Kind::Optimal;
  EstimatorSpec greg;
  greg.kind = EstimatorSpec::Kind::Greg;
  EstimatorSpec beta_opt;
  beta_opt.kind = EstimatorSpec::Kind::OptimalBeta;
  EstimatorSpec beta_greg;
  beta_greg.kind = EstimatorSpec::Kind::GregBeta;
  // pair 0 = (t_fixed_opt, t_fixed_lim): the claimed variance reduction.
  spec.estimators = {fixed_opt, fixed_lim, opt, greg, beta_opt, beta_greg};

  SimulationReport rep = run_experiment(pop, spec);
  rep.extras.emplace_back("beta_opt_model", beta_opt_model);
  rep.extras.emplace_back("beta_limit_model", beta_lim_model);
  rep.extras.emplace_back("target_ratio_fixed",
                          example2_cluster_variance(run.pop, beta_opt_model) /
                              example2_cluster_variance(run.pop, beta_lim_model));
  return rep;
}

/// Supersample study: every sampled cluster reports all K x-values but only
/// the measured unit's y. Recalibrating the measured-unit expansion estimate
/// against the within-cluster x contrast removes the share of its variance
/// attributable to within-cluster x variation.
struct Example3Run {
  Example3Params pop{10000, 4, 1.0, 1.0, 0.2, 0.0};
  std::size_t n_draws = 200;
  MeasuredUnit measured = MeasuredUnit::First;
  std::uint64_t replications = 20000;
  std::uint64_t seed = 20240503;
  std::size_t workers = 0;
};

inline SimulationReport reproduce_example3(const Example3Run& run) {
  if (run.n_draws == 0 || run.pop.n_clusters / run.n_draws < 50)
    throw ConfigError("this study needs many more clusters than draws "
                      "(at least 50x)");
  const Population pop = generate_example3(run.pop, run.seed);
  const double K = double(run.pop.cluster_size);
  const double N = double(pop.size());
  const double n = double(run.n_draws);

  ExperimentSpec spec;
  spec.design = NestedCluster{run.n_draws, true, run.measured};
  spec.replications = run.replications;
  spec.seed = run.seed;
  spec.workers = run.workers;
  spec.label = "example3(clusters=" + std::to_string(run.pop.n_clusters) +
               ", size=" + std::to_string(run.pop.cluster_size) +
               ", beta=" + format_double17(run.pop.beta) +
               ", sigma=" + format_double17(run.pop.sigma) +
               ", rho=" + format_double17(run.pop.rho) +
               ", sigma_eps=" + format_double17(run.pop.sigma_eps) +
               ", draws=" + std::to_string(run.n_draws) +
               ", measured=" +
               (run.measured == MeasuredUnit::First ? "first" : "random") +
               ", replications=" + std::to_string(run.replications) + ")";

  EstimatorSpec recal;
  recal.kind = EstimatorSpec::Kind::DeltaFixed;
  // The y-noise is independent of x, so the minimum-variance coefficient for
  // the x contrast equals the model slope regardless of sigma_eps.
  recal.beta = Vector::Constant(1, run.pop.beta);
  recal.name = "t_recal";
  EstimatorSpec y1;
  y1.kind = EstimatorSpec::Kind::HtS1;
  EstimatorSpec dx;
  dx.kind = EstimatorSpec::Kind::DeltaX;
  EstimatorSpec recal_exact;
  recal_exact.kind = EstimatorSpec::Kind::Delta;
  recal_exact.name = "t_recal_exact";
  // pair 0 = (t_recal, t_y1_ht): the claimed variance ratio.
  spec.estimators = {recal, y1, dx, recal_exact};

  SimulationReport rep = run_experiment(pop, spec);
  const double sig2 = run.pop.sigma * run.pop.sigma;
  const double eps2 = run.pop.sigma_eps * run.pop.sigma_eps;
  rep.extras.emplace_back("beta_opt_model", run.pop.beta);
  rep.extras.emplace_back("target_ratio",
                          1.0 - ((K - 1.0) / K) * (1.0 - run.pop.rho));
  rep.extras.emplace_back(
      "target_var_t_y1",
      (N * N / n) * (run.pop.beta * run.pop.beta * sig2 + eps2));
  // The analytic target is a model-level quantity; a single realized
  // population's design variance fluctuates around it with relative standard
  // deviation about sqrt(2/M), which is folded into the comparison scale.
  const ChannelStats& ch = detail::channel_named(rep, "t_y1_ht");
  const double pop_term =
      std::sqrt(2.0 / double(run.pop.n_clusters)) * ch.variance;
  rep.extras.emplace_back(
      "se_var_t_y1_total",
      std::sqrt(ch.se_variance * ch.se_variance + pop_term * pop_term));
  return rep;
}

}  // namespace svykit
