#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "svykit/covariance.hpp"
#include "svykit/design.hpp"
#include "svykit/errors.hpp"
#include "svykit/estimators.hpp"
#include "svykit/population.hpp"
#include "svykit/rng.hpp"
#include "svykit/sums.hpp"
#include "svykit/textutil.hpp"

namespace svykit {

/// One report channel: a scalar statistic evaluated on every replication.
struct EstimatorSpec {
  enum class Kind {
    Ht,             // expansion estimate of the y total
    Greg,           // regression-calibrated estimate
    GregBeta,       // one component of the regression slope
    Optimal,        // minimum-variance recalibrated estimate
    OptimalBeta,    // one component of the estimated optimal coefficient
    FixedBeta,      // t_y_hat - beta' (t_x_hat - known totals), beta given
    TwoSample,      // benchmark totals estimated by an independent sample
    TwoSampleFixed, // two-sample combination with a given beta
    HtS1,           // supersample: measured-unit estimate of the y total
    Delta,          // supersample recalibration, coefficient from exact design cov
    DeltaFixed,     // supersample recalibration with a given beta
    DeltaX,         // one component of the supersample x-total difference
  };
  Kind kind = Kind::Ht;
  double c = std::numeric_limits<double>::quiet_NaN();  // pair-sum constant
  std::vector<double> q;                                // regression weights
  Vector beta;                                          // fixed coefficients
  std::size_t component = 0;                            // for *Beta / DeltaX
  std::string name;                                     // channel label
};

struct ExperimentSpec {
  enum class Mode { MonteCarlo, Enumerate };
  DesignKind design;
  std::optional<DesignKind> design2;  // second, independent sample's design
  std::vector<EstimatorSpec> estimators;
  std::optional<Vector> known_t_x;  // benchmark totals; default: true totals
  std::uint64_t replications = 0;
  std::uint64_t seed = 0;
  Mode mode = Mode::MonteCarlo;
  std::size_t workers = 0;  // 0 = hardware concurrency
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  std::string label;  // canonical description, fingerprinted into the report
};

struct ChannelStats {
  std::string name;
  double mean = 0.0;
  double variance = 0.0;  // population-style divisor (one over row count)
  double mse = 0.0;       // against the true y total
  double se_mean = 0.0;
  double se_variance = 0.0;
};

struct PairStats {
  std::string a, b;
  double covariance = 0.0;
  double variance_ratio = 0.0;  // variance(a) / variance(b)
  double ratio_se = 0.0;        // delta method on the log scale
};

struct SimulationReport {
  std::string mode;
  std::uint64_t seed = 0;
  std::uint64_t replications = 0;  // requested rows (or enumerated samples)
  std::uint64_t used = 0;          // rows entering the moments
  std::uint64_t spec_hash = 0;
  std::string label;
  double t_y_target = 0.0;
  std::vector<ChannelStats> channels;
  std::vector<PairStats> pairs;
  std::vector<std::pair<std::string, std::uint64_t>> failures;  // kind -> count
  std::vector<std::pair<std::string, double>> extras;  // analytic targets etc.
};

/// Raw per-replication values, one row per replication (or enumerated
/// sample). Failed Monte Carlo rows hold NaN in every channel. Enumeration
/// rows carry probability weights.
struct ValueTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // [channel][row]
  std::vector<double> weights;              // empty for Monte Carlo rows
  std::vector<std::pair<std::string, std::uint64_t>> failures;
  std::uint64_t requested = 0;
};

namespace detail {

inline std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const RankError*>(&e)) return "rank_error";
  if (dynamic_cast<const SupportError*>(&e)) return "support_error";
  if (dynamic_cast<const UnsupportedError*>(&e)) return "unsupported_operation";
  if (dynamic_cast<const CapError*>(&e)) return "cap_exceeded";
  if (dynamic_cast<const ArgumentError*>(&e)) return "argument_error";
  if (dynamic_cast<const Error*>(&e)) return "error";
  return "unexpected";
}

inline std::string default_channel_name(const EstimatorSpec& s, std::size_t dim) {
  using Kind = EstimatorSpec::Kind;
  std::string base;
  switch (s.kind) {
    case Kind::Ht: base = "t_ht"; break;
    case Kind::Greg: base = "t_greg"; break;
    case Kind::GregBeta: base = "beta_greg"; break;
    case Kind::Optimal: base = "t_opt"; break;
    case Kind::OptimalBeta: base = "beta_opt"; break;
    case Kind::FixedBeta: base = "t_fixed"; break;
    case Kind::TwoSample: base = "t_two"; break;
    case Kind::TwoSampleFixed: base = "t_two_fixed"; break;
    case Kind::HtS1: base = "t_y1_ht"; break;
    case Kind::Delta: base = "t_delta"; break;
    case Kind::DeltaFixed: base = "t_delta_fixed"; break;
    case Kind::DeltaX: base = "delta_x"; break;
  }
  const bool per_component = s.kind == Kind::GregBeta ||
                             s.kind == Kind::OptimalBeta ||
                             s.kind == Kind::DeltaX;
  if (per_component && dim > 1) base += std::to_string(s.component + 1);
  return base;
}

/// Validated, bound form of an ExperimentSpec.
struct ExperimentContext {
  const Population* pop = nullptr;
  std::optional<Design> design;
  std::optional<Design> design2;
  std::vector<EstimatorSpec> estimators;  // names resolved, parameters checked
  Vector known_t_x;
  Vector delta_beta;  // for Kind::Delta, from the exact supersample covariance
  bool nested = false;
};

inline ExperimentContext bind_experiment(const Population& pop,
                                         const ExperimentSpec& spec) {
  using Kind = EstimatorSpec::Kind;
  ExperimentContext ctx;
  ctx.pop = &pop;
  ctx.design.emplace(spec.design, pop);
  ctx.nested = ctx.design->is_nested();
  if (spec.design2) {
    if (ctx.nested)
      throw ConfigError("a second sample cannot be combined with the "
                        "supersample design");
    ctx.design2.emplace(*spec.design2, pop);
    if (ctx.design2->is_nested())
      throw ConfigError("the second sample's design must not be the "
                        "supersample kind");
  }
  const Eigen::Index p = Eigen::Index(pop.dim());
  ctx.known_t_x = spec.known_t_x ? *spec.known_t_x : pop.t_x();
  if (ctx.known_t_x.size() != p)
    throw ConfigError("benchmark totals have the wrong dimension");
  if (spec.estimators.empty()) throw ConfigError("no estimators requested");

  bool need_delta_beta = false;
  ctx.estimators = spec.estimators;
  std::vector<std::string> seen;
  for (auto& est : ctx.estimators) {
    const bool is_nested_kind = est.kind == Kind::HtS1 || est.kind == Kind::Delta ||
                                est.kind == Kind::DeltaFixed ||
                                est.kind == Kind::DeltaX;
    const bool is_two_sample =
        est.kind == Kind::TwoSample || est.kind == Kind::TwoSampleFixed;
    if (is_nested_kind != ctx.nested)
      throw ConfigError(
          "estimator/design mismatch: supersample estimators require the "
          "supersample design and vice versa");
    if (is_two_sample && !ctx.design2)
      throw ConfigError("two-sample estimators need a second design");
    if ((est.kind == Kind::FixedBeta || est.kind == Kind::TwoSampleFixed ||
         est.kind == Kind::DeltaFixed) &&
        est.beta.size() != p)
      throw ConfigError("fixed coefficient has the wrong dimension");
    if ((est.kind == Kind::GregBeta || est.kind == Kind::OptimalBeta ||
         est.kind == Kind::DeltaX) &&
        est.component >= pop.dim())
      throw ConfigError("coefficient component index out of range");
    if (!est.q.empty() && est.q.size() != pop.size())
      throw ConfigError("regression weight vector must have one entry per "
                        "population unit");
    if (est.kind == Kind::Delta) need_delta_beta = true;
    if (est.name.empty()) est.name = default_channel_name(est, pop.dim());
    for (const auto& other : seen)
      if (other == est.name)
        throw ConfigError("duplicate channel name '" + est.name + "'");
    seen.push_back(est.name);
  }
  if (need_delta_beta) ctx.delta_beta = delta_beta_exact(*ctx.design);
  return ctx;
}

/// Evaluates every channel on one realized draw (plain, paired, or nested).
struct DrawData {
  const Sample* s1 = nullptr;
  const Sample* s2 = nullptr;
  const NestedSample* ns = nullptr;
};

inline void evaluate_row(const ExperimentContext& ctx, const DrawData& draw,
                         double* out) {
  using Kind = EstimatorSpec::Kind;
  for (std::size_t e = 0; e < ctx.estimators.size(); ++e) {
    const EstimatorSpec& est = ctx.estimators[e];
    switch (est.kind) {
      case Kind::Ht:
        out[e] = ht_totals(*ctx.design, *draw.s1).y;
        break;
      case Kind::Greg: {
        GregOptions opt;
        opt.q = est.q;
        out[e] = greg(*ctx.design, *draw.s1, ctx.known_t_x, opt).estimate;
        break;
      }
      case Kind::GregBeta: {
        GregOptions opt;
        opt.q = est.q;
        out[e] = greg(*ctx.design, *draw.s1, ctx.known_t_x, opt)
                     .beta[Eigen::Index(est.component)];
        break;
      }
      case Kind::Optimal: {
        RecalOptions opt;
        opt.c = est.c;
        out[e] = optimal_recal(*ctx.design, *draw.s1, ctx.known_t_x, opt).estimate;
        break;
      }
      case Kind::OptimalBeta: {
        RecalOptions opt;
        opt.c = est.c;
        out[e] = optimal_recal(*ctx.design, *draw.s1, ctx.known_t_x, opt)
                     .beta[Eigen::Index(est.component)];
        break;
      }
      case Kind::FixedBeta: {
        const Totals tot = ht_totals(*ctx.design, *draw.s1);
        out[e] = recal_combine(tot.y, tot.x, ctx.known_t_x, est.beta);
        break;
      }
      case Kind::TwoSample: {
        RecalOptions o1, o2;
        o1.c = est.c;
        o2.c = est.c;
        out[e] = two_sample_recal(*ctx.design, *draw.s1, *ctx.design2, *draw.s2,
                                  o1, o2)
                     .estimate;
        break;
      }
      case Kind::TwoSampleFixed: {
        const Totals t1 = ht_totals(*ctx.design, *draw.s1);
        const Totals t2 = ht_totals(*ctx.design2, *draw.s2);
        out[e] = recal_combine(t1.y, t1.x, t2.x, est.beta);
        break;
      }
      case Kind::HtS1:
        out[e] = nested_totals(*ctx.design, *draw.ns).s1.y;
        break;
      case Kind::Delta:
        out[e] = delta_recal(*ctx.design, *draw.ns, ctx.delta_beta).estimate;
        break;
      case Kind::DeltaFixed:
        out[e] = delta_recal(*ctx.design, *draw.ns, est.beta).estimate;
        break;
      case Kind::DeltaX: {
        const NestedTotals nt = nested_totals(*ctx.design, *draw.ns);
        out[e] = nt.s1.x[Eigen::Index(est.component)] -
                 nt.s2.x[Eigen::Index(est.component)];
        break;
      }
    }
  }
}

}  // namespace detail

/// Runs replications [rep_begin, rep_end) of the experiment, one independent
/// RNG stream per replication index, partitioned across worker threads.
/// Results are a pure function of (spec, rep index): the worker count only
/// changes wall time.
inline ValueTable run_replications(const Population& pop, const ExperimentSpec& spec,
                                   std::uint64_t rep_begin, std::uint64_t rep_end) {
  if (rep_end < rep_begin) throw ArgumentError("replication range is reversed");
  const detail::ExperimentContext ctx = detail::bind_experiment(pop, spec);
  const std::uint64_t rows = rep_end - rep_begin;
  const std::size_t k = ctx.estimators.size();

  ValueTable table;
  table.requested = rows;
  table.names.reserve(k);
  for (const auto& est : ctx.estimators) table.names.push_back(est.name);
  table.values.assign(k, std::vector<double>(rows, 0.0));

  std::size_t workers = spec.workers ? spec.workers
                                     : std::max(1u, std::thread::hardware_concurrency());
  workers = std::size_t(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(rows, 1)));

  std::vector<std::map<std::string, std::uint64_t>> worker_failures(workers);
  auto run_block = [&](std::size_t w, std::uint64_t lo, std::uint64_t hi) {
    std::vector<double> row(k);
    for (std::uint64_t r = lo; r < hi; ++r) {
      Rng rng = Rng::stream(spec.seed, /*domain=*/1, rep_begin + r);
      bool ok = true;
      try {
        detail::DrawData draw;
        if (ctx.nested) {
          const NestedSample ns = ctx.design->draw_nested(rng);
          draw.ns = &ns;
          detail::evaluate_row(ctx, draw, row.data());
        } else if (ctx.design2) {
          const Sample s1 = ctx.design->draw(rng);
          const Sample s2 = ctx.design2->draw(rng);
          draw.s1 = &s1;
          draw.s2 = &s2;
          detail::evaluate_row(ctx, draw, row.data());
        } else {
          const Sample s1 = ctx.design->draw(rng);
          draw.s1 = &s1;
          detail::evaluate_row(ctx, draw, row.data());
        }
      } catch (const std::exception& e) {
        ++worker_failures[w][detail::error_kind(e)];
        ok = false;
      }
      for (std::size_t ch = 0; ch < k; ++ch)
        table.values[ch][r] = ok ? row[ch]
                                 : std::numeric_limits<double>::quiet_NaN();
    }
  };

  if (workers <= 1) {
    run_block(0, 0, rows);
  } else {
    const std::uint64_t chunk = (rows + workers - 1) / workers;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::uint64_t lo = std::min<std::uint64_t>(w * chunk, rows);
      const std::uint64_t hi = std::min<std::uint64_t>(lo + chunk, rows);
      if (lo == hi) break;
      pool.emplace_back(run_block, w, lo, hi);
    }
    for (auto& t : pool) t.join();
  }

  std::map<std::string, std::uint64_t> merged;
  for (const auto& wf : worker_failures)
    for (const auto& [kind, count] : wf) merged[kind] += count;
  table.failures.assign(merged.begin(), merged.end());
  return table;
}

/// Exhaustive version: one row per possible sample, weighted by its
/// probability. Any estimator failure aborts (an oracle must be exact).
inline ValueTable run_enumeration(const Population& pop, const ExperimentSpec& spec) {
  const detail::ExperimentContext ctx = detail::bind_experiment(pop, spec);
  const std::size_t k = ctx.estimators.size();
  ValueTable table;
  for (const auto& est : ctx.estimators) table.names.push_back(est.name);
  table.values.assign(k, {});
  std::vector<double> row(k);

  auto push_row = [&](double prob) {
    for (std::size_t ch = 0; ch < k; ++ch) table.values[ch].push_back(row[ch]);
    table.weights.push_back(prob);
  };

  if (ctx.nested) {
    ctx.design->enumerate_nested(
        [&](const NestedSample& ns, double prob) {
          detail::DrawData draw;
          draw.ns = &ns;
          detail::evaluate_row(ctx, draw, row.data());
          push_row(prob);
        },
        spec.enumeration_cap);
  } else if (ctx.design2) {
    const double count =
        ctx.design->enumeration_count() * ctx.design2->enumeration_count();
    if (!(count <= double(spec.enumeration_cap))) {
      std::ostringstream msg;
      msg << "joint enumeration of both samples would visit about " << count
          << " sample pairs, which exceeds the cap of " << spec.enumeration_cap;
      throw CapError(msg.str());
    }
    ctx.design->enumerate(
        [&](const Sample& s1, double p1) {
          ctx.design2->enumerate(
              [&](const Sample& s2, double p2) {
                detail::DrawData draw;
                draw.s1 = &s1;
                draw.s2 = &s2;
                detail::evaluate_row(ctx, draw, row.data());
                push_row(p1 * p2);
              },
              spec.enumeration_cap);
        },
        spec.enumeration_cap);
  } else {
    ctx.design->enumerate(
        [&](const Sample& s1, double prob) {
          detail::DrawData draw;
          draw.s1 = &s1;
          detail::evaluate_row(ctx, draw, row.data());
          push_row(prob);
        },
        spec.enumeration_cap);
  }
  table.requested = table.weights.size();
  return table;
}

/// Concatenates two tables produced from disjoint replication ranges of the
/// same spec. Pooled moments of the result equal a single longer run's.
inline ValueTable merge_tables(const ValueTable& a, const ValueTable& b) {
  if (a.names != b.names)
    throw ArgumentError("cannot merge value tables with different channels");
  if (a.weights.empty() != b.weights.empty())
    throw ArgumentError("cannot merge weighted and unweighted tables");
  ValueTable out;
  out.names = a.names;
  out.requested = a.requested + b.requested;
  out.values.resize(a.values.size());
  for (std::size_t ch = 0; ch < a.values.size(); ++ch) {
    out.values[ch] = a.values[ch];
    out.values[ch].insert(out.values[ch].end(), b.values[ch].begin(),
                          b.values[ch].end());
  }
  out.weights = a.weights;
  out.weights.insert(out.weights.end(), b.weights.begin(), b.weights.end());
  std::map<std::string, std::uint64_t> merged(a.failures.begin(), a.failures.end());
  for (const auto& [kind, count] : b.failures) merged[kind] += count;
  out.failures.assign(merged.begin(), merged.end());
  return out;
}

/// Reduces a value table to report statistics. Monte Carlo rows use
/// equal weights with NaN rows excluded; enumeration rows use their
/// probabilities and report zero Monte Carlo error.
inline SimulationReport summarize(const Population& pop, const ExperimentSpec& spec,
                                  const ValueTable& table) {
  const std::size_t k = table.names.size();
  const std::size_t rows = k ? table.values[0].size() : 0;
  const bool exact = !table.weights.empty();

  std::uint64_t failed = 0;
  for (const auto& [kind, count] : table.failures) failed += count;
  if (failed * 100 > table.requested) {
    std::ostringstream msg;
    msg << "experiment aborted: " << failed << " of " << table.requested
        << " replications failed (limit 1%);";
    for (const auto& [kind, count] : table.failures)
      msg << " " << kind << "=" << count;
    throw Error(msg.str());
  }

  // Row usability mask: a Monte Carlo row is used when all channels are
  // finite (failed rows are NaN across the board by construction).
  std::vector<char> use(rows, 1);
  if (!exact) {
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t ch = 0; ch < k; ++ch)
        if (!std::isfinite(table.values[ch][r])) {
          use[r] = 0;
          break;
        }
  }
  double wsum = 0.0;
  {
    KahanSum s;
    for (std::size_t r = 0; r < rows; ++r)
      if (use[r]) s.add(exact ? table.weights[r] : 1.0);
    wsum = s.value();
  }

  SimulationReport rep;
  rep.mode = exact ? "enumerate" : "montecarlo";
  rep.seed = spec.seed;
  rep.replications = table.requested;
  rep.used = std::uint64_t(exact ? rows : std::llround(wsum));
  rep.spec_hash = fnv1a64(spec.label);
  rep.label = spec.label;
  rep.t_y_target = pop.t_y();
  rep.failures = table.failures;
  if (rows == 0 || !(wsum > 0.0))
    throw Error("experiment produced no usable replications");

  auto weight_of = [&](std::size_t r) { return exact ? table.weights[r] : 1.0; };

  std::vector<double> means(k), m2(k), m4(k);
  for (std::size_t ch = 0; ch < k; ++ch) {
    KahanSum sm;
    for (std::size_t r = 0; r < rows; ++r)
      if (use[r]) sm.add(weight_of(r) * table.values[ch][r]);
    means[ch] = sm.value() / wsum;
    KahanSum s2, s4;
    for (std::size_t r = 0; r < rows; ++r) {
      if (!use[r]) continue;
      const double d = table.values[ch][r] - means[ch];
      s2.add(weight_of(r) * d * d);
      s4.add(weight_of(r) * d * d * d * d);
    }
    m2[ch] = s2.value() / wsum;
    m4[ch] = s4.value() / wsum;

    ChannelStats cs;
    cs.name = table.names[ch];
    cs.mean = means[ch];
    cs.variance = m2[ch];
    const double bias = means[ch] - pop.t_y();
    cs.mse = m2[ch] + bias * bias;
    if (!exact) {
      cs.se_mean = std::sqrt(m2[ch] / wsum);
      cs.se_variance = std::sqrt(std::max(m4[ch] - m2[ch] * m2[ch], 0.0) / wsum);
    }
    rep.channels.push_back(std::move(cs));
  }

  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      PairStats ps;
      ps.a = table.names[a];
      ps.b = table.names[b];
      KahanSum sc, s22;
      for (std::size_t r = 0; r < rows; ++r) {
        if (!use[r]) continue;
        const double da = table.values[a][r] - means[a];
        const double db = table.values[b][r] - means[b];
        sc.add(weight_of(r) * da * db);
        s22.add(weight_of(r) * da * da * db * db);
      }
      ps.covariance = sc.value() / wsum;
      ps.variance_ratio = m2[a] / m2[b];
      if (!exact && m2[a] > 0.0 && m2[b] > 0.0) {
        const double va = (m4[a] - m2[a] * m2[a]) / (m2[a] * m2[a]);
        const double vb = (m4[b] - m2[b] * m2[b]) / (m2[b] * m2[b]);
        const double m22 = s22.value() / wsum;
        const double cab = (m22 - m2[a] * m2[b]) / (m2[a] * m2[b]);
        const double vlog = std::max(va + vb - 2.0 * cab, 0.0) / wsum;
        ps.ratio_se = ps.variance_ratio * std::sqrt(vlog);
      }
      rep.pairs.push_back(std::move(ps));
    }
  }
  return rep;
}

/// Exact moments of a scalar sample statistic by total-probability summation.
struct OracleMoments {
  double mean = 0.0;
  double variance = 0.0;
};

template <class F>
OracleMoments enumeration_oracle(const Design& design, F&& statistic,
                                 std::uint64_t cap = kDefaultEnumerationCap) {
  std::vector<double> vals, probs;
  design.enumerate(
      [&](const Sample& s, double prob) {
        vals.push_back(statistic(s));
        probs.push_back(prob);
      },
      cap);
  KahanSum sw, sm;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    sw.add(probs[i]);
    sm.add(probs[i] * vals[i]);
  }
  OracleMoments out;
  out.mean = sm.value() / sw.value();
  KahanSum sv;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const double d = vals[i] - out.mean;
    sv.add(probs[i] * d * d);
  }
  out.variance = sv.value() / sw.value();
  return out;
}

/// Vector-statistic version: exact mean vector and covariance matrix.
struct OracleVecMoments {
  Vector mean;
  Matrix covariance;
};

template <class F>
OracleVecMoments enumeration_oracle_vec(const Design& design, F&& statistic,
                                        std::uint64_t cap = kDefaultEnumerationCap) {
  std::vector<Vector> vals;
  std::vector<double> probs;
  design.enumerate(
      [&](const Sample& s, double prob) {
        vals.push_back(statistic(s));
        probs.push_back(prob);
      },
      cap);
  if (vals.empty()) throw Error("enumeration produced no samples");
  const Eigen::Index p = vals.front().size();
  KahanSum sw;
  KahanVec sm(p);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (vals[i].size() != p)
      throw ArgumentError("statistic returned vectors of differing length");
    sw.add(probs[i]);
    sm.add_scaled(vals[i], probs[i]);
  }
  OracleVecMoments out;
  out.mean = sm.value() / sw.value();
  out.covariance = Matrix::Zero(p, p);
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const Vector d = vals[i] - out.mean;
    out.covariance += probs[i] * (d * d.transpose());
  }
  out.covariance /= sw.value();
  return out;
}

/// End-to-end experiment: bind, run (or enumerate), summarize.
inline SimulationReport run_experiment(const Population& pop,
                                       const ExperimentSpec& spec) {
  if (spec.mode == ExperimentSpec::Mode::Enumerate)
    return summarize(pop, spec, run_enumeration(pop, spec));
  if (spec.replications < 2)
    throw ConfigError("Monte Carlo mode needs at least 2 replications");
  return summarize(pop, spec, run_replications(pop, spec, 0, spec.replications));
}

}  // namespace svykit
