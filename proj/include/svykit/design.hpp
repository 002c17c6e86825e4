#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "svykit/errors.hpp"
#include "svykit/population.hpp"
#include "svykit/rng.hpp"

namespace svykit {

// --- Design kinds ------------------------------------------------------------

/// Simple random sample of n units without replacement.
struct Srswor {
  std::size_t n = 0;
};

/// Independent SRSWOR of n_h units inside each stratum (stratum order =
/// first-appearance label order of the population).
struct StratifiedSrswor {
  std::vector<std::size_t> n_per_stratum;
};

/// SRSWOR of n_clusters clusters; within each sampled cluster either every
/// unit is taken (take_per_cluster == 0) or an SRSWOR of take_per_cluster
/// units is drawn.
struct ClusterSrswor {
  std::size_t n_clusters = 0;
  std::size_t take_per_cluster = 0;  // 0 = take all
};

/// n_draws iid uniform cluster draws with replacement; every unit of a drawn
/// cluster enters the sample once per draw. Estimation uses the per-draw
/// expansion weight M / n_draws; joint inclusion probabilities are undefined.
struct ClusterWr {
  std::size_t n_draws = 0;
};

enum class MeasuredUnit { First, Random };

/// Supersample pair: the outer stage samples clusters (with or without
/// replacement) and measures x on every unit of each drawn cluster (S2);
/// the inner subsample S1 keeps one measured unit per cluster draw, on which
/// y is also observed. S1 instances carry expansion weight
/// (outer cluster weight) * K_c; S2 instances carry the outer cluster weight.
struct NestedCluster {
  std::size_t n_outer = 0;
  bool with_replacement = true;
  MeasuredUnit measured = MeasuredUnit::First;
};

using DesignKind =
    std::variant<Srswor, StratifiedSrswor, ClusterSrswor, ClusterWr, NestedCluster>;

/// Realized sample: unit indices (0-based), ascending; with-replacement
/// samples repeat an index once per draw.
struct Sample {
  std::vector<std::size_t> indices;
  std::size_t size() const noexcept { return indices.size(); }
};

/// Realized supersample pair; s1's instances form a sub-multiset of s2's.
struct NestedSample {
  Sample s1;
  Sample s2;
};

namespace detail {

/// Visits every k-subset of {0..n-1} in lexicographic order.
template <class F>
inline void for_each_combination(std::size_t n, std::size_t k, F&& visit) {
  if (k > n) return;
  std::vector<std::size_t> idx(k);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (;;) {
    visit(static_cast<const std::vector<std::size_t>&>(idx));
    std::size_t i = k;
    bool done = true;
    while (i-- > 0) {
      if (idx[i] < n - k + i) {
        ++idx[i];
        for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
        done = false;
        break;
      }
    }
    if (done) break;
  }
}

/// Binomial coefficient in double; saturates to +inf on overflow. Exact for
/// all values below the enumeration cap range.
inline double binomial_count(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) {
    r = r * double(n - k + i) / double(i);
    if (!std::isfinite(r)) return std::numeric_limits<double>::infinity();
  }
  return r;
}

}  // namespace detail

inline constexpr std::uint64_t kDefaultEnumerationCap = 1000000;

/// A sampling design bound to a population. Immutable after construction;
/// all randomness comes in through the Rng passed to draw calls.
class Design {
 public:
  Design(DesignKind kind, const Population& pop) : kind_(std::move(kind)), pop_(&pop) {
    validate();
  }

  const DesignKind& kind() const noexcept { return kind_; }
  const Population& population() const noexcept { return *pop_; }
  std::size_t population_size() const noexcept { return pop_->size(); }

  bool with_replacement() const noexcept {
    if (std::holds_alternative<ClusterWr>(kind_)) return true;
    if (const auto* nc = std::get_if<NestedCluster>(&kind_)) return nc->with_replacement;
    return false;
  }

  bool is_nested() const noexcept {
    return std::holds_alternative<NestedCluster>(kind_);
  }

  /// Number of unit instances per draw, when the design fixes it.
  std::optional<std::size_t> fixed_instance_count() const {
    if (const auto* s = std::get_if<Srswor>(&kind_)) return s->n;
    if (const auto* st = std::get_if<StratifiedSrswor>(&kind_)) {
      std::size_t total = 0;
      for (std::size_t n_h : st->n_per_stratum) total += n_h;
      return total;
    }
    if (const auto* c = std::get_if<ClusterSrswor>(&kind_)) {
      if (c->take_per_cluster > 0) return c->n_clusters * c->take_per_cluster;
      return equal_cluster_size() ? std::optional<std::size_t>(
                                        c->n_clusters * pop_->cluster_groups()[0].size())
                                  : std::nullopt;
    }
    if (const auto* w = std::get_if<ClusterWr>(&kind_)) {
      return equal_cluster_size() ? std::optional<std::size_t>(
                                        w->n_draws * pop_->cluster_groups()[0].size())
                                  : std::nullopt;
    }
    const auto& nc = std::get<NestedCluster>(kind_);
    return equal_cluster_size() ? std::optional<std::size_t>(
                                      nc.n_outer * pop_->cluster_groups()[0].size())
                                : std::nullopt;
  }

  // --- Inclusion probabilities -----------------------------------------------

  /// First-order inclusion probability. For with-replacement kinds this is
  /// the reciprocal of the per-draw expansion weight (n_draws / M), which is
  /// what 1/pi-style estimators need; it is not a marginal inclusion
  /// probability in the without-replacement sense.
  double pi_first(std::size_t i) const {
    const std::size_t n_pop = pop_->size();
    if (i >= n_pop) throw ArgumentError("unit index out of range");
    if (const auto* s = std::get_if<Srswor>(&kind_))
      return double(s->n) / double(n_pop);
    if (const auto* st = std::get_if<StratifiedSrswor>(&kind_)) {
      const int h = pop_->stratum_of(i);
      return double(st->n_per_stratum[std::size_t(h)]) /
             double(pop_->strata_groups()[std::size_t(h)].size());
    }
    if (const auto* c = std::get_if<ClusterSrswor>(&kind_)) {
      const double pc = double(c->n_clusters) / double(n_clusters());
      if (c->take_per_cluster == 0) return pc;
      const std::size_t kc = cluster_size_of(i);
      return pc * double(c->take_per_cluster) / double(kc);
    }
    if (const auto* w = std::get_if<ClusterWr>(&kind_))
      return double(w->n_draws) / double(n_clusters());
    const auto& nc = std::get<NestedCluster>(kind_);
    return double(nc.n_outer) / double(n_clusters());
  }

  /// Joint inclusion probability, with pi_joint(i, i) == pi_first(i).
  /// Throws UnsupportedError for with-replacement kinds.
  double pi_joint(std::size_t i, std::size_t j) const {
    if (with_replacement() || is_nested())
      throw UnsupportedError(
          "joint inclusion probabilities are undefined for design kind '" +
          kind_name() + "'");
    if (i == j) return pi_first(i);
    const std::size_t n_pop = pop_->size();
    if (i >= n_pop || j >= n_pop) throw ArgumentError("unit index out of range");
    if (const auto* s = std::get_if<Srswor>(&kind_)) {
      const double n = double(s->n), nn = double(n_pop);
      return n * (n - 1.0) / (nn * (nn - 1.0));
    }
    if (const auto* st = std::get_if<StratifiedSrswor>(&kind_)) {
      const int hi = pop_->stratum_of(i), hj = pop_->stratum_of(j);
      if (hi != hj) return pi_first(i) * pi_first(j);
      const double n = double(st->n_per_stratum[std::size_t(hi)]);
      const double nn = double(pop_->strata_groups()[std::size_t(hi)].size());
      return n * (n - 1.0) / (nn * (nn - 1.0));
    }
    const auto& c = std::get<ClusterSrswor>(kind_);
    const double m = double(c.n_clusters), mm = double(n_clusters());
    const int ci = pop_->cluster_of(i), cj = pop_->cluster_of(j);
    if (ci == cj) {
      if (c.take_per_cluster == 0) return m / mm;
      const double t = double(c.take_per_cluster);
      const double kc = double(cluster_size_of(i));
      return (m / mm) * t * (t - 1.0) / (kc * (kc - 1.0));
    }
    const double p_both = m * (m - 1.0) / (mm * (mm - 1.0));
    if (c.take_per_cluster == 0) return p_both;
    const double t = double(c.take_per_cluster);
    return p_both * (t / double(cluster_size_of(i))) * (t / double(cluster_size_of(j)));
  }

  /// True when every pair of population units has positive joint inclusion
  /// probability, i.e. the pi_ij-based covariance machinery is defined.
  bool all_pairs_reachable() const {
    if (with_replacement() || is_nested()) return false;
    if (const auto* s = std::get_if<Srswor>(&kind_))
      return s->n >= 2 || pop_->size() == 1;
    if (const auto* st = std::get_if<StratifiedSrswor>(&kind_)) {
      const auto& groups = pop_->strata_groups();
      for (std::size_t h = 0; h < groups.size(); ++h)
        if (groups[h].size() >= 2 && st->n_per_stratum[h] < 2) return false;
      return true;
    }
    const auto& c = std::get<ClusterSrswor>(kind_);
    if (n_clusters() >= 2 && c.n_clusters < 2) return false;
    if (c.take_per_cluster == 0) return true;
    if (c.take_per_cluster >= 2) return true;
    for (const auto& g : pop_->cluster_groups())
      if (g.size() >= 2) return false;  // within-cluster pairs unreachable
    return true;
  }

  // --- Expansion weights -------------------------------------------------------

  /// Per-instance expansion weight: 1/pi for without-replacement kinds, the
  /// per-draw expansion M/n_draws for with-replacement kinds (S2 convention
  /// for the supersample design).
  double weight(std::size_t i) const { return 1.0 / pi_first(i); }

  /// Supersample S1 instance weight: the measured unit stands in for its
  /// whole cluster, so the S2 weight is scaled up by the cluster size.
  double s1_weight(std::size_t i) const {
    if (!is_nested())
      throw UnsupportedError("s1_weight is defined only for the supersample design");
    return weight(i) * double(cluster_size_of(i));
  }

  double s2_weight(std::size_t i) const {
    if (!is_nested())
      throw UnsupportedError("s2_weight is defined only for the supersample design");
    return weight(i);
  }

  // --- Drawing ----------------------------------------------------------------

  /// Draws one sample (for the supersample design: its S2 part).
  Sample draw(Rng& rng) const {
    Sample s;
    if (const auto* sr = std::get_if<Srswor>(&kind_)) {
      sample_wor(rng, pop_->size(), sr->n, s.indices);
      return s;
    }
    if (const auto* st = std::get_if<StratifiedSrswor>(&kind_)) {
      std::vector<std::size_t> pos;
      for (std::size_t h = 0; h < st->n_per_stratum.size(); ++h) {
        const auto& group = pop_->strata_groups()[h];
        sample_wor(rng, group.size(), st->n_per_stratum[h], pos);
        for (std::size_t p : pos) s.indices.push_back(group[p]);
      }
      std::sort(s.indices.begin(), s.indices.end());
      return s;
    }
    if (const auto* c = std::get_if<ClusterSrswor>(&kind_)) {
      std::vector<std::size_t> picked;
      sample_wor(rng, n_clusters(), c->n_clusters, picked);
      std::vector<std::size_t> pos;
      for (std::size_t cl : picked) {
        const auto& group = pop_->cluster_groups()[cl];
        if (c->take_per_cluster == 0) {
          s.indices.insert(s.indices.end(), group.begin(), group.end());
        } else {
          sample_wor(rng, group.size(), c->take_per_cluster, pos);
          for (std::size_t p : pos) s.indices.push_back(group[p]);
        }
      }
      std::sort(s.indices.begin(), s.indices.end());
      return s;
    }
    if (const auto* w = std::get_if<ClusterWr>(&kind_)) {
      expand_wr_draws(draw_wr_clusters(rng, w->n_draws), s);
      return s;
    }
    const auto& nc = std::get<NestedCluster>(kind_);
    expand_wr_draws(draw_outer_clusters(rng, nc), s);
    return s;
  }

  /// Draws a supersample pair. Cluster draws are consumed first, then (for
  /// the random-measured-unit rule) one unit pick per draw in sorted cluster
  /// order, so the stream layout is deterministic.
  NestedSample draw_nested(Rng& rng) const {
    const auto* nc = std::get_if<NestedCluster>(&kind_);
    if (!nc)
      throw UnsupportedError("draw_nested requires the supersample design kind");
    NestedSample ns;
    const std::vector<std::size_t> draws = draw_outer_clusters(rng, *nc);
    expand_wr_draws(draws, ns.s2);
    for (std::size_t cl : draws) {
      const auto& group = pop_->cluster_groups()[cl];
      if (nc->measured == MeasuredUnit::First) {
        ns.s1.indices.push_back(group.front());
      } else {
        ns.s1.indices.push_back(group[rng.uniform_below(group.size())]);
      }
    }
    std::sort(ns.s1.indices.begin(), ns.s1.indices.end());
    return ns;
  }

  // --- Enumeration --------------------------------------------------------------

  /// Number of distinct samples the enumerator would visit (+inf if it
  /// overflows a double).
  double enumeration_count() const {
    if (const auto* s = std::get_if<Srswor>(&kind_))
      return detail::binomial_count(pop_->size(), s->n);
    if (const auto* st = std::get_if<StratifiedSrswor>(&kind_)) {
      double r = 1.0;
      for (std::size_t h = 0; h < st->n_per_stratum.size(); ++h)
        r *= detail::binomial_count(pop_->strata_groups()[h].size(),
                                    st->n_per_stratum[h]);
      return r;
    }
    if (const auto* c = std::get_if<ClusterSrswor>(&kind_)) {
      double r = detail::binomial_count(n_clusters(), c->n_clusters);
      if (c->take_per_cluster > 0) {
        // Within-cluster choices multiply for every possible cluster subset;
        // all clusters share the count only when sizes are equal, so walk
        // cluster sizes explicitly.
        double per = 1.0;
        // Upper bound: product over the c->n_clusters largest within-counts.
        std::vector<double> withins;
        withins.reserve(pop_->cluster_groups().size());
        for (const auto& g : pop_->cluster_groups())
          withins.push_back(detail::binomial_count(g.size(), c->take_per_cluster));
        std::sort(withins.begin(), withins.end(), std::greater<double>());
        for (std::size_t i = 0; i < c->n_clusters; ++i) per *= withins[i];
        r *= per;
      }
      return r;
    }
    if (const auto* w = std::get_if<ClusterWr>(&kind_))
      return std::pow(double(n_clusters()), double(w->n_draws));
    const auto& nc = std::get<NestedCluster>(kind_);
    const double outer = nc.with_replacement
                             ? std::pow(double(n_clusters()), double(nc.n_outer))
                             : detail::binomial_count(n_clusters(), nc.n_outer);
    return outer;
  }

  /// Exhaustively visits every possible sample with its probability.
  /// Probabilities over a full enumeration sum to one. Throws CapError when
  /// the sample space exceeds cap.
  void enumerate(const std::function<void(const Sample&, double)>& visit,
                 std::uint64_t cap = kDefaultEnumerationCap) const {
    check_cap(cap);
    if (const auto* s = std::get_if<Srswor>(&kind_)) {
      const double prob = 1.0 / detail::binomial_count(pop_->size(), s->n);
      detail::for_each_combination(pop_->size(), s->n,
                                   [&](const std::vector<std::size_t>& idx) {
                                     Sample smp;
                                     smp.indices = idx;
                                     visit(smp, prob);
                                   });
      return;
    }
    if (const auto* st = std::get_if<StratifiedSrswor>(&kind_)) {
      double prob = 1.0;
      for (std::size_t h = 0; h < st->n_per_stratum.size(); ++h)
        prob /= detail::binomial_count(pop_->strata_groups()[h].size(),
                                       st->n_per_stratum[h]);
      std::vector<std::size_t> acc;
      enumerate_strata(0, *st, acc, prob, visit);
      return;
    }
    if (const auto* c = std::get_if<ClusterSrswor>(&kind_)) {
      const double p_clusters =
          1.0 / detail::binomial_count(n_clusters(), c->n_clusters);
      detail::for_each_combination(
          n_clusters(), c->n_clusters, [&](const std::vector<std::size_t>& picked) {
            if (c->take_per_cluster == 0) {
              Sample smp;
              for (std::size_t cl : picked) {
                const auto& g = pop_->cluster_groups()[cl];
                smp.indices.insert(smp.indices.end(), g.begin(), g.end());
              }
              std::sort(smp.indices.begin(), smp.indices.end());
              visit(smp, p_clusters);
            } else {
              std::vector<std::size_t> acc;
              enumerate_within(0, picked, c->take_per_cluster, acc,
                               p_clusters * within_prob(picked, c->take_per_cluster),
                               visit);
            }
          });
      return;
    }
    if (const auto* w = std::get_if<ClusterWr>(&kind_)) {
      std::vector<std::size_t> seq(w->n_draws, 0);
      enumerate_wr_sequences(seq, 0, [&](const std::vector<std::size_t>& draws) {
        Sample smp;
        std::vector<std::size_t> sorted = draws;
        std::sort(sorted.begin(), sorted.end());
        expand_wr_draws(sorted, smp);
        visit(smp, std::pow(double(n_clusters()), -double(w->n_draws)));
      });
      return;
    }
    // Supersample: enumerate the outer stage and emit the S2 part.
    enumerate_nested(
        [&](const NestedSample& ns, double prob) { visit(ns.s2, prob); }, cap);
  }

  /// Exhaustive enumeration of supersample pairs (outer stage, and for the
  /// random-measured-unit rule every choice of measured units).
  void enumerate_nested(const std::function<void(const NestedSample&, double)>& visit,
                        std::uint64_t cap = kDefaultEnumerationCap) const {
    const auto* nc = std::get_if<NestedCluster>(&kind_);
    if (!nc)
      throw UnsupportedError("enumerate_nested requires the supersample design kind");
    double count = enumeration_count();
    if (nc->measured == MeasuredUnit::Random)
      count *= std::pow(double(max_cluster_size()), double(nc->n_outer));
    if (!(count <= double(cap))) throw_cap(count, cap);

    auto emit_measured = [&](const std::vector<std::size_t>& draws, double outer_prob) {
      NestedSample ns;
      expand_wr_draws(draws, ns.s2);
      if (nc->measured == MeasuredUnit::First) {
        for (std::size_t cl : draws)
          ns.s1.indices.push_back(pop_->cluster_groups()[cl].front());
        std::sort(ns.s1.indices.begin(), ns.s1.indices.end());
        visit(ns, outer_prob);
        return;
      }
      // Random rule: product over draws of uniform unit choices.
      std::vector<std::size_t> choice(draws.size(), 0);
      double inner_prob = outer_prob;
      for (std::size_t d : draws)
        inner_prob /= double(pop_->cluster_groups()[d].size());
      for (;;) {
        ns.s1.indices.clear();
        for (std::size_t d = 0; d < draws.size(); ++d)
          ns.s1.indices.push_back(pop_->cluster_groups()[draws[d]][choice[d]]);
        std::sort(ns.s1.indices.begin(), ns.s1.indices.end());
        visit(ns, inner_prob);
        std::size_t d = draws.size();
        bool done = true;
        while (d-- > 0) {
          if (++choice[d] < pop_->cluster_groups()[draws[d]].size()) {
            done = false;
            break;
          }
          choice[d] = 0;
        }
        if (done) break;
      }
    };

    if (nc->with_replacement) {
      std::vector<std::size_t> seq(nc->n_outer, 0);
      const double p = std::pow(double(n_clusters()), -double(nc->n_outer));
      enumerate_wr_sequences(seq, 0, [&](const std::vector<std::size_t>& draws) {
        std::vector<std::size_t> sorted = draws;
        std::sort(sorted.begin(), sorted.end());
        emit_measured(sorted, p);
      });
    } else {
      const double p = 1.0 / detail::binomial_count(n_clusters(), nc->n_outer);
      detail::for_each_combination(n_clusters(), nc->n_outer,
                                   [&](const std::vector<std::size_t>& picked) {
                                     emit_measured(picked, p);
                                   });
    }
  }

  // --- Description ---------------------------------------------------------------

  std::string kind_name() const {
    if (std::holds_alternative<Srswor>(kind_)) return "srswor";
    if (std::holds_alternative<StratifiedSrswor>(kind_)) return "stratified";
    if (std::holds_alternative<ClusterSrswor>(kind_)) return "cluster";
    if (std::holds_alternative<ClusterWr>(kind_)) return "cluster_wr";
    return std::get<NestedCluster>(kind_).with_replacement ? "cluster_wr" : "cluster";
  }

  /// Canonical spec string, parseable by the design grammar.
  std::string describe() const {
    std::ostringstream out;
    if (const auto* s = std::get_if<Srswor>(&kind_)) {
      out << "srswor(n=" << s->n << ")";
    } else if (const auto* st = std::get_if<StratifiedSrswor>(&kind_)) {
      out << "stratified(n=[";
      for (std::size_t h = 0; h < st->n_per_stratum.size(); ++h)
        out << (h ? "," : "") << st->n_per_stratum[h];
      out << "])";
    } else if (const auto* c = std::get_if<ClusterSrswor>(&kind_)) {
      out << "cluster(m=" << c->n_clusters;
      if (c->take_per_cluster > 0) out << ",take=" << c->take_per_cluster;
      out << ")";
    } else if (const auto* w = std::get_if<ClusterWr>(&kind_)) {
      out << "cluster_wr(n=" << w->n_draws << ")";
    } else {
      const auto& nc = std::get<NestedCluster>(kind_);
      out << (nc.with_replacement ? "cluster_wr(n=" : "cluster(m=") << nc.n_outer
          << ",k_measured="
          << (nc.measured == MeasuredUnit::First ? "1" : "random") << ")";
    }
    return out.str();
  }

  std::size_t n_clusters() const { return pop_->cluster_groups().size(); }

  std::size_t cluster_size_of(std::size_t unit) const {
    return pop_->cluster_groups()[std::size_t(pop_->cluster_of(unit))].size();
  }

 private:
  void validate() const {
    const std::size_t n_pop = pop_->size();
    if (const auto* s = std::get_if<Srswor>(&kind_)) {
      if (s->n == 0 || s->n > n_pop)
        throw ConfigError("srswor sample size must lie in 1..N");
      return;
    }
    if (const auto* st = std::get_if<StratifiedSrswor>(&kind_)) {
      if (!pop_->has_strata())
        throw ConfigError("stratified design requires a population with strata");
      const auto& groups = pop_->strata_groups();
      if (st->n_per_stratum.size() != groups.size()) {
        std::ostringstream msg;
        msg << "stratified design lists " << st->n_per_stratum.size()
            << " strata but the population has " << groups.size();
        throw ConfigError(msg.str());
      }
      for (std::size_t h = 0; h < groups.size(); ++h)
        if (st->n_per_stratum[h] == 0 || st->n_per_stratum[h] > groups[h].size())
          throw ConfigError("stratum sample size must lie in 1..N_h (stratum '" +
                            pop_->stratum_labels()[h] + "')");
      return;
    }
    if (!pop_->has_clusters())
      throw ConfigError("cluster designs require a population with clusters");
    if (const auto* c = std::get_if<ClusterSrswor>(&kind_)) {
      if (c->n_clusters == 0 || c->n_clusters > n_clusters())
        throw ConfigError("number of sampled clusters must lie in 1..M");
      if (c->take_per_cluster > 0)
        for (const auto& g : pop_->cluster_groups())
          if (c->take_per_cluster > g.size())
            throw ConfigError("take_per_cluster exceeds a cluster size");
      return;
    }
    if (const auto* w = std::get_if<ClusterWr>(&kind_)) {
      if (w->n_draws == 0) throw ConfigError("number of cluster draws must be positive");
      return;
    }
    const auto& nc = std::get<NestedCluster>(kind_);
    if (nc.n_outer == 0) throw ConfigError("outer sample size must be positive");
    if (!nc.with_replacement && nc.n_outer > n_clusters())
      throw ConfigError("number of sampled clusters must lie in 1..M");
  }

  bool equal_cluster_size() const {
    const auto& groups = pop_->cluster_groups();
    for (const auto& g : groups)
      if (g.size() != groups[0].size()) return false;
    return true;
  }

  std::size_t max_cluster_size() const {
    std::size_t k = 0;
    for (const auto& g : pop_->cluster_groups()) k = std::max(k, g.size());
    return k;
  }

  std::vector<std::size_t> draw_wr_clusters(Rng& rng, std::size_t n_draws) const {
    std::vector<std::size_t> draws(n_draws);
    for (auto& d : draws) d = std::size_t(rng.uniform_below(n_clusters()));
    std::sort(draws.begin(), draws.end());
    return draws;
  }

  std::vector<std::size_t> draw_outer_clusters(Rng& rng, const NestedCluster& nc) const {
    if (nc.with_replacement) return draw_wr_clusters(rng, nc.n_outer);
    std::vector<std::size_t> picked;
    sample_wor(rng, n_clusters(), nc.n_outer, picked);
    return picked;
  }

  void expand_wr_draws(const std::vector<std::size_t>& draws, Sample& s) const {
    for (std::size_t cl : draws) {
      const auto& g = pop_->cluster_groups()[cl];
      s.indices.insert(s.indices.end(), g.begin(), g.end());
    }
    std::sort(s.indices.begin(), s.indices.end());
  }

  void enumerate_strata(std::size_t h, const StratifiedSrswor& st,
                        std::vector<std::size_t>& acc, double prob,
                        const std::function<void(const Sample&, double)>& visit) const {
    if (h == st.n_per_stratum.size()) {
      Sample smp;
      smp.indices = acc;
      std::sort(smp.indices.begin(), smp.indices.end());
      visit(smp, prob);
      return;
    }
    const auto& group = pop_->strata_groups()[h];
    detail::for_each_combination(
        group.size(), st.n_per_stratum[h], [&](const std::vector<std::size_t>& pos) {
          const std::size_t base = acc.size();
          for (std::size_t p : pos) acc.push_back(group[p]);
          enumerate_strata(h + 1, st, acc, prob, visit);
          acc.resize(base);
        });
  }

  double within_prob(const std::vector<std::size_t>& picked, std::size_t take) const {
    double p = 1.0;
    for (std::size_t cl : picked)
      p /= detail::binomial_count(pop_->cluster_groups()[cl].size(), take);
    return p;
  }

  void enumerate_within(std::size_t at, const std::vector<std::size_t>& picked,
                        std::size_t take, std::vector<std::size_t>& acc, double prob,
                        const std::function<void(const Sample&, double)>& visit) const {
    if (at == picked.size()) {
      Sample smp;
      smp.indices = acc;
      std::sort(smp.indices.begin(), smp.indices.end());
      visit(smp, prob);
      return;
    }
    const auto& group = pop_->cluster_groups()[picked[at]];
    detail::for_each_combination(
        group.size(), take, [&](const std::vector<std::size_t>& pos) {
          const std::size_t base = acc.size();
          for (std::size_t p : pos) acc.push_back(group[p]);
          enumerate_within(at + 1, picked, take, acc, prob, visit);
          acc.resize(base);
        });
  }

  template <class F>
  void enumerate_wr_sequences(std::vector<std::size_t>& seq, std::size_t at,
                              F&& emit) const {
    if (at == seq.size()) {
      emit(static_cast<const std::vector<std::size_t>&>(seq));
      return;
    }
    for (std::size_t c = 0; c < n_clusters(); ++c) {
      seq[at] = c;
      enumerate_wr_sequences(seq, at + 1, emit);
    }
  }

  void check_cap(std::uint64_t cap) const {
    const double count = enumeration_count();
    if (!(count <= double(cap))) throw_cap(count, cap);
  }

  [[noreturn]] void throw_cap(double count, std::uint64_t cap) const {
    std::ostringstream msg;
    msg << "enumeration of " << describe() << " would visit about " << count
        << " samples, which exceeds the cap of " << cap;
    throw CapError(msg.str());
  }

  DesignKind kind_;
  const Population* pop_;
};

}  // namespace svykit
