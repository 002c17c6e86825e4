#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <svykit/svykit.hpp>

namespace {

using namespace svykit;

// ---------------------------------------------------------------------------
// Shared plumbing

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw ConfigError("cannot open output file: " + out_path);
  out << text;
}

std::uint64_t enumeration_cap_from_env() {
  const char* raw = std::getenv("SVYKIT_ENUM_CAP");
  if (!raw) return kDefaultEnumerationCap;
  double v = 0.0;
  if (!svykit::detail::parse_number(raw, v) || v < 1.0)
    throw ConfigError("SVYKIT_ENUM_CAP must be a positive number");
  return std::uint64_t(v);
}

struct InputArgs {
  std::string input_path;
  std::string generator;
  std::string y_col = "y";
  std::vector<std::string> x_cols;
  std::string stratum_col = "stratum";
  std::string cluster_col = "cluster";
};

void add_input_options(CLI::App* cmd, InputArgs& in) {
  cmd->add_option("--input", in.input_path, "population CSV (header: y,x1..xp[,stratum][,cluster])");
  cmd->add_option("--generate", in.generator,
                  "synthetic population spec: example1(n=..,sigma=..,exact=true|false), "
                  "example2(clusters=..,size=..,var_s=..,var_eps=..,var_nu=..,gamma=..), "
                  "example3(clusters=..,size=..,beta=..,sigma=..,rho=..,sigma_eps=..)");
  cmd->add_option("--y-col", in.y_col, "y column name");
  cmd->add_option("--x-cols", in.x_cols, "x column names (default: x1..xp)")->delimiter(',');
  cmd->add_option("--stratum-col", in.stratum_col, "stratum column name");
  cmd->add_option("--cluster-col", in.cluster_col, "cluster column name");
}

double generator_number(const svykit::detail::Call& call, const char* key,
                        double dflt) {
  const svykit::detail::CallArg* a = svykit::detail::find_arg(call, key);
  if (!a) return dflt;
  if (!a->is_number)
    throw ParseError("argument '" + std::string(key) + "' of '" + call.name +
                     "' must be a number");
  return a->number;
}

std::size_t generator_count(const svykit::detail::Call& call, const char* key,
                            std::size_t dflt) {
  if (!svykit::detail::find_arg(call, key)) return dflt;
  return svykit::detail::require_count(call, key);
}

Population generate_population(const std::string& spec, std::uint64_t seed) {
  const auto call = svykit::detail::parse_call(spec);
  if (call.name == "example1") {
    svykit::detail::reject_unknown_args(call, {"n", "sigma", "exact"});
    Example1Params p;
    p.n_per_stratum = generator_count(call, "n", p.n_per_stratum);
    p.sigma = generator_number(call, "sigma", p.sigma);
    if (const auto* a = svykit::detail::find_arg(call, "exact")) {
      if (a->word != "true" && a->word != "false")
        throw ParseError("argument 'exact' must be true or false");
      p.exact_moments = a->word == "true";
    }
    return generate_example1(p, seed);
  }
  if (call.name == "example2") {
    svykit::detail::reject_unknown_args(
        call, {"clusters", "size", "var_s", "var_eps", "var_nu", "gamma"});
    Example2Params p;
    p.n_clusters = generator_count(call, "clusters", p.n_clusters);
    p.cluster_size = generator_count(call, "size", p.cluster_size);
    p.var_s = generator_number(call, "var_s", p.var_s);
    p.var_eps = generator_number(call, "var_eps", p.var_eps);
    p.var_nu = generator_number(call, "var_nu", p.var_nu);
    p.gamma = generator_number(call, "gamma", p.gamma);
    return generate_example2(p, seed);
  }
  if (call.name == "example3") {
    svykit::detail::reject_unknown_args(
        call, {"clusters", "size", "beta", "sigma", "rho", "sigma_eps"});
    Example3Params p;
    p.n_clusters = generator_count(call, "clusters", p.n_clusters);
    p.cluster_size = generator_count(call, "size", p.cluster_size);
    p.beta = generator_number(call, "beta", p.beta);
    p.sigma = generator_number(call, "sigma", p.sigma);
    p.rho = generator_number(call, "rho", p.rho);
    p.sigma_eps = generator_number(call, "sigma_eps", p.sigma_eps);
    return generate_example3(p, seed);
  }
  throw ParseError("generator '" + call.name +
                   "' is not recognized; expected example1, example2, or example3");
}

Population load_input(const InputArgs& in, std::uint64_t seed) {
  const bool have_file = !in.input_path.empty();
  const bool have_gen = !in.generator.empty();
  if (have_file == have_gen)
    throw ConfigError("exactly one of --input or --generate is required");
  if (have_gen) return generate_population(in.generator, seed);
  CsvSchema schema;
  schema.y = in.y_col;
  schema.x = in.x_cols;
  schema.stratum = in.stratum_col;
  schema.cluster = in.cluster_col;
  return load_population(in.input_path, schema);
}

Vector resolve_known_tx(const Population& pop, const std::vector<double>& flag) {
  if (flag.empty()) return pop.t_x();
  if (flag.size() != pop.dim())
    throw ConfigError("--known-tx needs exactly one value per x column");
  return Eigen::Map<const Vector>(flag.data(), Eigen::Index(flag.size()));
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
  InputArgs in;
  std::string design_str;
  std::string sample_ids_path;
  std::vector<double> known_tx;
  double c = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t seed = 1;
  bool emit_weights = false;
  std::string format = "json";
  std::string out;
};

void validate_provided_sample(const Design& design, const Sample& s);

Sample read_sample_ids(const std::string& path, const Design& design) {
  if (design.with_replacement() || design.is_nested())
    throw ConfigError("sample-id files are only supported for "
                      "without-replacement single-phase designs");
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sample-id file: " + path);
  const Population& pop = design.population();
  Sample s;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    double v = 0.0;
    if (!svykit::detail::parse_number(line, v) || v < 1.0 ||
        v != std::floor(v) || v > double(pop.size()))
      throw ConfigError("sample-id file line " + std::to_string(line_no) +
                        ": expected a unit id between 1 and " +
                        std::to_string(pop.size()));
    s.indices.push_back(std::size_t(v) - 1);
  }
  std::sort(s.indices.begin(), s.indices.end());
  if (std::adjacent_find(s.indices.begin(), s.indices.end()) != s.indices.end())
    throw ConfigError("sample-id file contains a duplicate unit id");
  validate_provided_sample(design, s);
  return s;
}

void cmd_estimate(const EstimateArgs& args) {
  const Population pop = load_input(args.in, args.seed);
  const Design design(parse_design(args.design_str), pop);
  if (design.is_nested())
    throw UnsupportedError("the estimate command handles single-phase designs; "
                           "use simulate for k_measured designs");
  Sample s;
  if (args.sample_ids_path.empty()) {
    Rng rng = Rng::stream(args.seed, 1, 0);
    s = design.draw(rng);
  } else {
    s = read_sample_ids(args.sample_ids_path, design);
  }
  const Vector known = resolve_known_tx(pop, args.known_tx);
  const double c_used = std::isnan(args.c) ? recommended_c(design) : args.c;

  const Totals ht = ht_totals(design, s);
  const GregResult gr = greg(design, s, known, GregOptions{});
  RecalOptions ro;
  ro.c = args.c;
  const RecalResult opt = optimal_recal(design, s, known, ro);

  std::optional<OptimalWeightsResult> ow;
  double greg_cal_err = 0.0, opt_cal_err = 0.0;
  if (args.emit_weights) {
    RecalOptions wo;
    wo.c = args.c;
    ow = optimal_weights(design, s, known, wo);
    // Calibration self-checks, scaled by the expansion-weighted magnitude of
    // the covariates involved.
    const Vector center = known / double(pop.size());
    Vector greg_res = -known, opt_res = Vector::Zero(Eigen::Index(pop.dim()));
    Vector scale_raw = Vector::Zero(Eigen::Index(pop.dim()));
    Vector scale_cen = Vector::Zero(Eigen::Index(pop.dim()));
    for (std::size_t k = 0; k < s.indices.size(); ++k) {
      const std::size_t i = s.indices[k];
      greg_res += gr.weights[k] * pop.x_row(i);
      opt_res += ow->weights[k] * (pop.x_row(i) - center);
      scale_raw += design.weight(i) * pop.x_row(i).cwiseAbs();
      scale_cen += design.weight(i) * (pop.x_row(i) - center).cwiseAbs();
    }
    for (Eigen::Index j = 0; j < greg_res.size(); ++j) {
      const double sr = std::max({1.0, scale_raw[j], std::abs(known[j])});
      const double sc = std::max(1.0, scale_cen[j]);
      greg_cal_err = std::max(greg_cal_err, std::abs(greg_res[j]) / sr);
      opt_cal_err = std::max(opt_cal_err, std::abs(opt_res[j]) / sc);
    }
  }

  if (args.format == "json") {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "estimate";
    j["design"] = design.describe();
    j["seed"] = args.seed;
    j["population"] = {{"size", pop.size()}, {"t_y", pop.t_y()}};
    j["population"]["t_x"] = std::vector<double>(pop.t_x().begin(), pop.t_x().end());
    j["known_t_x"] = std::vector<double>(known.begin(), known.end());
    j["sample"] = nlohmann::json::object();
    j["sample"]["size"] = s.size();
    auto ids = nlohmann::json::array();
    for (std::size_t i : s.indices) ids.push_back(pop.unit(i).id);
    j["sample"]["ids"] = std::move(ids);
    j["estimates"] = {{"t_ht", ht.y},
                      {"t_greg", gr.estimate},
                      {"t_opt", opt.estimate},
                      {"c", c_used}};
    j["estimates"]["beta_greg"] =
        std::vector<double>(gr.beta.begin(), gr.beta.end());
    j["estimates"]["beta_opt"] =
        std::vector<double>(opt.beta.begin(), opt.beta.end());
    j["diagnostics"] = {{"greg_condition", gr.info.cond},
                        {"cov_null_dim", opt.info.null_dim}};
    if (ow) {
      auto rows = nlohmann::json::array();
      for (std::size_t k = 0; k < s.indices.size(); ++k) {
        const std::size_t i = s.indices[k];
        rows.push_back({{"id", pop.unit(i).id},
                        {"design", design.weight(i)},
                        {"greg", gr.weights[k]},
                        {"optimal", ow->weights[k]}});
      }
      j["weights"] = std::move(rows);
      j["calibration"] = {{"greg_max_rel_err", greg_cal_err},
                          {"optimal_max_rel_err", opt_cal_err}};
    }
    write_output(j.dump(2) + "\n", args.out);
    return;
  }
  if (args.format != "csv") throw ConfigError("--format must be json or csv");
  std::ostringstream outp;
  outp << "record,name,stat,value\n";
  outp << "meta,,command,estimate\n";
  outp << "meta,,design," << design.describe() << "\n";
  outp << "meta,,seed," << args.seed << "\n";
  outp << "population,,size," << pop.size() << "\n";
  outp << "population,,t_y," << format_double17(pop.t_y()) << "\n";
  for (Eigen::Index jx = 0; jx < pop.t_x().size(); ++jx)
    outp << "population,t_x" << (jx + 1) << ",value,"
         << format_double17(pop.t_x()[jx]) << "\n";
  outp << "sample,,size," << s.size() << "\n";
  for (std::size_t i : s.indices)
    outp << "sample_id,," << pop.unit(i).id << "," << pop.unit(i).id << "\n";
  outp << "estimate,t_ht,value," << format_double17(ht.y) << "\n";
  outp << "estimate,t_greg,value," << format_double17(gr.estimate) << "\n";
  outp << "estimate,t_opt,value," << format_double17(opt.estimate) << "\n";
  for (Eigen::Index jx = 0; jx < gr.beta.size(); ++jx)
    outp << "estimate,beta_greg" << (jx + 1) << ",value,"
         << format_double17(gr.beta[jx]) << "\n";
  for (Eigen::Index jx = 0; jx < opt.beta.size(); ++jx)
    outp << "estimate,beta_opt" << (jx + 1) << ",value,"
         << format_double17(opt.beta[jx]) << "\n";
  outp << "estimate,c,value," << format_double17(c_used) << "\n";
  if (ow) {
    for (std::size_t k = 0; k < s.indices.size(); ++k) {
      const std::size_t i = s.indices[k];
      outp << "weight," << pop.unit(i).id << ",design,"
           << format_double17(design.weight(i)) << "\n";
      outp << "weight," << pop.unit(i).id << ",greg,"
           << format_double17(gr.weights[k]) << "\n";
      outp << "weight," << pop.unit(i).id << ",optimal,"
           << format_double17(ow->weights[k]) << "\n";
    }
    outp << "calibration,greg,max_rel_err," << format_double17(greg_cal_err) << "\n";
    outp << "calibration,optimal,max_rel_err," << format_double17(opt_cal_err) << "\n";
  }
  write_output(outp.str(), args.out);
}

void validate_provided_sample(const Design& design, const Sample& s) {
  const Population& pop = design.population();
  if (const auto* sr = std::get_if<Srswor>(&design.kind())) {
    if (s.size() != sr->n)
      throw ConfigError("sample-id file has " + std::to_string(s.size()) +
                        " units; the design needs " + std::to_string(sr->n));
    return;
  }
  if (const auto* st = std::get_if<StratifiedSrswor>(&design.kind())) {
    std::vector<std::size_t> counts(st->n_per_stratum.size(), 0);
    for (std::size_t i : s.indices) ++counts[std::size_t(pop.stratum_of(i))];
    for (std::size_t h = 0; h < counts.size(); ++h)
      if (counts[h] != st->n_per_stratum[h])
        throw ConfigError("sample-id file has " + std::to_string(counts[h]) +
                          " units in stratum " + pop.stratum_labels()[h] +
                          "; the design needs " +
                          std::to_string(st->n_per_stratum[h]));
    return;
  }
  const auto& ck = std::get<ClusterSrswor>(design.kind());
  std::map<int, std::size_t> counts;
  for (std::size_t i : s.indices) ++counts[pop.cluster_of(i)];
  if (counts.size() != ck.n_clusters)
    throw ConfigError("sample-id file covers " + std::to_string(counts.size()) +
                      " clusters; the design needs " +
                      std::to_string(ck.n_clusters));
  for (const auto& [c, cnt] : counts) {
    const std::size_t want = ck.take_per_cluster
                                 ? ck.take_per_cluster
                                 : pop.cluster_groups()[std::size_t(c)].size();
    if (cnt != want)
      throw ConfigError("sample-id file has " + std::to_string(cnt) +
                        " units in cluster " +
                        pop.cluster_labels()[std::size_t(c)] +
                        "; the design needs " + std::to_string(want));
  }
}

// ---------------------------------------------------------------------------
// simulate / enumerate

struct SimulateArgs {
  InputArgs in;
  std::string design_str;
  std::string design2_str;
  std::vector<std::string> estimator_strs;
  std::vector<double> known_tx;
  std::uint64_t replications = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  std::string format = "json";
  std::string out;
};

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

ExperimentSpec build_spec(const Population& pop, const SimulateArgs& args,
                          ExperimentSpec::Mode mode) {
  ExperimentSpec spec;
  spec.design = parse_design(args.design_str);
  if (!args.design2_str.empty()) spec.design2 = parse_design(args.design2_str);
  for (const auto& text : args.estimator_strs)
    spec.estimators.push_back(parse_estimator(text));
  if (spec.estimators.empty())
    throw ConfigError("at least one --estimator is required");
  if (!args.known_tx.empty()) spec.known_t_x = resolve_known_tx(pop, args.known_tx);
  spec.replications = args.replications;
  spec.seed = args.seed;
  spec.mode = mode;
  spec.workers = args.workers;
  spec.enumeration_cap = enumeration_cap_from_env();

  const Design d1(spec.design, pop);
  std::string label = (mode == ExperimentSpec::Mode::Enumerate ? "enumerate(" : "simulate(");
  label += "design=" + d1.describe();
  if (spec.design2) label += ", design2=" + Design(*spec.design2, pop).describe();
  label += ", estimators=[" + join(args.estimator_strs, "; ") + "]";
  if (mode == ExperimentSpec::Mode::MonteCarlo)
    label += ", replications=" + std::to_string(args.replications) +
             ", seed=" + std::to_string(args.seed);
  label += ")";
  spec.label = label;
  return spec;
}

void emit_report(const SimulationReport& rep, const std::string& format,
                 const std::string& out) {
  if (format == "json") {
    write_output(report_to_json_text(rep), out);
  } else if (format == "csv") {
    write_output(report_to_csv(rep), out);
  } else {
    throw ConfigError("--format must be json or csv");
  }
}

void cmd_simulate(const SimulateArgs& args) {
  const Population pop = load_input(args.in, args.seed);
  const ExperimentSpec spec = build_spec(pop, args, ExperimentSpec::Mode::MonteCarlo);
  emit_report(run_experiment(pop, spec), args.format, args.out);
}

void cmd_enumerate(const SimulateArgs& args) {
  const Population pop = load_input(args.in, args.seed);
  const ExperimentSpec spec = build_spec(pop, args, ExperimentSpec::Mode::Enumerate);
  SimulationReport rep = run_experiment(pop, spec);

  // Mark exact unbiasedness per estimator whose design expectation has a
  // known target: the y total, or zero for the supersample x contrast.
  const auto ctx = svykit::detail::bind_experiment(pop, spec);
  for (std::size_t e = 0; e < ctx.estimators.size(); ++e) {
    using Kind = EstimatorSpec::Kind;
    const Kind k = ctx.estimators[e].kind;
    if (k == Kind::GregBeta || k == Kind::OptimalBeta) continue;
    const double target = (k == Kind::DeltaX) ? 0.0 : pop.t_y();
    const bool pass = std::abs(rep.channels[e].mean - target) <=
                      1e-10 * std::max(1.0, std::abs(target));
    rep.extras.emplace_back("unbiased_" + rep.channels[e].name, pass ? 1.0 : 0.0);
  }
  emit_report(rep, args.format, args.out);
}

// ---------------------------------------------------------------------------
// example

struct ExampleArgs {
  int which = 0;
  std::optional<std::uint64_t> n_per_stratum;
  std::optional<std::uint64_t> sampled;
  std::optional<double> sigma;
  std::optional<bool> exact_moments;
  std::optional<std::uint64_t> M;
  std::optional<std::uint64_t> K;
  std::optional<double> var_s, var_eps, var_nu, gamma;
  std::optional<double> beta, rho, sigma_eps;
  std::optional<std::uint64_t> draws;
  std::string measured = "first";
  std::optional<std::uint64_t> replications;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;
  std::string format = "json";
  std::string out;
};

void cmd_example(const ExampleArgs& args) {
  SimulationReport rep;
  if (args.which == 1) {
    Example1Run run;
    if (args.n_per_stratum) run.pop.n_per_stratum = std::size_t(*args.n_per_stratum);
    if (args.sigma) run.pop.sigma = *args.sigma;
    if (args.exact_moments) run.pop.exact_moments = *args.exact_moments;
    if (args.sampled) run.n_sampled_per_stratum = std::size_t(*args.sampled);
    if (args.replications) run.replications = *args.replications;
    if (args.seed) run.seed = *args.seed;
    run.workers = args.workers;
    rep = reproduce_example1(run);
  } else if (args.which == 2) {
    Example2Run run;
    if (args.M) run.pop.n_clusters = std::size_t(*args.M);
    if (args.K) run.pop.cluster_size = std::size_t(*args.K);
    if (args.var_s) run.pop.var_s = *args.var_s;
    if (args.var_eps) run.pop.var_eps = *args.var_eps;
    if (args.var_nu) run.pop.var_nu = *args.var_nu;
    if (args.gamma) run.pop.gamma = *args.gamma;
    if (args.sampled) run.n_sampled_clusters = std::size_t(*args.sampled);
    if (args.replications) run.replications = *args.replications;
    if (args.seed) run.seed = *args.seed;
    run.workers = args.workers;
    rep = reproduce_example2(run);
  } else if (args.which == 3) {
    Example3Run run;
    if (args.M) run.pop.n_clusters = std::size_t(*args.M);
    if (args.K) run.pop.cluster_size = std::size_t(*args.K);
    if (args.beta) run.pop.beta = *args.beta;
    if (args.sigma) run.pop.sigma = *args.sigma;
    if (args.rho) run.pop.rho = *args.rho;
    if (args.sigma_eps) run.pop.sigma_eps = *args.sigma_eps;
    if (args.draws) run.n_draws = std::size_t(*args.draws);
    if (args.measured == "first")
      run.measured = MeasuredUnit::First;
    else if (args.measured == "random")
      run.measured = MeasuredUnit::Random;
    else
      throw ConfigError("--measured must be first or random");
    if (args.replications) run.replications = *args.replications;
    if (args.seed) run.seed = *args.seed;
    run.workers = args.workers;
    rep = reproduce_example3(run);
  } else {
    throw ConfigError("example number must be 1, 2, or 3");
  }
  emit_report(rep, args.format, args.out);
}

// ---------------------------------------------------------------------------

template <class F>
int run_guarded(F&& f) {
  try {
    f();
    return 0;
  } catch (const CapError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const RankError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const SupportError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const UnsupportedError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"svykit: design-based survey estimation and recalibration toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "config file; command-line flags override it");

  EstimateArgs est;
  CLI::App* c_est = app.add_subcommand(
      "estimate", "draw one sample and report the expansion, regression, and "
                  "minimum-variance recalibrated estimates");
  add_input_options(c_est, est.in);
  c_est->add_option("--design", est.design_str, "sampling design spec")->required();
  c_est->add_option("--sample-ids", est.sample_ids_path,
                    "file of 1-based unit ids to use instead of drawing");
  c_est->add_option("--known-tx", est.known_tx,
                    "benchmark x totals (default: true population totals)")
      ->delimiter(',');
  c_est->add_option("--c", est.c, "pair-sum constant (default: design-recommended)");
  c_est->add_option("--seed", est.seed, "seed for drawing the sample");
  c_est->add_flag("--emit-weights", est.emit_weights,
                  "include per-unit weights and calibration self-checks");
  c_est->add_option("--format", est.format, "json or csv");
  c_est->add_option("--out", est.out, "output file (default: stdout)");

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand(
      "simulate", "replicate a design and report Monte Carlo moments");
  add_input_options(c_sim, sim.in);
  c_sim->add_option("--design", sim.design_str, "sampling design spec")->required();
  c_sim->add_option("--design2", sim.design2_str,
                    "independent second-sample design (two-sample estimators)");
  c_sim->add_option("--estimator", sim.estimator_strs,
                    "estimator spec (repeatable): ht, greg, beta_greg(j=..), "
                    "optimal(c=..), beta_opt(j=..), fixed(beta=[..]), "
                    "two_sample, two_sample_fixed(beta=[..]), ht_s1, delta, "
                    "delta_fixed(beta=[..]), delta_x(j=..); add as=name to rename");
  c_sim->add_option("--known-tx", sim.known_tx,
                    "benchmark x totals (default: true population totals)")
      ->delimiter(',');
  c_sim->add_option("--replications", sim.replications, "number of replications")
      ->required();
  c_sim->add_option("--seed", sim.seed, "replication seed")->required();
  c_sim->add_option("--workers", sim.workers,
                    "worker threads (0 = hardware; result-invariant)");
  c_sim->add_option("--format", sim.format, "json or csv");
  c_sim->add_option("--out", sim.out, "output file (default: stdout)");

  SimulateArgs enu;
  CLI::App* c_enu = app.add_subcommand(
      "enumerate", "visit every possible sample and report exact moments");
  add_input_options(c_enu, enu.in);
  c_enu->add_option("--design", enu.design_str, "sampling design spec")->required();
  c_enu->add_option("--design2", enu.design2_str,
                    "independent second-sample design (two-sample estimators)");
  c_enu->add_option("--estimator", enu.estimator_strs, "estimator spec (repeatable)");
  c_enu->add_option("--known-tx", enu.known_tx,
                    "benchmark x totals (default: true population totals)")
      ->delimiter(',');
  c_enu->add_option("--seed", enu.seed,
                    "seed for --generate population construction");
  c_enu->add_option("--format", enu.format, "json or csv");
  c_enu->add_option("--out", enu.out, "output file (default: stdout)");

  ExampleArgs ex;
  CLI::App* c_ex = app.add_subcommand(
      "example", "run a packaged study (1: stratified, 2: clustered, "
                 "3: supersample) with its analytic targets attached");
  c_ex->add_option("which", ex.which, "study number: 1, 2, or 3")->required();
  c_ex->add_option("--n-per-stratum", ex.n_per_stratum, "study 1: population units per stratum");
  c_ex->add_option("--sampled", ex.sampled, "study 1: units sampled per stratum; study 2: clusters sampled");
  c_ex->add_option("--sigma", ex.sigma, "studies 1 and 3: x noise scale");
  c_ex->add_option("--exact-moments", ex.exact_moments,
                   "study 1: standardize noise to exact stratum moments");
  c_ex->add_option("--M", ex.M, "studies 2 and 3: clusters in the population");
  c_ex->add_option("--K", ex.K, "studies 2 and 3: units per cluster");
  c_ex->add_option("--var-s", ex.var_s, "study 2: shared-component variance");
  c_ex->add_option("--var-eps", ex.var_eps, "study 2: x noise variance");
  c_ex->add_option("--var-nu", ex.var_nu, "study 2: y noise variance");
  c_ex->add_option("--gamma", ex.gamma, "study 2: y noise scale");
  c_ex->add_option("--beta", ex.beta, "study 3: slope of y on x");
  c_ex->add_option("--rho", ex.rho, "study 3: within-cluster x correlation");
  c_ex->add_option("--sigma-eps", ex.sigma_eps, "study 3: y noise scale");
  c_ex->add_option("--draws", ex.draws, "study 3: cluster draws per replication");
  c_ex->add_option("--measured", ex.measured, "study 3: measured unit, first or random");
  c_ex->add_option("--replications,-R", ex.replications, "Monte Carlo replications");
  c_ex->add_option("--seed", ex.seed, "replication seed");
  c_ex->add_option("--workers", ex.workers,
                   "worker threads (0 = hardware; result-invariant)");
  c_ex->add_option("--format", ex.format, "json or csv");
  c_ex->add_option("--out", ex.out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (c_est->parsed()) return run_guarded([&] { cmd_estimate(est); });
  if (c_sim->parsed()) return run_guarded([&] { cmd_simulate(sim); });
  if (c_enu->parsed()) return run_guarded([&] { cmd_enumerate(enu); });
  return run_guarded([&] { cmd_example(ex); });
}
