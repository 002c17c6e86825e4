#pragma once

#include <cstdint>
#include <sstream>
#include <string>

#include <json.hpp>

#include "svykit/errors.hpp"
#include "svykit/montecarlo.hpp"
#include "svykit/textutil.hpp"

namespace svykit {

/// Report serialization. JSON is the round-trip format (schema_version 1);
/// CSV is a long-format table with every numeric at 17 significant digits.
/// Both are deterministic: object keys are sorted and no timestamps or
/// host details are embedded, so equal reports serialize to equal bytes.

inline constexpr int kReportSchemaVersion = 1;

inline nlohmann::json report_to_json(const SimulationReport& rep) {
  nlohmann::json j;
  j["schema_version"] = kReportSchemaVersion;
  j["mode"] = rep.mode;
  j["seed"] = rep.seed;
  j["replications"] = rep.replications;
  j["used"] = rep.used;
  j["spec_hash"] = rep.spec_hash;
  j["label"] = rep.label;
  j["t_y_target"] = rep.t_y_target;
  j["channels"] = nlohmann::json::array();
  for (const auto& ch : rep.channels) {
    nlohmann::json c;
    c["name"] = ch.name;
    c["mean"] = ch.mean;
    c["variance"] = ch.variance;
    c["mse"] = ch.mse;
    c["se_mean"] = ch.se_mean;
    c["se_variance"] = ch.se_variance;
    j["channels"].push_back(std::move(c));
  }
  j["pairs"] = nlohmann::json::array();
  for (const auto& pr : rep.pairs) {
    nlohmann::json p;
    p["a"] = pr.a;
    p["b"] = pr.b;
    p["covariance"] = pr.covariance;
    p["variance_ratio"] = pr.variance_ratio;
    p["ratio_se"] = pr.ratio_se;
    j["pairs"].push_back(std::move(p));
  }
  j["failures"] = nlohmann::json::object();
  for (const auto& [kind, count] : rep.failures) j["failures"][kind] = count;
  j["extras"] = nlohmann::json::object();
  for (const auto& [name, value] : rep.extras) j["extras"][name] = value;
  return j;
}

namespace detail {

inline double json_number(const nlohmann::json& j) {
  // NaN serializes as null; restore it on the way back in.
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) throw SchemaError("expected a number in report JSON");
  return j.get<double>();
}

template <class T>
T json_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key))
    throw SchemaError(std::string("report JSON is missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(std::string("report JSON field '") + key +
                      "' has the wrong type");
  }
}

inline double json_number_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key))
    throw SchemaError(std::string("report JSON is missing '") + key + "'");
  return json_number(j.at(key));
}

}  // namespace detail

inline SimulationReport report_from_json(const nlohmann::json& j) {
  if (detail::json_field<int>(j, "schema_version") != kReportSchemaVersion)
    throw SchemaError("unsupported report schema version");
  SimulationReport rep;
  rep.mode = detail::json_field<std::string>(j, "mode");
  rep.seed = detail::json_field<std::uint64_t>(j, "seed");
  rep.replications = detail::json_field<std::uint64_t>(j, "replications");
  rep.used = detail::json_field<std::uint64_t>(j, "used");
  rep.spec_hash = detail::json_field<std::uint64_t>(j, "spec_hash");
  rep.label = detail::json_field<std::string>(j, "label");
  rep.t_y_target = detail::json_number_field(j, "t_y_target");
  for (const auto& c : detail::json_field<nlohmann::json>(j, "channels")) {
    ChannelStats ch;
    ch.name = detail::json_field<std::string>(c, "name");
    ch.mean = detail::json_number_field(c, "mean");
    ch.variance = detail::json_number_field(c, "variance");
    ch.mse = detail::json_number_field(c, "mse");
    ch.se_mean = detail::json_number_field(c, "se_mean");
    ch.se_variance = detail::json_number_field(c, "se_variance");
    rep.channels.push_back(std::move(ch));
  }
  for (const auto& p : detail::json_field<nlohmann::json>(j, "pairs")) {
    PairStats pr;
    pr.a = detail::json_field<std::string>(p, "a");
    pr.b = detail::json_field<std::string>(p, "b");
    pr.covariance = detail::json_number_field(p, "covariance");
    pr.variance_ratio = detail::json_number_field(p, "variance_ratio");
    pr.ratio_se = detail::json_number_field(p, "ratio_se");
    rep.pairs.push_back(std::move(pr));
  }
  // items() keeps a reference to its json, so the json must be a named
  // local: calling items() on the returned temporary would dangle.
  const nlohmann::json failures = detail::json_field<nlohmann::json>(j, "failures");
  for (const auto& [kind, count] : failures.items())
    rep.failures.emplace_back(kind, count.get<std::uint64_t>());
  const nlohmann::json extras = detail::json_field<nlohmann::json>(j, "extras");
  for (const auto& [name, value] : extras.items())
    rep.extras.emplace_back(name, detail::json_number(value));
  return rep;
}

inline std::string report_to_json_text(const SimulationReport& rep) {
  return report_to_json(rep).dump(2) + "\n";
}

inline SimulationReport report_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("report JSON does not parse: ") + e.what());
  }
  return report_from_json(j);
}

/// Long-format CSV: one row per scalar, record/name/stat/value columns.
inline std::string report_to_csv(const SimulationReport& rep) {
  std::ostringstream out;
  out << "record,name,stat,value\n";
  auto row = [&](const char* record, const std::string& name, const char* stat,
                 const std::string& value) {
    out << record << "," << name << "," << stat << "," << value << "\n";
  };
  auto num_row = [&](const char* record, const std::string& name,
                     const char* stat, double value) {
    row(record, name, stat, format_double17(value));
  };
  row("meta", "", "schema_version", std::to_string(kReportSchemaVersion));
  row("meta", "", "mode", rep.mode);
  row("meta", "", "seed", std::to_string(rep.seed));
  row("meta", "", "replications", std::to_string(rep.replications));
  row("meta", "", "used", std::to_string(rep.used));
  row("meta", "", "spec_hash", std::to_string(rep.spec_hash));
  num_row("meta", "", "t_y_target", rep.t_y_target);
  for (const auto& ch : rep.channels) {
    num_row("channel", ch.name, "mean", ch.mean);
    num_row("channel", ch.name, "variance", ch.variance);
    num_row("channel", ch.name, "mse", ch.mse);
    num_row("channel", ch.name, "se_mean", ch.se_mean);
    num_row("channel", ch.name, "se_variance", ch.se_variance);
  }
  for (const auto& pr : rep.pairs) {
    const std::string name = pr.a + ":" + pr.b;
    num_row("pair", name, "covariance", pr.covariance);
    num_row("pair", name, "variance_ratio", pr.variance_ratio);
    num_row("pair", name, "ratio_se", pr.ratio_se);
  }
  for (const auto& [kind, count] : rep.failures)
    row("failure", kind, "count", std::to_string(count));
  for (const auto& [name, value] : rep.extras) num_row("extra", name, "value", value);
  return out.str();
}

}  // namespace svykit
