#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "svykit/design.hpp"
#include "svykit/errors.hpp"
#include "svykit/montecarlo.hpp"

namespace svykit {

/// Mini-grammar shared by design and estimator specs:
///   name
///   name(key=value, key=[v1,v2,...], key=word)
/// Values are numbers or bare words; lists hold numbers only. The canonical
/// strings produced by Design::describe() parse back to an equivalent design.

namespace detail {

struct CallArg {
  std::string key;
  std::string word;          // raw token for scalar values
  double number = 0.0;       // valid when is_number
  std::vector<double> list;  // valid when is_list
  bool is_number = false;
  bool is_list = false;
};

struct Call {
  std::string name;
  std::vector<CallArg> args;
};

class CallLexer {
 public:
  explicit CallLexer(std::string_view text) : text_(text) {}

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool at_end() {
    skip_ws();
    return pos_ >= text_.size();
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c)
      throw ParseError("expected '" + std::string(1, c) + "' at position " +
                       std::to_string(pos_) + " in '" + std::string(text_) + "'");
    ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string identifier() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_')
        ++pos_;
      else
        break;
    }
    if (pos_ == start)
      throw ParseError("expected a name at position " + std::to_string(start) +
                       " in '" + std::string(text_) + "'");
    return std::string(text_.substr(start, pos_ - start));
  }

  /// A scalar value token: number-like characters or a bare word.
  std::string value_token() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
          c == '+' || c == '-')
        ++pos_;
      else
        break;
    }
    if (pos_ == start)
      throw ParseError("expected a value at position " + std::to_string(start) +
                       " in '" + std::string(text_) + "'");
    return std::string(text_.substr(start, pos_ - start));
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

inline bool parse_number(const std::string& token, double& out) {
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

inline Call parse_call(std::string_view text) {
  CallLexer lex(text);
  Call call;
  call.name = lex.identifier();
  if (lex.at_end()) return call;
  lex.expect('(');
  if (!lex.accept(')')) {
    do {
      CallArg arg;
      arg.key = lex.identifier();
      lex.expect('=');
      if (lex.accept('[')) {
        arg.is_list = true;
        if (!lex.accept(']')) {
          do {
            double v = 0.0;
            const std::string tok = lex.value_token();
            if (!parse_number(tok, v))
              throw ParseError("'" + tok + "' in list for '" + arg.key +
                               "' is not a number");
            arg.list.push_back(v);
          } while (lex.accept(','));
          lex.expect(']');
        }
      } else {
        arg.word = lex.value_token();
        arg.is_number = parse_number(arg.word, arg.number);
      }
      call.args.push_back(std::move(arg));
    } while (lex.accept(','));
    lex.expect(')');
  }
  if (!lex.at_end())
    throw ParseError("unexpected trailing text in '" + std::string(text) + "'");
  return call;
}

inline const CallArg* find_arg(const Call& call, const std::string& key) {
  for (const auto& a : call.args)
    if (a.key == key) return &a;
  return nullptr;
}

inline void reject_unknown_args(const Call& call,
                                std::initializer_list<const char*> allowed) {
  for (const auto& a : call.args) {
    bool ok = false;
    for (const char* k : allowed)
      if (a.key == k) ok = true;
    if (!ok)
      throw ParseError("unknown argument '" + a.key + "' for '" + call.name + "'");
  }
}

inline std::size_t require_count(const Call& call, const std::string& key) {
  const CallArg* a = find_arg(call, key);
  if (!a)
    throw ParseError("design '" + call.name + "' needs an argument '" + key + "'");
  if (a->is_list || !a->is_number || a->number < 1.0 ||
      a->number != std::floor(a->number) || a->number > 9.0e15)
    throw ParseError("argument '" + key + "' of '" + call.name +
                     "' must be a positive integer");
  return std::size_t(a->number);
}

}  // namespace detail

inline DesignKind parse_design(std::string_view text) {
  using detail::find_arg;
  const detail::Call call = detail::parse_call(text);

  auto measured_of = [&](const detail::CallArg& a) {
    if (a.word == "1") return MeasuredUnit::First;
    if (a.word == "random") return MeasuredUnit::Random;
    throw ParseError("k_measured must be 1 or random, got '" + a.word + "'");
  };

  if (call.name == "srswor") {
    detail::reject_unknown_args(call, {"n"});
    return Srswor{detail::require_count(call, "n")};
  }
  if (call.name == "stratified") {
    detail::reject_unknown_args(call, {"n"});
    const detail::CallArg* a = find_arg(call, "n");
    if (!a || !a->is_list)
      throw ParseError("stratified needs n=[...] with one entry per stratum");
    if (a->list.empty())
      throw ParseError("stratified allocation list is empty");
    StratifiedSrswor st;
    for (double v : a->list) {
      if (v < 1.0 || v != std::floor(v) || v > 9.0e15)
        throw ParseError("stratified allocations must be positive integers");
      st.n_per_stratum.push_back(std::size_t(v));
    }
    return st;
  }
  if (call.name == "cluster") {
    detail::reject_unknown_args(call, {"m", "take", "k_measured"});
    const std::size_t m = detail::require_count(call, "m");
    const detail::CallArg* meas = find_arg(call, "k_measured");
    const detail::CallArg* take = find_arg(call, "take");
    if (meas && take)
      throw ParseError("cluster accepts take= or k_measured=, not both");
    if (meas) return NestedCluster{m, false, measured_of(*meas)};
    ClusterSrswor c{m, 0};
    if (take) c.take_per_cluster = detail::require_count(call, "take");
    return c;
  }
  if (call.name == "cluster_wr") {
    detail::reject_unknown_args(call, {"n", "k_measured"});
    const std::size_t n = detail::require_count(call, "n");
    if (const detail::CallArg* meas = find_arg(call, "k_measured"))
      return NestedCluster{n, true, measured_of(*meas)};
    return ClusterWr{n};
  }
  throw ParseError("design '" + call.name +
                   "' is not recognized; expected srswor, stratified, cluster, "
                   "or cluster_wr");
}

/// Estimator grammar for the command line. Canonical names:
///   ht | greg | beta_greg(j=1) | optimal(c=...) | beta_opt(j=1,c=...)
///   fixed(beta=[...]) | two_sample(c=...) | two_sample_fixed(beta=[...])
///   ht_s1 | delta | delta_fixed(beta=[...]) | delta_x(j=1)
/// Every form accepts as=word to rename its report channel.
inline EstimatorSpec parse_estimator(std::string_view text) {
  using detail::find_arg;
  using Kind = EstimatorSpec::Kind;
  const detail::Call call = detail::parse_call(text);
  EstimatorSpec spec;

  auto read_c = [&]() {
    if (const detail::CallArg* a = find_arg(call, "c")) {
      if (!a->is_number)
        throw ParseError("argument 'c' of '" + call.name + "' must be a number");
      spec.c = a->number;
    }
  };
  auto read_component = [&]() {
    if (const detail::CallArg* a = find_arg(call, "j")) {
      if (!a->is_number || a->number < 1.0 || a->number != std::floor(a->number))
        throw ParseError("argument 'j' of '" + call.name +
                         "' must be a 1-based component index");
      spec.component = std::size_t(a->number) - 1;
    }
  };
  auto read_beta = [&]() {
    const detail::CallArg* a = find_arg(call, "beta");
    if (!a || !a->is_list)
      throw ParseError("'" + call.name + "' needs beta=[...] coefficients");
    spec.beta = Eigen::Map<const Vector>(a->list.data(), Eigen::Index(a->list.size()));
  };
  auto read_name = [&]() {
    if (const detail::CallArg* a = find_arg(call, "as")) {
      if (a->is_list || a->word.empty())
        throw ParseError("argument 'as' must be a bare name");
      spec.name = a->word;
    }
  };

  if (call.name == "ht") {
    detail::reject_unknown_args(call, {"as"});
    spec.kind = Kind::Ht;
  } else if (call.name == "greg") {
    detail::reject_unknown_args(call, {"as"});
    spec.kind = Kind::Greg;
  } else if (call.name == "beta_greg") {
    detail::reject_unknown_args(call, {"j", "as"});
    spec.kind = Kind::GregBeta;
    read_component();
  } else if (call.name == "optimal") {
    detail::reject_unknown_args(call, {"c", "as"});
    spec.kind = Kind::Optimal;
    read_c();
  } else if (call.name == "beta_opt") {
    detail::reject_unknown_args(call, {"j", "c", "as"});
    spec.kind = Kind::OptimalBeta;
    read_component();
    read_c();
  } else if (call.name == "fixed") {
    detail::reject_unknown_args(call, {"beta", "as"});
    spec.kind = Kind::FixedBeta;
    read_beta();
  } else if (call.name == "two_sample") {
    detail::reject_unknown_args(call, {"c", "as"});
    spec.kind = Kind::TwoSample;
    read_c();
  } else if (call.name == "two_sample_fixed") {
    detail::reject_unknown_args(call, {"beta", "as"});
    spec.kind = Kind::TwoSampleFixed;
    read_beta();
  } else if (call.name == "ht_s1") {
    detail::reject_unknown_args(call, {"as"});
    spec.kind = Kind::HtS1;
  } else if (call.name == "delta") {
    detail::reject_unknown_args(call, {"as"});
    spec.kind = Kind::Delta;
  } else if (call.name == "delta_fixed") {
    detail::reject_unknown_args(call, {"beta", "as"});
    spec.kind = Kind::DeltaFixed;
    read_beta();
  } else if (call.name == "delta_x") {
    detail::reject_unknown_args(call, {"j", "as"});
    spec.kind = Kind::DeltaX;
    read_component();
  } else {
    throw ParseError("estimator '" + call.name + "' is not recognized");
  }
  read_name();
  return spec;
}

}  // namespace svykit
