#include "hered/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "hered/error.hpp"

namespace hered {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::singular_at_origin: return "singular-at-origin";
    case Errc::out_of_domain: return "out-of-domain";
    case Errc::not_psd: return "not-psd";
    case Errc::convergence_not_certified: return "convergence-not-certified";
    case Errc::unbounded_shift: return "unbounded-shift";
    case Errc::tail_uncertifiable: return "tail-uncertifiable";
    case Errc::model_invalid: return "model-invalid";
    case Errc::not_converged: return "not-converged";
    case Errc::generation_failed: return "generation-failed";
    case Errc::unsupported_regime: return "unsupported-regime";
    case Errc::syntax_error: return "syntax-error";
    case Errc::semantic_error: return "semantic-error";
    case Errc::io_error: return "io-error";
    case Errc::precondition_failed: return "precondition-failed";
  }
  return "unknown";
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "Holds";
    case Verdict::Fails: return "Fails";
    case Verdict::TrendHolds: return "TrendHolds";
    case Verdict::TrendFails: return "TrendFails";
    case Verdict::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

const char* condition_name(ConditionId c) {
  switch (c) {
    case ConditionId::HypA: return "HypA";
    case ConditionId::HypB: return "HypB";
    case ConditionId::NPType: return "NPType";
    case ConditionId::CriticalType: return "CriticalType";
    case ConditionId::Muller16: return "Muller16";
    case ConditionId::MullerSufficient: return "MullerSufficient";
    case ConditionId::BanachAlg: return "BanachAlg";
    case ConditionId::Tau43: return "Tau43";
    case ConditionId::ReciprocalSummability: return "ReciprocalSummability";
    case ConditionId::HolderExponent: return "HolderExponent";
    case ConditionId::SignPattern: return "SignPattern";
  }
  return "unknown";
}

json to_json(const TrendTable& t) {
  json rows = json::array();
  for (const auto& [i, v] : t.rows) rows.push_back({i, v});
  return {{"name", t.name}, {"rows", rows}};
}

json to_json(const ConditionReport& r) {
  json j = {{"schema", 1},
            {"condition_id", condition_name(r.id)},
            {"verdict", verdict_name(r.verdict)},
            {"witness", r.witness},
            {"N_used", r.N_used}};
  if (!r.tables.empty()) {
    json tables = json::array();
    for (const auto& t : r.tables) tables.push_back(to_json(t));
    j["trend_tables"] = tables;
  }
  return j;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "\"nan\"";
  if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

namespace {

void emit(std::ostringstream& os, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) { os << "{}"; return; }
      os << '{' << nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',' << nl;
        first = false;
        os << pad << json(it.key()).dump() << (indent > 0 ? ": " : ":");
        emit(os, it.value(), indent, depth + 1);
      }
      os << nl << close << '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) { os << "[]"; return; }
      os << '[' << nl;
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << ',' << nl;
        first = false;
        os << pad;
        emit(os, v, indent, depth + 1);
      }
      os << nl << close << ']';
      return;
    }
    case json::value_t::number_float:
      os << format_double(j.get<double>());
      return;
    default:
      os << j.dump();
  }
}

}  // namespace

std::string dump_json(const json& j, int indent) {
  std::ostringstream os;
  emit(os, j, indent, 0);
  return os.str();
}

std::string table_csv(const TrendTable& t) {
  std::string out = "index,value\n";
  for (const auto& [i, v] : t.rows) {
    std::string is = format_double(i);
    if (i == std::floor(i) && std::abs(i) < 1e15) is = std::to_string(static_cast<long long>(i));
    out += is + "," + format_double(v) + "\n";
  }
  return out;
}

int exit_class(const std::vector<Verdict>& verdicts) {
  bool indeterminate = false;
  for (Verdict v : verdicts) {
    if (is_fail(v)) return 1;
    if (v == Verdict::Indeterminate) indeterminate = true;
  }
  return indeterminate ? 2 : 0;
}

}  // namespace hered
