// Verdicts, condition reports and deterministic JSON/CSV emission.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace hered {

using json = nlohmann::json;

enum class Verdict { Holds, Fails, TrendHolds, TrendFails, Indeterminate };

enum class ConditionId {
  HypA,
  HypB,
  NPType,
  CriticalType,
  Muller16,
  MullerSufficient,
  BanachAlg,
  Tau43,
  ReciprocalSummability,
  HolderExponent,
  SignPattern,
};

const char* verdict_name(Verdict v);
const char* condition_name(ConditionId c);

inline bool is_pass(Verdict v) { return v == Verdict::Holds || v == Verdict::TrendHolds; }
inline bool is_fail(Verdict v) { return v == Verdict::Fails || v == Verdict::TrendFails; }

// A named two-column table (index, value), emitted as a CSV sidecar.
struct TrendTable {
  std::string name;
  std::vector<std::pair<double, double>> rows;
};

struct ConditionReport {
  ConditionId id;
  Verdict verdict = Verdict::Indeterminate;
  json witness = json::object();
  std::size_t N_used = 0;
  std::vector<TrendTable> tables;
};

json to_json(const ConditionReport& r);
json to_json(const TrendTable& t);

// Serializes with every double printed at 17 significant digits, keys sorted,
// so equal inputs give byte-identical text.
std::string dump_json(const json& j, int indent = 2);
std::string format_double(double x);
std::string table_csv(const TrendTable& t);

// Exit-code contract: 0 all pass, 1 any failure, 2 only indeterminate left, 3 usage.
int exit_class(const std::vector<Verdict>& verdicts);

}  // namespace hered
