#include <filesystem>
#include "hered/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "hered/ergodic.hpp"
#include "hered/error.hpp"
#include "hered/kernel_analysis.hpp"
#include "hered/kernel_spec.hpp"
#include "hered/model.hpp"
#include "hered/operator.hpp"

namespace hered {

namespace {

const std::set<std::string> kKnownArgs = {"spec",  "spec_file", "kernel", "N",       "tol",     "a",
                                          "b",     "p",         "q",      "s",       "nmax",    "operator",
                                          "degree", "pattern",  "eps",    "seed",    "weights", "dim",
                                          "forward", "vectors", "base_dir", "out",   "csv_dir"};

class Args {
 public:
  explicit Args(const json& j) : j_(j.is_null() ? json::object() : j) {
    if (!j_.is_object()) throw Error(Errc::invalid_argument, "arguments must be a JSON object");
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!kKnownArgs.count(it.key())) throw Error(Errc::invalid_argument, "unknown option '" + it.key() + "'");
  }
  bool has(const std::string& k) const { return j_.contains(k) && !j_.at(k).is_null(); }
  double num(const std::string& k, double dflt) const {
    if (!has(k)) return dflt;
    if (!j_.at(k).is_number()) throw Error(Errc::invalid_argument, "option '" + k + "' must be a number");
    const double v = j_.at(k).get<double>();
    if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "option '" + k + "' must be finite");
    return v;
  }
  std::size_t count(const std::string& k, std::size_t dflt) const {
    if (!has(k)) return dflt;
    const auto& v = j_.at(k);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw Error(Errc::invalid_argument, "option '" + k + "' must be a nonnegative integer");
    return v.get<std::size_t>();
  }
  std::string str(const std::string& k, const std::string& dflt = "") const {
    if (!has(k)) return dflt;
    if (!j_.at(k).is_string()) throw Error(Errc::invalid_argument, "option '" + k + "' must be a string");
    return j_.at(k).get<std::string>();
  }
  bool flag(const std::string& k) const {
    if (!has(k)) return false;
    if (!j_.at(k).is_boolean()) throw Error(Errc::invalid_argument, "option '" + k + "' must be a boolean");
    return j_.at(k).get<bool>();
  }
  const json& raw() const { return j_; }

 private:
  json j_;
};

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read file", {{"path", path}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Primary series text from spec / kernel / spec_file.
std::string spec_text(const Args& a) {
  const int given = a.has("spec") + a.has("kernel") + a.has("spec_file");
  if (given > 1) throw Error(Errc::invalid_argument, "give only one of --spec, --kernel, --spec-file");
  if (a.has("spec")) return a.str("spec");
  if (a.has("kernel")) return a.str("kernel");
  if (a.has("spec_file")) return read_text(a.str("spec_file"));
  throw Error(Errc::invalid_argument, "missing --spec");
}

TruncatedSeries load_series(const std::string& text, std::size_t N, const Args& a) {
  std::string base = a.str("base_dir");
  if (base.empty() && a.has("spec_file")) base = std::filesystem::path(a.str("spec_file")).parent_path().string();
  return elaborate(*parse_kernel_spec(text), N, base);
}

std::size_t truncation(const Args& a, std::size_t dflt) {
  const std::size_t N = a.count("N", dflt);
  if (N < 1) throw Error(Errc::invalid_argument, "truncation N must be >= 1");
  return N;
}

std::vector<Vector> seeded_vectors(std::uint64_t seed, Eigen::Index d, std::size_t count) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  std::vector<Vector> xs;
  for (std::size_t k = 0; k < count; ++k) {
    Vector x(d);
    for (Eigen::Index i = 0; i < d; ++i) x(i) = cd(N01(rng), N01(rng));
    xs.push_back(x);
  }
  return xs;
}

std::vector<double> head(const TruncatedSeries& s, std::size_t n) {
  return {s.coeffs().begin(), s.coeffs().begin() + static_cast<long>(std::min(n, s.trunc_len()))};
}

TrendTable series_table(const std::string& name, const TruncatedSeries& s) {
  TrendTable t{name, {}};
  for (std::size_t n = 0; n < s.trunc_len(); ++n) t.rows.emplace_back(static_cast<double>(n), s[n]);
  return t;
}

json base_report(const std::string& name, const Args& a) {
  json cfg = a.raw();
  cfg.erase("out");
  cfg.erase("csv_dir");
  return {{"schema", 1}, {"command", name}, {"config", cfg}};
}

// Runs a check; library errors become an Indeterminate report carrying the error.
template <class F>
ConditionReport guarded(ConditionId id, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    ConditionReport r{id};
    r.verdict = Verdict::Indeterminate;
    r.witness = {{"error", errc_name(e.code())}, {"message", e.what()}};
    return r;
  }
}

void add_conditions(CommandResult& out, std::vector<ConditionReport> reps, std::vector<Verdict>& verdicts) {
  std::sort(reps.begin(), reps.end(), [](const ConditionReport& x, const ConditionReport& y) {
    return std::string(condition_name(x.id)) < std::string(condition_name(y.id));
  });
  json arr = json::array();
  for (const auto& r : reps) {
    arr.push_back(to_json(r));
    verdicts.push_back(r.verdict);
    for (const auto& t : r.tables) out.tables.push_back({std::string(condition_name(r.id)) + "." + t.name, t.rows});
  }
  out.report["conditions"] = arr;
}

std::vector<ConditionReport> kernel_conditions(const KernelPair& pair, const RunConfig& cfg) {
  std::vector<ConditionReport> reps;
  reps.push_back(guarded(ConditionId::HypA, [&] { return check_hypotheses_A(pair, cfg.circle_samples); }));
  reps.push_back(guarded(ConditionId::HypB, [&] { return check_hypotheses_B(pair); }));
  reps.push_back(guarded(ConditionId::NPType, [&] { return classify_np(pair.alpha); }));
  reps.push_back(guarded(ConditionId::CriticalType, [&] { return classify_critical(pair); }));
  reps.push_back(guarded(ConditionId::Muller16, [&] { return muller_condition_estimate(pair.k, cfg.m_grid); }));
  return reps;
}

json pair_summary(const KernelPair& p, std::size_t shown) {
  return {{"alpha_head", head(p.alpha, shown)},
          {"k_head", head(p.k, shown)},
          {"inversion_residual", p.inversion_residual},
          {"is_np", p.is_np},
          {"is_wiener_alpha", p.is_wiener_alpha},
          {"is_wiener_k", p.is_wiener_k},
          {"type", kernel_type_name(p.type)},
          {"k_violations", p.violations.size()},
          {"alpha_generator", p.alpha.generator().describe()},
          {"k_generator", p.k.generator().describe()}};
}

RunConfig config_from(const Args& a, std::size_t N_default) {
  RunConfig c;
  c.N = truncation(a, N_default);
  c.model_tol = a.num("tol", c.model_tol);
  c.seed = a.count("seed", 0);
  c.validate();
  return c;
}

CommandResult kernel_check(const Args& a) {
  CommandResult out;
  out.report = base_report("kernel check", a);
  const RunConfig cfg = config_from(a, 4096);
  const auto pair = reciprocal(load_series(spec_text(a), cfg.N, a), cfg.N);
  out.report["pair"] = pair_summary(pair, 12);
  std::vector<Verdict> v;
  add_conditions(out, kernel_conditions(pair, cfg), v);
  out.exit_code = exit_class(v);
  return out;
}

CommandResult kernel_invert(const Args& a) {
  CommandResult out;
  out.report = base_report("kernel invert", a);
  const RunConfig cfg = config_from(a, 4096);
  const auto pair = reciprocal(load_series(spec_text(a), cfg.N, a), cfg.N);
  const double tol = a.num("tol", 1e-10);
  const Verdict v = pair.inversion_residual <= tol ? Verdict::Holds : Verdict::Fails;
  out.report["pair"] = pair_summary(pair, 32);
  out.report["k"] = pair.k.coeffs();
  out.report["verdict"] = verdict_name(v);
  out.report["tol"] = tol;
  out.tables.push_back(series_table("alpha", pair.alpha));
  out.tables.push_back(series_table("k", pair.k));
  out.exit_code = exit_class({v});
  return out;
}

TruncatedSeries shift_weights(const Args& a, std::size_t N, const TruncatedSeries* fallback) {
  if (a.has("weights") && a.has("s")) throw Error(Errc::invalid_argument, "give only one of --weights, --s");
  if (a.has("weights")) return load_series(a.str("weights"), N, a);
  if (a.has("s")) {
    const double s = a.num("s", 0.0);
    if (!(s > 0.0)) throw Error(Errc::invalid_argument, "--s must be positive");
    return binomial_series(s, PowSign::PowMinus, N);
  }
  if (fallback) return fallback->trunc_len() >= N + 1 ? *fallback : fallback->resized(N + 1);
  throw Error(Errc::invalid_argument, "missing --weights or --s");
}

CommandResult shift_membership(const Args& a) {
  CommandResult out;
  out.report = base_report("shift membership", a);
  const std::size_t N = truncation(a, 2000);
  TruncatedSeries alpha;
  if (a.has("a")) {
    if (a.has("spec") || a.has("spec_file")) throw Error(Errc::invalid_argument, "give only one of --spec, --a");
    const double e = a.num("a", 0.0);
    if (!(e > 0.0)) throw Error(Errc::invalid_argument, "--a must be positive");
    alpha = binomial_series(e, PowSign::PowPlus, N);
  } else {
    alpha = load_series(spec_text(a), N, a);
  }
  const auto kappa = shift_weights(a, N, nullptr);
  const bool forward = a.flag("forward");
  const auto m = forward ? shift_membership_forward(alpha, kappa) : shift_membership_backward(alpha, kappa);
  out.report["direction"] = forward ? "forward" : "backward";
  out.report["membership"] = m.to_json();
  out.report["verdict"] = verdict_name(m.verdict);
  const auto& ga = alpha.generator();
  const auto& gk = kappa.generator();
  if (!forward && ga.kind == Generator::Kind::Binomial && gk.kind == Generator::Kind::Binomial && ga.exponent > 0.0 &&
      gk.exponent < 0.0) {
    const auto o = shift_threshold_oracle(-gk.exponent, ga.exponent, 0.0, OracleKind::Membership74);
    out.report["oracle"] = o.to_json();
    out.report["oracle_agrees"] = is_pass(m.verdict) == o.bounded;
  }
  out.tables = m.tables;
  out.exit_code = exit_class({m.verdict});
  return out;
}

void add_matrix(CommandResult& out, const std::string& name, const Matrix& M) {
  if (M.size()) out.files.emplace_back(name + ".csv", matrix_csv(M));
}

CommandResult model_build(const Args& a) {
  CommandResult out;
  out.report = base_report("model build", a);
  const RunConfig cfg = config_from(a, 1024);
  const auto pair = reciprocal(load_series(spec_text(a), cfg.N, a), cfg.N);
  Matrix T;
  if (a.has("operator")) {
    if (a.has("weights") || a.has("s")) throw Error(Errc::invalid_argument, "give either --operator or shift weights");
    T = read_matrix_csv(a.str("operator"));
    out.report["operator"] = {{"source", "csv"}, {"dim", T.rows()}};
  } else {
    const std::size_t d = a.count("dim", 64);
    const auto kappa = shift_weights(a, std::max(cfg.N, d), &pair.k);
    T = shift_section(kappa, Direction::Backward, d).op.matrix();
    out.report["operator"] = {{"source", "backward shift section"}, {"dim", d}, {"weights", kappa.generator().describe()}};
  }
  ModelOptions opt;
  opt.tol = cfg.model_tol;
  if (a.has("degree")) opt.M = a.count("degree", 0);
  const ModelBundle b = build_model(pair, T, opt);
  const auto& d = b.diagnostics;
  const double tol = cfg.model_tol;
  const bool ok = d.isometry_residual <= tol && d.contraction_excess <= tol && d.intertwine_residual <= tol &&
                  d.SW_residual <= tol && d.S_welldef_residual <= tol && d.S_isometry_residual <= tol;
  const Verdict v = ok ? Verdict::Holds : Verdict::Fails;
  out.report["diagnostics"] = d.to_json();
  out.report["minimality"] = minimality_check(b).to_json();
  const auto probes = seeded_vectors(cfg.seed, T.rows(), a.count("vectors", 20));
  out.report["relation"] = verify_relation_DCW(pair.alpha, T, b.C, b.W, probes).to_json();
  out.report["seed"] = cfg.seed;
  out.report["verdict"] = verdict_name(v);
  add_matrix(out, "V", b.V);
  add_matrix(out, "W", b.W);
  add_matrix(out, "S", b.S);
  add_matrix(out, "D", b.D);
  out.exit_code = exit_class({v});
  return out;
}

CommandResult ergodic_probe(const Args& a) {
  CommandResult out;
  out.report = base_report("ergodic probe", a);
  const double ca = a.num("a", 1.0), p = a.num("p", 2.0);
  const std::size_t nmax = a.count("nmax", 4095);
  if (nmax < 10) throw Error(Errc::invalid_argument, "--nmax must be >= 10");
  const auto grid = log_grid(1, nmax);
  const std::uint64_t seed = a.count("seed", 0);
  ErgodicProbe pr;
  if (a.has("operator")) {
    const Matrix T = read_matrix_csv(a.str("operator"));
    pr = cesaro_probe(T, seeded_vectors(seed, T.rows(), a.count("vectors", 4)), ca, p, grid);
    out.report["operator"] = {{"source", "csv"}, {"dim", T.rows()}, {"vectors", pr.samples.size()}};
  } else {
    const std::size_t d = nmax + 1;
    const auto kappa = load_series(spec_text(a), std::max(truncation(a, d), d), a);
    pr = cesaro_probe_diagonal(shift_section_sparse(kappa, Direction::Backward, d), ca, p, grid);
    out.report["operator"] = {{"source", "backward shift section"}, {"dim", d}, {"probe", "x = e_n along the grid"}};
    const auto& g = kappa.generator();
    if (g.kind == Generator::Kind::Binomial && g.exponent < 0.0 && g.exponent > -1.0 && p >= 1.0 && p <= 2.0) {
      const auto o = shift_threshold_oracle(-g.exponent, ca, p, OracleKind::General714);
      out.report["oracle"] = o.to_json();
      out.report["near_threshold"] = std::abs(ca - o.threshold) < 0.1 - 1e-12;
      out.report["oracle_agrees"] = trend_bounded(pr.worst.kind) == o.bounded;
    }
  }
  const Verdict v = trend_bounded(pr.worst.kind) ? Verdict::TrendHolds : Verdict::TrendFails;
  out.report["probe"] = pr.to_json();
  out.report["seed"] = seed;
  out.report["verdict"] = verdict_name(v);
  out.tables = pr.tables();
  out.exit_code = exit_class({v});
  return out;
}

CommandResult example_signs(const Args& a) {
  CommandResult out;
  out.report = base_report("example signs", a);
  const std::size_t N = truncation(a, 512);
  const auto pat = parse_sign_pattern(a.str("pattern"), a.num("eps", 1e-3));
  const auto g = generate_sign_pattern_kernel(pat, N);
  out.report["pair"] = pair_summary(g.pair, pat.signs.size() + 8);
  std::vector<Verdict> v;
  add_conditions(out, {g.report}, v);
  out.report["verdict"] = verdict_name(g.report.verdict);
  out.tables.push_back(series_table("alpha", g.pair.alpha));
  out.tables.push_back(series_table("k", g.pair.k));
  out.exit_code = exit_class(v);
  return out;
}

CommandResult report_bundle(const Args& a) {
  CommandResult out;
  out.report = base_report("report bundle", a);
  const RunConfig cfg = config_from(a, 4096);
  const auto pair = reciprocal(load_series(spec_text(a), cfg.N, a), cfg.N);
  out.report["pair"] = pair_summary(pair, 12);
  auto reps = kernel_conditions(pair, cfg);
  reps.push_back(guarded(ConditionId::HolderExponent,
                         [&] { return holder_exponent_estimate(pair.k, {0.1, 0.25, 0.5, 0.75, 0.9}); }));
  if (a.has("weights")) {
    const auto omega = load_series(a.str("weights"), cfg.N, a);
    reps.push_back(guarded(ConditionId::BanachAlg, [&] { return banach_algebra_condition(omega); }));
    reps.push_back(guarded(ConditionId::Tau43, [&] { return tau_condition_check(omega); }));
    reps.push_back(guarded(ConditionId::ReciprocalSummability, [&] { return reciprocal_summability_check(omega); }));
  }
  std::vector<Verdict> v;
  add_conditions(out, reps, v);
  out.exit_code = exit_class(v);
  return out;
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"kernel check",  "kernel invert", "shift membership", "model build",
                                                 "ergodic probe", "example signs", "report bundle"};
  return names;
}

CommandResult run_command(const std::string& name, const json& args) {
  const Args a(args);
  CommandResult r;
  if (name == "kernel check")
    r = kernel_check(a);
  else if (name == "kernel invert")
    r = kernel_invert(a);
  else if (name == "shift membership")
    r = shift_membership(a);
  else if (name == "model build")
    r = model_build(a);
  else if (name == "ergodic probe")
    r = ergodic_probe(a);
  else if (name == "example signs")
    r = example_signs(a);
  else if (name == "report bundle")
    r = report_bundle(a);
  else
    throw Error(Errc::invalid_argument, "unknown command '" + name + "'");
  r.report["exit_code"] = r.exit_code;
  return r;
}

int error_exit_code(const std::exception& e) {
  if (const auto* he = dynamic_cast<const Error*>(&e)) {
    switch (he->code()) {
      case Errc::invalid_argument:
      case Errc::syntax_error:
      case Errc::semantic_error:
      case Errc::io_error:
      case Errc::unsupported_regime: return 3;
      default: return 1;
    }
  }
  return 1;
}

json error_report(const std::string& command, const std::exception& e) {
  json j = {{"schema", 1}, {"command", command}, {"message", e.what()}};
  if (const auto* he = dynamic_cast<const Error*>(&e)) {
    j["error"] = errc_name(he->code());
    if (!he->witness().is_null()) j["witness"] = he->witness();
  } else {
    j["error"] = "internal";
  }
  j["exit_code"] = error_exit_code(e);
  return j;
}

}  // namespace hered
