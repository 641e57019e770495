// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "hered/ergodic.hpp"
#include "hered/error.hpp"
#include "hered/hered.h"
#include "hered/kernel_analysis.hpp"
#include "hered/kernel_spec.hpp"
#include "hered/model.hpp"
#include "hered/operator.hpp"

using namespace hered;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream note;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      note << (pass ? "  " : "; ") << what;
      pass = false;
    }
  }
};

double max_abs(const Matrix& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

std::vector<Vector> gaussian_vectors(std::mt19937_64& rng, Eigen::Index d, int count) {
  std::normal_distribution<double> N01;
  std::vector<Vector> out;
  for (int i = 0; i < count; ++i) {
    Vector x(d);
    for (auto& v : x) v = cd(N01(rng), N01(rng));
    out.push_back(x);
  }
  return out;
}

Matrix random_phases(std::mt19937_64& rng, Eigen::Index d) {
  std::uniform_real_distribution<double> U(0, 2 * M_PI);
  Matrix T = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) T(i, i) = std::polar(1.0, U(rng));
  return T;
}

TruncatedSeries muller_kernel(std::size_t N) {
  std::vector<double> c(N + 1);
  c[0] = 1.0;
  for (std::size_t n = 1; n <= N; ++n) c[n] = 0.1 * std::pow(double(n), -2.0);
  return TruncatedSeries(c, Generator::power_tail(0.1, 2.0, 1));
}

// (alpha * k)_n - delta_n0, recomputed here by direct convolution.
double convolution_residual(const TruncatedSeries& a, const TruncatedSeries& k) {
  const std::size_t L = std::min(a.trunc_len(), k.trunc_len());
  double worst = 0.0;
  for (std::size_t n = 0; n < L; ++n) {
    long double s = 0.0L;
    for (std::size_t j = 0; j <= n; ++j) s += static_cast<long double>(a[j]) * k[n - j];
    worst = std::max(worst, std::abs(static_cast<double>(s) - (n == 0 ? 1.0 : 0.0)));
  }
  return worst;
}

void c1(Outcome& o) {
  const std::size_t N = 4096;
  auto gen = generate_sign_pattern_kernel(parse_sign_pattern("+-"), N);
  std::vector<std::pair<std::string, TruncatedSeries>> cases = {
      {"1-t", polynomial({1, -1}, N)},
      {"(1-t)^2", binomial_series(2, PowSign::PowPlus, N)},
      {"(1-t)^0.5", binomial_series(0.5, PowSign::PowPlus, N)},
      {"[1,-1,-1]", polynomial({1, -1, -1}, N)},
      {"generated +-", gen.pair.alpha}};
  for (auto& [name, a] : cases) {
    const TruncatedSeries alpha = name == "[1,-1,-1]" ? polynomial({1, -1, -1}, 40) : a;
    auto pair = reciprocal(alpha, alpha.N());
    const double r = convolution_residual(alpha, pair.k);
    o.note << name << ": " << r << "  ";
    o.require(r <= 1e-10, name + " residual too large");
  }
}

void c2(Outcome& o) {
  double worst = 0.0;
  for (double a : {0.3, 0.5, 1.5, 2.0}) {
    auto tab = cesaro_table(a, 10000);
    for (std::size_t n = 0; n <= 10000; ++n) {
      const double g = std::exp(std::lgamma(n + a) - std::lgamma(a) - std::lgamma(n + 1.0));
      worst = std::max(worst, std::abs(tab[n] / g - 1.0));
    }
  }
  o.note << "max rel err vs Gamma " << worst;
  o.require(worst <= 1e-10, "recurrence disagrees with Gamma formula");
  std::size_t violations = 0;
  for (double a : {0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
    auto tab = cesaro_table(a, 10000);
    const double G = std::tgamma(a);
    for (std::size_t n = 1; n <= 10000; ++n) {
      const double lo = std::pow(n + 1.0, a - 1.0) / G, hi = std::pow(double(n), a - 1.0) / G;
      // a = 1 is the equality case; allow rounding of the bounds themselves
      if (!(lo <= tab[n] * (1 + 4e-16) && tab[n] <= hi * (1 + 4e-16))) ++violations;
    }
  }
  o.note << ", sandwich violations " << violations;
  o.require(violations == 0, "Gautschi sandwich violated");
}

void c3(Outcome& o) {
  const std::vector<double> g = {0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
  int wrong = 0;
  for (double a : g)
    for (double s : g) {
      auto m = shift_membership_backward(binomial_series(a, PowSign::PowPlus, 2000),
                                         binomial_series(s, PowSign::PowMinus, 2000));
      if (is_pass(m.verdict) != (a <= s)) ++wrong;
    }
  o.note << "36 points, mismatches " << wrong;
  o.require(wrong == 0, "membership verdict differs from a <= s");
}

void c4(Outcome& o) {
  Matrix T = shift_section(binomial_series(0.5, PowSign::PowMinus, 512), Direction::Backward, 512).op.matrix();
  Matrix P = T;
  double worst = 0.0;
  for (std::size_t m = 1; m <= 20; ++m) {
    const double expect = 1.0 / std::sqrt(cesaro_number(0.5, m));
    worst = std::max(worst, std::abs(operator_norm(P) / expect - 1.0));
    P = T * P;
  }
  o.note << "max rel err " << worst;
  o.require(worst <= 1e-8, "power norms off");
}

void c5(Outcome& o) {
  auto gen = generate_sign_pattern_kernel(parse_sign_pattern("+-"), 512);
  std::ostringstream spec;
  spec.precision(17);
  spec << "tail(poly[1";
  for (std::size_t n = 1; n <= 8; ++n) spec << "," << gen.pair.k[n];
  spec << "],0.05,2,9)";
  auto k = elaborate(*parse_kernel_spec(spec.str()), 2048);
  auto pair = pair_from_kernel(k);
  const std::size_t d = 64;
  Matrix T = shift_section(k, Direction::Backward, d).op.matrix();
  auto b = build_model(pair, T);
  const double iso = operator_norm(b.V.adjoint() * b.V - Matrix::Identity(d, d));
  o.note << "V*V-I " << iso << ", intertwine " << b.diagnostics.intertwine_residual;
  o.require(iso <= 1e-8, "V_D not isometric");
  o.require(b.diagnostics.intertwine_residual <= 1e-10, "intertwining residual");
  auto h = hereditary_apply(pair.alpha, T);
  Matrix E0 = Matrix::Zero(d, d);
  E0(0, 0) = 1.0;
  const double proj = max_abs(h.value - E0);
  o.note << ", projection identity " << proj;
  o.require(proj <= 1e-10, "alpha(T*,T) is not the projection onto the first vector");
}

void c6(Outcome& o) {
  const std::size_t d = 64;
  auto alpha = binomial_series(0.5, PowSign::PowPlus, 1024);
  Matrix T = shift_section(binomial_series(0.5, PowSign::PowMinus, 1024), Direction::Backward, d).op.matrix();
  auto b = build_model(reciprocal(alpha, 1024), T);
  const double vn = operator_norm(b.V);
  const double joint = operator_norm(b.V.adjoint() * b.V + b.W.adjoint() * b.W - Matrix::Identity(d, d));
  const double sw = b.W.size() && b.S.size() ? operator_norm(b.S_full * b.W - b.W * T) : 0.0;
  const double wn = b.W.size() ? operator_norm(b.W) : 0.0;
  o.note << "||V|| " << vn << ", joint " << joint << ", SW-WT " << sw << ", ||W|| " << wn;
  o.require(vn <= 1 + 1e-8, "V_D not contractive");
  o.require(joint <= 1e-8, "joint isometry residual");
  o.require(sw <= 1e-8, "SW != WT");
  o.require(wn <= 1e-8, "W should vanish on a critical shift part");
}

void c7(Outcome& o) {
  std::mt19937_64 rng(0);
  Matrix U = random_phases(rng, 8);
  auto alpha = polynomial({1, -0.3, -0.2}, 8);
  auto probes = gaussian_vectors(rng, 8, 100);
  auto rel = verify_relation_DCW(alpha, U, Matrix::Zero(0, 8), Matrix::Identity(8, 8), probes);
  o.note << "unitary " << rel.max_residual;
  o.require(rel.max_residual <= 1e-10, "unitary relation residual");

  auto mk = muller_kernel(2048);
  auto pair = pair_from_kernel(mk);
  Matrix T = shift_section(mk, Direction::Backward, 32).op.matrix();
  auto b = build_model(pair, T);
  auto rm = verify_relation_DCW(pair.alpha, T, b.C, Matrix::Zero(32, 32), gaussian_vectors(rng, 32, 100));
  o.note << ", Mueller section " << rm.max_residual << " (||W|| " << (b.W.size() ? operator_norm(b.W) : 0.0) << ")";
  o.require(rm.max_residual <= 1e-8, "Mueller relation residual");
}

void c8(Outcome& o) {
  const std::size_t d = 4096;
  const auto grid = log_grid(1, d - 1);
  int points = 0, wrong = 0;
  for (double s : {0.25, 0.5, 0.75}) {
    auto S = shift_section_sparse(binomial_series(s, PowSign::PowMinus, d), Direction::Backward, d);
    for (int ai = 1; ai <= 12; ++ai) {
      const double a = 0.1 * ai;
      auto oq = shift_threshold_oracle(s, a, 2.0, OracleKind::Quadratic712);
      if (std::abs(a - oq.threshold) < 0.1 - 1e-12) continue;
      ++points;
      if (trend_bounded(cesaro_probe_diagonal(S, a, 2.0, grid).worst.kind) != oq.bounded) ++wrong;
    }
    for (double q : {1.0, 1.5, 2.0})
      for (int bi = 1; bi <= 12; ++bi) {
        const double b = 0.1 * bi;
        auto og = shift_threshold_oracle(s, b, q, OracleKind::General714);
        if (std::abs(b - og.threshold) < 0.1 - 1e-12) continue;
        ++points;
        if (trend_bounded(cesaro_probe_diagonal(S, b, q, grid).worst.kind) != og.bounded) ++wrong;
      }
  }
  o.note << points << " grid points, mismatches " << wrong;
  o.require(wrong == 0, "probe trend disagrees with the threshold law");

  std::mt19937_64 rng(1);
  Matrix U = random_phases(rng, 16);
  auto xs = gaussian_vectors(rng, 16, 4);
  double worst = 0.0;
  for (double a : {0.3, 1.0, 2.0})
    for (double p : {1.0, 2.0, 3.5}) {
      auto pr = cesaro_probe(U, xs, a, p, log_grid(1, 10000));
      for (std::size_t i = 0; i < xs.size(); ++i) {
        const double ref = std::pow(xs[i].norm(), p);
        for (double m : pr.samples[i]) worst = std::max(worst, std::abs(m - ref) / ref);
      }
    }
  o.note << ", isometry identity " << worst;
  o.require(worst <= 1e-12, "isometry identity");
}

void c9(Outcome& o) {
  const std::size_t d = 128;
  auto alpha = binomial_series(0.5, PowSign::PowPlus, 4 * d);
  Matrix B = shift_section(binomial_series(0.5, PowSign::PowMinus, 4 * d), Direction::Backward, d).op.matrix();
  Matrix U(2, 2);
  U << std::polar(1.0, 0.7), 0.0, 0.0, std::polar(1.0, -2.1);
  Matrix T = direct_sum(B, U);
  auto bundle = build_model(reciprocal(alpha, 4 * d), T);
  std::mt19937_64 rng(0);
  auto xs = gaussian_vectors(rng, T.rows(), 20);
  auto rep = trichotomy_test(T, bundle, xs, 10000);
  int inconsistent = 0;
  for (const auto& r : rep.rows) inconsistent += !r.consistent;
  o.note << "inconsistent vectors " << inconsistent << "/20";
  o.require(inconsistent == 0, "indicators disagree");
  Vector x = Vector::Zero(T.rows());
  for (std::size_t n = 0; n < d; ++n) x(static_cast<Eigen::Index>(n)) = 1.0 / double(n + 1);
  auto pure = trichotomy_test(T, bundle, {x}, 10000);
  const double ratio = pure.rows[0].cesaro_limit / x.squaredNorm();
  o.note << ", shift-part Cesaro/||x||^2 " << ratio;
  o.require(ratio <= 0.05, "Cesaro limit on the shift part too large");
}

void c10(Outcome& o) {
  Matrix A(2, 2);
  A << -1.0, 2.0, 0.0, -1.0;
  const auto g = log_grid(1, 100000);
  auto om = cesaro_operator_means(A, 1.0, g);
  double lo = 1e300, hi = 0.0, sup = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    sup = std::max(sup, om.mean_norm[i]);
    if (g[i] >= 10000) lo = std::min(lo, om.mean_norm[i]), hi = std::max(hi, om.mean_norm[i]);
  }
  const double var = (hi - lo) / hi;
  const double ratio = om.power_norm.back() / double(g.back());
  o.note << "sup mean norm " << sup << ", last-decade variation " << var << ", ||T^n||/n " << ratio;
  o.require(std::isfinite(sup) && var <= 0.01, "means not stabilized");
  o.require(std::abs(ratio - 2.0) <= 1e-6, "||T^n||/n not near 2");
}

void c11(Outcome& o) {
  for (const char* pat : {"+-", "--", "+-+-+"}) {
    auto sp = parse_sign_pattern(pat);
    auto g = generate_sign_pattern_kernel(sp, 512);
    const int halvings = g.report.witness.value("halvings", 0);
    bool kpos = true, signs = true;
    for (std::size_t n = 0; n <= g.pair.k.N(); ++n) kpos = kpos && g.pair.k[n] > 0.0;
    for (std::size_t i = 0; i < sp.signs.size(); ++i) {
      const double v = g.pair.alpha[i + 2];
      signs = signs && (sp.signs[i] > 0 ? v > 0.0 : v < 0.0);
    }
    const double r = convolution_residual(g.pair.alpha, g.pair.k);
    o.note << pat << ": halvings " << halvings << ", residual " << r << "  ";
    o.require(g.report.verdict == Verdict::Holds && halvings <= 60, std::string(pat) + " generation failed");
    o.require(kpos, std::string(pat) + " k not positive");
    o.require(signs, std::string(pat) + " sign pattern wrong");
    o.require(r <= 1e-10, std::string(pat) + " round trip");
  }
}

TruncatedSeries weights(std::size_t N, const std::function<double(double)>& f) {
  std::vector<double> c(N + 1);
  for (std::size_t n = 0; n <= N; ++n) c[n] = f(double(n));
  return TruncatedSeries(c);
}

void c12(Outcome& o) {
  auto sq = weights(4096, [](double n) { return (n + 1) * (n + 1); });
  auto one = weights(4096, [](double) { return 1.0; });
  const auto t = tau_condition_check(sq).verdict, b = banach_algebra_condition(sq).verdict,
             r = reciprocal_summability_check(sq).verdict;
  o.note << "(n+1)^2: " << verdict_name(t) << "/" << verdict_name(b) << "/" << verdict_name(r);
  o.require(is_pass(t) && is_pass(b) && is_pass(r), "(n+1)^2 chain");
  const auto t1 = tau_condition_check(one).verdict, b1 = banach_algebra_condition(one).verdict,
             r1 = reciprocal_summability_check(one).verdict;
  o.note << ", ones: " << verdict_name(t1) << "/" << verdict_name(b1) << "/" << verdict_name(r1);
  o.require(is_fail(t1) && is_fail(b1) && is_fail(r1), "constant weights should fail all three");
}

int cli(const std::string& args) {
  const std::string cmd = std::string(HERED_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string run_json(const char* cmd, const char* args) {
  hered_report* r = nullptr;
  if (hered_run(cmd, args, &r) != HERED_OK) return std::string("error: ") + hered_last_error();
  std::string s = hered_report_json(r);
  hered_report_free(r);
  return s;
}

void c13(Outcome& o) {
  std::ifstream in(HERED_TEST_DATA "/spec_corpus.txt");
  int n = 0, bad = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    ++n;
    auto ast = parse_kernel_spec(line);
    if (pretty_print(*ast) != line || !spec_equal(*ast, *parse_kernel_spec(pretty_print(*ast)))) ++bad;
  }
  o.note << "corpus " << n << " specs, round-trip failures " << bad;
  o.require(n == 50 && bad == 0, "corpus round trip");

  const char* margs = R"J({"spec":"pow1mt(0.5)","dim":32,"seed":5,"vectors":8})J";
  const char* eargs = R"J({"spec":"inv(pow1mt(0.5))","a":0.7,"p":2,"nmax":1023,"seed":5})J";
  const bool same = run_json("model build", margs) == run_json("model build", margs) &&
                    run_json("ergodic probe", eargs) == run_json("ergodic probe", eargs) &&
                    run_json("model build", margs).rfind("error", 0) != 0;
  o.note << ", byte-identical " << (same ? "yes" : "no");
  o.require(same, "reports differ between identical runs");

  const std::vector<std::string> malformed = {
      "kernel check --spec 'pow1mt('",
      "kernel check --spec 'poly[1,,2]'",
      "kernel invert --spec 'inv(poly[0,1])'",
      "kernel check --spec 'sqrt(2)'",
      "ergodic probe --spec 'inv(pow1mt(0.5))' --a 0.5 --bogus 1",
      "kernel check",
      "kernel check -N notanumber --spec 'pow1mt(0.5)'",
      "example signs --pattern '+x-'",
      "shift membership --a 0.5",
      "kernel check --spec-file /nonexistent/spec.txt",
  };
  int wrong = 0;
  for (const auto& m : malformed)
    if (cli(m) != 3) ++wrong;
  o.note << ", malformed inputs not exiting 3: " << wrong << "/" << malformed.size();
  o.require(wrong == 0, "exit-code contract");
  o.require(cli("kernel invert --spec 'inv(poly[1,-1,-1])' -N 64") == 0, "valid run should exit 0");
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, void (*)(Outcome&)>> criteria = {
      {"reciprocal round-trip", c1},      {"Cesaro numbers", c2},
      {"membership grid a <= s", c3},     {"power-norm law", c4},
      {"model round-trip", c5},           {"NP explicit model", c6},
      {"D, C, W relation", c7},           {"ergodic thresholds", c8},
      {"trichotomy", c9},                 {"Assani matrix", c10},
      {"sign-pattern generator", c11},    {"Banach-algebra chain", c12},
      {"parser and exit codes", c13}};
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("threw: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %-24s %6.2fs  %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                o.note.str().c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
