// Command-line front end. Talks to the library only through the C interface.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "hered/hered.h"

namespace {

using nlohmann::json;

struct Flags {
  std::optional<std::string> spec, spec_file, kernel, pattern, op, weights;
  std::optional<std::size_t> N, nmax, degree, dim, vectors;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol, eps, a, b, p, q, s;
  bool forward = false;
  std::string out, csv_dir;
};

template <class T>
void put(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

json to_args(const Flags& f) {
  json j = json::object();
  put(j, "spec", f.spec);
  put(j, "spec_file", f.spec_file);
  put(j, "kernel", f.kernel);
  put(j, "pattern", f.pattern);
  put(j, "operator", f.op);
  put(j, "weights", f.weights);
  put(j, "N", f.N);
  put(j, "nmax", f.nmax);
  put(j, "degree", f.degree);
  put(j, "dim", f.dim);
  put(j, "vectors", f.vectors);
  put(j, "seed", f.seed);
  put(j, "tol", f.tol);
  put(j, "eps", f.eps);
  put(j, "a", f.a);
  put(j, "b", f.b);
  put(j, "p", f.p);
  put(j, "q", f.q);
  put(j, "s", f.s);
  if (f.forward) j["forward"] = true;
  return j;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream o(p, std::ios::binary);
  if (!o) throw std::runtime_error("cannot write " + p.string());
  o << text;
}

std::string safe_name(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-')) c = '_';
  return s;
}

int run(const std::string& command, const Flags& f) {
  const std::string args = to_args(f).dump();
  hered_report* r = nullptr;
  const hered_status st = hered_run(command.c_str(), args.c_str(), &r);
  if (st != HERED_OK) {
    std::cerr << hered_last_error_json() << "\n";
    return hered_status_exit_code(st);
  }
  const int code = hered_report_exit_code(r);
  try {
    const std::string text = std::string(hered_report_json(r)) + "\n";
    if (f.out.empty())
      std::cout << text;
    else
      write_file(f.out, text);
    if (!f.csv_dir.empty()) {
      std::filesystem::create_directories(f.csv_dir);
      for (std::size_t i = 0; i < hered_report_table_count(r); ++i)
        write_file(std::filesystem::path(f.csv_dir) / (safe_name(hered_report_table_name(r, i)) + ".csv"),
                   hered_report_table_csv(r, i));
      for (std::size_t i = 0; i < hered_report_file_count(r); ++i)
        write_file(std::filesystem::path(f.csv_dir) / safe_name(hered_report_file_name(r, i)),
                   hered_report_file_text(r, i));
    }
  } catch (const std::exception& e) {
    std::cerr << "{\"error\":\"io-error\",\"message\":" << json(e.what()).dump() << "}\n";
    hered_report_free(r);
    return 1;
  }
  hered_report_free(r);
  return code;
}

void common(CLI::App* sc, Flags& f) {
  sc->add_option("--out", f.out, "write the JSON report here instead of stdout");
  sc->add_option("--csv-dir", f.csv_dir, "directory for CSV sidecars");
  sc->add_option("--seed", f.seed, "seed for random probe vectors (default 0)");
}

void spec_opts(CLI::App* sc, Flags& f) {
  sc->add_option("--spec", f.spec, "series in the kernel-spec language");
  sc->add_option("--spec-file", f.spec_file, "file holding the spec text");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hereditary kernels: inversion, checks, models and Cesaro probes"};
  app.require_subcommand(1);
  Flags f;
  std::string command;

  auto* kernel = app.add_subcommand("kernel", "kernel pair tools")->require_subcommand(1);
  auto* kcheck = kernel->add_subcommand("check", "run the hypothesis and type checks on alpha");
  auto* kinv = kernel->add_subcommand("invert", "invert alpha to k = 1/alpha");
  for (auto* sc : {kcheck, kinv}) {
    spec_opts(sc, f);
    sc->add_option("-N,--truncation", f.N, "truncation order");
    sc->add_option("--tol", f.tol, "tolerance");
    common(sc, f);
  }

  auto* shift = app.add_subcommand("shift", "weighted shifts")->require_subcommand(1);
  auto* smem = shift->add_subcommand("membership", "class membership of a weighted shift");
  spec_opts(smem, f);
  smem->add_option("--a", f.a, "alpha = (1-t)^a");
  smem->add_option("--s", f.s, "weights kappa = (1-t)^-s");
  smem->add_option("--weights", f.weights, "weights kappa as a spec");
  smem->add_flag("--forward", f.forward, "forward shift instead of backward");
  smem->add_option("-N,--truncation", f.N, "truncation order");
  common(smem, f);

  auto* model = app.add_subcommand("model", "explicit models")->require_subcommand(1);
  auto* mbuild = model->add_subcommand("build", "build (V_D, W, S) for T");
  spec_opts(mbuild, f);
  mbuild->add_option("--operator", f.op, "operator matrix CSV (default: backward shift section)");
  mbuild->add_option("--s", f.s, "section weights kappa = (1-t)^-s");
  mbuild->add_option("--weights", f.weights, "section weights as a spec (default k)");
  mbuild->add_option("--dim", f.dim, "section dimension (default 64)");
  mbuild->add_option("--degree", f.degree, "transform truncation degree M");
  mbuild->add_option("--vectors", f.vectors, "number of seeded probe vectors");
  mbuild->add_option("-N,--truncation", f.N, "truncation order");
  mbuild->add_option("--tol", f.tol, "model tolerance");
  common(mbuild, f);

  auto* erg = app.add_subcommand("ergodic", "Cesaro means")->require_subcommand(1);
  auto* eprobe = erg->add_subcommand("probe", "(C,a,p) probe of a shift section or a matrix");
  spec_opts(eprobe, f);
  eprobe->add_option("--kernel", f.kernel, "shift weights kappa as a spec");
  eprobe->add_option("--operator", f.op, "operator matrix CSV");
  eprobe->add_option("--a", f.a, "Cesaro order (default 1)");
  eprobe->add_option("--p", f.p, "norm exponent (default 2)");
  eprobe->add_option("--nmax", f.nmax, "largest n (default 4095)");
  eprobe->add_option("--vectors", f.vectors, "random vectors for --operator");
  eprobe->add_option("-N,--truncation", f.N, "truncation order");
  common(eprobe, f);

  auto* ex = app.add_subcommand("example", "constructions")->require_subcommand(1);
  auto* esigns = ex->add_subcommand("signs", "kernel with a prescribed sign pattern of alpha");
  esigns->add_option("--pattern", f.pattern, "signs of alpha_2, alpha_3, ... e.g. +-+")->required();
  esigns->add_option("--eps", f.eps, "initial epsilon (default 1e-3)");
  esigns->add_option("-N,--truncation", f.N, "truncation order");
  common(esigns, f);

  auto* rep = app.add_subcommand("report", "combined reports")->require_subcommand(1);
  auto* rbundle = rep->add_subcommand("bundle", "every check on alpha (and weights)");
  spec_opts(rbundle, f);
  rbundle->add_option("--weights", f.weights, "weight sequence omega as a spec");
  rbundle->add_option("-N,--truncation", f.N, "truncation order");
  common(rbundle, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 3;
  }

  const std::map<CLI::App*, std::string> names = {{kcheck, "kernel check"}, {kinv, "kernel invert"},
                                                  {smem, "shift membership"}, {mbuild, "model build"},
                                                  {eprobe, "ergodic probe"}, {esigns, "example signs"},
                                                  {rbundle, "report bundle"}};
  for (const auto& [sc, name] : names)
    if (sc->parsed()) return run(name, f);
  std::cerr << app.help();
  return 3;
}
