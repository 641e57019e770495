#include "hered/kernel_spec.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <optional>

#include "hered/error.hpp"

namespace hered {

namespace {

using Kind = SpecNode::Kind;

constexpr std::size_t kMaxNesting = 64;

class Parser {
 public:
  explicit Parser(const std::string& t) : s_(t) {}

  SpecPtr run() {
    auto e = expr(0);
    ws();
    if (i_ != s_.size()) fail({"'*'", "'/'", "end of input"});
    return e;
  }

 private:
  const std::string& s_;
  std::size_t i_ = 0;

  void ws() {
    while (i_ < s_.size() && (s_[i_] == ' ' || s_[i_] == '\t' || s_[i_] == '\n' || s_[i_] == '\r')) ++i_;
  }

  [[noreturn]] void fail(std::vector<std::string> expected) const {
    std::string found = i_ < s_.size() ? std::string("'") + s_[i_] + "'" : "end of input";
    std::string msg = "syntax error at byte " + std::to_string(i_) + ": found " + found + ", expected ";
    for (std::size_t k = 0; k < expected.size(); ++k) msg += (k ? " or " : "") + expected[k];
    throw Error(Errc::syntax_error, msg, {{"offset", i_}, {"expected", expected}, {"found", found}});
  }

  void expect(char c) {
    ws();
    if (i_ >= s_.size() || s_[i_] != c) fail({std::string("'") + c + "'"});
    ++i_;
  }

  bool peek(char c) {
    ws();
    return i_ < s_.size() && s_[i_] == c;
  }

  double real() {
    ws();
    const std::size_t start = i_;
    std::size_t j = i_;
    if (j < s_.size() && (s_[j] == '+' || s_[j] == '-')) ++j;
    const std::size_t digits_at = j;
    while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
    bool any = j > digits_at;
    if (j < s_.size() && s_[j] == '.') {
      ++j;
      const std::size_t f = j;
      while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
      any = any || j > f;
    }
    if (!any) fail({"number"});
    if (j < s_.size() && (s_[j] == 'e' || s_[j] == 'E')) {
      std::size_t k = j + 1;
      if (k < s_.size() && (s_[k] == '+' || s_[k] == '-')) ++k;
      const std::size_t e = k;
      while (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) ++k;
      if (k == e) {
        i_ = k;
        fail({"exponent digits"});
      }
      j = k;
    }
    const char* b = s_.data() + start + (s_[start] == '+' ? 1 : 0);
    double v = 0.0;
    auto r = std::from_chars(b, s_.data() + j, v);
    if (r.ec != std::errc() || !std::isfinite(v))
      throw Error(Errc::semantic_error, "number out of range at byte " + std::to_string(start), {{"offset", start}});
    i_ = j;
    return v;
  }

  std::size_t integer() {
    ws();
    const std::size_t start = i_;
    while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    if (i_ == start) fail({"nonnegative integer"});
    std::size_t v = 0;
    auto r = std::from_chars(s_.data() + start, s_.data() + i_, v);
    if (r.ec != std::errc())
      throw Error(Errc::semantic_error, "integer out of range at byte " + std::to_string(start), {{"offset", start}});
    return v;
  }

  SpecPtr expr(std::size_t nest) {
    auto lhs = term(nest);
    for (;;) {
      ws();
      if (i_ >= s_.size() || (s_[i_] != '*' && s_[i_] != '/')) return lhs;
      const bool div = s_[i_] == '/';
      const std::size_t at = i_++;
      auto rhs = term(nest);
      if (div) {
        auto inv = std::make_shared<SpecNode>();
        inv->kind = Kind::Inv;
        inv->left = rhs;
        inv->offset = at;
        rhs = inv;
      }
      auto m = std::make_shared<SpecNode>();
      m->kind = Kind::Mul;
      m->left = lhs;
      m->right = rhs;
      m->offset = at;
      lhs = m;
    }
  }

  SpecPtr term(std::size_t nest) {
    if (nest > kMaxNesting)
      throw Error(Errc::semantic_error, "expression nested too deeply", {{"offset", i_}, {"max_depth", kMaxSpecDepth}});
    ws();
    const std::size_t at = i_;
    if (peek('(')) {
      ++i_;
      auto e = expr(nest + 1);
      expect(')');
      return e;
    }
    std::size_t j = i_;
    while (j < s_.size() && std::isalnum(static_cast<unsigned char>(s_[j]))) ++j;
    const std::string word = s_.substr(i_, j - i_);
    auto node = std::make_shared<SpecNode>();
    node->offset = at;
    if (word == "pow1mt") {
      i_ = j;
      expect('(');
      node->kind = Kind::Pow1mt;
      node->exponent = real();
      expect(')');
    } else if (word == "poly") {
      i_ = j;
      expect('[');
      node->kind = Kind::Poly;
      node->coeffs.push_back(real());
      while (peek(',')) {
        ++i_;
        node->coeffs.push_back(real());
      }
      expect(']');
    } else if (word == "inv") {
      i_ = j;
      expect('(');
      node->kind = Kind::Inv;
      node->left = expr(nest + 1);
      expect(')');
    } else if (word == "file") {
      i_ = j;
      expect('(');
      expect('"');
      const std::size_t p = i_;
      while (i_ < s_.size() && s_[i_] != '"') ++i_;
      if (i_ >= s_.size()) fail({"'\"'"});
      node->kind = Kind::FileRef;
      node->path = s_.substr(p, i_ - p);
      ++i_;
      expect(')');
    } else if (word == "tail") {
      i_ = j;
      expect('(');
      node->kind = Kind::TailExtend;
      node->left = expr(nest + 1);
      expect(',');
      node->amplitude = real();
      expect(',');
      node->tail_exponent = real();
      expect(',');
      node->from_degree = integer();
      expect(')');
    } else {
      fail({"'('", "'pow1mt('", "'poly['", "'inv('", "'file('", "'tail('"});
    }
    return node;
  }
};

// Constant term when it is known from the text alone.
std::optional<double> constant_term(const SpecNode& n) {
  switch (n.kind) {
    case Kind::Pow1mt: return 1.0;
    case Kind::Poly: return n.coeffs[0];
    case Kind::Inv: {
      auto c = constant_term(*n.left);
      if (c && *c != 0.0) return 1.0 / *c;
      return std::nullopt;
    }
    case Kind::Mul: {
      auto a = constant_term(*n.left), b = constant_term(*n.right);
      if (a && b) return *a * *b;
      if ((a && *a == 0.0) || (b && *b == 0.0)) return 0.0;
      return std::nullopt;
    }
    case Kind::FileRef: return std::nullopt;
    case Kind::TailExtend: return constant_term(*n.left);
  }
  return std::nullopt;
}

void validate(const SpecNode& n) {
  switch (n.kind) {
    case Kind::Inv: {
      validate(*n.left);
      auto c = constant_term(*n.left);
      if (c && *c == 0.0)
        throw Error(Errc::semantic_error,
                    "inverse of a series with zero constant term at byte " + std::to_string(n.offset),
                    {{"offset", n.offset}});
      break;
    }
    case Kind::Mul:
      validate(*n.left);
      validate(*n.right);
      break;
    case Kind::TailExtend:
      validate(*n.left);
      if (n.from_degree < 1)
        throw Error(Errc::semantic_error, "tail must start at degree >= 1 (byte " + std::to_string(n.offset) + ")",
                    {{"offset", n.offset}});
      break;
    case Kind::FileRef:
      if (n.path.empty())
        throw Error(Errc::semantic_error, "empty file path at byte " + std::to_string(n.offset), {{"offset", n.offset}});
      break;
    default: break;
  }
}

std::string num(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

}  // namespace

bool spec_equal(const SpecNode& a, const SpecNode& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Kind::Pow1mt: return a.exponent == b.exponent;
    case Kind::Poly: return a.coeffs == b.coeffs;
    case Kind::Inv: return spec_equal(*a.left, *b.left);
    case Kind::Mul: return spec_equal(*a.left, *b.left) && spec_equal(*a.right, *b.right);
    case Kind::FileRef: return a.path == b.path;
    case Kind::TailExtend:
      return a.amplitude == b.amplitude && a.tail_exponent == b.tail_exponent && a.from_degree == b.from_degree &&
             spec_equal(*a.left, *b.left);
  }
  return false;
}

std::size_t spec_depth(const SpecNode& n) {
  std::size_t d = 0;
  if (n.left) d = std::max(d, spec_depth(*n.left));
  if (n.right) d = std::max(d, spec_depth(*n.right));
  return d + 1;
}

SpecPtr parse_kernel_spec(const std::string& text) {
  auto ast = Parser(text).run();
  const std::size_t depth = spec_depth(*ast);
  if (depth > kMaxSpecDepth)
    throw Error(Errc::semantic_error, "expression tree deeper than " + std::to_string(kMaxSpecDepth),
                {{"offset", 0}, {"depth", depth}});
  validate(*ast);
  return ast;
}

std::string pretty_print(const SpecNode& n) {
  switch (n.kind) {
    case Kind::Pow1mt: return "pow1mt(" + num(n.exponent) + ")";
    case Kind::Poly: {
      std::string s = "poly[";
      for (std::size_t i = 0; i < n.coeffs.size(); ++i) s += (i ? "," : "") + num(n.coeffs[i]);
      return s + "]";
    }
    case Kind::Inv: return "inv(" + pretty_print(*n.left) + ")";
    case Kind::Mul: {
      const std::string r = pretty_print(*n.right);
      return pretty_print(*n.left) + "*" + (n.right->kind == Kind::Mul ? "(" + r + ")" : r);
    }
    case Kind::FileRef: return "file(\"" + n.path + "\")";
    case Kind::TailExtend:
      return "tail(" + pretty_print(*n.left) + "," + num(n.amplitude) + "," + num(n.tail_exponent) + "," +
             std::to_string(n.from_degree) + ")";
  }
  return "";
}

TruncatedSeries elaborate(const SpecNode& n, std::size_t N, const std::string& base_dir) {
  if (N < 1) throw Error(Errc::invalid_argument, "truncation N must be >= 1");
  switch (n.kind) {
    case Kind::Pow1mt:
      return n.exponent >= 0.0 ? binomial_series(n.exponent, PowSign::PowPlus, N)
                               : binomial_series(-n.exponent, PowSign::PowMinus, N);
    case Kind::Poly: {
      std::size_t deg = n.coeffs.size() - 1;
      while (deg > 0 && n.coeffs[deg] == 0.0) --deg;
      if (deg > N)
        throw Error(Errc::semantic_error, "polynomial degree exceeds truncation", {{"offset", n.offset}, {"degree", deg}, {"N", N}});
      return polynomial(std::vector<double>(n.coeffs.begin(), n.coeffs.begin() + static_cast<long>(deg) + 1), N);
    }
    case Kind::Inv: {
      auto child = elaborate(*n.left, N, base_dir);
      if (child[0] == 0.0)
        throw Error(Errc::semantic_error, "inverse of a series with zero constant term", {{"offset", n.offset}});
      return reciprocal(child, N).k;
    }
    case Kind::Mul: return cauchy_product(elaborate(*n.left, N, base_dir), elaborate(*n.right, N, base_dir));
    case Kind::FileRef: {
      std::filesystem::path p(n.path);
      if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
      std::vector<double> c = read_coefficient_file(p.string());
      if (c.empty()) throw Error(Errc::io_error, "coefficient file is empty", {{"path", p.string()}});
      std::size_t deg = c.size() - 1;
      while (deg > 0 && c[deg] == 0.0) --deg;
      if (deg > N)
        throw Error(Errc::semantic_error, "file lists more coefficients than the truncation keeps",
                    {{"offset", n.offset}, {"degree", deg}, {"N", N}});
      c.resize(N + 1, 0.0);
      return TruncatedSeries(std::move(c), Generator::file_list(deg));
    }
    case Kind::TailExtend: {
      auto child = elaborate(*n.left, N, base_dir);
      std::vector<double> c(N + 1);
      for (std::size_t i = 0; i <= N; ++i)
        c[i] = i < n.from_degree ? child[i] : n.amplitude * std::pow(static_cast<double>(i), -n.tail_exponent);
      return TruncatedSeries(std::move(c), Generator::power_tail(n.amplitude, n.tail_exponent, n.from_degree));
    }
  }
  throw Error(Errc::invalid_argument, "unknown node");
}

void RunConfig::validate() const {
  auto bad = [](const char* what) { return Error(Errc::invalid_argument, what); };
  if (N < 1) throw bad("truncation N must be >= 1");
  for (double t : {psd_tol, model_tol, rank_tol})
    if (!(t > 0.0) || !std::isfinite(t)) throw bad("tolerances must be positive");
  if (circle_samples < 16) throw bad("circle_samples must be >= 16");
  for (const auto* g : {&m_grid, &n_grid})
    for (std::size_t i = 1; i < g->size(); ++i)
      if ((*g)[i] <= (*g)[i - 1]) throw bad("grids must be strictly increasing");
}

json RunConfig::to_json() const {
  return {{"N", N},
          {"psd_tol", psd_tol},
          {"model_tol", model_tol},
          {"rank_tol", rank_tol},
          {"m_grid", m_grid},
          {"n_grid", n_grid},
          {"circle_samples", circle_samples},
          {"seed", seed}};
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    if (j.contains("N")) c.N = j.at("N").get<std::size_t>();
    if (j.contains("psd_tol")) c.psd_tol = j.at("psd_tol").get<double>();
    if (j.contains("model_tol")) c.model_tol = j.at("model_tol").get<double>();
    if (j.contains("rank_tol")) c.rank_tol = j.at("rank_tol").get<double>();
    if (j.contains("m_grid")) c.m_grid = j.at("m_grid").get<std::vector<std::size_t>>();
    if (j.contains("n_grid")) c.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
    if (j.contains("circle_samples")) c.circle_samples = j.at("circle_samples").get<std::size_t>();
    if (j.contains("out")) c.out_path = j.at("out").get<std::string>();
    if (j.contains("csv_dir")) c.csv_dir = j.at("csv_dir").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace hered
