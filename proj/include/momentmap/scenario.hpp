#pragma once

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "momentmap/bifurcation.hpp"
#include "momentmap/continuation.hpp"
#include "momentmap/core.hpp"
#include "momentmap/critical_scan.hpp"
#include "momentmap/moment_map.hpp"
#include "momentmap/polyroots.hpp"

namespace momentmap {

// --- deterministic JSON output ------------------------------------------

// %.17g: shortest form that round-trips an IEEE double exactly on every
// platform with a correct printf. Report files must be byte-identical
// across runs on identical config, so formatting goes through here only.
inline std::string format_double(double v) {
  if (!std::isfinite(v)) throw NumericalError("format_double: non-finite value in report");
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    switch (ch) {
      case '"':
        out += "\\\"";
        break;
      case '\\':
        out += "\\\\";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\t':
        out += "\\t";
        break;
      default:
        if (static_cast<unsigned char>(ch) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
          out += buf;
        } else {
          out += ch;
        }
    }
  }
  return out;
}

// Hand-rolled writer so the byte layout is under our control: objects
// pretty-printed at two-space indent, scalar arrays inline, arrays of
// composites one element per line.
class JsonWriter {
 public:
  JsonWriter& key(const std::string& name) {
    start_item();
    out_ += '"';
    out_ += json_escape(name);
    out_ += "\": ";
    has_key_ = true;
    return *this;
  }

  JsonWriter& value(const std::string& v) { return scalar('"' + json_escape(v) + '"'); }
  JsonWriter& value(const char* v) { return value(std::string(v)); }
  JsonWriter& value(double v) { return scalar(format_double(v)); }
  JsonWriter& value(int v) { return scalar(std::to_string(v)); }
  JsonWriter& value(long v) { return scalar(std::to_string(v)); }
  JsonWriter& value(bool v) { return scalar(v ? "true" : "false"); }

  JsonWriter& begin_object() {
    start_item();
    out_ += '{';
    stack_.push_back({true, true});
    return *this;
  }

  JsonWriter& end_object() {
    const bool empty = stack_.back().first_item;
    stack_.pop_back();
    if (!empty) newline_indent();
    out_ += '}';
    return *this;
  }

  // Scalar array: rendered inline as [a, b, c].
  JsonWriter& begin_array() {
    start_item();
    out_ += '[';
    stack_.push_back({false, true});
    return *this;
  }

  JsonWriter& end_array() {
    stack_.pop_back();
    out_ += ']';
    return *this;
  }

  // Array whose elements are objects/arrays: each element on its own line.
  JsonWriter& begin_composite_array() {
    start_item();
    out_ += '[';
    stack_.push_back({true, true});
    return *this;
  }

  JsonWriter& end_composite_array() {
    const bool empty = stack_.back().first_item;
    stack_.pop_back();
    if (!empty) newline_indent();
    out_ += ']';
    return *this;
  }

  JsonWriter& vector(const RealVector& v) {
    begin_array();
    for (Index i = 0; i < v.size(); ++i) value(v(i));
    return end_array();
  }

  JsonWriter& matrix(const RealMatrix& m) {
    begin_object();
    key("rows").value(m.rows());
    key("cols").value(m.cols());
    key("data");
    begin_array();
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) value(m(r, c));
    end_array();
    return end_object();
  }

  std::string str() const { return out_ + "\n"; }

 private:
  struct Level {
    bool pretty;      // newline before each item
    bool first_item;  // no separator yet
  };

  void newline_indent() {
    out_ += '\n';
    out_.append(2 * stack_.size(), ' ');
  }

  void start_item() {
    if (has_key_) {
      has_key_ = false;
      return;
    }
    if (stack_.empty()) return;
    Level& level = stack_.back();
    if (!level.first_item) out_ += level.pretty ? "," : ", ";
    level.first_item = false;
    if (level.pretty) newline_indent();
  }

  JsonWriter& scalar(const std::string& text) {
    start_item();
    out_ += text;
    return *this;
  }

  std::string out_;
  std::vector<Level> stack_;
  bool has_key_ = false;
};

// FNV-1a over the raw config bytes: stable, dependency-free fingerprint for
// report provenance.
inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, hash);
  return buf;
}

// --- scenario configuration ----------------------------------------------

struct Tolerances {
  double tol_t = kDefaultTolT;
  double residual_tol = 1e-8;
  double rank_threshold = kDefaultRankThreshold;
  double cond_max = 1e10;
};

struct ScenarioConfig {
  Index m = 0;
  Index p = 0;
  double delta_theta = kCiDeltaTheta;
  std::optional<RealMatrix> k;    // absent => scalar prior
  std::vector<RealMatrix> c_list;
  Tolerances tolerances;
  std::uint64_t seed = 0;
};

namespace detail {

inline RealMatrix parse_matrix(const nlohmann::json& node, const std::string& name) {
  if (!node.is_object() || !node.contains("rows") || !node.contains("cols") ||
      !node.contains("data"))
    throw ConfigError("config: " + name + " must be an object with rows, cols, data");
  const Index rows = node.at("rows").get<Index>();
  const Index cols = node.at("cols").get<Index>();
  const auto& data = node.at("data");
  if (rows < 1 || cols < 1) throw ConfigError("config: " + name + " has non-positive dimensions");
  if (!data.is_array() || static_cast<Index>(data.size()) != rows * cols)
    throw ConfigError("config: " + name + " data length must equal rows*cols");
  RealMatrix mat(rows, cols);
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      const double v = data.at(r * cols + c).get<double>();
      if (!std::isfinite(v)) throw ConfigError("config: " + name + " has a non-finite entry");
      mat(r, c) = v;
    }
  return mat;
}

}  // namespace detail

inline ScenarioConfig parse_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const std::exception& err) {
    throw ConfigError(std::string("config: JSON parse failure: ") + err.what());
  }
  ScenarioConfig cfg;
  try {
    if (!doc.contains("m") || !doc.contains("p")) throw ConfigError("config: m and p are required");
    cfg.m = doc.at("m").get<Index>();
    cfg.p = doc.at("p").get<Index>();
    if (cfg.m < 1 || cfg.p < 1) throw ConfigError("config: m and p must be at least 1");
    if (doc.contains("delta_theta")) {
      cfg.delta_theta = doc.at("delta_theta").get<double>();
      if (!(cfg.delta_theta > 0.0) || cfg.delta_theta > kTwoPi)
        throw ConfigError("config: delta_theta must lie in (0, 2*pi]");
    }
    const Index n = cfg.m * (cfg.p + 1);
    if (doc.contains("K")) {
      RealMatrix k = detail::parse_matrix(doc.at("K"), "K");
      if (k.rows() != cfg.m || k.cols() != n)
        throw ConfigError("config: K must be m x m(p+1)");
      cfg.k = std::move(k);
    }
    if (!doc.contains("C_list") || !doc.at("C_list").is_array() || doc.at("C_list").empty())
      throw ConfigError("config: C_list must be a nonempty array");
    for (std::size_t i = 0; i < doc.at("C_list").size(); ++i) {
      RealMatrix c = detail::parse_matrix(doc.at("C_list").at(i), "C_list[" + std::to_string(i) + "]");
      if (c.rows() != cfg.m || c.cols() != n)
        throw ConfigError("config: C_list[" + std::to_string(i) + "] must be m x m(p+1)");
      cfg.c_list.push_back(std::move(c));
    }
    if (doc.contains("tolerances")) {
      const auto& tol = doc.at("tolerances");
      if (tol.contains("tol_t")) cfg.tolerances.tol_t = tol.at("tol_t").get<double>();
      if (tol.contains("residual_tol"))
        cfg.tolerances.residual_tol = tol.at("residual_tol").get<double>();
      if (tol.contains("rank_threshold"))
        cfg.tolerances.rank_threshold = tol.at("rank_threshold").get<double>();
      if (tol.contains("cond_max")) cfg.tolerances.cond_max = tol.at("cond_max").get<double>();
      if (!(cfg.tolerances.tol_t > 0.0) || !(cfg.tolerances.residual_tol > 0.0) ||
          !(cfg.tolerances.rank_threshold > 0.0) || !(cfg.tolerances.cond_max > 0.0))
        throw ConfigError("config: tolerances must be positive");
    }
    if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& err) {
    throw ConfigError(std::string("config: ") + err.what());
  }
  return cfg;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct RunOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<double> delta_theta_override;
  bool full_grid = false;
  bool parallel = false;
  int scan_samples = kDefaultScanSamples;
  bool ode_mode = false;
};

struct Scenario {
  ScenarioConfig config;
  EvalContext ctx;
  std::string config_hash;
};

inline Scenario build_scenario(const RunOptions& run) {
  const std::string text = read_file(run.config_path);
  Scenario sc;
  sc.config = parse_config(text);
  sc.config_hash = fnv1a_hex(text);

  double dtheta = sc.config.delta_theta;
  if (run.full_grid) dtheta = kFullDeltaTheta;
  if (run.delta_theta_override) dtheta = *run.delta_theta_override;

  sc.ctx.filter = block_shift_filter(sc.config.m, sc.config.p);
  sc.ctx.prior = sc.config.k ? PriorFactor::from_outer(*sc.config.k) : PriorFactor::identity();
  sc.ctx.basis = build_basis(sc.config.m, sc.config.p);
  sc.ctx.grid = make_grid(dtheta);
  if (run.parallel) {
    sc.ctx.quad.summation = Summation::kPairwise;
    sc.ctx.quad.parallel = true;
  }
  validate_prior(sc.ctx.prior, sc.ctx.filter, sc.ctx.grid);
  return sc;
}

// --- report emission -------------------------------------------------------

inline void write_provenance(JsonWriter& w, const Scenario& sc) {
  w.key("provenance").begin_object();
  w.key("tool_version").value(kToolVersion);
  w.key("config_hash").value(sc.config_hash);
  w.key("grid_size").value(sc.ctx.grid.size());
  w.key("delta_theta").value(sc.ctx.grid.step);
  w.key("summation")
      .value(sc.ctx.quad.summation == Summation::kSequential ? "sequential" : "pairwise");
  w.key("basis_order")
      .value("off-diagonal lags ascending, m*m generators row-major per lag, then diagonal "
             "upper-triangle row-major; Frobenius-normalized");
  w.key("units").value("angles in radians, spectra per unit angular frequency");
  w.end_object();
}

inline void write_text_file(const std::string& dir, const std::string& name,
                            const std::string& content) {
  namespace fs = std::filesystem;
  fs::path path = fs::path(dir) / name;
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path.string());
  out << content;
}

// --- reference values for the shipped example ------------------------------

// Published figures for the bundled example configuration
// (configs/paper.json). reproduce() verifies a run against these.
namespace reference {

inline RealMatrix prior_k() {
  RealMatrix k(2, 4);
  k << -0.22, -1.23, 2.22, 0.0, -1.11, -0.96, 1.14, 2.49;
  return k;
}

inline RealMatrix factor_c0() {
  RealMatrix c(2, 4);
  c << -1.08, -0.57, 2.45, 0.0, 0.84, -0.08, 1.01, 0.78;
  return c;
}

inline RealMatrix factor_c1() {
  RealMatrix c(2, 4);
  c << 0.63, 0.67, 1.45, 0.0, 1.68, -0.61, 1.04, 2.0;
  return c;
}

// Roots sorted by (Re, Im), matching determinantal_roots output order.
inline std::vector<Complex> roots_k() { return {{-0.3558, 0.0}, {0.5868, 0.0}}; }
inline std::vector<Complex> roots_c0() { return {{0.1211, -0.5302}, {0.1211, 0.5302}}; }
inline double roots_c0_modulus() { return 0.5438; }
inline std::vector<Complex> roots_c1() { return {{-0.6683, 0.0}, {0.7791, 0.0}}; }

inline RealMatrix lambda0_block_diag() {
  RealMatrix b(2, 2);
  b << 4.4473, 0.6681, 0.6681, 0.4698;
  return b;
}

inline RealMatrix lambda0_block_off() {
  RealMatrix b(2, 2);
  b << -1.7976, -1.4773, 0.6552, -0.0624;
  return b;
}

inline RealMatrix lambda1_block_diag() {
  RealMatrix b(2, 2);
  b << 3.2017, 0.7387, 0.7387, 2.4105;
  return b;
}

inline RealMatrix lambda1_block_off() {
  RealMatrix b(2, 2);
  b << 2.6607, 0.3371, 3.3600, -1.2200;
  return b;
}

inline constexpr double det_j0 = 10.6871;
inline constexpr double det_j1 = -326.6439;
inline constexpr double t_c = 0.0459;

inline RealMatrix lambdac_block_diag() {
  RealMatrix b(2, 2);
  b << 4.3901, 0.6713, 0.6713, 0.5589;
  return b;
}

inline RealMatrix lambdac_block_off() {
  RealMatrix b(2, 2);
  b << -1.5930, -1.3940, 0.7793, -0.1155;
  return b;
}

inline constexpr double sigma_second = 0.0573;  // second-smallest singular value at t_c
inline constexpr double hess_eig_lo = -0.3226;
inline constexpr double hess_eig_hi = 0.0239;

}  // namespace reference

// --- golden verification -----------------------------------------------------

struct GoldenCheck {
  int criterion = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace detail {

inline bool close_abs(double a, double b, double tol) { return std::abs(a - b) <= tol; }
inline bool close_rel(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

inline bool matrix_close_abs(const RealMatrix& a, const RealMatrix& b, double tol) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a - b).cwiseAbs().maxCoeff() <= tol;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

// Runs the full analysis on the bundled example configuration and compares
// against the published reference figures. The config must actually be that
// example; on any other config the comparison would be meaningless.
inline std::vector<GoldenCheck> reproduce_checks(const Scenario& sc) {
  using detail::close_abs;
  using detail::close_rel;
  using detail::fmt;
  using detail::matrix_close_abs;

  const auto same = [](const std::optional<RealMatrix>& a, const RealMatrix& b) {
    return a && a->rows() == b.rows() && a->cols() == b.cols() &&
           (*a - b).cwiseAbs().maxCoeff() <= 1e-12;
  };
  if (sc.config.m != 2 || sc.config.p != 1 || !same(sc.config.k, reference::prior_k()) ||
      sc.config.c_list.size() != 2 ||
      (sc.config.c_list[0] - reference::factor_c0()).cwiseAbs().maxCoeff() > 1e-12 ||
      (sc.config.c_list[1] - reference::factor_c1()).cwiseAbs().maxCoeff() > 1e-12)
    throw ConfigError("reproduce: config does not match the bundled reference example");

  std::vector<GoldenCheck> checks;
  auto add = [&](int criterion, const std::string& name, bool pass, const std::string& detail_msg) {
    checks.push_back({criterion, name, pass, detail_msg});
  };

  const auto& ctx = sc.ctx;

  // Criterion 1: determinantal roots of K, C0, C1.
  {
    auto check_roots = [&](const RealMatrix& c, const std::vector<Complex>& expected,
                           const std::string& label) {
      const RootReport rep = determinantal_roots(c, ctx.filter);
      bool pass = rep.roots.size() == expected.size() && rep.roots_at_infinity == 0;
      std::string got;
      for (std::size_t i = 0; i < rep.roots.size(); ++i) {
        if (pass && i < expected.size()) {
          pass = pass && close_abs(rep.roots[i].real(), expected[i].real(), 1e-3) &&
                 close_abs(rep.roots[i].imag(), expected[i].imag(), 1e-3);
        }
        got += (i ? ", " : "") + fmt(rep.roots[i].real()) + (rep.roots[i].imag() >= 0 ? "+" : "") +
               fmt(rep.roots[i].imag()) + "i";
      }
      add(1, "roots(" + label + ")", pass, "got [" + got + "]");
      return rep;
    };
    check_roots(reference::prior_k(), reference::roots_k(), "K");
    const RootReport c0 = check_roots(reference::factor_c0(), reference::roots_c0(), "C0");
    check_roots(reference::factor_c1(), reference::roots_c1(), "C1");
    bool mod_pass = c0.moduli.size() == 2 &&
                    close_abs(c0.moduli[0], reference::roots_c0_modulus(), 1e-3) &&
                    close_abs(c0.moduli[1], reference::roots_c0_modulus(), 1e-3);
    add(1, "roots(C0) modulus", mod_pass,
        "got " + (c0.moduli.empty() ? std::string("none") : fmt(c0.moduli[0])));
  }

  // Criterion 2: the parameters induced by C0 and C1.
  const LambdaParam lam0 = lambda_from_factor(FactorC::checked(reference::factor_c0(), ctx.filter),
                                              ctx.basis);
  const LambdaParam lam1 = lambda_from_factor(FactorC::checked(reference::factor_c1(), ctx.filter),
                                              ctx.basis);
  {
    const bool p0 = matrix_close_abs(lam0.matrix.block(0, 0, 2, 2), reference::lambda0_block_diag(),
                                     1e-3) &&
                    matrix_close_abs(lam0.matrix.block(2, 0, 2, 2), reference::lambda0_block_off(),
                                     1e-3);
    const bool p1 = matrix_close_abs(lam1.matrix.block(0, 0, 2, 2), reference::lambda1_block_diag(),
                                     1e-3) &&
                    matrix_close_abs(lam1.matrix.block(2, 0, 2, 2), reference::lambda1_block_off(),
                                     1e-3);
    add(2, "parameter from C0", p0, "diag(0,0) = " + fmt(lam0.matrix(0, 0)));
    add(2, "parameter from C1", p1, "diag(0,0) = " + fmt(lam1.matrix(0, 0)));
  }

  // Criterion 3: endpoint Jacobian determinants and the sign change.
  const SegmentPath path{lam0, lam1};
  {
    const double d0 = det_jacobian_at(path, 0.0, ctx);
    const double d1 = det_jacobian_at(path, 1.0, ctx);
    add(3, "det J at t=0", close_rel(d0, reference::det_j0, 5e-3), "got " + fmt(d0));
    add(3, "det J at t=1", close_rel(d1, reference::det_j1, 5e-3), "got " + fmt(d1));
    add(3, "opposite determinant signs", (d0 > 0.0) != (d1 > 0.0),
        "signs " + std::string(d0 > 0 ? "+" : "-") + std::string(d1 > 0 ? "+" : "-"));
  }

  // Criterion 4: the critical point.
  const DetScanResult scan = det_scan(path, kDefaultScanSamples, ctx);
  if (scan.brackets.empty())
    throw NumericalError("reproduce: no sign change found along the reference segment");
  const CriticalPointRecord critical =
      bisect_critical(path, scan.brackets.front(), sc.config.tolerances.tol_t, ctx,
                      sc.config.tolerances.rank_threshold);
  {
    add(4, "critical t_c", close_abs(critical.t_c, reference::t_c, 5e-4),
        "got " + fmt(critical.t_c));
    const bool lc = matrix_close_abs(critical.lambda_c.matrix.block(0, 0, 2, 2),
                                     reference::lambdac_block_diag(), 5e-3) &&
                    matrix_close_abs(critical.lambda_c.matrix.block(2, 0, 2, 2),
                                     reference::lambdac_block_off(), 5e-3);
    add(4, "critical parameter blocks", lc, "diag(0,0) = " + fmt(critical.lambda_c.matrix(0, 0)));
    const double smax = critical.singular_values(0);
    const double smin = critical.singular_values(critical.singular_values.size() - 1);
    add(4, "sigma_min below threshold", smin < 1e-8 * smax,
        "sigma_min/sigma_max = " + fmt(smin / smax));
    const double s2 = critical.singular_values(critical.singular_values.size() - 2);
    add(4, "second-smallest singular value", close_rel(s2, reference::sigma_second, 0.05),
        "got " + fmt(s2));
    add(4, "rank deficiency exactly one",
        critical.numerical_rank == ctx.basis.size() - 1,
        "numerical rank " + std::to_string(critical.numerical_rank));
  }

  // Criterion 5: kernel split and reduced Hessian at the critical point.
  {
    const BifurcationReport report =
        analyze_bifurcation(critical, path, ctx.basis, ctx, sc.config.tolerances.rank_threshold);
    add(5, "augmented rank M-1",
        report.decomposition.sigma.size() == ctx.basis.size() - 1 &&
            report.decomposition.sigma.minCoeff() > 0.0,
        "rank " + std::to_string(report.decomposition.sigma.size()));
    add(5, "kernel dimension two", report.decomposition.v2.cols() == 2, "got 2-column V2");
    const double lo = report.hessian.eigenvalues(0);
    const double hi = report.hessian.eigenvalues(1);
    const bool direct = close_rel(lo, reference::hess_eig_lo, 0.05) &&
                        close_rel(hi, reference::hess_eig_hi, 0.05);
    const bool flipped = close_rel(-hi, reference::hess_eig_lo, 0.05) &&
                         close_rel(-lo, reference::hess_eig_hi, 0.05);
    add(5, "reduced Hessian eigenvalues", direct || flipped,
        "got {" + fmt(lo) + ", " + fmt(hi) + "}");
    add(5, "classified simple-bifurcation",
        report.classification == CriticalClass::kSimpleBifurcation,
        to_string(report.classification));
  }

  return checks;
}

// --- subcommand runners -----------------------------------------------------

inline int run_roots(const Scenario& sc, const RunOptions& run) {
  JsonWriter w;
  w.begin_object();
  write_provenance(w, sc);
  w.key("reports").begin_composite_array();
  auto emit = [&](const std::string& label, const RealMatrix& c) {
    const RootReport rep = determinantal_roots(c, sc.ctx.filter);
    w.begin_object();
    w.key("label").value(label);
    w.key("roots").begin_composite_array();
    for (std::size_t i = 0; i < rep.roots.size(); ++i) {
      w.begin_object();
      w.key("re").value(rep.roots[i].real());
      w.key("im").value(rep.roots[i].imag());
      w.key("modulus").value(rep.moduli[i]);
      w.end_object();
    }
    w.end_composite_array();
    w.key("roots_at_infinity").value(rep.roots_at_infinity);
    w.key("schur").value(rep.schur);
    w.end_object();
  };
  if (sc.config.k) emit("K", *sc.config.k);
  for (std::size_t i = 0; i < sc.config.c_list.size(); ++i)
    emit("C[" + std::to_string(i) + "]", sc.config.c_list[i]);
  w.end_composite_array();
  w.end_object();
  write_text_file(run.out_dir, "roots.json", w.str());
  std::printf("wrote %s/roots.json\n", run.out_dir.c_str());
  return 0;
}

inline SegmentPath scenario_path(const Scenario& sc) {
  if (sc.config.c_list.size() < 2)
    throw ConfigError("this analysis needs at least two C factors in C_list");
  const FactorC f0 = FactorC::checked(sc.config.c_list.front(), sc.ctx.filter);
  const FactorC f1 = FactorC::checked(sc.config.c_list.back(), sc.ctx.filter);
  return SegmentPath{lambda_from_factor(f0, sc.ctx.basis), lambda_from_factor(f1, sc.ctx.basis)};
}

inline int run_det_scan(const Scenario& sc, const RunOptions& run) {
  const SegmentPath path = scenario_path(sc);
  const DetScanResult scan = det_scan(path, run.scan_samples, sc.ctx);
  std::string csv = "t,det\n";
  for (const DetScanSample& s : scan.samples)
    csv += format_double(s.t) + "," + format_double(s.det) + "\n";
  write_text_file(run.out_dir, "det_scan.csv", csv);

  JsonWriter w;
  w.begin_object();
  write_provenance(w, sc);
  w.key("num_samples").value(static_cast<int>(scan.samples.size()));
  w.key("brackets").begin_composite_array();
  for (const auto& b : scan.brackets) {
    w.begin_array();
    w.value(b.first);
    w.value(b.second);
    w.end_array();
  }
  w.end_composite_array();
  w.end_object();
  write_text_file(run.out_dir, "det_scan.json", w.str());
  std::printf("wrote %s/det_scan.csv and det_scan.json (%zu bracket%s)\n", run.out_dir.c_str(),
              scan.brackets.size(), scan.brackets.size() == 1 ? "" : "s");
  return 0;
}

inline CriticalPointRecord find_critical(const Scenario& sc, const RunOptions& run) {
  const SegmentPath path = scenario_path(sc);
  const DetScanResult scan = det_scan(path, run.scan_samples, sc.ctx);
  if (scan.brackets.empty())
    throw NumericalError("no sign change of det J found along the segment — nothing to bisect");
  return bisect_critical(path, scan.brackets.front(), sc.config.tolerances.tol_t, sc.ctx,
                         sc.config.tolerances.rank_threshold);
}

inline void write_critical(JsonWriter& w, const CriticalPointRecord& critical) {
  w.key("t_c").value(critical.t_c);
  w.key("lambda_c");
  w.matrix(critical.lambda_c.matrix);
  w.key("lambda_c_coords").vector(critical.lambda_c.coords);
  w.key("det_at_c").value(critical.det_at_c);
  w.key("singular_values").vector(critical.singular_values);
  w.key("numerical_rank").value(critical.numerical_rank);
  w.key("bisect_iterations").value(critical.bisect_iterations);
}

inline int run_bisect(const Scenario& sc, const RunOptions& run) {
  const CriticalPointRecord critical = find_critical(sc, run);
  JsonWriter w;
  w.begin_object();
  write_provenance(w, sc);
  w.key("critical").begin_object();
  write_critical(w, critical);
  w.end_object();
  w.end_object();
  write_text_file(run.out_dir, "critical.json", w.str());
  std::printf("wrote %s/critical.json (t_c = %.10f)\n", run.out_dir.c_str(), critical.t_c);
  return 0;
}

inline int run_bifurcate(const Scenario& sc, const RunOptions& run) {
  const SegmentPath path = scenario_path(sc);
  const CriticalPointRecord critical = find_critical(sc, run);
  const BifurcationReport report = analyze_bifurcation(critical, path, sc.ctx.basis, sc.ctx,
                                                       sc.config.tolerances.rank_threshold);
  JsonWriter w;
  w.begin_object();
  write_provenance(w, sc);
  w.key("critical").begin_object();
  write_critical(w, report.critical);
  w.end_object();
  w.key("decomposition").begin_object();
  w.key("sigma").vector(report.decomposition.sigma);
  w.key("u2").vector(report.decomposition.u2);
  w.key("v2");
  w.matrix(report.decomposition.v2);
  w.key("kernel_dim").value(static_cast<int>(report.decomposition.v2.cols()));
  w.end_object();
  w.key("hessian");
  w.matrix(report.hessian.matrix);
  w.key("hessian_eigenvalues").vector(report.hessian.eigenvalues);
  w.key("classification").value(to_string(report.classification));
  w.end_object();
  write_text_file(run.out_dir, "bifurcation.json", w.str());
  std::printf("wrote %s/bifurcation.json (%s)\n", run.out_dir.c_str(),
              to_string(report.classification));
  return 0;
}

inline int run_continue(const Scenario& sc, const RunOptions& run) {
  const SegmentPath path = scenario_path(sc);
  const RealMatrix target = h_map(sc.ctx.filter, sc.ctx.prior, path.end, sc.ctx.grid, sc.ctx.quad);
  ContinuationOptions opts;
  opts.cond_max = sc.config.tolerances.cond_max;
  opts.residual_tol = sc.config.tolerances.residual_tol;
  if (run.ode_mode) opts.mode = ContinuationMode::kOdeOnly;
  const ContinuationTrace trace = continuation_solve(target, path.start, sc.ctx, opts);

  std::string outcome;
  if (trace.status == ContinuationStatus::kConverged) {
    const double dist = (trace.solution->matrix - path.end.matrix).norm();
    outcome = dist < 1e-6 ? "converged-to-endpoint" : "converged-to-different-preimage";
  } else {
    outcome = "did-not-converge";
  }

  JsonWriter w;
  w.begin_object();
  write_provenance(w, sc);
  w.key("mode").value(run.ode_mode ? "ode-only" : "predictor-corrector");
  w.key("status").value(to_string(trace.status));
  w.key("outcome").value(outcome);
  w.key("last_t").value(trace.last_t);
  w.key("final_residual").value(trace.final_residual);
  w.key("num_steps").value(static_cast<int>(trace.steps.size()));
  if (!trace.detail.empty()) w.key("detail").value(trace.detail);
  if (trace.solution) {
    w.key("solution");
    w.matrix(trace.solution->matrix);
    w.key("solution_coords").vector(trace.solution->coords);
  }
  w.end_object();
  write_text_file(run.out_dir, "continue.json", w.str());

  std::string csv = "t,residual,condition\n";
  for (const ContinuationStep& s : trace.steps)
    csv += format_double(s.t) + "," + format_double(s.residual) + "," +
           format_double(s.condition) + "\n";
  write_text_file(run.out_dir, "continue_trace.csv", csv);
  std::printf("wrote %s/continue.json and continue_trace.csv (%s, %s)\n", run.out_dir.c_str(),
              to_string(trace.status), outcome.c_str());
  if (trace.status == ContinuationStatus::kConverged) return 0;
  if (trace.status == ContinuationStatus::kInfeasibleIterate) return 2;
  return 3;
}

inline int run_tau(const Scenario& sc, const RunOptions& run) {
  JsonWriter w;
  w.begin_object();
  write_provenance(w, sc);
  w.key("reports").begin_composite_array();
  for (std::size_t i = 0; i < sc.config.c_list.size(); ++i) {
    const FactorC factor = FactorC::checked(sc.config.c_list[i], sc.ctx.filter);
    const RealMatrix tau = tau_map(sc.ctx.filter, sc.ctx.prior, factor, sc.ctx.grid, sc.ctx.quad);
    Eigen::SelfAdjointEigenSolver<RealMatrix> eig(tau, Eigen::EigenvaluesOnly);
    w.begin_object();
    w.key("label").value("C[" + std::to_string(i) + "]");
    w.key("tau");
    w.matrix(tau);
    w.key("tau_coords").vector(project(tau, sc.ctx.basis).coords);
    w.key("min_eigenvalue").value(eig.eigenvalues().minCoeff());
    w.end_object();
  }
  w.end_composite_array();
  w.end_object();
  write_text_file(run.out_dir, "tau.json", w.str());
  std::printf("wrote %s/tau.json\n", run.out_dir.c_str());
  return 0;
}

inline int run_reproduce(const Scenario& sc, const RunOptions& run) {
  const std::vector<GoldenCheck> checks = reproduce_checks(sc);
  int failures = 0;
  JsonWriter w;
  w.begin_object();
  write_provenance(w, sc);
  w.key("checks").begin_composite_array();
  for (const GoldenCheck& check : checks) {
    std::printf("[%s] criterion %d: %s (%s)\n", check.pass ? "PASS" : "FAIL", check.criterion,
                check.name.c_str(), check.detail.c_str());
    if (!check.pass) ++failures;
    w.begin_object();
    w.key("criterion").value(check.criterion);
    w.key("name").value(check.name);
    w.key("pass").value(check.pass);
    w.key("detail").value(check.detail);
    w.end_object();
  }
  w.end_composite_array();
  w.key("failures").value(failures);
  w.end_object();
  write_text_file(run.out_dir, "reproduce.json", w.str());
  std::printf("%s: %d/%zu checks passed\n", failures == 0 ? "OK" : "FAILED",
              static_cast<int>(checks.size()) - failures, checks.size());
  return failures == 0 ? 0 : 3;
}

}  // namespace momentmap
