#include "oqs/experiment.hpp"

#include "oqs/bipartite.hpp"
#include "oqs/classical.hpp"
#include "oqs/gksl.hpp"
#include "oqs/io.hpp"
#include "oqs/laplace.hpp"
#include "oqs/nonmarkov.hpp"
#include "oqs/semimarkov.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace oqs {

namespace {

using io::Diagnostics;
using io::json;

class InvariantViolation : public Error {
 public:
  using Error::Error;
};

struct Tolerances {
  double hermitian = 1e-8;
  double trace = 1e-6;
  double positivity = 1e-6;
};

struct Solver {
  std::string method;
  Ordering ordering = Ordering::micromaser;
  int k_max = 20;
  int n_quad = 401;
  bool richardson = true;
  long n_traj = 10000;
  int talbot_nodes = 32;
  std::string measure = "both";
  MeasureOptions measure_opt;
  double div_tol = 1e-8;
  int n_samples = 200;
  double max_condition = 1e8;
};

struct Experiment {
  std::string kind;
  std::vector<double> grid;
  std::optional<Matrix> rho0;
  std::optional<RealVector> p0;
  std::optional<GKSLModel> gksl;
  std::optional<BipartiteModel> bipartite;
  std::optional<SemiMarkovModel> semimarkov;
  std::optional<ClassicalSemiMarkov> classical;
  std::optional<DynamicsFamily> family;
  Solver solver;
  std::uint64_t seed = 1;
  Tolerances tol;
  std::string out_dir = ".";
  std::string prefix;
};

std::string sub(const std::string& path, const std::string& key) { return path + "." + key; }

/// Typed optional fields of one object with range checks.
struct Fields {
  const json& obj;
  std::string path;
  Diagnostics& diag;

  const json* get(const char* key) const {
    return obj.is_object() && obj.contains(key) ? &obj.at(key) : nullptr;
  }
  template <typename T>
  void integer(const char* key, T& out, long lo, long hi) const {
    const json* j = get(key);
    if (!j) return;
    auto v = io::read_integer(*j, sub(path, key), diag);
    if (!v) return;
    if (*v < lo || *v > hi) {
      diag.error(sub(path, key), "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
      return;
    }
    out = static_cast<T>(*v);
  }
  void number(const char* key, double& out, double lo, double hi) const {
    const json* j = get(key);
    if (!j) return;
    auto v = io::read_number(*j, sub(path, key), diag);
    if (!v) return;
    if (!(*v >= lo && *v <= hi)) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "must be in [%g, %g]", lo, hi);
      diag.error(sub(path, key), buf);
      return;
    }
    out = *v;
  }
  void boolean(const char* key, bool& out) const {
    const json* j = get(key);
    if (!j) return;
    if (!j->is_boolean()) {
      diag.error(sub(path, key), "expected true or false");
      return;
    }
    out = j->get<bool>();
  }
  void choice(const char* key, std::string& out, std::initializer_list<const char*> allowed) const {
    const json* j = get(key);
    if (!j) return;
    std::string options;
    for (const char* a : allowed) {
      if (j->is_string() && j->get<std::string>() == a) {
        out = a;
        return;
      }
      options += options.empty() ? a : std::string(" | ") + a;
    }
    diag.error(sub(path, key), "expected one of " + options);
  }
};

void read_ordering(const Fields& f, Ordering& out) {
  std::string o;
  f.choice("ordering", o, {"micromaser", "collision"});
  if (o == "collision") out = Ordering::collision;
  if (o == "micromaser") out = Ordering::micromaser;
}

std::optional<Matrix> read_initial_state(const json& j, Index dim, const std::string& path,
                                         Diagnostics& diag) {
  Matrix rho;
  if (j.is_object()) {
    if (!io::check_keys(j, {"basis"}, path, diag) || !j.contains("basis")) {
      if (!j.contains("basis")) diag.error(path, "expected a matrix or {\"basis\": k}");
      return std::nullopt;
    }
    auto k = io::read_integer(j.at("basis"), sub(path, "basis"), diag);
    if (!k) return std::nullopt;
    if (*k < 0 || *k >= dim) {
      diag.error(sub(path, "basis"), "index out of range for dimension " + std::to_string(dim));
      return std::nullopt;
    }
    return DensityMatrix::basis(dim, *k).matrix();
  }
  auto m = io::read_matrix(j, path, diag);
  if (!m) return std::nullopt;
  if (m->rows() != dim || m->cols() != dim) {
    diag.error(path, "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
    return std::nullopt;
  }
  const StateCheck sc = check_state(*m);
  if (!sc.valid) {
    diag.error(path, "not a density matrix (hermitian defect " + std::to_string(sc.hermitian_defect) +
                         ", trace defect " + std::to_string(sc.trace_defect) + ", min eigenvalue " +
                         std::to_string(sc.min_eigenvalue) + ")");
    return std::nullopt;
  }
  return *m;
}

std::optional<RealVector> read_distribution(const json& j, Index n, const std::string& path,
                                            Diagnostics& diag) {
  auto v = io::read_real_vector(j, path, diag);
  if (!v) return std::nullopt;
  bool ok = true;
  if (v->size() != n) {
    diag.error(path, "expected " + std::to_string(n) + " probabilities");
    ok = false;
  }
  for (Index i = 0; i < v->size(); ++i)
    if ((*v)(i) < 0) {
      diag.error(path, "entry " + std::to_string(i) + " is negative");
      ok = false;
    }
  if (std::abs(v->sum() - 1.0) > 1e-12) {
    diag.error(path, "probabilities sum to " + std::to_string(v->sum()));
    ok = false;
  }
  if (!ok) return std::nullopt;
  return v;
}

std::optional<Experiment> read_experiment(const json& cfg, Diagnostics& diag) {
  if (!io::check_keys(cfg, {"experiment", "model", "grid", "initial_state", "solver", "seed",
                            "tolerances", "output"},
                      "config", diag))
    return std::nullopt;
  Experiment ex;
  if (!cfg.contains("experiment") || !cfg.at("experiment").is_string()) {
    diag.error("config.experiment", "missing or not a string");
    return std::nullopt;
  }
  ex.kind = cfg.at("experiment").get<std::string>();
  const bool family_kind = ex.kind == "measure" || ex.kind == "divisibility";
  if (ex.kind != "semigroup" && ex.kind != "bipartite" && ex.kind != "semimarkov" && !family_kind) {
    diag.error("config.experiment",
               "expected one of semigroup | bipartite | semimarkov | measure | divisibility");
    return std::nullopt;
  }
  ex.prefix = ex.kind;

  // seed, tolerances, output
  if (cfg.contains("seed")) {
    auto s = io::read_integer(cfg.at("seed"), "config.seed", diag);
    if (s && *s < 0) diag.error("config.seed", "must be >= 0");
    if (s && *s >= 0) ex.seed = static_cast<std::uint64_t>(*s);
  }
  if (cfg.contains("tolerances")) {
    const json& t = cfg.at("tolerances");
    if (io::check_keys(t, {"hermitian", "trace", "positivity"}, "config.tolerances", diag)) {
      Fields f{t, "config.tolerances", diag};
      f.number("hermitian", ex.tol.hermitian, 0, 1);
      f.number("trace", ex.tol.trace, 0, 1);
      f.number("positivity", ex.tol.positivity, 0, 1);
    }
  }
  if (cfg.contains("output")) {
    const json& o = cfg.at("output");
    if (io::check_keys(o, {"dir", "prefix"}, "config.output", diag)) {
      if (o.contains("dir")) {
        if (o.at("dir").is_string())
          ex.out_dir = o.at("dir").get<std::string>();
        else
          diag.error("config.output.dir", "expected a string");
      }
      if (o.contains("prefix")) {
        const json& p = o.at("prefix");
        if (p.is_string() && !p.get<std::string>().empty() &&
            p.get<std::string>().find('/') == std::string::npos)
          ex.prefix = p.get<std::string>();
        else
          diag.error("config.output.prefix", "expected a nonempty file name without '/'");
      }
    }
  }

  // model
  const json empty = json::object();
  const json& model = cfg.contains("model") ? cfg.at("model") : empty;
  if (!cfg.contains("model")) diag.error("config.model", "missing");
  bool from_family = false;
  if (cfg.contains("model")) {
    if (ex.kind == "semigroup") {
      ex.gksl = io::read_gksl(model, "config.model", diag);
    } else if (ex.kind == "bipartite") {
      ex.bipartite = io::read_bipartite(model, "config.model", diag);
    } else if (ex.kind == "semimarkov") {
      if (model.is_object() && model.contains("pi"))
        ex.classical = io::read_classical(model, "config.model", diag);
      else
        ex.semimarkov = io::read_semimarkov(model, "config.model", diag);
    } else if (io::check_keys(model, {"semigroup", "semimarkov", "family"}, "config.model", diag)) {
      if (model.size() != 1) {
        diag.error("config.model", "expected exactly one of semigroup | semimarkov | family");
      } else if (model.contains("semigroup")) {
        ex.gksl = io::read_gksl(model.at("semigroup"), "config.model.semigroup", diag);
      } else if (model.contains("semimarkov")) {
        ex.semimarkov = io::read_semimarkov(model.at("semimarkov"), "config.model.semimarkov", diag);
      } else if (model.contains("family")) {
        from_family = true;
        ex.family = io::read_family(model.at("family"), "config.model.family", diag);
        if (ex.family) ex.grid = ex.family->grid();
      }
    }
  }

  // grid
  if (cfg.contains("grid")) {
    if (from_family) {
      diag.error("config.grid", "not allowed with a tabulated family (the family carries its grid)");
    } else if (io::check_keys(cfg.at("grid"), {"t_max", "n_steps"}, "config.grid", diag)) {
      const json& g = cfg.at("grid");
      double t_max = -1;
      long n_steps = 0;
      Fields f{g, "config.grid", diag};
      if (!g.contains("t_max")) diag.error("config.grid.t_max", "missing");
      if (!g.contains("n_steps")) diag.error("config.grid.n_steps", "missing");
      f.number("t_max", t_max, 1e-300, 1e12);
      f.integer("n_steps", n_steps, 1, 10000000);
      if (t_max > 0 && n_steps > 0) ex.grid = uniform_grid(t_max, static_cast<int>(n_steps));
    }
  } else if (!from_family) {
    diag.error("config.grid", "missing");
  }

  // initial state
  const bool needs_state = !family_kind;
  if (cfg.contains("initial_state")) {
    const json& s = cfg.at("initial_state");
    if (!needs_state) {
      diag.error("config.initial_state", "not used by this experiment");
    } else if (ex.classical) {
      ex.p0 = read_distribution(s, ex.classical->sites(), "config.initial_state", diag);
    } else {
      Index dim = 0;
      if (ex.gksl) dim = ex.gksl->dim();
      if (ex.bipartite) dim = ex.bipartite->dim_system();
      if (ex.semimarkov) dim = ex.semimarkov->dim();
      if (dim > 0) ex.rho0 = read_initial_state(s, dim, "config.initial_state", diag);
    }
  } else if (needs_state) {
    diag.error("config.initial_state", "missing");
  }

  // solver
  const json& solver = cfg.contains("solver") ? cfg.at("solver") : empty;
  Solver& s = ex.solver;
  const std::string sp = "config.solver";
  Fields f{solver, sp, diag};
  if (ex.kind == "semigroup" || ex.kind == "bipartite") {
    io::check_keys(solver, {}, sp, diag);
  } else if (ex.kind == "semimarkov" && model.is_object() && model.contains("pi")) {
    if (io::check_keys(solver, {"method", "n_traj", "talbot_nodes"}, sp, diag)) {
      s.method = "gme";
      f.choice("method", s.method, {"gme", "mc"});
      f.integer("n_traj", s.n_traj, 1, 100000000);
      f.integer("talbot_nodes", s.talbot_nodes, 2, 1000);
    }
  } else if (ex.kind == "semimarkov") {
    if (io::check_keys(solver, {"method", "ordering", "k_max", "n_quad", "richardson", "n_traj",
                                "talbot_nodes"},
                       sp, diag)) {
      s.method = "laplace";
      f.choice("method", s.method, {"laplace", "series", "mc", "volterra"});
      read_ordering(f, s.ordering);
      f.integer("k_max", s.k_max, 0, 10000);
      f.integer("n_quad", s.n_quad, 2, 1000000);
      f.boolean("richardson", s.richardson);
      f.integer("n_traj", s.n_traj, 1, 100000000);
      f.integer("talbot_nodes", s.talbot_nodes, 2, 1000);
    }
  } else if (ex.kind == "measure") {
    if (io::check_keys(solver, {"measure", "ordering", "talbot_nodes", "theta_points", "phi_points",
                                "random_pairs", "weight_points", "refine_starts", "revival_tol"},
                       sp, diag)) {
      f.choice("measure", s.measure, {"blp", "helstrom", "both"});
      read_ordering(f, s.ordering);
      f.integer("talbot_nodes", s.talbot_nodes, 2, 1000);
      f.integer("theta_points", s.measure_opt.theta_points, 2, 10000);
      f.integer("phi_points", s.measure_opt.phi_points, 1, 10000);
      f.integer("random_pairs", s.measure_opt.random_pairs, 0, 1000000);
      f.integer("weight_points", s.measure_opt.weight_points, 2, 10000);
      f.integer("refine_starts", s.measure_opt.refine_starts, 0, 1000);
      f.number("revival_tol", s.measure_opt.revival_tol, 0, 1);
    }
  } else if (ex.kind == "divisibility") {
    if (io::check_keys(solver, {"ordering", "talbot_nodes", "tol", "n_samples", "max_condition"}, sp,
                       diag)) {
      read_ordering(f, s.ordering);
      f.integer("talbot_nodes", s.talbot_nodes, 2, 1000);
      f.number("tol", s.div_tol, 0, 1);
      f.integer("n_samples", s.n_samples, 1, 100000000);
      f.number("max_condition", s.max_condition, 1, 1e300);
    }
  }
  if (!diag.ok()) return std::nullopt;
  return ex;
}

// ---------------------------------------------------------------------------
// output

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::string csv() const {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
    out += "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + fmt(r[i]);
      out += "\n";
    }
    return out;
  }
};

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open " + tmp.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw Error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> state_header(Index d) {
  std::vector<std::string> h{"t"};
  if (d == 2) {
    h.push_back("p_ground");
    h.push_back("p_excited");
  } else {
    for (Index k = 0; k < d; ++k) h.push_back("p_" + std::to_string(k));
  }
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) {
      h.push_back("re_" + std::to_string(i) + "_" + std::to_string(j));
      h.push_back("im_" + std::to_string(i) + "_" + std::to_string(j));
    }
  return h;
}

std::vector<double> state_row(double t, const Matrix& rho) {
  std::vector<double> r{t};
  for (Index k = 0; k < rho.rows(); ++k) r.push_back(rho(k, k).real());
  for (Index i = 0; i < rho.rows(); ++i)
    for (Index j = 0; j < rho.cols(); ++j) {
      r.push_back(rho(i, j).real());
      r.push_back(rho(i, j).imag());
    }
  return r;
}

/// Worst-case state invariants over the emitted rows.
struct StateAudit {
  double hermitian_defect = 0;
  double trace_defect = 0;
  double min_eigenvalue = INFINITY;
  std::string first_violation;

  void add(double t, const Matrix& rho, const Tolerances& tol, double extra_trace = 0) {
    const double h = oqs::hermitian_defect(rho);
    const double tr = std::abs(rho.trace() - Complex(1.0));
    const double ev = hermitian_eigenvalues(Matrix(0.5 * (rho + rho.adjoint())))(0);
    hermitian_defect = std::max(hermitian_defect, h);
    trace_defect = std::max(trace_defect, tr);
    min_eigenvalue = std::min(min_eigenvalue, ev);
    if (first_violation.empty() &&
        (!(h <= tol.hermitian) || !(tr <= tol.trace + extra_trace) || !(ev >= -tol.positivity)))
      first_violation = "invalid state at t = " + fmt(t) + " (hermitian defect " + fmt(h) +
                        ", trace defect " + fmt(tr) + ", min eigenvalue " + fmt(ev) + ")";
  }
  json to_json() const {
    return {{"max_hermitian_defect", hermitian_defect},
            {"max_trace_defect", trace_defect},
            {"min_eigenvalue", min_eigenvalue},
            {"valid", first_violation.empty()}};
  }
};

struct Report {
  Table table;
  json summary = json::object();
  std::string violation;
};

const char* ordering_name(Ordering o) { return o == Ordering::collision ? "collision" : "micromaser"; }

Report states_report(const std::vector<double>& grid, const std::vector<Matrix>& states,
                     const Tolerances& tol, const std::vector<double>& extra_trace = {}) {
  Report r;
  r.table.header = state_header(states.front().rows());
  StateAudit audit;
  for (std::size_t i = 0; i < states.size(); ++i) {
    r.table.rows.push_back(state_row(grid[i], states[i]));
    audit.add(grid[i], states[i], tol, extra_trace.empty() ? 0.0 : extra_trace[i]);
  }
  r.summary["checks"] = audit.to_json();
  r.violation = audit.first_violation;
  return r;
}

Report run_semigroup(const Experiment& ex) {
  std::vector<Matrix> states;
  for (double t : ex.grid) states.push_back(apply_map(evolve_semigroup(*ex.gksl, t), *ex.rho0));
  Report r = states_report(ex.grid, states, ex.tol);
  r.summary["method"] = "matrix_exponential";
  return r;
}

Report run_bipartite(const Experiment& ex) {
  std::vector<Matrix> states;
  double deviation = 0;
  for (double t : ex.grid) {
    const Matrix exact = reduced_state(*ex.bipartite, *ex.rho0, t);
    const Matrix mapped = apply_map(reduced_map_kraus(*ex.bipartite, t), *ex.rho0);
    deviation = std::max(deviation, max_abs(exact - mapped));
    states.push_back(exact);
  }
  Report r = states_report(ex.grid, states, ex.tol);
  r.summary["method"] = "joint_unitary";
  r.summary["max_kraus_deviation"] = deviation;
  if (r.violation.empty() && deviation > 1e-8)
    r.violation = "reduced Kraus map disagrees with the partial trace by " + fmt(deviation);
  return r;
}

Report run_semimarkov(const Experiment& ex, int threads) {
  const SemiMarkovModel& m = *ex.semimarkov;
  const Solver& s = ex.solver;
  std::vector<Matrix> states;
  std::vector<double> extra_trace;
  json info = {{"method", s.method}, {"ordering", ordering_name(s.ordering)}};
  if (s.method == "laplace") {
    const LaplaceOptions opt{s.talbot_nodes, s.ordering};
    for (double t : ex.grid) states.push_back(laplace_solution(m, *ex.rho0, t, opt));
    info["talbot_nodes"] = s.talbot_nodes;
  } else if (s.method == "series") {
    SeriesOptions opt;
    opt.k_max = s.k_max;
    opt.n_quad = s.n_quad;
    opt.ordering = s.ordering;
    opt.richardson = s.richardson;
    double worst_tail = 0;
    for (double t : ex.grid) {
      const SeriesPoint p = series_evaluate(m, *ex.rho0, t, opt);
      states.push_back(p.rho);
      extra_trace.push_back(p.tail_bound);
      worst_tail = std::max(worst_tail, p.tail_bound);
    }
    info["k_max"] = s.k_max;
    info["n_quad"] = s.n_quad;
    info["richardson"] = s.richardson;
    info["max_tail_bound"] = worst_tail;
  } else if (s.method == "mc") {
    McOptions opt;
    opt.n_traj = s.n_traj;
    opt.seed = ex.seed;
    opt.ordering = s.ordering;
    opt.threads = threads;
    const McEstimate est = mc_simulate(m, *ex.rho0, ex.grid, opt);
    double worst = 0;
    for (std::size_t i = 0; i < est.mean.size(); ++i) {
      states.push_back(est.mean[i]);
      worst = std::max({worst, est.stderr_real(i).maxCoeff(), est.stderr_imag(i).maxCoeff()});
    }
    info["n_traj"] = s.n_traj;
    info["max_entry_stderr"] = worst;
  } else {
    const double h = ex.grid.size() > 1 ? ex.grid[1] - ex.grid[0] : 1.0;
    const SampledKernel k =
        sample_memory_kernel(m, s.ordering, h, static_cast<Index>(ex.grid.size()), s.talbot_nodes);
    states = solve_volterra(k, *ex.rho0, ex.grid);
    info["step"] = h;
    info["talbot_nodes"] = s.talbot_nodes;
  }
  Report r = states_report(ex.grid, states, ex.tol, extra_trace);
  r.summary.update(info);
  return r;
}

Report run_classical(const Experiment& ex, int threads) {
  const ClassicalSemiMarkov& c = *ex.classical;
  const Index n = c.sites();
  Report r;
  r.table.header = {"t"};
  for (Index k = 0; k < n; ++k) r.table.header.push_back("P_" + std::to_string(k));
  std::vector<RealVector> probs, errs;
  if (ex.solver.method == "gme") {
    probs = classical_gme_solve(c, *ex.p0, ex.grid, ex.solver.talbot_nodes);
    r.summary["method"] = "gme";
  } else {
    const ClassicalMcEstimate est =
        classical_mc(c, *ex.p0, ex.grid, ex.solver.n_traj, ex.seed, threads);
    probs = est.mean;
    errs = est.stderr_;
    for (Index k = 0; k < n; ++k) r.table.header.push_back("se_" + std::to_string(k));
    r.summary["method"] = "mc";
    r.summary["n_traj"] = ex.solver.n_traj;
  }
  double min_entry = INFINITY, sum_defect = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    std::vector<double> row{ex.grid[i]};
    for (Index k = 0; k < n; ++k) row.push_back(probs[i](k));
    if (!errs.empty())
      for (Index k = 0; k < n; ++k) row.push_back(errs[i](k));
    r.table.rows.push_back(std::move(row));
    min_entry = std::min(min_entry, probs[i].minCoeff());
    const double defect = std::abs(probs[i].sum() - 1.0);
    sum_defect = std::max(sum_defect, defect);
    if (r.violation.empty() && (probs[i].minCoeff() < -1e-8 || defect > 1e-8))
      r.violation = "invalid probability vector at t = " + fmt(ex.grid[i]);
  }
  r.summary["checks"] = {{"min_entry", min_entry},
                         {"max_sum_defect", sum_defect},
                         {"valid", r.violation.empty()}};
  return r;
}

DynamicsFamily build_family(const Experiment& ex) {
  if (ex.family) return *ex.family;
  if (ex.gksl) return semigroup_family(*ex.gksl, ex.grid);
  return semimarkov_family(*ex.semimarkov, ex.grid, {ex.solver.talbot_nodes, ex.solver.ordering});
}

json measure_json(const MeasureResult& m) {
  json intervals = json::array();
  for (const auto& [a, b] : m.revival_intervals) intervals.push_back({a, b});
  return {{"value", m.value},        {"p1", m.p1},
          {"p2", m.p2},              {"rho1", io::to_json(m.rho1.matrix())},
          {"rho2", io::to_json(m.rho2.matrix())}, {"revival_intervals", intervals},
          {"evaluations", m.evaluations}};
}

Report run_measure(const Experiment& ex, int threads) {
  const DynamicsFamily fam = build_family(ex);
  MeasureOptions opt = ex.solver.measure_opt;
  opt.seed = ex.seed;
  opt.threads = threads;
  Report r;
  r.table.header = {"t"};
  std::optional<MeasureResult> blp, hel;
  if (ex.solver.measure != "helstrom") {
    blp = blp_measure(fam, opt);
    r.table.header.push_back("trace_distance");
    r.summary["blp"] = measure_json(*blp);
  }
  if (ex.solver.measure != "blp") {
    hel = helstrom_measure(fam, opt);
    r.table.header.push_back("helstrom_norm");
    r.summary["helstrom"] = measure_json(*hel);
  }
  for (Index i = 0; i < fam.size(); ++i) {
    std::vector<double> row{fam.grid()[i]};
    if (blp) row.push_back(blp->trajectory[i].value);
    if (hel) row.push_back(hel->trajectory[i].value);
    r.table.rows.push_back(std::move(row));
  }
  return r;
}

Report run_divisibility(const Experiment& ex, int threads) {
  const DynamicsFamily fam = build_family(ex);
  const CpDivisibilityReport cp = check_cp_divisible(fam, ex.solver.div_tol, ex.solver.max_condition);
  PDivisibilityOptions popt;
  popt.seed = ex.seed;
  popt.max_condition = ex.solver.max_condition;
  popt.threads = threads;
  const PDivisibilityReport p =
      check_p_divisible(fam, ex.solver.div_tol, ex.solver.n_samples, popt);
  Report r;
  r.table.header = {"t_start", "t_end", "min_choi_eig", "min_output_eig", "helstrom_excess"};
  const auto& g = fam.grid();
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    auto at = [&](const std::vector<double>& v) { return i < v.size() ? v[i] : NAN; };
    r.table.rows.push_back({g[i], g[i + 1], at(cp.min_choi_eigs), at(p.min_output_eigs),
                            at(p.helstrom_excess)});
  }
  r.summary["cp_divisible"] = cp.divisible;
  r.summary["cp_worst_min_choi_eig"] = cp.worst_min_choi_eig;
  r.summary["p_divisible"] = p.divisible;
  r.summary["p_exhaustive"] = p.exhaustive;
  r.summary["p_worst_min_eig"] = p.worst_min_eig;
  r.summary["helstrom_monotone"] = p.helstrom_monotone;
  r.summary["cross_check_agrees"] = p.cross_check_agrees;
  if (p.witness) {
    const HelstromWitness& w = *p.witness;
    r.summary["witness"] = {{"t_start", g[w.step]},
                            {"t_end", g[w.step + 1]},
                            {"p1", w.p1},
                            {"p2", w.p2},
                            {"increase", w.increase},
                            {"rho1", io::to_json(w.rho1)},
                            {"rho2", io::to_json(w.rho2)}};
  }
  if (cp.divisible && !p.divisible)
    r.violation = "CP-divisible family reported as not P-divisible";
  return r;
}

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

std::optional<json> parse_text(const std::string& text, Diagnostics& diag) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    diag.error("config", "JSON syntax error at " + line_column(text, e.byte) + ": " + e.what());
    return std::nullopt;
  }
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) return std::nullopt;
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::string> validate_config(const std::string& config_text) {
  Diagnostics diag;
  if (auto cfg = parse_text(config_text, diag)) read_experiment(*cfg, diag);
  return diag.messages;
}

RunResult run_experiment(const std::string& config_text, const RunOptions& opt) {
  RunResult res;
  Diagnostics diag;
  std::optional<Experiment> ex;
  if (auto cfg = parse_text(config_text, diag)) ex = read_experiment(*cfg, diag);
  if (!diag.ok() || !ex) {
    res.exit_code = kExitConfig;
    res.diagnostics = diag.messages;
    return res;
  }
  if (opt.seed) ex->seed = *opt.seed;
  if (opt.out_dir) ex->out_dir = *opt.out_dir;
  if (opt.validate_only) return res;
  const int threads = std::max(1, opt.threads);

  Report report;
  try {
    if (ex->kind == "semigroup")
      report = run_semigroup(*ex);
    else if (ex->kind == "bipartite")
      report = run_bipartite(*ex);
    else if (ex->kind == "semimarkov" && ex->classical)
      report = run_classical(*ex, threads);
    else if (ex->kind == "semimarkov")
      report = run_semimarkov(*ex, threads);
    else if (ex->kind == "measure")
      report = run_measure(*ex, threads);
    else
      report = run_divisibility(*ex, threads);
  } catch (const std::exception& e) {
    // the config was fully validated above, so anything raised here is a
    // numerical failure of the solver
    res.exit_code = kExitNumerical;
    res.diagnostics.push_back(std::string("numerical failure: ") + e.what());
    return res;
  }

  json summary = {{"experiment", ex->kind}, {"seed", ex->seed}};
  summary.update(report.summary);
  summary["invariants_ok"] = report.violation.empty();
  if (!report.violation.empty()) summary["invariant_violation"] = report.violation;

  namespace fs = std::filesystem;
  try {
    const fs::path dir(ex->out_dir);
    fs::create_directories(dir);
    const fs::path csv = dir / (ex->prefix + ".csv");
    const fs::path sum = dir / (ex->prefix + "_summary.json");
    const fs::path man = dir / (ex->prefix + "_manifest.json");
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config_text)));
    const json manifest = {
        {"tool", "oqs"},
        {"version", kVersion},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)},
        {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                     std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                     std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
        {"experiment", ex->kind},
        {"config_fnv1a64", hash},
        {"seed", ex->seed},
        {"outputs", {csv.filename().string(), sum.filename().string()}}};
    write_atomic(csv, report.table.csv());
    write_atomic(sum, summary.dump(2) + "\n");
    write_atomic(man, manifest.dump(2) + "\n");
    res.outputs = {csv.string(), sum.string(), man.string()};
  } catch (const std::exception& e) {
    res.exit_code = kExitNumerical;
    res.diagnostics.push_back(std::string("output failure: ") + e.what());
    return res;
  }
  if (!report.violation.empty()) {
    res.exit_code = kExitInvariant;
    res.diagnostics.push_back("invariant violation: " + report.violation);
  }
  return res;
}

RunResult run_config_file(const std::string& path, const RunOptions& opt) {
  auto text = read_file(path);
  if (!text) {
    RunResult res;
    res.exit_code = kExitConfig;
    res.diagnostics.push_back(path + ": cannot read file");
    return res;
  }
  return run_experiment(*text, opt);
}

std::vector<std::string> validate_config_file(const std::string& path) {
  auto text = read_file(path);
  if (!text) return {path + ": cannot read file"};
  return validate_config(*text);
}

}  // namespace oqs
