#include "oqs/io.hpp"

#include <cmath>

namespace oqs::io {

namespace {

std::string sub(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string item(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

std::string join(const std::vector<std::string>& msgs) {
  std::string out = "invalid configuration";
  for (const auto& m : msgs) out += "\n  " + m;
  return out;
}

std::optional<Complex> read_entry(const json& j, const std::string& path, Diagnostics& diag) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return Complex(j[0].get<double>(), j[1].get<double>());
  diag.error(path, "expected a number or a [re, im] pair");
  return std::nullopt;
}

bool require_square(const Matrix& m, Index dim, const std::string& path, Diagnostics& diag) {
  if (m.rows() == dim && m.cols() == dim) return true;
  diag.error(path, "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix, got " +
                       std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  return false;
}

const json* member(const json& j, const char* key, const std::string& path, Diagnostics& diag,
                   bool required = true) {
  if (j.is_object() && j.contains(key)) return &j.at(key);
  if (required) diag.error(sub(path, key), "missing");
  return nullptr;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> msgs)
    : InvalidInput(join(msgs)), messages(std::move(msgs)) {}

bool check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path, Diagnostics& diag) {
  if (!obj.is_object()) {
    diag.error(path, "expected an object");
    return false;
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* a : allowed) known = known || it.key() == a;
    if (!known) diag.error(sub(path, it.key()), "unknown key");
  }
  return true;
}

std::optional<double> read_number(const json& j, const std::string& path, Diagnostics& diag) {
  if (j.is_number()) {
    const double x = j.get<double>();
    if (std::isfinite(x)) return x;
  }
  diag.error(path, "expected a finite number");
  return std::nullopt;
}

std::optional<long> read_integer(const json& j, const std::string& path, Diagnostics& diag) {
  if (j.is_number_integer()) return j.get<long>();
  if (j.is_number_float()) {
    const double x = j.get<double>();
    if (std::isfinite(x) && x == std::floor(x) && std::abs(x) < 9e15) return static_cast<long>(x);
  }
  diag.error(path, "expected an integer");
  return std::nullopt;
}

std::optional<Matrix> read_matrix(const json& j, const std::string& path, Diagnostics& diag) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) {
    diag.error(path, "expected a nonempty array of rows");
    return std::nullopt;
  }
  const std::size_t rows = j.size(), cols = j[0].size();
  Matrix m(rows, cols);
  bool ok = true;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      diag.error(item(path, r), "expected a row of length " + std::to_string(cols));
      ok = false;
      continue;
    }
    for (std::size_t c = 0; c < cols; ++c) {
      auto e = read_entry(j[r][c], item(item(path, r), c), diag);
      if (!e || !std::isfinite(e->real()) || !std::isfinite(e->imag())) {
        ok = false;
        continue;
      }
      m(r, c) = *e;
    }
  }
  if (!ok) return std::nullopt;
  return m;
}

std::optional<RealMatrix> read_real_matrix(const json& j, const std::string& path,
                                           Diagnostics& diag) {
  auto m = read_matrix(j, path, diag);
  if (!m) return std::nullopt;
  if (max_abs(m->imag()) != 0) {
    diag.error(path, "expected a real matrix");
    return std::nullopt;
  }
  return RealMatrix(m->real());
}

std::optional<RealVector> read_real_vector(const json& j, const std::string& path,
                                           Diagnostics& diag) {
  if (!j.is_array() || j.empty()) {
    diag.error(path, "expected a nonempty array of numbers");
    return std::nullopt;
  }
  RealVector v(j.size());
  bool ok = true;
  for (std::size_t i = 0; i < j.size(); ++i) {
    auto x = read_number(j[i], item(path, i), diag);
    if (x) v(i) = *x;
    ok = ok && x.has_value();
  }
  if (!ok) return std::nullopt;
  return v;
}

std::optional<QuantumMap> read_map(const json& j, const std::string& path, Diagnostics& diag) {
  if (!check_keys(j, {"kraus", "superoperator", "choi", "dim_in", "dim_out"}, path, diag))
    return std::nullopt;
  const int forms = int(j.contains("kraus")) + int(j.contains("superoperator")) + int(j.contains("choi"));
  if (forms != 1) {
    diag.error(path, "expected exactly one of kraus, superoperator, choi");
    return std::nullopt;
  }
  try {
    if (j.contains("kraus")) {
      const json& list = j.at("kraus");
      if (!list.is_array() || list.empty()) {
        diag.error(sub(path, "kraus"), "expected a nonempty array of matrices");
        return std::nullopt;
      }
      std::vector<Matrix> ops;
      bool ok = true;
      for (std::size_t k = 0; k < list.size(); ++k) {
        auto m = read_matrix(list[k], item(sub(path, "kraus"), k), diag);
        if (m) ops.push_back(std::move(*m));
        ok = ok && m.has_value();
      }
      if (!ok) return std::nullopt;
      return QuantumMap::from_kraus(std::move(ops));
    }
    if (j.contains("superoperator")) {
      auto s = read_matrix(j.at("superoperator"), sub(path, "superoperator"), diag);
      if (!s) return std::nullopt;
      return QuantumMap::from_superoperator(std::move(*s));
    }
    auto c = read_matrix(j.at("choi"), sub(path, "choi"), diag);
    const json* din = member(j, "dim_in", path, diag);
    const json* dout = member(j, "dim_out", path, diag);
    if (!c || !din || !dout) return std::nullopt;
    auto a = read_integer(*din, sub(path, "dim_in"), diag);
    auto b = read_integer(*dout, sub(path, "dim_out"), diag);
    if (!a || !b) return std::nullopt;
    return QuantumMap::from_choi(std::move(*c), *a, *b);
  } catch (const InvalidInput& e) {
    diag.error(path, e.what());
    return std::nullopt;
  }
}

std::optional<GKSLModel> read_gksl(const json& j, const std::string& path, Diagnostics& diag) {
  if (!check_keys(j, {"dim", "H", "channels"}, path, diag)) return std::nullopt;
  const json* jd = member(j, "dim", path, diag);
  if (!jd) return std::nullopt;
  auto dim = read_integer(*jd, sub(path, "dim"), diag);
  if (!dim) return std::nullopt;
  if (*dim < 1) {
    diag.error(sub(path, "dim"), "must be >= 1");
    return std::nullopt;
  }
  bool ok = true;
  Matrix h = Matrix::Zero(*dim, *dim);
  if (const json* jh = member(j, "H", path, diag, false)) {
    auto m = read_matrix(*jh, sub(path, "H"), diag);
    if (m && require_square(*m, *dim, sub(path, "H"), diag)) {
      if (hermitian_defect(*m) > kStructuralTol * std::max(1.0, max_abs(*m))) {
        diag.error(sub(path, "H"), "Hamiltonian is not Hermitian");
        ok = false;
      }
      h = *m;
    } else {
      ok = false;
    }
  }
  std::vector<LindbladChannel> channels;
  if (const json* jc = member(j, "channels", path, diag, false)) {
    if (!jc->is_array()) {
      diag.error(sub(path, "channels"), "expected an array");
      ok = false;
    } else {
      for (std::size_t k = 0; k < jc->size(); ++k) {
        const std::string p = item(sub(path, "channels"), k);
        const json& c = (*jc)[k];
        if (!check_keys(c, {"gamma", "L"}, p, diag)) {
          ok = false;
          continue;
        }
        const json* jg = member(c, "gamma", p, diag);
        const json* jl = member(c, "L", p, diag);
        std::optional<double> g = jg ? read_number(*jg, sub(p, "gamma"), diag) : std::nullopt;
        std::optional<Matrix> l = jl ? read_matrix(*jl, sub(p, "L"), diag) : std::nullopt;
        if (g && *g < 0) {
          diag.error(path, "channel " + std::to_string(k) + ": negative rate (gamma = " +
                               std::to_string(*g) + ")");
          g.reset();
        }
        if (l && !require_square(*l, *dim, sub(p, "L"), diag)) l.reset();
        if (!g || !l) {
          ok = false;
          continue;
        }
        channels.push_back({*g, std::move(*l)});
      }
    }
  }
  if (!ok) return std::nullopt;
  try {
    return GKSLModel(HermitianOp(h), std::move(channels));
  } catch (const InvalidInput& e) {
    diag.error(path, e.what());
    return std::nullopt;
  }
}

std::optional<BipartiteModel> read_bipartite(const json& j, const std::string& path,
                                             Diagnostics& diag) {
  if (!check_keys(j, {"dS", "dE", "H_total", "rho_E"}, path, diag)) return std::nullopt;
  const json* js = member(j, "dS", path, diag);
  const json* je = member(j, "dE", path, diag);
  const json* jh = member(j, "H_total", path, diag);
  const json* jr = member(j, "rho_E", path, diag);
  auto ds = js ? read_integer(*js, sub(path, "dS"), diag) : std::nullopt;
  auto de = je ? read_integer(*je, sub(path, "dE"), diag) : std::nullopt;
  auto h = jh ? read_matrix(*jh, sub(path, "H_total"), diag) : std::nullopt;
  auto r = jr ? read_matrix(*jr, sub(path, "rho_E"), diag) : std::nullopt;
  if (!ds || !de || !h || !r) return std::nullopt;
  if (*ds < 1 || *de < 1) {
    diag.error(path, "dimensions must be >= 1");
    return std::nullopt;
  }
  bool ok = require_square(*h, *ds * *de, sub(path, "H_total"), diag);
  ok = require_square(*r, *de, sub(path, "rho_E"), diag) && ok;
  if (!ok) return std::nullopt;
  const StateCheck sc = check_state(*r);
  if (!sc.valid) {
    diag.error(sub(path, "rho_E"), "not a density matrix (trace defect " +
                                       std::to_string(sc.trace_defect) + ", min eigenvalue " +
                                       std::to_string(sc.min_eigenvalue) + ")");
    return std::nullopt;
  }
  try {
    return BipartiteModel(*ds, *de, HermitianOp(*h), DensityMatrix(*r));
  } catch (const InvalidInput& e) {
    diag.error(path, e.what());
    return std::nullopt;
  }
}

std::optional<PhaseTypeWTD> read_wtd(const json& j, const std::string& path, Diagnostics& diag) {
  if (!check_keys(j, {"alpha", "S"}, path, diag)) return std::nullopt;
  const json* ja = member(j, "alpha", path, diag);
  const json* js = member(j, "S", path, diag);
  auto a = ja ? read_real_vector(*ja, sub(path, "alpha"), diag) : std::nullopt;
  auto s = js ? read_real_matrix(*js, sub(path, "S"), diag) : std::nullopt;
  if (!a || !s) return std::nullopt;
  try {
    return PhaseTypeWTD(*a, *s);
  } catch (const InvalidInput& e) {
    diag.error(path, e.what());
    return std::nullopt;
  }
}

std::optional<SemiMarkovModel> read_semimarkov(const json& j, const std::string& path,
                                               Diagnostics& diag) {
  if (!check_keys(j, {"dim", "E", "F_generator", "wtd"}, path, diag)) return std::nullopt;
  const json* jd = member(j, "dim", path, diag);
  const json* je = member(j, "E", path, diag);
  const json* jf = member(j, "F_generator", path, diag);
  const json* jw = member(j, "wtd", path, diag);
  auto dim = jd ? read_integer(*jd, sub(path, "dim"), diag) : std::nullopt;
  auto e = je ? read_map(*je, sub(path, "E"), diag) : std::nullopt;
  auto f = jf ? read_gksl(*jf, sub(path, "F_generator"), diag) : std::nullopt;
  auto w = jw ? read_wtd(*jw, sub(path, "wtd"), diag) : std::nullopt;
  if (!dim || !e || !f || !w) return std::nullopt;
  bool ok = true;
  if (f->dim() != *dim) {
    diag.error(sub(path, "F_generator.dim"), "does not match dim");
    ok = false;
  }
  if (e->dim_in() != *dim || e->dim_out() != *dim) {
    diag.error(sub(path, "E"), "map dimension does not match dim");
    ok = false;
  }
  if (!ok) return std::nullopt;
  const CptpReport rep = is_cptp(*e, 1e-10);
  if (!rep.cp) {
    diag.error(sub(path, "E"), "not completely positive (min Choi eigenvalue " +
                                   std::to_string(rep.min_choi_eig) + ")");
    ok = false;
  }
  if (!rep.tp) {
    diag.error(sub(path, "E"), "not trace preserving (defect " + std::to_string(rep.tp_defect) + ")");
    ok = false;
  }
  if (!ok) return std::nullopt;
  try {
    return SemiMarkovModel(std::move(*e), std::move(*f), std::move(*w));
  } catch (const InvalidInput& ex) {
    diag.error(path, ex.what());
    return std::nullopt;
  }
}

std::optional<ClassicalSemiMarkov> read_classical(const json& j, const std::string& path,
                                                  Diagnostics& diag) {
  if (!check_keys(j, {"pi", "wtds"}, path, diag)) return std::nullopt;
  const json* jp = member(j, "pi", path, diag);
  const json* jw = member(j, "wtds", path, diag);
  auto pi = jp ? read_real_matrix(*jp, sub(path, "pi"), diag) : std::nullopt;
  bool ok = pi.has_value();
  if (pi)
    for (const auto& v : stochastic_violations(*pi)) {
      diag.error(sub(path, "pi"), v);
      ok = false;
    }
  std::vector<PhaseTypeWTD> wtds;
  if (jw) {
    if (!jw->is_array()) {
      diag.error(sub(path, "wtds"), "expected an array");
      ok = false;
    } else {
      for (std::size_t k = 0; k < jw->size(); ++k) {
        auto w = read_wtd((*jw)[k], item(sub(path, "wtds"), k), diag);
        if (w) wtds.push_back(std::move(*w));
        ok = ok && w.has_value();
      }
    }
  } else {
    ok = false;
  }
  if (ok && static_cast<Index>(wtds.size()) != pi->rows()) {
    diag.error(sub(path, "wtds"), "expected " + std::to_string(pi->rows()) + " entries, one per site");
    ok = false;
  }
  if (!ok) return std::nullopt;
  return ClassicalSemiMarkov(std::move(*pi), std::move(wtds));
}

std::optional<DynamicsFamily> read_family(const json& j, const std::string& path,
                                          Diagnostics& diag) {
  if (!check_keys(j, {"grid", "maps"}, path, diag)) return std::nullopt;
  const json* jg = member(j, "grid", path, diag);
  const json* jm = member(j, "maps", path, diag);
  auto grid = jg ? read_real_vector(*jg, sub(path, "grid"), diag) : std::nullopt;
  if (!grid || !jm) return std::nullopt;
  if (!jm->is_array() || jm->size() != static_cast<std::size_t>(grid->size())) {
    diag.error(sub(path, "maps"), "expected one superoperator per grid point");
    return std::nullopt;
  }
  std::vector<Matrix> maps;
  bool ok = true;
  for (std::size_t k = 0; k < jm->size(); ++k) {
    auto m = read_matrix((*jm)[k], item(sub(path, "maps"), k), diag);
    if (m) maps.push_back(std::move(*m));
    ok = ok && m.has_value();
  }
  if (!ok) return std::nullopt;
  try {
    return DynamicsFamily(std::vector<double>(grid->data(), grid->data() + grid->size()),
                          std::move(maps));
  } catch (const InvalidInput& e) {
    diag.error(path, e.what());
    return std::nullopt;
  }
}

json to_json(const Matrix& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) {
      const Complex z = m(r, c);
      if (z.imag() == 0)
        row.push_back(z.real());
      else
        row.push_back(json::array({z.real(), z.imag()}));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json to_json(const RealMatrix& m) { return to_json(Matrix(m.cast<Complex>())); }

json to_json(const RealVector& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const QuantumMap& m) {
  switch (m.representation()) {
    case Representation::kraus: {
      json ops = json::array();
      for (const auto& k : m.kraus_ops()) ops.push_back(to_json(k));
      return {{"kraus", ops}};
    }
    case Representation::superoperator:
      return {{"superoperator", to_json(m.matrix())}};
    case Representation::choi:
      return {{"choi", to_json(m.matrix())}, {"dim_in", m.dim_in()}, {"dim_out", m.dim_out()}};
  }
  return {};
}

json to_json(const GKSLModel& m) {
  json channels = json::array();
  for (const auto& c : m.channels()) channels.push_back({{"gamma", c.gamma}, {"L", to_json(c.op)}});
  return {{"dim", m.dim()}, {"H", to_json(m.hamiltonian().matrix())}, {"channels", channels}};
}

json to_json(const BipartiteModel& m) {
  return {{"dS", m.dim_system()},
          {"dE", m.dim_environment()},
          {"H_total", to_json(m.hamiltonian().matrix())},
          {"rho_E", to_json(m.environment_state().matrix())}};
}

json to_json(const PhaseTypeWTD& w) {
  return {{"alpha", to_json(w.alpha())}, {"S", to_json(w.generator())}};
}

json to_json(const SemiMarkovModel& m) {
  return {{"dim", m.dim()},
          {"E", to_json(m.jump())},
          {"F_generator", to_json(m.free_evolution())},
          {"wtd", to_json(m.wtd())}};
}

json to_json(const ClassicalSemiMarkov& c) {
  json wtds = json::array();
  for (const auto& w : c.wtds()) wtds.push_back(to_json(w));
  return {{"pi", to_json(c.jump_matrix())}, {"wtds", wtds}};
}

json to_json(const DynamicsFamily& f) {
  json maps = json::array();
  for (const auto& m : f.maps()) maps.push_back(to_json(m));
  return {{"grid", f.grid()}, {"maps", maps}};
}

}  // namespace oqs::io
