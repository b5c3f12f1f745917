// JSON encoding of matrices, maps and models.
//
// Matrices are arrays of rows; an entry is a number or a [re, im] pair.
// Readers never throw on bad input: they record every problem they find in
// a Diagnostics list (as "path: message") and return nullopt.
#pragma once

#include "oqs/bipartite.hpp"
#include "oqs/classical.hpp"
#include "oqs/gksl.hpp"
#include "oqs/nonmarkov.hpp"
#include "oqs/phase_type.hpp"
#include "oqs/qcore.hpp"
#include "oqs/semimarkov.hpp"

#include <json.hpp>

#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace oqs::io {

using json = nlohmann::json;

struct Diagnostics {
  std::vector<std::string> messages;
  void error(const std::string& path, const std::string& msg) {
    messages.push_back(path.empty() ? msg : path + ": " + msg);
  }
  bool ok() const { return messages.empty(); }
};

/// Configuration rejected; what() joins every diagnostic.
class ConfigError : public InvalidInput {
 public:
  explicit ConfigError(std::vector<std::string> msgs);
  std::vector<std::string> messages;
};

/// Records one diagnostic per key of `obj` outside `allowed`; false if
/// `obj` is not an object.
bool check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& path, Diagnostics& diag);

std::optional<double> read_number(const json& j, const std::string& path, Diagnostics& diag);
std::optional<long> read_integer(const json& j, const std::string& path, Diagnostics& diag);
std::optional<Matrix> read_matrix(const json& j, const std::string& path, Diagnostics& diag);
std::optional<RealMatrix> read_real_matrix(const json& j, const std::string& path,
                                           Diagnostics& diag);
std::optional<RealVector> read_real_vector(const json& j, const std::string& path,
                                           Diagnostics& diag);

/// {"kraus": [M...]} | {"superoperator": M} | {"choi": M, "dim_in": n, "dim_out": n}
std::optional<QuantumMap> read_map(const json& j, const std::string& path, Diagnostics& diag);
/// {"dim", "H", "channels": [{"gamma", "L"}]}
std::optional<GKSLModel> read_gksl(const json& j, const std::string& path, Diagnostics& diag);
/// {"dS", "dE", "H_total", "rho_E"}
std::optional<BipartiteModel> read_bipartite(const json& j, const std::string& path,
                                             Diagnostics& diag);
/// {"alpha", "S"}
std::optional<PhaseTypeWTD> read_wtd(const json& j, const std::string& path, Diagnostics& diag);
/// {"dim", "E", "F_generator", "wtd"}
std::optional<SemiMarkovModel> read_semimarkov(const json& j, const std::string& path,
                                               Diagnostics& diag);
/// {"pi", "wtds"}
std::optional<ClassicalSemiMarkov> read_classical(const json& j, const std::string& path,
                                                  Diagnostics& diag);
/// {"grid", "maps"} with superoperator matrices
std::optional<DynamicsFamily> read_family(const json& j, const std::string& path,
                                          Diagnostics& diag);

/// Runs a reader and throws ConfigError unless it succeeded cleanly.
template <typename Reader>
auto parse(Reader&& reader, const json& j, const std::string& path = "") {
  Diagnostics diag;
  auto out = reader(j, path, diag);
  if (!diag.ok() || !out) throw ConfigError(diag.messages);
  return std::move(*out);
}

json to_json(const Matrix& m);
json to_json(const RealMatrix& m);
json to_json(const RealVector& v);
/// Encoded in its stored representation.
json to_json(const QuantumMap& m);
json to_json(const GKSLModel& m);
json to_json(const BipartiteModel& m);
json to_json(const PhaseTypeWTD& w);
json to_json(const SemiMarkovModel& m);
json to_json(const ClassicalSemiMarkov& c);
json to_json(const DynamicsFamily& f);

}  // namespace oqs::io
