#pragma once

#include "tcikit/devlab.hpp"
#include "tcikit/duality.hpp"
#include "tcikit/measures.hpp"
#include "tcikit/ratefn.hpp"
#include "tcikit/tensor.hpp"
#include "tcikit/transport.hpp"

#include "json.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tcitool {

using json = nlohmann::json;
using tcikit::Real;

/// Bad input; the message names the file and field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file path, or inline JSON when the argument starts with '{' or '['.
json load_json(const std::string& arg);

tcikit::ProbMeasure parse_measure(const json& j, const std::string& where);
/// {"matrix": [[...]], "kind": "metric" | "general"}, or a named cost:
/// {"kind": "hamming", "n": 3, "scale": 1}, {"kind": "line", "n": 4},
/// {"kind": "euclidean"} (coordinates of the measure), optional "power".
tcikit::CostMatrix parse_cost(const json& j, const std::string& where, const tcikit::ProbMeasure* mu = nullptr);
tcikit::PotentialFamily parse_family(const json& j, const std::string& where, const tcikit::ProbMeasure& mu,
                                     const std::optional<tcikit::CostMatrix>& cost);

/// Context for the "best" form: best_alpha of the family over mu.
struct AlphaContext {
  const tcikit::ProbMeasure* mu = nullptr;
  const tcikit::PotentialFamily* family = nullptr;
};

tcikit::RateFunction parse_alpha(const json& j, const std::string& where, const AlphaContext& ctx = {});

/// "0.1,0.2", "[0.1, 0.2]", "lin:a:b:k" (k points from a to b) or a single number.
std::vector<Real> parse_grid(const std::string& arg);

json to_json(const tcikit::Vector& v);
json to_json(const tcikit::TailReport& r);
json to_json(const tcikit::MartonReport& r);
/// One row per (n, t, member) cell.
std::string tail_csv(const tcikit::TailReport& r);

/// Samples f at the grid points as {"t": [...], "value": [...]}, infinities as null.
json sample_curve(const std::function<Real(Real)>& f, const std::vector<Real>& grid, const char* x = "t");
/// Rows "x,value" for the same data.
std::string curve_csv(const json& curve, const char* x = "t");

}  // namespace tcitool
