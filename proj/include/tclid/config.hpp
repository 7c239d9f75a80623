// JSON model description: parsing with field-path diagnostics
// and serialization of operators and rate functions.
//
// Operators are written as one of
//   {"dim": d, "re": [row-major d*d], "im": [row-major d*d]}   ("im" optional)
//   {"pauli": "x|y|z|+|-", "site": i}                          (qubit registers)
//   {"identity": true}
// Rates as {"type": "hyperbolic"|"oscillatory", "gamma0", "lambda", "d"},
// {"type": "piecewise_constant", "dt", "values"} or
// {"type": "tabulated", "times", "values"}.

#pragma once

#include "tclid/model.hpp"

#include <json.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tclid {

/// Validation failure carrying every problem found, each prefixed by its
/// JSON field path (e.g. "model.channels[0].operator: ...").
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

struct ModelConfig {
    std::optional<std::string> preset;
    TclModel model;
    std::vector<RateFunction> rates;
    ObservablePool pool;
    Operator initial_state;
};

/// Parses the "model", "rates", "initial_state" and "observables" sections.
/// A preset ("atom" or "spin_chain") supplies defaults for every section,
/// which explicit sections then override.
ModelConfig parse_model(const nlohmann::json& config);

nlohmann::json operator_to_json(const Operator& op);
nlohmann::json rate_to_json(const RateFunction& f);
/// Throws ConfigError.
RateFunction rate_from_json(const nlohmann::json& j, const std::string& path = "rate");
/// Throws ConfigError. `dim` resolves the Pauli/identity forms.
Operator operator_from_json(const nlohmann::json& j, int dim, const std::string& path = "operator");

} // namespace tclid
