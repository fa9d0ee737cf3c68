#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "growthopt/cost_engine.hpp"
#include "growthopt/market_model.hpp"

namespace growthopt {

struct ModelBundle {
  MarketModel model;
  CostSpec costs;
};

/// Parses the model file layout
///   {assets: [names] | count, factors: {transition: [[..]]}, shocks: {probs: [..]},
///    returns: [[[zeta per asset] per shock] per factor],
///    costs: {buy_rates, sell_rates, fixed, variant}}.
/// Probabilities may be numbers or decimal strings. Rows off by at most 1e-9
/// are renormalised; larger deviations are a DomainError. A missing "costs"
/// key means no transaction costs.
ModelBundle parse_model(const nlohmann::json& j);
ModelBundle load_model(const std::string& path);

nlohmann::json model_to_json(const MarketModel& model, const CostSpec& costs);
nlohmann::json costs_to_json(const CostSpec& costs);
CostSpec parse_costs(const nlohmann::json& j, int n_assets);

std::uint64_t fnv1a64(std::string_view bytes);
/// FNV-1a 64 of the canonical (sorted-key) JSON dump of model and costs.
std::uint64_t model_hash(const MarketModel& model, const CostSpec& costs);
std::string hash_hex(std::uint64_t h);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double x);

/// Writes `contents` to `path` via a temporary file and rename.
void write_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace growthopt
