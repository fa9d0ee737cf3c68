#include "growthopt/model_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace growthopt {

using nlohmann::json;

namespace {

double as_number(const json& v, const char* what) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw DomainError(std::string(what) + ": '" + s + "' is not a number");
    return out;
  }
  throw DomainError(std::string(what) + ": expected a number or decimal string");
}

std::vector<double> probability_row(const json& row, const char* what) {
  if (!row.is_array() || row.empty()) throw DomainError(std::string(what) + ": expected a non-empty array");
  std::vector<double> p;
  p.reserve(row.size());
  double total = 0.0;
  for (const json& v : row) {
    const double x = as_number(v, what);
    if (!(x >= 0.0)) throw DomainError(std::string(what) + ": negative probability");
    p.push_back(x);
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    std::ostringstream os;
    os << what << ": probabilities sum to " << format_double(total) << ", not 1";
    throw DomainError(os.str());
  }
  for (double& x : p) x /= total;
  return p;
}

std::vector<double> rate_vector(const json& j, const char* key, int n) {
  if (!j.contains(key)) return std::vector<double>(n, 0.0);
  const json& v = j.at(key);
  if (v.is_number() || v.is_string()) return std::vector<double>(n, as_number(v, key));
  if (!v.is_array() || static_cast<int>(v.size()) != n)
    throw DomainError(std::string("costs.") + key + ": expected one rate per asset");
  std::vector<double> out;
  for (const json& x : v) out.push_back(as_number(x, key));
  return out;
}

}  // namespace

CostSpec parse_costs(const json& j, int n_assets) {
  CostSpec c;
  if (j.contains("rate")) {
    c.buy_rates.assign(n_assets, as_number(j.at("rate"), "costs.rate"));
    c.sell_rates = c.buy_rates;
  } else {
    c.buy_rates = rate_vector(j, "buy_rates", n_assets);
    c.sell_rates = rate_vector(j, "sell_rates", n_assets);
  }
  if (j.contains("fixed")) c.fixed = as_number(j.at("fixed"), "costs.fixed");
  if (j.contains("variant")) c.variant = cost_variant_from_string(j.at("variant").get<std::string>());
  c.validate();
  return c;
}

ModelBundle parse_model(const json& j) {
  if (!j.is_object()) throw DomainError("model: expected a JSON object");
  for (const char* key : {"assets", "factors", "shocks", "returns"})
    if (!j.contains(key)) throw DomainError(std::string("model: missing key '") + key + "'");

  std::vector<std::string> names;
  int d = 0;
  if (j.at("assets").is_array()) {
    for (const json& n : j.at("assets")) names.push_back(n.get<std::string>());
    d = static_cast<int>(names.size());
  } else {
    d = j.at("assets").get<int>();
  }
  if (d < 1) throw DomainError("model: need at least one asset");

  const json& rows = j.at("factors").at("transition");
  if (!rows.is_array() || rows.empty()) throw DomainError("model: factors.transition must be a non-empty matrix");
  const int nz = static_cast<int>(rows.size());
  std::vector<double> transition;
  for (const json& row : rows) {
    if (static_cast<int>(row.size()) != nz) throw DomainError("model: transition matrix must be square");
    const auto r = probability_row(row, "factors.transition");
    transition.insert(transition.end(), r.begin(), r.end());
  }
  const std::vector<double> nu = probability_row(j.at("shocks").at("probs"), "shocks.probs");
  const int nxi = static_cast<int>(nu.size());

  const json& ret = j.at("returns");
  if (!ret.is_array() || static_cast<int>(ret.size()) != nz)
    throw DomainError("model: returns must have one block per factor state");
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(nz) * nxi * d);
  for (const json& block : ret) {
    if (!block.is_array() || static_cast<int>(block.size()) != nxi)
      throw DomainError("model: returns must have one row per shock atom in every factor block");
    for (const json& row : block) {
      if (!row.is_array() || static_cast<int>(row.size()) != d)
        throw DomainError("model: every return row needs one entry per asset");
      for (const json& v : row) returns.push_back(as_number(v, "returns"));
    }
  }
  MarketModel model(d, std::move(transition), nu, std::move(returns), std::move(names));
  CostSpec costs = j.contains("costs") ? parse_costs(j.at("costs"), d) : CostSpec::uniform(d, 0.0);
  return {std::move(model), std::move(costs)};
}

ModelBundle load_model(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& ex) {
    throw DomainError("model file " + path + ": " + ex.what());
  }
  return parse_model(j);
}

json costs_to_json(const CostSpec& c) {
  return json{{"buy_rates", c.buy_rates},
              {"sell_rates", c.sell_rates},
              {"fixed", c.fixed},
              {"variant", to_string(c.variant)}};
}

json model_to_json(const MarketModel& model, const CostSpec& costs) {
  const int d = model.n_assets();
  const int nz = model.n_factors();
  const int nxi = model.n_shocks();
  json j;
  if (model.asset_names().empty())
    j["assets"] = d;
  else
    j["assets"] = model.asset_names();
  json rows = json::array();
  for (int z = 0; z < nz; ++z) {
    const auto r = model.transition_row(z);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["factors"] = json{{"transition", rows}};
  const auto nu = model.shock_probs();
  j["shocks"] = json{{"probs", std::vector<double>(nu.begin(), nu.end())}};
  json ret = json::array();
  for (int z = 0; z < nz; ++z) {
    json block = json::array();
    for (int xi = 0; xi < nxi; ++xi) {
      const auto r = model.returns(z, xi);
      block.push_back(std::vector<double>(r.begin(), r.end()));
    }
    ret.push_back(block);
  }
  j["returns"] = ret;
  j["costs"] = costs_to_json(costs);
  return j;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t model_hash(const MarketModel& model, const CostSpec& costs) {
  return fnv1a64(model_to_json(model, costs).dump());
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void write_atomic(const std::string& path, const std::string& contents) {
  const std::filesystem::path target(path);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write to " + tmp + " failed");
  }
  std::filesystem::rename(tmp, target);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace growthopt
