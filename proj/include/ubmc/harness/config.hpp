#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ubmc/errors.hpp"

namespace ubmc::harness {

using json = nlohmann::json;

inline const std::vector<std::string>& experiment_tags() {
  static const std::vector<std::string> tags = {"contracting-normals", "circle", "linear-gaussian",
                                                "indep-sampler",       "pcn",    "logistic",
                                                "tune"};
  return tags;
}

/// Typed, strict view of one JSON object. Every key must be read before
/// finish(), which rejects the rest as unknown.
class Params {
 public:
  Params(const json& object, std::string where) : where_(std::move(where)) {
    if (object.is_null()) return;
    if (!object.is_object()) throw ValidationError(where_ + " must be a JSON object");
    object_ = object;
  }

  [[nodiscard]] bool has(const std::string& key) const { return object_.contains(key); }

  double number(const std::string& key) {
    const json& v = fetch(key);
    if (!v.is_number()) throw ValidationError(path(key) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ValidationError(path(key) + " must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  std::uint64_t integer(const std::string& key) {
    const json& v = fetch(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ValidationError(path(key) + " must be a nonnegative integer");
  }
  std::uint64_t integer(const std::string& key, std::uint64_t fallback) {
    return has(key) ? integer(key) : fallback;
  }

  std::string text(const std::string& key) {
    const json& v = fetch(key);
    if (!v.is_string()) throw ValidationError(path(key) + " must be a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) { return has(key) ? text(key) : fallback; }

  std::string choice(const std::string& key, const std::vector<std::string>& options, const std::string& fallback) {
    const std::string v = text(key, fallback);
    if (std::find(options.begin(), options.end(), v) == options.end()) {
      std::string list;
      for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
      throw ValidationError(path(key) + " = \"" + v + "\" is not one of {" + list + "}");
    }
    return v;
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = fetch(key);
    if (!v.is_boolean()) throw ValidationError(path(key) + " must be a boolean");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = fetch(key);
    if (!v.is_array()) throw ValidationError(path(key) + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ValidationError(path(key) + " must contain only numbers");
      out.push_back(e.get<double>());
      if (!std::isfinite(out.back())) throw ValidationError(path(key) + " must contain finite numbers");
    }
    return out;
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    return has(key) ? numbers(key) : fallback;
  }

  std::vector<std::uint64_t> integers(const std::string& key) {
    const json& v = fetch(key);
    if (!v.is_array()) throw ValidationError(path(key) + " must be an array of integers");
    std::vector<std::uint64_t> out;
    for (const auto& e : v) {
      if (e.is_number_unsigned()) out.push_back(e.get<std::uint64_t>());
      else if (e.is_number_integer() && e.get<std::int64_t>() >= 0) out.push_back(static_cast<std::uint64_t>(e.get<std::int64_t>()));
      else throw ValidationError(path(key) + " must contain nonnegative integers");
    }
    return out;
  }

  /// A nested object, empty when absent.
  json object(const std::string& key) {
    if (!has(key)) return json::object();
    const json& v = fetch(key);
    if (!v.is_object()) throw ValidationError(path(key) + " must be a JSON object");
    return v;
  }

  /// Rejects keys that were never read.
  void finish() const {
    for (const auto& [key, value] : object_.items())
      if (!used_.count(key)) throw ValidationError("unknown parameter " + path(key));
  }

 private:
  const json& fetch(const std::string& key) {
    if (!has(key)) throw ValidationError("missing required parameter " + path(key));
    used_.insert(key);
    return object_.at(key);
  }
  [[nodiscard]] std::string path(const std::string& key) const { return where_ + "." + key; }

  json object_ = json::object();
  std::string where_;
  std::set<std::string> used_;
};

/// One experiment run. `parallel`, `output` and `wall_clock` control execution
/// only and are left out of the echo.
struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::uint64_t replicates = 1000;
  unsigned parallel = 1;
  std::string output = "ubmc-out";
  bool wall_clock = false;
  json model = json::object();
  json schedule = json::object();
  json survival = json::object();
  json functional = json::object();
  json baseline = nullptr;

  static ExperimentConfig from_json(const json& j) {
    Params top(j, "config");
    ExperimentConfig c;
    c.experiment = top.choice("experiment", experiment_tags(), "");
    c.seed = top.integer("seed", c.seed);
    c.replicates = top.integer("replicates", c.replicates);
    require(c.replicates >= 1, "config.replicates must be ≥ 1");
    const auto par = top.integer("parallel", c.parallel);
    require(par >= 1 && par <= 1024, "config.parallel must lie in [1, 1024]");
    c.parallel = static_cast<unsigned>(par);
    c.output = top.text("output", c.output);
    c.wall_clock = top.flag("wall_clock", false);
    c.model = top.object("model");
    c.schedule = top.object("schedule");
    c.survival = top.object("survival");
    c.functional = top.object("functional");
    if (top.has("baseline")) c.baseline = top.object("baseline");
    top.finish();
    return c;
  }

  static ExperimentConfig parse(const std::string& text) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j);
  }

  static ExperimentConfig load(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open config file " + file);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  /// The experiment-defining fields; parsing this gives an equivalent config.
  [[nodiscard]] json echo() const {
    json j = {{"experiment", experiment}, {"seed", seed}, {"replicates", replicates}};
    if (!model.empty()) j["model"] = model;
    if (!schedule.empty()) j["schedule"] = schedule;
    if (!survival.empty()) j["survival"] = survival;
    if (!functional.empty()) j["functional"] = functional;
    if (!baseline.is_null()) j["baseline"] = baseline;
    return j;
  }

  [[nodiscard]] bool equivalent(const ExperimentConfig& o) const { return echo() == o.echo(); }

};

}  // namespace ubmc::harness
