#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "senstrack/error.hpp"
#include "senstrack/model.hpp"

namespace senstrack {

using Json = nlohmann::json;

/// Scenario documents are JSON objects:
///
///   {
///     "kind": "explicit" | "sensors",
///     "horizon": 5, "lambda": 0.5, "initial_control": 0 (optional),
///     "chain": {"transition": [[...], ...], "prior": [...]},
///     explicit: "controls": [{"cost": c, "kernels": [{"mean": [...], "cov": [[...]]}, ...]}, ...]
///     sensors:  "budget": N, "include_empty": false, "normalizer": C (optional),
///               "sensors": [{"name", "mu": [...], "sigma2": [...], "phi", "sigma_z2", "delta"}, ...]
///   }
///
/// transition[j][i] is P(next = j | current = i), so every column sums to one.

namespace io_detail {

inline int line_of(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline const Json& field(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::ParseError, "missing field " + where + "." + key);
  return *it;
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw Error(ErrorCode::ParseError, "field " + where + " must be a number");
  return j.get<double>();
}

inline int integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw Error(ErrorCode::ParseError, "field " + where + " must be an integer");
  return j.get<int>();
}

inline VectorXd vector(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "field " + where + " must be an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline MatrixXd matrix(const Json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "field " + where + " must be an array of rows");
  const auto rows = j.size();
  const auto cols = rows ? (j[0].is_array() ? j[0].size() : 0) : 0;
  MatrixXd m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    VectorXd row = vector(j[r], where + "[" + std::to_string(r) + "]");
    if (static_cast<std::size_t>(row.size()) != cols)
      throw Error(ErrorCode::DimensionMismatch, where + " rows differ in length");
    m.row(r) = row.transpose();
  }
  return m;
}

inline Json to_json(const VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json to_json(const MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(to_json(VectorXd(m.row(r).transpose())));
  return a;
}

}  // namespace io_detail

inline Scenario scenario_from_json(const Json& doc) {
  using namespace io_detail;
  const auto& kind_j = field(doc, "kind", "scenario");
  if (!kind_j.is_string()) throw Error(ErrorCode::ParseError, "field scenario.kind must be a string");
  const std::string kind = kind_j.get<std::string>();
  const int horizon = integer(field(doc, "horizon", "scenario"), "scenario.horizon");
  const double lambda = number(field(doc, "lambda", "scenario"), "scenario.lambda");
  std::optional<int> init;
  if (doc.contains("initial_control")) init = integer(doc["initial_control"], "scenario.initial_control");
  const auto& cj = field(doc, "chain", "scenario");
  const MatrixXd trans = matrix(field(cj, "transition", "chain"), "chain.transition");
  const VectorXd prior = vector(field(cj, "prior", "chain"), "chain.prior");
  const MarkovChain chain = validate_chain(trans, prior);

  if (kind == "explicit") {
    const auto& cl = field(doc, "controls", "scenario");
    if (!cl.is_array() || cl.empty()) throw Error(ErrorCode::ParseError, "field scenario.controls must be a non-empty array");
    std::vector<double> costs;
    std::vector<std::vector<GaussianKernel>> kernels;
    for (std::size_t u = 0; u < cl.size(); ++u) {
      const std::string where = "controls[" + std::to_string(u) + "]";
      costs.push_back(number(field(cl[u], "cost", where), where + ".cost"));
      const auto& kl = field(cl[u], "kernels", where);
      if (!kl.is_array()) throw Error(ErrorCode::ParseError, where + ".kernels must be an array");
      std::vector<GaussianKernel> ks;
      for (std::size_t i = 0; i < kl.size(); ++i) {
        const std::string kw = where + ".kernels[" + std::to_string(i) + "]";
        GaussianKernel k{vector(field(kl[i], "mean", kw), kw + ".mean"), matrix(field(kl[i], "cov", kw), kw + ".cov")};
        validate_kernel(k);
        ks.push_back(std::move(k));
      }
      kernels.push_back(std::move(ks));
    }
    return make_explicit_scenario(chain, costs, kernels, lambda, horizon, init);
  }
  if (kind == "sensors") {
    const int budget = integer(field(doc, "budget", "scenario"), "scenario.budget");
    bool include_empty = false;
    if (doc.contains("include_empty")) {
      if (!doc["include_empty"].is_boolean()) throw Error(ErrorCode::ParseError, "field scenario.include_empty must be a boolean");
      include_empty = doc["include_empty"].get<bool>();
    }
    std::optional<double> norm;
    if (doc.contains("normalizer")) norm = number(doc["normalizer"], "scenario.normalizer");
    const auto& sl = field(doc, "sensors", "scenario");
    if (!sl.is_array()) throw Error(ErrorCode::ParseError, "field scenario.sensors must be an array");
    std::vector<SensorSpec> sensors;
    for (std::size_t l = 0; l < sl.size(); ++l) {
      const std::string where = "sensors[" + std::to_string(l) + "]";
      SensorSpec sp;
      const auto& nj = field(sl[l], "name", where);
      if (!nj.is_string()) throw Error(ErrorCode::ParseError, where + ".name must be a string");
      sp.name = nj.get<std::string>();
      sp.mu = vector(field(sl[l], "mu", where), where + ".mu");
      sp.sigma2 = vector(field(sl[l], "sigma2", where), where + ".sigma2");
      sp.phi = number(field(sl[l], "phi", where), where + ".phi");
      sp.sigma_z2 = number(field(sl[l], "sigma_z2", where), where + ".sigma_z2");
      sp.delta = number(field(sl[l], "delta", where), where + ".delta");
      sensors.push_back(std::move(sp));
    }
    return make_sensor_scenario(chain, sensors, budget, include_empty, norm, lambda, horizon, init);
  }
  throw Error(ErrorCode::ParseError, "field scenario.kind must be \"explicit\" or \"sensors\"");
}

inline Scenario parse_scenario(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(io_detail::line_of(text, e.byte)) + ": " + e.what());
  }
  return scenario_from_json(doc);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

/// Canonical form: every field present, keys sorted.
inline Json scenario_to_json(const Scenario& s) {
  using io_detail::to_json;
  Json doc;
  doc["horizon"] = s.horizon;
  doc["lambda"] = s.lambda;
  doc["initial_control"] = s.initial_control;
  doc["chain"] = {{"transition", to_json(s.chain.trans)}, {"prior", to_json(s.chain.prior)}};
  if (s.sensor_based()) {
    doc["kind"] = "sensors";
    doc["budget"] = s.budget;
    doc["include_empty"] = s.include_empty;
    doc["normalizer"] = s.norm_c;
    Json sl = Json::array();
    for (const auto& sp : s.sensors)
      sl.push_back({{"name", sp.name},
                    {"mu", to_json(sp.mu)},
                    {"sigma2", to_json(sp.sigma2)},
                    {"phi", sp.phi},
                    {"sigma_z2", sp.sigma_z2},
                    {"delta", sp.delta}});
    doc["sensors"] = sl;
  } else {
    doc["kind"] = "explicit";
    Json cl = Json::array();
    for (const auto& c : s.controls) {
      Json kl = Json::array();
      for (const auto& k : s.model(c.id).kernels()) kl.push_back({{"mean", to_json(k.mean)}, {"cov", to_json(k.cov)}});
      cl.push_back({{"cost", c.cost}, {"kernels", kl}});
    }
    doc["controls"] = cl;
  }
  return doc;
}

inline std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

inline std::string canonicalize(const std::string& text) { return serialize_scenario(parse_scenario(text)); }

}  // namespace senstrack
