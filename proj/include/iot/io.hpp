#pragma once

// JSON file formats. Exact quantities travel as strings "p/q"; decimal
// strings and plain JSON numbers are accepted on input. Matrices are
// nested row lists.
//
//   iot-obs/1        observation set
//   iot-cost/1       cost matrix with its class
//   iot-marginals/1  a single (mu, nu) pair
//   iot-forward/1    forward solution
//   iot-vertices/1   extreme points of a transportation polytope
//   iot-report/1     identifiability report
//   iot-estimate/1   estimation report (floating point)

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "iot/estimate.hpp"
#include "iot/forward.hpp"
#include "iot/polytope.hpp"
#include "iot/types.hpp"

namespace iot::io {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "iot 1.0.0";

inline Rational rational_from(const json& j, const std::string& where) {
  if (j.is_string()) {
    try {
      return parse_rational(j.get<std::string>());
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_number_float()) return decimal_rational(j.get<double>());
  throw ParseError(where + ": expected a number or rational string");
}

inline json to_json(const Rational& r) { return r.str(); }

/// Exact decimal text when the denominator is 2^a 5^b, otherwise "p/q".
inline std::string decimal_string(const Rational& r) {
  mpz_class den = r.denominator();
  unsigned long twos = 0, fives = 0;
  while (den % 2 == 0) den /= 2, ++twos;
  while (den % 5 == 0) den /= 5, ++fives;
  if (den != 1) return r.str();
  const unsigned long digits = std::max(twos, fives);
  if (digits == 0) return r.str();
  mpz_class scaled = r.numerator() * detail::pow10(digits) / r.denominator();
  const bool neg = scaled < 0;
  if (neg) scaled = -scaled;
  std::string t = scaled.get_str();
  if (t.size() <= digits) t.insert(0, digits + 1 - t.size(), '0');
  t.insert(t.size() - digits, ".");
  return neg ? "-" + t : t;
}

inline json to_json(const Vector& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(x.str());
  return a;
}

inline json to_json(const Matrix<Rational>& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) r.push_back(m(i, j).str());
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Vector vector_from(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  Vector v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(rational_from(j[i], where + "[" + std::to_string(i) + "]"));
  return v;
}

inline Matrix<Rational> matrix_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a non-empty list of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  Matrix<Rational> m(j.size(), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw ParseError(where + ": ragged matrix");
    for (std::size_t k = 0; k < cols; ++k)
      m(i, k) = rational_from(j[i][k], where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  return m;
}

inline const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  return j.at(key);
}

inline void expect_format(const json& j, const char* format) {
  const auto& f = field(j, "format", "document");
  if (!f.is_string() || f.get<std::string>() != format)
    throw ParseError(std::string("expected format '") + format + "'");
}

// ---------------------------------------------------------------------------
// Cost class

inline json to_json(const CostClass& c) {
  if (c.kind == ClassKind::box) return json{{"kind", "box"}, {"bound", c.box_bound.str()}};
  return to_string(c.kind);
}

inline CostClass cost_class_from(const json& j) {
  if (j.is_string()) {
    const ClassKind k = parse_class_kind(j.get<std::string>());
    if (k == ClassKind::box) throw ParseError("box class needs a bound: {\"kind\": \"box\", \"bound\": ...}");
    return {k, {}};
  }
  const auto kind = parse_class_kind(field(j, "kind", "cost_class").get<std::string>());
  if (kind != ClassKind::box) return {kind, {}};
  return CostClass::box(rational_from(field(j, "bound", "cost_class"), "cost_class.bound"));
}

// ---------------------------------------------------------------------------
// Observations

/// With `decimal_alpha` the total costs are written as decimals (noisy data).
inline json to_json(const ObservationSet& obs, bool decimal_alpha = false) {
  json recs = json::array();
  for (const auto& r : obs.records) {
    json o;
    o["mu"] = to_json(r.marginals.mu);
    o["nu"] = to_json(r.marginals.nu);
    if (r.alpha) o["alpha"] = decimal_alpha ? json(decimal_string(*r.alpha)) : to_json(*r.alpha);
    if (r.plan) o["plan"] = to_json(*r.plan);
    if (r.potentials) o["potentials"] = json{{"f", to_json(r.potentials->f)}, {"g", to_json(r.potentials->g)}};
    recs.push_back(std::move(o));
  }
  return json{{"format", "iot-obs/1"},
              {"N", obs.rows()},
              {"M", obs.cols()},
              {"cost_class", to_json(obs.cost_class)},
              {"records", std::move(recs)}};
}

inline ObservationSet observations_from(const json& j) {
  expect_format(j, "iot-obs/1");
  ObservationSet obs;
  if (j.contains("cost_class")) obs.cost_class = cost_class_from(j.at("cost_class"));
  const auto& recs = field(j, "records", "document");
  if (!recs.is_array()) throw ParseError("records must be an array");
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const std::string w = "records[" + std::to_string(k) + "]";
    const auto& r = recs[k];
    ObservationRecord rec;
    rec.marginals.mu = vector_from(field(r, "mu", w), w + ".mu");
    rec.marginals.nu = vector_from(field(r, "nu", w), w + ".nu");
    if (r.contains("alpha") && !r.at("alpha").is_null()) rec.alpha = rational_from(r.at("alpha"), w + ".alpha");
    if (r.contains("plan") && !r.at("plan").is_null()) rec.plan = matrix_from(r.at("plan"), w + ".plan");
    if (r.contains("potentials") && !r.at("potentials").is_null()) {
      const auto& p = r.at("potentials");
      rec.potentials = PotentialPair{vector_from(field(p, "f", w), w + ".potentials.f"),
                                     vector_from(field(p, "g", w), w + ".potentials.g")};
    }
    obs.records.push_back(std::move(rec));
  }
  if (j.contains("N") && !obs.records.empty() && j.at("N").get<std::size_t>() != obs.rows())
    throw ParseError("N disagrees with the record marginals");
  if (j.contains("M") && !obs.records.empty() && j.at("M").get<std::size_t>() != obs.cols())
    throw ParseError("M disagrees with the record marginals");
  return obs;
}

// ---------------------------------------------------------------------------
// Cost, marginals, forward, vertices

struct CostFile {
  CostMatrix cost;
  CostClass cost_class;
};

inline json to_json(const CostFile& c) {
  return json{{"format", "iot-cost/1"},
              {"N", c.cost.rows()},
              {"M", c.cost.cols()},
              {"cost_class", to_json(c.cost_class)},
              {"cost", to_json(c.cost)}};
}

inline CostFile cost_from(const json& j) {
  expect_format(j, "iot-cost/1");
  CostFile c;
  c.cost = matrix_from(field(j, "cost", "document"), "cost");
  if (j.contains("cost_class")) c.cost_class = cost_class_from(j.at("cost_class"));
  return c;
}

inline json to_json(const MarginalPair& m) {
  return json{{"format", "iot-marginals/1"}, {"mu", to_json(m.mu)}, {"nu", to_json(m.nu)}};
}

inline MarginalPair marginals_from(const json& j) {
  expect_format(j, "iot-marginals/1");
  return {vector_from(field(j, "mu", "document"), "mu"), vector_from(field(j, "nu", "document"), "nu")};
}

inline json to_json(const ForwardSolution& s) {
  return json{{"format", "iot-forward/1"},
              {"value", to_json(s.value)},
              {"plan", to_json(s.plan)},
              {"potentials", {{"f", to_json(s.potentials.f)}, {"g", to_json(s.potentials.g)}}}};
}

inline ForwardSolution forward_from(const json& j) {
  expect_format(j, "iot-forward/1");
  ForwardSolution s;
  s.value = rational_from(field(j, "value", "document"), "value");
  s.plan = matrix_from(field(j, "plan", "document"), "plan");
  const auto& p = field(j, "potentials", "document");
  s.potentials = {vector_from(field(p, "f", "potentials"), "f"), vector_from(field(p, "g", "potentials"), "g")};
  return s;
}

inline json to_json(const ExtremePointSet& e) {
  json v = json::array();
  for (const auto& p : e.vertices) v.push_back(to_json(p));
  return json{{"format", "iot-vertices/1"},
              {"mu", to_json(e.marginals.mu)},
              {"nu", to_json(e.marginals.nu)},
              {"count", e.vertices.size()},
              {"vertices", std::move(v)}};
}

// ---------------------------------------------------------------------------
// Identifiability report

struct ReportMeta {
  std::string mode;
  std::string cost_class;
  std::string input_digest;
  std::string tool_version = kToolVersion;
  friend bool operator==(const ReportMeta&, const ReportMeta&) = default;
};

inline json optional_rational(const std::optional<Rational>& r) { return r ? json(r->str()) : json(nullptr); }

inline json to_json(const IdentifiabilityReport& r, const ReportMeta& meta = {}) {
  json j;
  j["format"] = "iot-report/1";
  j["tool_version"] = meta.tool_version;
  j["input_digest"] = meta.input_digest;
  j["mode"] = meta.mode;
  j["cost_class"] = meta.cost_class;
  j["verdict"] = to_string(r.verdict);
  j["recovered_cost"] = r.recovered_cost ? to_json(*r.recovered_cost) : json(nullptr);
  if (r.ambiguity) {
    json dirs = json::array(), shifts = json::array(), alts = json::array();
    for (const auto& d : r.ambiguity->directions) dirs.push_back(to_json(d));
    for (const auto& d : r.ambiguity->shift_directions) shifts.push_back(to_json(d));
    for (const auto& d : r.ambiguity->alternatives) alts.push_back(to_json(d));
    j["ambiguity"] = json{{"base", to_json(r.ambiguity->base)},
                          {"directions", std::move(dirs)},
                          {"shift_directions", std::move(shifts)},
                          {"alternatives", std::move(alts)}};
  } else {
    j["ambiguity"] = nullptr;
  }
  j["residual_dimension"] = r.residual_dimension ? json(*r.residual_dimension) : json(nullptr);
  json ranges = json::array();
  for (const auto& rg : r.coordinate_ranges) ranges.push_back(json{{"lo", optional_rational(rg.lo)}, {"hi", optional_rational(rg.hi)}});
  j["coordinate_ranges"] = std::move(ranges);
  j["achieved_rank"] = r.achieved_rank ? json(*r.achieved_rank) : json(nullptr);
  j["sufficient_condition_met"] = r.sufficient_condition_met ? json(*r.sufficient_condition_met) : json(nullptr);
  j["diagnostics"] = r.diagnostics;
  return j;
}

inline std::optional<Rational> optional_rational_from(const json& j, const std::string& where) {
  if (j.is_null()) return std::nullopt;
  return rational_from(j, where);
}

inline IdentifiabilityReport report_from(const json& j, ReportMeta* meta = nullptr) {
  expect_format(j, "iot-report/1");
  IdentifiabilityReport r;
  r.verdict = parse_verdict(field(j, "verdict", "report").get<std::string>());
  if (j.contains("recovered_cost") && !j.at("recovered_cost").is_null())
    r.recovered_cost = matrix_from(j.at("recovered_cost"), "recovered_cost");
  if (j.contains("ambiguity") && !j.at("ambiguity").is_null()) {
    const auto& a = j.at("ambiguity");
    AffineClassDescription d;
    d.base = vector_from(field(a, "base", "ambiguity"), "ambiguity.base");
    for (const auto& v : field(a, "directions", "ambiguity")) d.directions.push_back(vector_from(v, "direction"));
    for (const auto& v : field(a, "shift_directions", "ambiguity")) d.shift_directions.push_back(vector_from(v, "shift"));
    for (const auto& v : field(a, "alternatives", "ambiguity")) d.alternatives.push_back(vector_from(v, "alternative"));
    r.ambiguity = std::move(d);
  }
  if (j.contains("residual_dimension") && !j.at("residual_dimension").is_null())
    r.residual_dimension = j.at("residual_dimension").get<long>();
  if (j.contains("coordinate_ranges"))
    for (const auto& rg : j.at("coordinate_ranges"))
      r.coordinate_ranges.push_back({optional_rational_from(field(rg, "lo", "range"), "range.lo"),
                                     optional_rational_from(field(rg, "hi", "range"), "range.hi")});
  if (j.contains("achieved_rank") && !j.at("achieved_rank").is_null()) r.achieved_rank = j.at("achieved_rank").get<long>();
  if (j.contains("sufficient_condition_met") && !j.at("sufficient_condition_met").is_null())
    r.sufficient_condition_met = j.at("sufficient_condition_met").get<bool>();
  if (j.contains("diagnostics")) r.diagnostics = j.at("diagnostics").get<std::vector<std::string>>();
  if (meta) {
    meta->tool_version = j.value("tool_version", "");
    meta->input_digest = j.value("input_digest", "");
    meta->mode = j.value("mode", "");
    meta->cost_class = j.value("cost_class", "");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Estimation report

inline json to_json(const EstimateReport& e, const std::string& input_digest = "") {
  json j;
  j["format"] = "iot-estimate/1";
  j["tool_version"] = kToolVersion;
  j["input_digest"] = input_digest;
  j["method"] = e.method;
  j["N"] = e.n;
  j["M"] = e.m;
  json c = json::array();
  for (std::size_t i = 0; i < e.n; ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < e.m; ++k) row.push_back(e.c_hat(static_cast<long>(cell_index(i, k, e.n))));
    c.push_back(std::move(row));
  }
  j["c_hat"] = std::move(c);
  j["sigma"] = e.sigma ? json(*e.sigma) : json(nullptr);
  j["sigma_estimated"] = e.sigma_estimated;
  if (e.covariance) {
    json cov = json::array();
    for (long r = 0; r < e.covariance->rows(); ++r) {
      json row = json::array();
      for (long k = 0; k < e.covariance->cols(); ++k) row.push_back((*e.covariance)(r, k));
      cov.push_back(std::move(row));
    }
    j["covariance"] = std::move(cov);
  } else {
    j["covariance"] = nullptr;
  }
  if (e.ci) {
    json ci = json::array();
    for (const auto& iv : *e.ci) ci.push_back(json{{"lo", iv.lo}, {"hi", iv.hi}});
    j["ci"] = std::move(ci);
  } else {
    j["ci"] = nullptr;
  }
  j["level"] = e.level ? json(*e.level) : json(nullptr);
  j["lambda"] = e.lambda ? json(*e.lambda) : json(nullptr);
  j["b0"] = e.b0;
  j["sweeps"] = e.sweeps;
  return j;
}

inline EstimateReport estimate_from(const json& j) {
  expect_format(j, "iot-estimate/1");
  EstimateReport e;
  e.method = j.at("method").get<std::string>();
  e.n = j.at("N").get<std::size_t>();
  e.m = j.at("M").get<std::size_t>();
  e.c_hat.resize(static_cast<long>(e.n * e.m));
  const auto& c = j.at("c_hat");
  for (std::size_t i = 0; i < e.n; ++i)
    for (std::size_t k = 0; k < e.m; ++k) e.c_hat(static_cast<long>(cell_index(i, k, e.n))) = c[i][k].get<double>();
  if (!j.at("sigma").is_null()) e.sigma = j.at("sigma").get<double>();
  e.sigma_estimated = j.value("sigma_estimated", false);
  if (!j.at("covariance").is_null()) {
    const auto& cov = j.at("covariance");
    Eigen::MatrixXd m(static_cast<long>(cov.size()), static_cast<long>(cov.size()));
    for (std::size_t r = 0; r < cov.size(); ++r)
      for (std::size_t k = 0; k < cov[r].size(); ++k) m(static_cast<long>(r), static_cast<long>(k)) = cov[r][k].get<double>();
    e.covariance = std::move(m);
  }
  if (!j.at("ci").is_null()) {
    std::vector<Interval> ci;
    for (const auto& iv : j.at("ci")) ci.push_back({iv.at("lo").get<double>(), iv.at("hi").get<double>()});
    e.ci = std::move(ci);
  }
  if (!j.at("level").is_null()) e.level = j.at("level").get<double>();
  if (!j.at("lambda").is_null()) e.lambda = j.at("lambda").get<double>();
  e.b0 = j.at("b0").get<double>();
  e.sweeps = j.at("sweeps").get<long>();
  return e;
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
}

/// Write to a sibling temporary, then rename over the target.
inline void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
    out << content;
    if (!out.flush()) throw std::runtime_error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string render(const json& j) { return j.dump(2) + "\n"; }

}  // namespace iot::io
