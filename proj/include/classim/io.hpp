#pragma once

// JSON input and output for measurement sets, witness specs, models and
// reports. Numbers are written with 12 significant digits.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "classim/errors.hpp"
#include "classim/format.hpp"
#include "classim/linalg.hpp"
#include "classim/measurements.hpp"
#include "classim/model_search.hpp"
#include "classim/witness.hpp"

namespace classim {

using Json = nlohmann::ordered_json;

/// Number rounded to 12 significant digits; the shortest decimal form of the
/// result never needs more.
inline Json number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_sig(v, 12);
}

namespace detail {

inline void dump_into(const Json& j, int indent, int depth, std::string& out) {
  const auto newline = [&](int level) {
    if (indent < 0) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * level), ' ');
  };
  switch (j.type()) {
    case Json::value_t::number_float:
      out += format_exact(j.get<double>());
      return;
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        dump_into(e, indent, depth + 1, out);
      }
      newline(depth);
      out += ']';
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += indent < 0 ? ":" : ": ";
        dump_into(it.value(), indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace detail

/// Like Json::dump, but floats are written in their shortest round-trip
/// form, so values from number() never show more than 12 digits.
inline std::string dump_json(const Json& j, int indent = -1) {
  std::string out;
  detail::dump_into(j, indent, 0, out);
  return out;
}

inline Json matrix_to_json(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(Json::array({number(m(i, j).real()), number(m(i, j).imag())}));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace detail {

inline double json_real(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

inline int json_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(where + ": expected an integer");
  return j.get<int>();
}

inline const Json& member(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

}  // namespace detail

/// Square complex matrix from [[ [re, im], ... ], ...]; a bare number is a
/// real entry.
inline CMatrix matrix_from_json(const Json& j, int d, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != d) {
    throw ParseError(where + ": expected " + std::to_string(d) + " rows");
  }
  CMatrix m(d, d);
  for (int i = 0; i < d; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != d) {
      throw ParseError(where + ", row " + std::to_string(i) + ": expected " + std::to_string(d) + " entries");
    }
    for (int k = 0; k < d; ++k) {
      const Json& e = row[static_cast<std::size_t>(k)];
      const std::string at = where + ", entry (" + std::to_string(i) + ", " + std::to_string(k) + ")";
      if (e.is_array()) {
        if (e.size() != 2) throw ParseError(at + ": expected [re, im]");
        m(i, k) = Complex(detail::json_real(e[0], at), detail::json_real(e[1], at));
      } else {
        m(i, k) = detail::json_real(e, at);
      }
    }
  }
  return m;
}

inline Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// {"dim": d, "settings": [{"outcomes": [matrix, ...]}, ...]}
inline MeasurementSet measurement_set_from_json(const Json& j) {
  const int d = detail::json_int(detail::member(j, "dim", "measurement set"), "dim");
  if (d < 1) throw ParseError("measurement set: dim must be positive");
  const Json& settings = detail::member(j, "settings", "measurement set");
  if (!settings.is_array() || settings.empty()) throw ParseError("measurement set: settings must be a non-empty array");
  std::vector<std::vector<CMatrix>> els;
  for (std::size_t x = 0; x < settings.size(); ++x) {
    const std::string where = "setting " + std::to_string(x);
    const Json& outs = detail::member(settings[x], "outcomes", where);
    if (!outs.is_array() || outs.empty()) throw ParseError(where + ": outcomes must be a non-empty array");
    std::vector<CMatrix> row;
    for (std::size_t a = 0; a < outs.size(); ++a) {
      row.push_back(matrix_from_json(outs[a], d, detail::where(static_cast<int>(x), static_cast<int>(a))));
    }
    els.push_back(std::move(row));
  }
  return MeasurementSet(els);
}

inline Json measurement_set_to_json(const MeasurementSet& m) {
  Json settings = Json::array();
  for (int x = 0; x < m.settings(); ++x) {
    Json outs = Json::array();
    for (int a = 0; a < m.outcomes(); ++a) outs.push_back(matrix_to_json(m(x, a)));
    settings.push_back(Json{{"outcomes", std::move(outs)}});
  }
  return Json{{"dim", m.dim()}, {"settings", std::move(settings)}};
}

/// {"coefficients": [{"a", "z", "x", "value"}], "states": [matrix, ...]} or
/// {"type": "state-discrimination"}, built against the measurement set.
inline WitnessSpec witness_spec_from_json(const Json& j, const MeasurementSet& m) {
  if (j.is_object() && j.contains("type")) {
    if (j.at("type") != "state-discrimination") throw ParseError("witness spec: unknown type");
    return state_discrimination_spec(m);
  }
  const Json& states = detail::member(j, "states", "witness spec");
  if (!states.is_array() || states.empty()) throw ParseError("witness spec: states must be a non-empty array");
  std::vector<CMatrix> rho;
  for (std::size_t z = 0; z < states.size(); ++z) {
    rho.push_back(matrix_from_json(states[z], m.dim(), "state " + std::to_string(z)));
  }
  WitnessSpec spec(m.outcomes(), m.settings(), StateEnsemble(rho));
  const Json& coeffs = detail::member(j, "coefficients", "witness spec");
  if (!coeffs.is_array()) throw ParseError("witness spec: coefficients must be an array");
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    const std::string where = "coefficient " + std::to_string(i);
    const Json& c = coeffs[i];
    spec.set(detail::json_int(detail::member(c, "a", where), where), detail::json_int(detail::member(c, "z", where), where),
             detail::json_int(detail::member(c, "x", where), where),
             detail::json_real(detail::member(c, "value", where), where));
  }
  return spec;
}

inline Json model_to_json(const ClassicalModel& model) {
  Json bases = Json::array(), weights = Json::array(), response = Json::array();
  for (int l = 0; l < model.devices(); ++l) {
    bases.push_back(matrix_to_json(model.bases[static_cast<std::size_t>(l)].matrix()));
    weights.push_back(number(model.weights[static_cast<std::size_t>(l)]));
    Json r = Json::array();
    for (double q : model.response[static_cast<std::size_t>(l)]) r.push_back(number(q));
    response.push_back(std::move(r));
  }
  return Json{{"dim", model.dim},         {"settings", model.settings}, {"outcomes", model.outcomes},
              {"v", number(model.v)},     {"weights", std::move(weights)}, {"bases", std::move(bases)},
              {"response", std::move(response)}};
}

/// Inverse of model_to_json; the response vector of device λ is indexed
/// ((x·d + k)·o + a).
inline ClassicalModel model_from_json(const Json& j) {
  ClassicalModel model;
  model.dim = detail::json_int(detail::member(j, "dim", "model"), "model dim");
  model.settings = detail::json_int(detail::member(j, "settings", "model"), "model settings");
  model.outcomes = detail::json_int(detail::member(j, "outcomes", "model"), "model outcomes");
  model.v = detail::json_real(detail::member(j, "v", "model"), "model v");
  if (model.dim < 1 || model.settings < 1 || model.outcomes < 1) throw ParseError("model: sizes must be positive");
  const Json& weights = detail::member(j, "weights", "model");
  const Json& bases = detail::member(j, "bases", "model");
  const Json& response = detail::member(j, "response", "model");
  if (!weights.is_array() || !bases.is_array() || !response.is_array() || weights.size() != bases.size() ||
      weights.size() != response.size()) {
    throw ParseError("model: weights, bases and response must be arrays of equal length");
  }
  const std::size_t slots = static_cast<std::size_t>(model.settings * model.dim * model.outcomes);
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const std::string where = "device " + std::to_string(l);
    model.weights.push_back(detail::json_real(weights[l], where));
    const CMatrix u = matrix_from_json(bases[l], model.dim, where);
    // Rounded text loses unitarity at the 1e-12 level; re-orthonormalize.
    Eigen::HouseholderQR<CMatrix> qr(u);
    CMatrix q = qr.householderQ();
    const CMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index c = 0; c < q.cols(); ++c) {
      const Complex rc = r(c, c);
      if (std::abs(rc) > 0) q.col(c) *= rc / std::abs(rc);
    }
    if (max_abs(q - u) > 1e-8) throw StructuralError(where + ": basis is not unitary");
    model.bases.emplace_back(q);
    if (!response[l].is_array() || response[l].size() != slots) {
      throw ParseError(where + ": response must have " + std::to_string(slots) + " entries");
    }
    std::vector<double> r_l;
    for (const auto& e : response[l]) r_l.push_back(detail::json_real(e, where));
    model.response.push_back(std::move(r_l));
  }
  model.validate(1e-8, 1e-8);
  return model;
}

}  // namespace classim
