#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hef/trunc_series.hpp"

namespace hef {

// JSON layout for a truncated series:
//   {"vars": n, "shape": [rows, cols], "degree": D, "scalar": "rational"|"float",
//    "entries": [{"multidegree": [e_z0, e_zbar0, ...], "matrix": [[[re, im], ...], ...]}]}
// Rational coefficients serialize re/im as "p/q" strings; float coefficients
// as numbers.  Readers accept both encodings, except that the exact ring
// rejects non-integer numeric literals (they would silently lose exactness).
template <class S>
struct SeriesJsonCodec;

template <>
struct SeriesJsonCodec<cplx> {
  static const char* tag() { return "float"; }
  static nlohmann::json encode(const cplx& v) {
    return nlohmann::json::array({v.real(), v.imag()});
  }
  static double decode_part(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return parse_rational(j.get<std::string>()).get_d();
    throw std::runtime_error("series json: coefficient parts must be numbers or rational strings");
  }
  static cplx decode(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2)
      throw std::runtime_error("series json: coefficient must be a [re, im] pair");
    return {decode_part(j[0]), decode_part(j[1])};
  }
};

template <>
struct SeriesJsonCodec<RatComplex> {
  static const char* tag() { return "rational"; }
  static nlohmann::json encode(const RatComplex& v) {
    return nlohmann::json::array({v.re.get_str(), v.im.get_str()});
  }
  static mpq_class decode_part(const nlohmann::json& j) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return mpq_class(j.get<long>());
    throw std::runtime_error(
        "series json: exact coefficients must be rational strings or integers");
  }
  static RatComplex decode(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2)
      throw std::runtime_error("series json: coefficient must be a [re, im] pair");
    return {decode_part(j[0]), decode_part(j[1])};
  }
};

template <class S>
nlohmann::json series_to_json(const TruncSeries<S>& s) {
  nlohmann::json out;
  out["vars"] = s.vars();
  out["shape"] = {s.rows(), s.cols()};
  out["degree"] = s.degree();
  out["scalar"] = SeriesJsonCodec<S>::tag();
  nlohmann::json entries = nlohmann::json::array();
  const MonoTable& t = s.table();
  for (int i = 0; i < t.count(); ++i) {
    if (s.coeff(i).is_zero()) continue;
    nlohmann::json matrix = nlohmann::json::array();
    for (int r = 0; r < s.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < s.cols(); ++c) row.push_back(SeriesJsonCodec<S>::encode(s.coeff(i)(r, c)));
      matrix.push_back(row);
    }
    entries.push_back({{"multidegree", t.expo(i)}, {"matrix", matrix}});
  }
  out["entries"] = entries;
  return out;
}

template <class S>
TruncSeries<S> series_from_json(const nlohmann::json& j) {
  for (const char* key : {"vars", "shape", "degree", "entries"})
    if (!j.contains(key))
      throw std::runtime_error(std::string("series json: missing key \"") + key + "\"");
  const int vars = j["vars"].get<int>();
  const auto shape = j["shape"].get<std::vector<int>>();
  if (shape.size() != 2) throw std::runtime_error("series json: shape must be [rows, cols]");
  TruncSeries<S> s(vars, shape[0], shape[1], j["degree"].get<int>());
  for (const auto& entry : j["entries"]) {
    const auto expo = entry.at("multidegree").get<std::vector<int>>();
    if (static_cast<int>(expo.size()) != 2 * vars)
      throw std::runtime_error("series json: multidegree length must be 2*vars");
    CoeffMat<S>& m = s.coeff(expo);
    const auto& matrix = entry.at("matrix");
    if (static_cast<int>(matrix.size()) != shape[0])
      throw std::runtime_error("series json: matrix row count mismatch");
    for (int r = 0; r < shape[0]; ++r) {
      if (static_cast<int>(matrix[r].size()) != shape[1])
        throw std::runtime_error("series json: matrix column count mismatch");
      for (int c = 0; c < shape[1]; ++c) m(r, c) = SeriesJsonCodec<S>::decode(matrix[r][c]);
    }
  }
  return s;
}

}  // namespace hef
