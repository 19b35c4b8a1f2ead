// Channel spec documents: JSON with complex matrices as [re, im] pairs.
// Canonical form round-trips bit-identically through load -> dump -> load.
#pragma once

#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "channels.hpp"
#include "common.hpp"

namespace polarlab {

using ChannelVariant =
    std::variant<std::monostate, ClassicalDMC, CqChannel, CqMac, QubitChannel, BroadcastChannel>;

struct ChannelSpec {
  std::string kind;  // dmc | cq | cq_mac | qubit_kraus | broadcast
  std::vector<std::string> labels;
  ChannelVariant channel;
};

namespace detail {

using Json = nlohmann::ordered_json;

inline Cmat parse_complex_matrix(const Json& jm, std::size_t index) {
  std::string at = "matrix " + std::to_string(index);
  if (!jm.is_array() || jm.empty() || !jm[0].is_array() || jm[0].empty())
    throw ParseError(at + ": expected a non-empty array of rows");
  std::size_t rows = jm.size(), cols = jm[0].size();
  Cmat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!jm[r].is_array() || jm[r].size() != cols) throw ParseError(at + ": ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      const Json& e = jm[r][c];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
        throw ParseError(at + ": entries must be [re, im] number pairs");
      m(Eigen::Index(r), Eigen::Index(c)) = complexd(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

inline Json dump_complex_matrix(const Cmat& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<Cmat> parse_matrix_list(const Json& j) {
  if (!j.contains("matrices") || !j["matrices"].is_array() || j["matrices"].empty())
    throw ParseError("channel spec: missing non-empty 'matrices' array");
  std::vector<Cmat> ms;
  for (std::size_t i = 0; i < j["matrices"].size(); ++i)
    ms.push_back(parse_complex_matrix(j["matrices"][i], i));
  return ms;
}

// Re-throw construction failures with the offending matrix index attached.
template <typename Fn>
auto with_matrix_context(std::size_t index, Fn&& fn) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw InvariantViolation("matrix " + std::to_string(index) + ": " + e.what());
  }
}

}  // namespace detail

inline ChannelSpec load_channel_spec(const std::string& text) {
  detail::Json j;
  try {
    j = detail::Json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("channel spec: ") + e.what());
  }
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw ParseError("channel spec: missing string field 'kind'");

  ChannelSpec spec;
  spec.kind = j["kind"].get<std::string>();
  if (j.contains("labels")) {
    if (!j["labels"].is_array()) throw ParseError("channel spec: 'labels' must be an array");
    for (const auto& l : j["labels"]) {
      if (!l.is_string()) throw ParseError("channel spec: labels must be strings");
      spec.labels.push_back(l.get<std::string>());
    }
  }

  std::vector<Cmat> ms = detail::parse_matrix_list(j);
  if (spec.kind == "dmc") {
    if (ms.size() != 1) throw ParseError("dmc spec: exactly one transition matrix expected");
    std::vector<std::vector<double>> rows;
    for (Eigen::Index r = 0; r < ms[0].rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index c = 0; c < ms[0].cols(); ++c) {
        if (ms[0](r, c).imag() != 0.0) throw ParseError("dmc spec: transition entries must be real");
        row.push_back(ms[0](r, c).real());
      }
      rows.push_back(std::move(row));
    }
    spec.channel = detail::with_matrix_context(0, [&] { return ClassicalDMC(std::move(rows)); });
  } else if (spec.kind == "cq") {
    for (std::size_t i = 0; i < ms.size(); ++i)
      detail::with_matrix_context(i, [&] { return DensityMatrix(ms[i]); });
    spec.channel = detail::with_matrix_context(0, [&] { return CqChannel(std::move(ms)); });
  } else if (spec.kind == "cq_mac") {
    int senders = 2;
    if (j.contains("senders")) {
      if (!j["senders"].is_number_integer()) throw ParseError("cq_mac spec: 'senders' must be an integer");
      senders = j["senders"].get<int>();
    }
    for (std::size_t i = 0; i < ms.size(); ++i)
      detail::with_matrix_context(i, [&] { return DensityMatrix(ms[i]); });
    spec.channel = detail::with_matrix_context(0, [&] { return CqMac(senders, std::move(ms)); });
  } else if (spec.kind == "qubit_kraus") {
    spec.channel = detail::with_matrix_context(0, [&] { return QubitChannel(std::move(ms)); });
  } else if (spec.kind == "broadcast") {
    if (!j.contains("dims") || !j["dims"].is_array() || j["dims"].size() != 2 ||
        !j["dims"][0].is_number_integer() || !j["dims"][1].is_number_integer())
      throw ParseError("broadcast spec: 'dims' must be [d1, d2]");
    for (std::size_t i = 0; i < ms.size(); ++i)
      detail::with_matrix_context(i, [&] { return DensityMatrix(ms[i]); });
    spec.channel = detail::with_matrix_context(
        0, [&] { return BroadcastChannel(j["dims"][0].get<int>(), j["dims"][1].get<int>(), std::move(ms)); });
  } else {
    throw ParseError("channel spec: unknown kind '" + spec.kind + "'");
  }
  return spec;
}

inline std::string dump_channel_spec(const ChannelSpec& spec) {
  detail::Json j;
  j["kind"] = spec.kind;
  if (const auto* mac = std::get_if<CqMac>(&spec.channel)) j["senders"] = mac->senders;
  if (const auto* bc = std::get_if<BroadcastChannel>(&spec.channel))
    j["dims"] = detail::Json::array({bc->d1, bc->d2});
  if (!spec.labels.empty()) j["labels"] = spec.labels;

  detail::Json ms = detail::Json::array();
  if (const auto* dmc = std::get_if<ClassicalDMC>(&spec.channel)) {
    detail::Json rows = detail::Json::array();
    for (const auto& row : dmc->transition) {
      detail::Json r = detail::Json::array();
      for (double v : row) r.push_back(detail::Json::array({v, 0.0}));
      rows.push_back(r);
    }
    ms.push_back(rows);
  } else if (const auto* cq = std::get_if<CqChannel>(&spec.channel)) {
    for (const auto& m : cq->outputs) ms.push_back(detail::dump_complex_matrix(m));
  } else if (const auto* mac = std::get_if<CqMac>(&spec.channel)) {
    for (const auto& m : mac->outputs) ms.push_back(detail::dump_complex_matrix(m));
  } else if (const auto* qc = std::get_if<QubitChannel>(&spec.channel)) {
    for (const auto& m : qc->kraus) ms.push_back(detail::dump_complex_matrix(m));
  } else if (const auto* bc = std::get_if<BroadcastChannel>(&spec.channel)) {
    for (const auto& m : bc->outputs) ms.push_back(detail::dump_complex_matrix(m));
  }
  j["matrices"] = std::move(ms);
  return j.dump();
}

}  // namespace polarlab
