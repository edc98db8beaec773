// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbcd/scenario.hpp"

#include <cmath>
#include <limits>

namespace gbcd {

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!j.is_object()) throw InvalidArgument(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed) known = known || it.key() == k;
    if (!known) throw InvalidArgument(where + ": unknown key '" + it.key() + "'");
  }
}

void Scenario::validate() const {
  if (U < 1 || B < U)
    throw InvalidArgument("scenario: need B >= U >= 1 (B=" + std::to_string(B) +
                          ", U=" + std::to_string(U) + ")");
  if (order != 4 && order != 16 && order != 64 && order != 256)
    throw InvalidArgument("scenario: unsupported order " + std::to_string(order));
  if (!(channel.power_window_db >= 0.0)) throw InvalidArgument("scenario: negative power window");
  if (!(channel.los.k_factor >= 0.0)) throw InvalidArgument("scenario: negative k_factor");
}

Scenario scenario_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"B", "U", "order", "rate", "condition", "k_factor", "min_separation_deg",
                       "max_angle_deg", "angles_deg", "power_spread_db", "power_window_db"},
                      "scenario");
  Scenario s;
  try {
    s.B = j.value("B", s.B);
    s.U = j.value("U", s.U);
    s.order = j.value("order", s.order);
    if (j.contains("rate")) s.rate = parse_code_rate(j.at("rate").get<std::string>());
    if (j.contains("condition"))
      s.channel.condition = parse_condition(j.at("condition").get<std::string>());
    if (j.contains("k_factor")) {
      const auto& k = j.at("k_factor");
      s.channel.los.k_factor = k.is_string() && k.get<std::string>() == "inf"
                                   ? std::numeric_limits<double>::infinity()
                                   : k.get<double>();
    }
    s.channel.los.min_separation_deg =
        j.value("min_separation_deg", s.channel.los.min_separation_deg);
    s.channel.los.max_angle_deg = j.value("max_angle_deg", s.channel.los.max_angle_deg);
    if (j.contains("angles_deg"))
      s.channel.los.angles_deg = j.at("angles_deg").get<std::vector<double>>();
    s.channel.power_spread_db = j.value("power_spread_db", s.channel.power_spread_db);
    s.channel.power_window_db = j.value("power_window_db", s.channel.power_window_db);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const Scenario& s) {
  nlohmann::json j;
  j["B"] = s.B;
  j["U"] = s.U;
  j["order"] = s.order;
  j["rate"] = to_string(s.rate);
  j["condition"] = to_string(s.channel.condition);
  if (std::isinf(s.channel.los.k_factor)) j["k_factor"] = "inf";
  else j["k_factor"] = s.channel.los.k_factor;
  j["min_separation_deg"] = s.channel.los.min_separation_deg;
  j["max_angle_deg"] = s.channel.los.max_angle_deg;
  j["angles_deg"] = s.channel.los.angles_deg;
  j["power_spread_db"] = s.channel.power_spread_db;
  j["power_window_db"] = s.channel.power_window_db;
  return j;
}

}  // namespace gbcd
