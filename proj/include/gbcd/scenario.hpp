// Copyright 2026 The GBCD Detector Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "gbcd/channel.hpp"
#include "gbcd/fec.hpp"

namespace gbcd {

/// System dimensions, alphabet, code and propagation model shared by
/// experiments and trained-parameter records.
struct Scenario {
  int B = 16;
  int U = 4;
  int order = 16;
  CodeRate rate = CodeRate::Half;
  ChannelOptions channel;

  void validate() const;
};

/// Reads a scenario object:
///   {"B": 16, "U": 4, "order": 16, "rate": "1/2", "condition": "nonlos",
///    "k_factor": 10, "min_separation_deg": 2, "max_angle_deg": 60,
///    "angles_deg": [], "power_spread_db": 0, "power_window_db": 3}
/// Missing keys keep their defaults; unknown keys are rejected.
Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scenario& s);

/// Throws InvalidArgument naming the first key of `j` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where);

}  // namespace gbcd
