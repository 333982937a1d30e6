/* Copyright 2026 The Cisspin Authors. All Rights Reserved.
Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at
    http://www.apache.org/licenses/LICENSE-2.0
Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "ciss/experiments.hpp"

namespace ciss {

// Config or validation problem; maps to exit code 2 at the CLI.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OutputSpec {
  std::string dir = "out";
  std::string basename = "run";
  bool plots = true;
};

struct ExperimentSpec {
  enum class Type { Trepr, Nmr, Transfer };
  Type type = Type::Trepr;
  TreprPlan trepr;      // Trepr, and the Transfer readout
  NmrPlan nmr;
  PulseProgram pulses;  // Transfer only
};

struct RunConfig {
  int schema_version = 1;
  SpinSystem system;
  RPState rp;
  SensorState sensor;
  DissipationSpec dissipation;
  bool dissipation_enabled = true;
  ExperimentSpec experiment;
  OutputSpec output;
  int threads = 1;
  bool deterministic = true;

  // Canonical representation (grids expanded); basis of the round-trip
  // guarantee and of the provenance hash.
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);

  void validate() const;
};

// Strict parse: unknown keys are rejected; parse errors carry line/column.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");

// FNV-1a over the canonical config dump; deterministic provenance tag.
std::string config_hash(const RunConfig& cfg);

// Executes the plan and writes CSV/JSON (and SVG unless disabled) artifacts.
// Returns the list of files written.
std::vector<std::string> run(const RunConfig& cfg);

}  // namespace ciss
