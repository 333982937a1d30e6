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
#include "ciss/config.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "ciss/output.hpp"

namespace ciss {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& ctx, const std::string& what) {
  throw ConfigError(ctx + ": " + what);
}

void expect_object(const json& j, const std::string& ctx) {
  if (!j.is_object()) fail(ctx, "expected an object");
}

// Strict mode: every present key must be in the allowed set.
void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::set<std::string>& required, const std::string& ctx) {
  expect_object(j, ctx);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail(ctx, "unknown key '" + it.key() + "'");
  for (const auto& r : required)
    if (!j.contains(r)) fail(ctx, "missing required key '" + r + "'");
}

double get_number(const json& j, const std::string& ctx) {
  if (!j.is_number()) fail(ctx, "expected a number");
  return j.get<double>();
}

double get_number(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) fail(ctx, "missing required key '" + key + "'");
  return get_number(j.at(key), ctx + "." + key);
}

double get_number_or(const json& j, const std::string& key, double fallback,
                     const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  return get_number(j.at(key), ctx + "." + key);
}

bool get_bool_or(const json& j, const std::string& key, bool fallback,
                 const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) fail(ctx + "." + key, "expected a boolean");
  return j.at(key).get<bool>();
}

std::string get_string(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) fail(ctx, "missing required key '" + key + "'");
  if (!j.at(key).is_string()) fail(ctx + "." + key, "expected a string");
  return j.at(key).get<std::string>();
}

Vec3 get_vec3(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) fail(ctx, "expected an array of 3 numbers");
  return Vec3(get_number(j[0], ctx), get_number(j[1], ctx), get_number(j[2], ctx));
}

// A grid is either {"start": a, "stop": b, "points": n} or an explicit array.
std::vector<double> get_grid(const json& j, const std::string& ctx) {
  if (j.is_array()) {
    std::vector<double> v;
    for (size_t k = 0; k < j.size(); ++k) v.push_back(get_number(j[k], ctx));
    return v;
  }
  check_keys(j, {"start", "stop", "points"}, {"start", "stop", "points"}, ctx);
  double a = get_number(j, "start", ctx);
  double b = get_number(j, "stop", ctx);
  double n = get_number(j, "points", ctx);
  int np = int(n);
  if (np < 1 || double(np) != n) fail(ctx + ".points", "expected a positive integer");
  std::vector<double> v(np);
  for (int k = 0; k < np; ++k)
    v[k] = (np == 1) ? a : a + (b - a) * double(k) / double(np - 1);
  return v;
}

// g tensor: scalar, 3 principal values, or full 3x3.
Mat3 get_g_tensor(const json& j, const std::string& ctx) {
  if (j.is_number()) return Mat3::Identity() * j.get<double>();
  if (j.is_array() && j.size() == 3 && j[0].is_number()) {
    Mat3 g = Mat3::Zero();
    for (int k = 0; k < 3; ++k) g(k, k) = get_number(j[k], ctx);
    return g;
  }
  if (j.is_array() && j.size() == 3 && j[0].is_array()) {
    Mat3 g;
    for (int r = 0; r < 3; ++r) {
      if (!j[r].is_array() || j[r].size() != 3) fail(ctx, "expected 3x3 rows");
      for (int c = 0; c < 3; ++c) g(r, c) = get_number(j[r][c], ctx);
    }
    return g;
  }
  fail(ctx, "expected a number, 3 principal values, or a 3x3 matrix");
}

Mat3 get_mat3(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3) fail(ctx, "expected a 3x3 matrix");
  Mat3 m;
  for (int r = 0; r < 3; ++r) {
    if (!j[r].is_array() || j[r].size() != 3) fail(ctx, "expected 3x3 rows");
    for (int c = 0; c < 3; ++c) m(r, c) = get_number(j[r][c], ctx);
  }
  return m;
}

SpinSystem parse_system(const json& j, const std::string& ctx) {
  check_keys(j,
             {"centers", "nuclei", "chiral_axis", "couplings", "allow_exotic_g"},
             {"centers"}, ctx);
  SpinSystem sys;
  sys.allow_exotic_g = get_bool_or(j, "allow_exotic_g", false, ctx);

  if (!j.at("centers").is_array()) fail(ctx + ".centers", "expected an array");
  for (size_t k = 0; k < j.at("centers").size(); ++k) {
    const json& c = j.at("centers")[k];
    std::string cctx = ctx + ".centers[" + std::to_string(k) + "]";
    check_keys(c, {"label", "g", "position_A"}, {"label", "g", "position_A"}, cctx);
    SpinCenter sc;
    sc.label = get_string(c, "label", cctx);
    sc.g_tensor = get_g_tensor(c.at("g"), cctx + ".g");
    sc.position_A = get_vec3(c.at("position_A"), cctx + ".position_A");
    sys.centers.push_back(sc);
  }

  if (j.contains("nuclei")) {
    if (!j.at("nuclei").is_array()) fail(ctx + ".nuclei", "expected an array");
    for (size_t k = 0; k < j.at("nuclei").size(); ++k) {
      const json& n = j.at("nuclei")[k];
      std::string nctx = ctx + ".nuclei[" + std::to_string(k) + "]";
      check_keys(n, {"label", "larmor_MHz_per_T", "hyperfine_A_MHz", "attached_to"},
                 {"label", "attached_to"}, nctx);
      NuclearSpin ns;
      ns.label = get_string(n, "label", nctx);
      ns.larmor_MHz_per_T = get_number_or(n, "larmor_MHz_per_T", 40.0, nctx);
      ns.hyperfine_A_MHz = get_number_or(n, "hyperfine_A_MHz", 0.0, nctx);
      ns.attached_to = get_string(n, "attached_to", nctx);
      sys.nuclei.push_back(ns);
    }
  }

  if (j.contains("chiral_axis"))
    sys.chiral_axis = get_vec3(j.at("chiral_axis"), ctx + ".chiral_axis").normalized();

  if (j.contains("couplings")) {
    const json& cp = j.at("couplings");
    std::string pctx = ctx + ".couplings";
    check_keys(cp, {"mode", "pairs", "tensors"}, {"mode"}, pctx);
    std::string mode = get_string(cp, "mode", pctx);
    if (mode == "auto_dipolar") {
      if (!cp.contains("pairs") || !cp.at("pairs").is_array())
        fail(pctx, "auto_dipolar needs a 'pairs' array");
      for (size_t k = 0; k < cp.at("pairs").size(); ++k) {
        const json& p = cp.at("pairs")[k];
        std::string ectx = pctx + ".pairs[" + std::to_string(k) + "]";
        check_keys(p, {"pair", "isotropic_add_MHz"}, {"pair"}, ectx);
        if (!p.at("pair").is_array() || p.at("pair").size() != 2)
          fail(ectx + ".pair", "expected two labels");
        std::string a = p.at("pair")[0].get<std::string>();
        std::string b = p.at("pair")[1].get<std::string>();
        double add = get_number_or(p, "isotropic_add_MHz", 0.0, ectx);
        sys.couplings.push_back(make_dipolar_coupling(sys, a, b, add));
      }
    } else if (mode == "explicit") {
      if (!cp.contains("tensors") || !cp.at("tensors").is_array())
        fail(pctx, "explicit needs a 'tensors' array");
      for (size_t k = 0; k < cp.at("tensors").size(); ++k) {
        const json& p = cp.at("tensors")[k];
        std::string ectx = pctx + ".tensors[" + std::to_string(k) + "]";
        check_keys(p, {"pair", "J_MHz"}, {"pair", "J_MHz"}, ectx);
        CouplingTensor ct;
        ct.label_i = p.at("pair")[0].get<std::string>();
        ct.label_j = p.at("pair")[1].get<std::string>();
        ct.J_MHz = get_mat3(p.at("J_MHz"), ectx + ".J_MHz");
        sys.couplings.push_back(ct);
      }
    } else {
      fail(pctx + ".mode", "expected 'auto_dipolar' or 'explicit'");
    }
  }
  return sys;
}

RPState parse_rp(const json& j, const std::string& ctx) {
  check_keys(j, {"kind", "p", "theta_rad", "phi_rad", "lambda_rad"}, {"kind"}, ctx);
  std::string kind = get_string(j, "kind", ctx);
  if (kind == "singlet") return RPState::singlet();
  if (kind == "polarized") {
    double p = get_number(j, "p", ctx);
    if (p < -1.0 || p > 1.0) fail(ctx + ".p", "polarization outside [-1, 1]");
    return RPState::polarized(p);
  }
  if (kind == "psi_u")
    return RPState::psi_u(get_number_or(j, "theta_rad", 0.0, ctx),
                          get_number_or(j, "phi_rad", 0.0, ctx),
                          get_number_or(j, "lambda_rad", 0.0, ctx));
  fail(ctx + ".kind", "expected 'singlet', 'polarized' or 'psi_u'");
}

QubitState parse_qubit(const json& j, const std::string& ctx) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "down") return QubitState::down();
    if (s == "mixed") return QubitState::mixed();
    fail(ctx, "expected 'down', 'mixed' or {\"p_up\": x}");
  }
  check_keys(j, {"p_up"}, {"p_up"}, ctx);
  double p_up = get_number(j, "p_up", ctx);
  if (p_up < 0.0 || p_up > 1.0) fail(ctx + ".p_up", "population outside [0, 1]");
  return QubitState::thermal(p_up);
}

NucleusState parse_nucleus(const json& j, const std::string& ctx) {
  if (!j.is_string()) fail(ctx, "expected 'up', 'down' or 'mixed'");
  std::string s = j.get<std::string>();
  if (s == "up") return NucleusState::up();
  if (s == "down") return NucleusState::down();
  if (s == "mixed") return NucleusState::mixed();
  fail(ctx, "expected 'up', 'down' or 'mixed'");
}

DriveSpec parse_mw(const json& j, const std::string& ctx) {
  check_keys(j, {"freq_GHz", "b1_mT", "phase_rad"}, {"freq_GHz"}, ctx);
  DriveSpec mw;
  mw.freq_GHz = get_number(j, "freq_GHz", ctx);
  mw.b1_mT = get_number_or(j, "b1_mT", 0.01, ctx);
  mw.phase_rad = get_number_or(j, "phase_rad", 0.0, ctx);
  return mw;
}

TreprPlan parse_trepr(const json& j, const std::string& ctx) {
  check_keys(j,
             {"type", "field_mT", "time_ns", "microwave", "orientation", "window_ns",
              "fwhm_mT"},
             {"field_mT", "time_ns", "microwave", "window_ns"}, ctx);
  TreprPlan plan;
  plan.b_grid_mT = get_grid(j.at("field_mT"), ctx + ".field_mT");
  plan.t_grid_ns = get_grid(j.at("time_ns"), ctx + ".time_ns");
  plan.mw = parse_mw(j.at("microwave"), ctx + ".microwave");
  if (j.contains("orientation")) {
    const json& o = j.at("orientation");
    if (o.is_string()) {
      if (o.get<std::string>() != "parallel")
        fail(ctx + ".orientation", "expected 'parallel' or {\"powder_points\": n}");
      plan.orientation = Orientation::fixed_parallel();
    } else {
      check_keys(o, {"powder_points"}, {"powder_points"}, ctx + ".orientation");
      plan.orientation =
          Orientation::powder_grid(int(get_number(o, "powder_points", ctx)));
    }
  }
  const json& w = j.at("window_ns");
  if (!w.is_array() || w.size() != 2)
    fail(ctx + ".window_ns", "expected [start, stop]");
  plan.window_start_ns = get_number(w[0], ctx + ".window_ns");
  plan.window_stop_ns = get_number(w[1], ctx + ".window_ns");
  plan.fwhm_mT = get_number_or(j, "fwhm_mT", 0.0, ctx);
  return plan;
}

NmrPlan parse_nmr(const json& j, const std::string& ctx) {
  check_keys(j, {"type", "b0_T", "freq_MHz", "linewidth_MHz"},
             {"b0_T", "freq_MHz", "linewidth_MHz"}, ctx);
  NmrPlan plan;
  plan.b0_T = get_vec3(j.at("b0_T"), ctx + ".b0_T");
  plan.nu_grid_MHz = get_grid(j.at("freq_MHz"), ctx + ".freq_MHz");
  plan.linewidth_MHz = get_number(j, "linewidth_MHz", ctx);
  return plan;
}

Axis parse_axis(const std::string& s, const std::string& ctx) {
  if (s == "x") return Axis::x;
  if (s == "y") return Axis::y;
  if (s == "z") return Axis::z;
  fail(ctx, "expected axis 'x', 'y' or 'z'");
}

PulseProgram parse_pulses(const json& j, const std::string& ctx) {
  PulseProgram prog;
  check_keys(j, {"pulse_field_T", "selectivity_linewidth_MHz", "sequence"},
             {"pulse_field_T", "sequence"}, ctx);
  prog.pulse_field_T = get_vec3(j.at("pulse_field_T"), ctx + ".pulse_field_T");
  prog.selectivity_linewidth_MHz =
      get_number_or(j, "selectivity_linewidth_MHz", 1.0, ctx);
  if (!j.at("sequence").is_array()) fail(ctx + ".sequence", "expected an array");
  for (size_t k = 0; k < j.at("sequence").size(); ++k) {
    const json& p = j.at("sequence")[k];
    std::string pctx = ctx + ".sequence[" + std::to_string(k) + "]";
    check_keys(p, {"target", "control", "control_state", "angle_deg", "axis"},
               {"target", "control", "control_state", "angle_deg"}, pctx);
    ConditionalRotation rot;
    rot.target = get_string(p, "target", pctx);
    rot.control = get_string(p, "control", pctx);
    std::string cs = get_string(p, "control_state", pctx);
    if (cs != "up" && cs != "down")
      fail(pctx + ".control_state", "expected 'up' or 'down'");
    rot.control_up = (cs == "up");
    rot.angle_rad = get_number(p, "angle_deg", pctx) * M_PI / 180.0;
    rot.axis = p.contains("axis") ? parse_axis(get_string(p, "axis", pctx), pctx)
                                  : Axis::x;
    prog.pulses.push_back(rot);
  }
  return prog;
}

json dump_grid(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

json dump_mat3(const Mat3& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r) {
    json row = json::array();
    for (int c = 0; c < 3; ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  try {
    system.validate();
    dissipation.validate();
    switch (experiment.type) {
      case ExperimentSpec::Type::Trepr:
        experiment.trepr.validate();
        break;
      case ExperimentSpec::Type::Nmr:
        experiment.nmr.validate();
        if (system.nuclei.empty())
          throw std::invalid_argument("nmr experiment requires a probe nucleus");
        break;
      case ExperimentSpec::Type::Transfer:
        experiment.trepr.validate();
        if (experiment.pulses.pulses.empty())
          throw std::invalid_argument("transfer experiment has an empty sequence");
        break;
    }
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (system.centers.size() > 2 && !sensor.qubit)
      throw std::invalid_argument("system has a qubit center but state.qubit is missing");
    if (!system.nuclei.empty() && !sensor.nucleus)
      throw std::invalid_argument("system has nuclei but state.nucleus is missing");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

RunConfig RunConfig::from_json(const json& j) {
  check_keys(j,
             {"schema_version", "system", "state", "dissipation", "experiment",
              "output", "threads", "deterministic"},
             {"schema_version", "system", "state", "experiment"}, "config");
  RunConfig cfg;
  double sv = get_number(j, "schema_version", "config");
  if (sv != 1) fail("config.schema_version", "unsupported schema version");
  cfg.schema_version = 1;

  cfg.system = parse_system(j.at("system"), "config.system");

  const json& st = j.at("state");
  check_keys(st, {"rp", "qubit", "nucleus"}, {"rp"}, "config.state");
  cfg.rp = parse_rp(st.at("rp"), "config.state.rp");
  if (st.contains("qubit"))
    cfg.sensor.qubit = parse_qubit(st.at("qubit"), "config.state.qubit");
  if (st.contains("nucleus"))
    cfg.sensor.nucleus = parse_nucleus(st.at("nucleus"), "config.state.nucleus");

  if (j.contains("dissipation")) {
    const json& ds = j.at("dissipation");
    check_keys(ds,
               {"enabled", "t1_us", "t2_us", "t_r_us", "recombination",
                "t1_temperature"},
               {}, "config.dissipation");
    cfg.dissipation_enabled = get_bool_or(ds, "enabled", true, "config.dissipation");
    cfg.dissipation.t1_us = get_number_or(ds, "t1_us", 2.0, "config.dissipation");
    cfg.dissipation.t2_us = get_number_or(ds, "t2_us", 0.5, "config.dissipation");
    cfg.dissipation.t_r_us = get_number_or(ds, "t_r_us", 10.0, "config.dissipation");
    if (ds.contains("t1_temperature")) {
      std::string t = ds.at("t1_temperature").get<std::string>();
      if (t == "infinite")
        cfg.dissipation.t1_temperature = T1Temperature::Infinite;
      else if (t == "zero")
        cfg.dissipation.t1_temperature = T1Temperature::Zero;
      else
        fail("config.dissipation.t1_temperature", "expected 'infinite' or 'zero'");
    }
    if (ds.contains("recombination")) {
      std::string r = ds.at("recombination").get<std::string>();
      if (r == "singlet")
        cfg.dissipation.channel = RecombinationChannel::Singlet;
      else if (r == "singlet+triplet")
        cfg.dissipation.channel = RecombinationChannel::SingletAndTriplet;
      else if (r == "off")
        cfg.dissipation.recombination_enabled = false;
      else
        fail("config.dissipation.recombination",
             "expected 'singlet', 'singlet+triplet' or 'off'");
    }
  }

  const json& ex = j.at("experiment");
  expect_object(ex, "config.experiment");
  std::string type = get_string(ex, "type", "config.experiment");
  if (type == "trepr") {
    cfg.experiment.type = ExperimentSpec::Type::Trepr;
    cfg.experiment.trepr = parse_trepr(ex, "config.experiment");
  } else if (type == "nmr") {
    cfg.experiment.type = ExperimentSpec::Type::Nmr;
    cfg.experiment.nmr = parse_nmr(ex, "config.experiment");
  } else if (type == "transfer") {
    cfg.experiment.type = ExperimentSpec::Type::Transfer;
    check_keys(ex, {"type", "pulses", "readout"}, {"type", "pulses", "readout"},
               "config.experiment");
    cfg.experiment.pulses = parse_pulses(ex.at("pulses"), "config.experiment.pulses");
    cfg.experiment.trepr = parse_trepr(ex.at("readout"), "config.experiment.readout");
  } else {
    fail("config.experiment.type", "expected 'trepr', 'nmr' or 'transfer'");
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, {"dir", "basename", "plots"}, {}, "config.output");
    if (o.contains("dir")) cfg.output.dir = get_string(o, "dir", "config.output");
    if (o.contains("basename"))
      cfg.output.basename = get_string(o, "basename", "config.output");
    cfg.output.plots = get_bool_or(o, "plots", true, "config.output");
  }
  if (j.contains("threads")) {
    double t = get_number(j, "threads", "config");
    if (t < 1 || t != int(t)) fail("config.threads", "expected a positive integer");
    cfg.threads = int(t);
  }
  cfg.deterministic = get_bool_or(j, "deterministic", true, "config");

  cfg.validate();
  return cfg;
}

json RunConfig::to_json() const {
  json j;
  j["schema_version"] = schema_version;

  json sys;
  sys["allow_exotic_g"] = system.allow_exotic_g;
  sys["chiral_axis"] = {system.chiral_axis.x(), system.chiral_axis.y(),
                        system.chiral_axis.z()};
  sys["centers"] = json::array();
  for (const auto& c : system.centers) {
    json cj;
    cj["label"] = c.label;
    cj["g"] = dump_mat3(c.g_tensor);
    cj["position_A"] = {c.position_A.x(), c.position_A.y(), c.position_A.z()};
    sys["centers"].push_back(cj);
  }
  if (!system.nuclei.empty()) {
    sys["nuclei"] = json::array();
    for (const auto& n : system.nuclei) {
      json nj;
      nj["label"] = n.label;
      nj["larmor_MHz_per_T"] = n.larmor_MHz_per_T;
      nj["hyperfine_A_MHz"] = n.hyperfine_A_MHz;
      nj["attached_to"] = n.attached_to;
      sys["nuclei"].push_back(nj);
    }
  }
  if (!system.couplings.empty()) {
    json cj;
    cj["mode"] = "explicit";
    cj["tensors"] = json::array();
    for (const auto& cp : system.couplings) {
      json t;
      t["pair"] = {cp.label_i, cp.label_j};
      t["J_MHz"] = dump_mat3(cp.J_MHz);
      cj["tensors"].push_back(t);
    }
    sys["couplings"] = cj;
  }
  j["system"] = sys;

  json st;
  switch (rp.kind) {
    case RPState::Kind::Singlet: st["rp"] = {{"kind", "singlet"}}; break;
    case RPState::Kind::Polarized:
      st["rp"] = {{"kind", "polarized"}, {"p", rp.p}};
      break;
    case RPState::Kind::PsiU:
      st["rp"] = {{"kind", "psi_u"},
                  {"theta_rad", rp.theta},
                  {"phi_rad", rp.phi},
                  {"lambda_rad", rp.lambda}};
      break;
  }
  if (sensor.qubit) {
    switch (sensor.qubit->kind) {
      case QubitState::Kind::Down: st["qubit"] = "down"; break;
      case QubitState::Kind::MaximallyMixed: st["qubit"] = "mixed"; break;
      case QubitState::Kind::Thermal:
        st["qubit"] = {{"p_up", sensor.qubit->p_up}};
        break;
    }
  }
  if (sensor.nucleus) {
    switch (sensor.nucleus->kind) {
      case NucleusState::Kind::Up: st["nucleus"] = "up"; break;
      case NucleusState::Kind::Down: st["nucleus"] = "down"; break;
      case NucleusState::Kind::MaximallyMixed: st["nucleus"] = "mixed"; break;
    }
  }
  j["state"] = st;

  json ds;
  ds["enabled"] = dissipation_enabled;
  ds["t1_us"] = dissipation.t1_us;
  ds["t2_us"] = dissipation.t2_us;
  ds["t_r_us"] = dissipation.t_r_us;
  ds["recombination"] =
      !dissipation.recombination_enabled
          ? "off"
          : (dissipation.channel == RecombinationChannel::Singlet ? "singlet"
                                                                  : "singlet+triplet");
  ds["t1_temperature"] =
      dissipation.t1_temperature == T1Temperature::Infinite ? "infinite" : "zero";
  j["dissipation"] = ds;

  auto dump_trepr = [](const TreprPlan& plan) {
    json ex;
    ex["field_mT"] = dump_grid(plan.b_grid_mT);
    ex["time_ns"] = dump_grid(plan.t_grid_ns);
    ex["microwave"] = {{"freq_GHz", plan.mw.freq_GHz},
                       {"b1_mT", plan.mw.b1_mT},
                       {"phase_rad", plan.mw.phase_rad}};
    if (plan.orientation.powder)
      ex["orientation"] = {{"powder_points", plan.orientation.n_points}};
    else
      ex["orientation"] = "parallel";
    ex["window_ns"] = {plan.window_start_ns, plan.window_stop_ns};
    ex["fwhm_mT"] = plan.fwhm_mT;
    return ex;
  };

  json ex;
  switch (experiment.type) {
    case ExperimentSpec::Type::Trepr:
      ex = dump_trepr(experiment.trepr);
      ex["type"] = "trepr";
      break;
    case ExperimentSpec::Type::Nmr:
      ex["type"] = "nmr";
      ex["b0_T"] = {experiment.nmr.b0_T.x(), experiment.nmr.b0_T.y(),
                    experiment.nmr.b0_T.z()};
      ex["freq_MHz"] = dump_grid(experiment.nmr.nu_grid_MHz);
      ex["linewidth_MHz"] = experiment.nmr.linewidth_MHz;
      break;
    case ExperimentSpec::Type::Transfer: {
      ex["type"] = "transfer";
      json pj;
      pj["pulse_field_T"] = {experiment.pulses.pulse_field_T.x(),
                             experiment.pulses.pulse_field_T.y(),
                             experiment.pulses.pulse_field_T.z()};
      pj["selectivity_linewidth_MHz"] = experiment.pulses.selectivity_linewidth_MHz;
      pj["sequence"] = json::array();
      for (const auto& p : experiment.pulses.pulses) {
        json r;
        r["target"] = p.target;
        r["control"] = p.control;
        r["control_state"] = p.control_up ? "up" : "down";
        r["angle_deg"] = p.angle_rad * 180.0 / M_PI;
        r["axis"] = (p.axis == Axis::x) ? "x" : (p.axis == Axis::y ? "y" : "z");
        pj["sequence"].push_back(r);
      }
      ex["pulses"] = pj;
      ex["readout"] = dump_trepr(experiment.trepr);
      break;
    }
  }
  j["experiment"] = ex;

  j["output"] = {{"dir", output.dir}, {"basename", output.basename},
                 {"plots", output.plots}};
  j["threads"] = threads;
  j["deterministic"] = deterministic;
  return j;
}

RunConfig parse_config(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // Recover line/column from the byte offset.
    size_t line = 1, col = 1;
    for (size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ": parse error at line " + std::to_string(line) +
                      ", column " + std::to_string(col) + ": " + e.what());
  }
  try {
    return RunConfig::from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  } catch (const std::exception& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string config_hash(const RunConfig& cfg) {
  // Physics content only: runs differing in output paths or worker counts
  // must produce byte-identical result files.
  json j = cfg.to_json();
  j.erase("output");
  j.erase("threads");
  j.erase("deterministic");
  std::string dump = j.dump();
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

std::vector<std::string> run(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  cfg.validate();
  fs::create_directories(cfg.output.dir);
  std::string stem = (fs::path(cfg.output.dir) / cfg.output.basename).string();
  std::vector<std::string> written;

  const DissipationSpec* diss = cfg.dissipation_enabled ? &cfg.dissipation : nullptr;

  auto finalize = [&](SpectrumResult& spec) {
    spec.metadata["provenance"] = "cisspin 1.0 config:" + config_hash(cfg);
    spec.metadata["schema_version"] = "1";
  };
  auto emit = [&](const SpectrumResult& spec, const std::string& suffix) {
    write_spectrum_csv(stem + suffix + ".csv", spec);
    written.push_back(stem + suffix + ".csv");
    write_spectrum_json(stem + suffix + ".json", spec);
    written.push_back(stem + suffix + ".json");
    if (cfg.output.plots) {
      write_spectrum_svg(stem + suffix + ".svg", spec);
      written.push_back(stem + suffix + ".svg");
    }
  };

  switch (cfg.experiment.type) {
    case ExperimentSpec::Type::Trepr: {
      const TreprPlan& plan = cfg.experiment.trepr;
      SpectrumResult raw;
      SpectrumResult map = trepr_map_broadened(cfg.system, cfg.rp, cfg.sensor,
                                               nullptr, plan, diss, cfg.threads, &raw);
      finalize(map);
      emit(map, "_map");
      SpectrumResult spec =
          integrate_window(map, plan.window_start_ns, plan.window_stop_ns);
      finalize(spec);
      emit(spec, "_spectrum");
      // unbroadened companion spectrum: the sign-pattern analysis surface
      SpectrumResult spec_raw =
          integrate_window(raw, plan.window_start_ns, plan.window_stop_ns);
      spec_raw.metadata["broadening"] = "none";
      finalize(spec_raw);
      emit(spec_raw, "_spectrum_raw");
      break;
    }
    case ExperimentSpec::Type::Nmr: {
      SpectrumResult spec =
          nmr_absorption(cfg.system, cfg.rp, cfg.sensor, cfg.experiment.nmr);
      finalize(spec);
      emit(spec, "_nmr");
      break;
    }
    case ExperimentSpec::Type::Transfer: {
      Matrix rho0 = assemble_initial(cfg.rp, cfg.sensor, cfg.system);
      Matrix rho1 = transfer_sequence(cfg.system, rho0, cfg.experiment.pulses);

      const TreprPlan& plan = cfg.experiment.trepr;
      SpectrumResult map = trepr_map_broadened(cfg.system, cfg.rp, cfg.sensor,
                                               &rho1, plan, diss, cfg.threads);
      map.metadata["state"] = cfg.rp.describe() + " + pulse sequence";
      for (const auto& c : cfg.system.centers) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g",
                      polarization_along(rho1, cfg.system, c.label, Vec3::UnitZ()));
        map.metadata["polarization_z_" + c.label] = buf;
      }
      finalize(map);
      emit(map, "_map");
      SpectrumResult spec =
          integrate_window(map, plan.window_start_ns, plan.window_stop_ns);
      finalize(spec);
      emit(spec, "_spectrum");
      break;
    }
  }
  return written;
}

}  // namespace ciss
