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

#include <map>
#include <string>
#include <vector>

#include "ciss/liouville.hpp"
#include "ciss/spinsys.hpp"
#include "ciss/states.hpp"

namespace ciss {

struct Orientation {
  bool powder = false;
  int n_points = 0;  // powder only

  static Orientation fixed_parallel() { return {false, 0}; }
  static Orientation powder_grid(int n) { return {true, n}; }
};

// Field/time sweep for a TR-EPR run. Fields in mT, times in ns; conversions to
// the internal T/us units happen here.
struct TreprPlan {
  std::vector<double> b_grid_mT;
  std::vector<double> t_grid_ns;
  DriveSpec mw;
  Orientation orientation = Orientation::fixed_parallel();
  double window_start_ns = 0.0;
  double window_stop_ns = 0.0;
  double fwhm_mT = 0.0;

  void validate() const;
};

struct NmrPlan {
  Vec3 b0_T = Vec3(0, 0, 1);
  std::vector<double> nu_grid_MHz;
  double linewidth_MHz = 0.5;  // lorentzian FWHM

  void validate() const;
};

struct ConditionalRotation {
  std::string target;
  std::string control;
  bool control_up = true;
  double angle_rad = M_PI;
  Axis axis = Axis::x;
};

// Ideal instantaneous conditional rotations; the static field and linewidth
// are used only for the spectral-resolution precondition.
struct PulseProgram {
  std::vector<ConditionalRotation> pulses;
  Vec3 pulse_field_T = Vec3(0, 0, 1.2394);
  double selectivity_linewidth_MHz = 1.0;
};

// Labeled numeric result; data is stored with the first axis varying fastest
// (column-major over the axes grid).
struct SpectrumAxis {
  std::string name;
  std::string unit;
  std::vector<double> values;
};

struct SpectrumResult {
  std::vector<SpectrumAxis> axes;
  std::vector<double> data;
  std::map<std::string, std::string> metadata;

  size_t expected_size() const;
  double& at2(size_t i0, size_t i1);
  double at2(size_t i0, size_t i1) const;
  void validate_shape() const;
};

// Deterministic antipodally-symmetric orientation grid (golden spiral over the
// sphere). Returned rotations take the molecular z axis to the grid direction.
// When the system is not axially symmetric about its chiral axis the grid is
// subdivided over the third Euler angle.
std::vector<Mat3> powder_orientations(int n_points, const SpinSystem& system);

// 2D map of sum_e <S_y,i>(t) vs (t, B) in the frame rotating at the
// spectrometer frequency. With a powder orientation the molecule (and the
// polarized initial state with it) is rotated while B stays along lab z.
SpectrumResult trepr_map(const SpinSystem& system, const RPState& rp,
                         const SensorState& sensor, const TreprPlan& plan,
                         const DissipationSpec* dissipation, int threads = 1);

// As above, starting from an explicit full-space density matrix (used for the
// post-pulse readout). Only valid for the fixed-parallel orientation.
SpectrumResult trepr_map_from_state(const SpinSystem& system, const Matrix& rho0,
                                    const TreprPlan& plan,
                                    const DissipationSpec* dissipation,
                                    int threads = 1);

// Orientation average of trepr_map; plan.orientation must be a powder grid.
SpectrumResult powder_average(const SpinSystem& system, const RPState& rp,
                              const SensorState& sensor, const TreprPlan& plan,
                              const DissipationSpec* dissipation, int threads = 1);

// Trapezoidal time integral over [start, stop] ns, normalized by the window
// length; collapses the time axis.
SpectrumResult integrate_window(const SpectrumResult& map, double window_start_ns,
                                double window_stop_ns);

// Gaussian convolution (unit-area kernel, zero padding) along the named axis.
// fwhm = 0 is the identity; fwhm below one axis step warns and returns the
// input unchanged.
SpectrumResult broaden(const SpectrumResult& spec, double fwhm,
                       const std::string& axis_name = "field_mT");

// Sweep + inhomogeneous broadening with correct ensemble sampling: initial
// states carrying single-quantum coherences produce field fringes with period
// 1/(2 (g muB/h) t_max) that a coarse sweep grid aliases. The sweep is refined
// internally to resolve them, convolved, and decimated back onto the plan
// grid. rho0 == nullptr assembles the initial state from (rp, sensor);
// orientation handling follows the plan. raw_out, when given, receives the
// unbroadened plan-grid map from the same sweep.
SpectrumResult trepr_map_broadened(const SpinSystem& system, const RPState& rp,
                                   const SensorState& sensor, const Matrix* rho0,
                                   const TreprPlan& plan,
                                   const DissipationSpec* dissipation,
                                   int threads = 1,
                                   SpectrumResult* raw_out = nullptr);

// Linear-response NMR absorption from the static eigenbasis: intensity
// (rho_ii - rho_jj) |<j|I_x|i>|^2 at each gap, unit-area lorentzian lineshape.
SpectrumResult nmr_absorption(const SpinSystem& system, const RPState& rp,
                              const SensorState& sensor, const NmrPlan& plan);

// Applies the conditional rotations as ideal unitaries after checking that the
// control splitting resolves the addressed transitions (gap difference > 10x
// the program linewidth). Dissipation is ignored during pulses.
Matrix transfer_sequence(const SpinSystem& system, const Matrix& rho0,
                         const PulseProgram& program);

// -2 Tr[rho S_A . chiral_axis]  (molecular-frame acceptor polarization).
double acceptor_polarization(const Matrix& rho, const SpinSystem& system);

// Same readout for an arbitrary center, along an arbitrary axis.
double polarization_along(const Matrix& rho, const SpinSystem& system,
                          const std::string& center_label, const Vec3& axis);

}  // namespace ciss
