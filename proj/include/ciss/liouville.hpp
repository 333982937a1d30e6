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

#include <functional>
#include <vector>

#include "ciss/linalg.hpp"
#include "ciss/spinsys.hpp"

namespace ciss {

enum class RecombinationChannel { Singlet, SingletAndTriplet };

// T1 bath temperature. Infinite (the default) drives populations toward the
// maximally mixed state, the right limit for these systems where the Zeeman
// quantum is tiny against kT; Zero biases decay toward the local ground state.
enum class T1Temperature { Infinite, Zero };

// Phenomenological dissipation: identical T1/T2 for every electron center
// (independent baths), plus radical-pair recombination at 1/T_R acting in the
// donor/acceptor singlet-triplet basis.
struct DissipationSpec {
  double t1_us = 2.0;
  double t2_us = 0.5;
  double t_r_us = 10.0;
  RecombinationChannel channel = RecombinationChannel::Singlet;
  bool recombination_enabled = true;
  T1Temperature t1_temperature = T1Temperature::Infinite;

  void validate() const;
};

// Continuous-wave microwave drive applied to all electron centers. The linear
// field 2*(b1/2)*cos(2 pi f t) along `axis` keeps its co-rotating half under
// the RWA; `phase` sets the azimuth of the rotating-frame drive axis.
struct DriveSpec {
  double b1_mT = 0.01;
  double freq_GHz = 9.8;
  double phase_rad = 0.0;

  double freq_MHz() const { return freq_GHz * 1e3; }
  void validate() const;
};

// Dense Liouville-space generator acting on column-stacked density matrices.
struct Generator {
  Matrix matrix;          // d^2 x d^2
  int dim = 0;            // Hilbert dimension d
  double frame_MHz = 0.0; // rotating-frame carrier; 0 = lab frame
};

// rho -> -2 pi i [H, rho]  (H in MHz, time in microseconds).
Matrix hamiltonian_superop(const Matrix& H);

// Lindblad dissipator superoperator for a single jump operator.
Matrix lindblad_superop(const Matrix& L);

// Per-center T1 relaxation (population decay time t1_us toward the bath
// steady state set by t1_temperature) plus pure dephasing at rate
// 1/T2 - 1/(2 T1), all along the local quantization axis (direction of
// g_i . B; lab z when B vanishes). Coherences decay at exactly 1/T2 in either
// temperature mode. Nuclei are not damped.
Matrix relaxation_superop(const SpinSystem& system, const DissipationSpec& spec,
                          const Vec3& B_T);

// Anticommutator decay -1/(2 T_R) {P, rho} with P the donor/acceptor singlet
// projector (plus the triplet projector for the two-channel variant).
// Removes radical-pair population; trace is not preserved.
Matrix recombination_superop(const SpinSystem& system, const DissipationSpec& spec);

// Donor/acceptor singlet projector on the full space: 1/4 - S_D . S_A.
Matrix singlet_projector(const SpinSystem& system);

struct DriveTerms {
  Matrix h_drive;       // MHz, rotating frame
  Matrix h_frame_shift; // -f * sum_e S_z
  bool rwa_warning = false;  // b1 not small vs. the resonance field
};

// Rotating-frame drive and frame-shift Hamiltonian terms. B_T is used only for
// the RWA validity warning (b1 < 1% of |B|).
DriveTerms drive_superop(const SpinSystem& system, const DriveSpec& drive,
                         const Vec3& B_T);

// H_static - f sum_e S_z + drive, all MHz.
Matrix rotating_frame_hamiltonian(const SpinSystem& system, const Matrix& H_static,
                                  const DriveSpec& drive, const Vec3& B_T);

// Full generator for a cw-driven, damped system in the rotating frame.
// Pass b1 = 0 for free evolution; dissipation may be omitted.
Generator build_generator(const SpinSystem& system, const Vec3& B_T,
                          const DriveSpec* drive, const DissipationSpec* dissipation);

// W(t) = exp(+2 pi i f t sum_e S_z); rho_rot = W rho_lab W^dagger.
Matrix rotating_frame_unitary(const SpinSystem& system, double frame_MHz, double t_us);

// rho(t_k) = exp(G t_k) rho0 by dense matrix exponential; one cached step
// exponential on uniform grids. Output is re-Hermitized against roundoff
// drift and checked for finiteness.
std::vector<Matrix> propagate(const Generator& G, const Matrix& rho0,
                              const std::vector<double>& t_grid_us);

// Streaming variant: invokes sink(k, rho_k) instead of storing the trajectory.
void propagate_visit(const Generator& G, const Matrix& rho0,
                     const std::vector<double>& t_grid_us,
                     const std::function<void(size_t, const Matrix&)>& sink);

// Re[Tr(O rho(t_k))] for each trajectory point.
std::vector<double> expectation(const std::vector<Matrix>& trajectory, const Matrix& O);

}  // namespace ciss
