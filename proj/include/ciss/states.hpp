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

#include <optional>
#include <string>

#include "ciss/linalg.hpp"
#include "ciss/spinsys.hpp"

namespace ciss {

// Post-electron-transfer state of the donor/acceptor radical pair.
//   Singlet      (|ud> - |du>)/sqrt(2), transfer along a linear bridge
//   Polarized(p) classical mixture with acceptor polarization p = -2 Tr[rho SzA]
//   PsiU         coherent single-spin rotation of the singlet; no local
//                polarization for any angles
struct RPState {
  enum class Kind { Singlet, Polarized, PsiU };
  Kind kind = Kind::Singlet;
  double p = 0.0;               // Polarized
  double theta = 0.0, phi = 0.0, lambda = 0.0;  // PsiU, radians

  static RPState singlet() { return {Kind::Singlet, 0, 0, 0, 0}; }
  static RPState polarized(double p) { return {Kind::Polarized, p, 0, 0, 0}; }
  static RPState psi_u(double theta, double phi, double lambda) {
    return {Kind::PsiU, 0, theta, phi, lambda};
  }
  std::string describe() const;
};

struct QubitState {
  enum class Kind { Down, MaximallyMixed, Thermal };
  Kind kind = Kind::Down;
  double p_up = 0.0;  // Thermal only

  static QubitState down() { return {Kind::Down, 0.0}; }
  static QubitState mixed() { return {Kind::MaximallyMixed, 0.5}; }
  static QubitState thermal(double p_up) { return {Kind::Thermal, p_up}; }
};

struct NucleusState {
  enum class Kind { Up, Down, MaximallyMixed };
  Kind kind = Kind::MaximallyMixed;

  static NucleusState up() { return {Kind::Up}; }
  static NucleusState down() { return {Kind::Down}; }
  static NucleusState mixed() { return {Kind::MaximallyMixed}; }
};

// Sensor factors; leave a field empty when the system has no such site.
struct SensorState {
  std::optional<QubitState> qubit;
  std::optional<NucleusState> nucleus;
};

// |psi_U(theta, phi, lambda)> in the basis (uu, ud, du, dd), quantized along z.
CVector psi_u_vector(double theta, double phi, double lambda);

// 4x4 density matrix of the radical pair, quantized along `axis` (the chiral
// axis in the lab frame). The singlet is axis-independent.
Matrix rp_density(const RPState& state, const Vec3& axis = Vec3::UnitZ());

// True iff |<S|psi_U>|^2 = 1 within 1e-12 (test utility).
bool psi_u_reduces_to_singlet_check(double theta, double phi, double lambda);

// rho_RP (x) qubit factors (x) nuclear factors, in the fixed basis ordering.
// Throws when a sensor factor is supplied for an absent site (or vice versa).
Matrix assemble_initial(const RPState& rp, const SensorState& sensor,
                        const SpinSystem& system);

}  // namespace ciss
