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

namespace ciss {

// Unit convention used throughout:
//   energy / coupling : MHz   (E/h)
//   magnetic field    : tesla (mT in sweep plans, converted at the boundary)
//   distance          : angstrom
//   time              : microseconds (ns in sweep plans, converted at the boundary)
// With MHz and us, the Liouville commutator carries a single 2*pi factor.

namespace constants {

// CODATA 2018
inline constexpr double mu_B_J_per_T = 9.2740100783e-24;
inline constexpr double h_J_s = 6.62607015e-34;
inline constexpr double mu0_over_4pi = 1e-7;  // T m / A
inline constexpr double g_e = 2.00231930436256;

// Bohr magneton over Planck constant: 13996.245 MHz per tesla per unit g.
inline constexpr double mu_B_MHz_per_T = mu_B_J_per_T / h_J_s * 1e-6;

// Point-dipole prefactor (mu0/4pi) mu_B^2 / h, expressed in MHz * angstrom^3.
// Dimensionless g factors multiply this; divide by r^3 in angstrom.
inline constexpr double dipolar_MHz_A3 =
    mu0_over_4pi * mu_B_J_per_T * mu_B_J_per_T / h_J_s * 1e30 * 1e-6;

}  // namespace constants
}  // namespace ciss
