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

#include <string>
#include <vector>

#include "ciss/linalg.hpp"

namespace ciss {

// An S = 1/2 electron spin center with a (possibly anisotropic) g tensor.
struct SpinCenter {
  std::string label;
  Mat3 g_tensor = Mat3::Identity() * 2.0;
  Vec3 position_A = Vec3::Zero();  // angstrom
};

// A spin-1/2 probe nucleus, coupled to one electron center by an isotropic
// hyperfine constant.
struct NuclearSpin {
  std::string label;
  double larmor_MHz_per_T = 40.0;  // gamma / 2 pi
  double hyperfine_A_MHz = 0.0;
  std::string attached_to;
};

struct CouplingTensor {
  std::string label_i;
  std::string label_j;
  Mat3 J_MHz = Mat3::Zero();
};

// The molecular spin system. Product basis ordering is fixed: centers in list
// order, then nuclei in list order, each site ordered (|up>, |down>), first
// site most significant. Convention: centers[0] is the donor, centers[1] the
// acceptor; any further centers are sensor qubits.
struct SpinSystem {
  std::vector<SpinCenter> centers;
  std::vector<NuclearSpin> nuclei;
  std::vector<CouplingTensor> couplings;
  Vec3 chiral_axis = Vec3::UnitZ();
  bool allow_exotic_g = false;  // lifts the principal-value sanity guard

  int site_count() const { return int(centers.size() + nuclei.size()); }
  int dim() const { return 1 << site_count(); }

  // Site index in the product ordering; -1 when the label is unknown.
  int site_index(const std::string& label) const;
  int center_index(const std::string& label) const;

  const SpinCenter& donor() const { return centers.at(0); }
  const SpinCenter& acceptor() const { return centers.at(1); }

  // Throws std::invalid_argument on any violated invariant.
  void validate() const;
};

enum class Axis { x, y, z };

// Point-dipole coupling tensor between two g tensors separated by r (angstrom),
// in MHz:  J = (mu0/4pi) muB^2/(h r^3) [ g_i g_j - 3 (g_i r^)(g_j r^)^T ],
// symmetrized. Axial component is negative for isotropic g (diag(+d,+d,-2d)
// for r along z). Throws on |r| < 1 angstrom (degenerate geometry).
Mat3 dipolar_tensor(const Mat3& g_i, const Mat3& g_j, const Vec3& r_A);

CouplingTensor make_dipolar_coupling(const SpinSystem& system,
                                     const std::string& label_i,
                                     const std::string& label_j,
                                     double isotropic_add_MHz = 0.0);

// Spin-1/2 operator of one site embedded in the full product space.
Matrix spin_operator(const SpinSystem& system, const std::string& site_label,
                     Axis axis);
Matrix spin_operator(const SpinSystem& system, int site, Axis axis);

// Component of a site's spin along an arbitrary unit vector.
Matrix spin_along(const SpinSystem& system, int site, const Vec3& n);

// Sum over electron centers of one spin component.
Matrix total_electron_spin(const SpinSystem& system, Axis axis);

// Static spin Hamiltonian in MHz: electron Zeeman (muB/h S.g.B), all coupling
// tensors, isotropic hyperfine, nuclear Zeeman (-gamma/2pi B.I).
Matrix build_static_hamiltonian(const SpinSystem& system, const Vec3& B_T);

struct Transition {
  int i = 0;        // lower eigenstate (eigenvalues ascending)
  int j = 0;        // upper eigenstate
  double gap_MHz = 0.0;
  double me2 = 0.0;  // |<j|O|i>|^2
  int observable = 0;
};

// Eigen-decomposes H (ascending) and lists squared transition matrix elements
// of each observable; entries with me2 below threshold are omitted.
std::vector<Transition> transition_table(const Matrix& H,
                                         const std::vector<Matrix>& observables,
                                         double threshold = 1e-6);

// Rigid rotation of the molecule into the lab frame: g' = R g R^T, r' = R r,
// chiral axis rotated. R must be a proper rotation.
SpinSystem rotate_system(const SpinSystem& system, const Mat3& R);

}  // namespace ciss
