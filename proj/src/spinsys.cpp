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
#include "ciss/spinsys.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "ciss/constants.hpp"

namespace ciss {

namespace {

const cplx kI(0.0, 1.0);

Matrix pauli_half(Axis axis) {
  Matrix s(2, 2);
  switch (axis) {
    case Axis::x: s << 0, 0.5, 0.5, 0; break;
    case Axis::y: s << 0, -0.5 * kI, 0.5 * kI, 0; break;
    case Axis::z: s << 0.5, 0, 0, -0.5; break;
  }
  return s;
}

Matrix embed_site_operator(int n_sites, int site, const Matrix& op) {
  Matrix out = Matrix::Identity(1, 1);
  for (int k = 0; k < n_sites; ++k) {
    if (k == site)
      out = kron(out, op);
    else
      out = kron(out, Matrix::Identity(2, 2));
  }
  return out;
}

}  // namespace

int SpinSystem::site_index(const std::string& label) const {
  for (size_t k = 0; k < centers.size(); ++k)
    if (centers[k].label == label) return int(k);
  for (size_t k = 0; k < nuclei.size(); ++k)
    if (nuclei[k].label == label) return int(centers.size() + k);
  return -1;
}

int SpinSystem::center_index(const std::string& label) const {
  for (size_t k = 0; k < centers.size(); ++k)
    if (centers[k].label == label) return int(k);
  return -1;
}

void SpinSystem::validate() const {
  if (centers.size() < 1)
    throw std::invalid_argument("SpinSystem: needs at least one spin center");
  if (site_count() > 6)
    throw std::invalid_argument(
        "SpinSystem: Hilbert dimension exceeds the 64-state guard (" +
        std::to_string(dim()) + " states)");

  std::set<std::string> labels;
  for (const auto& c : centers) {
    if (!labels.insert(c.label).second)
      throw std::invalid_argument("SpinSystem: duplicate label '" + c.label + "'");
    if (!c.position_A.allFinite())
      throw std::invalid_argument("SpinCenter '" + c.label + "': non-finite position");
    if ((c.g_tensor - c.g_tensor.transpose()).cwiseAbs().maxCoeff() > 1e-9)
      throw std::invalid_argument("SpinCenter '" + c.label + "': g tensor not symmetric");
    if (!allow_exotic_g) {
      Eigen::SelfAdjointEigenSolver<Mat3> es(c.g_tensor);
      for (int k = 0; k < 3; ++k) {
        double gp = es.eigenvalues()(k);
        if (gp < 1.5 || gp > 2.5)
          throw std::invalid_argument(
              "SpinCenter '" + c.label + "': principal g value " +
              std::to_string(gp) +
              " outside [1.5, 2.5] (set allow_exotic_g to override)");
      }
    }
  }
  for (size_t a = 0; a < centers.size(); ++a)
    for (size_t b = a + 1; b < centers.size(); ++b) {
      double r = (centers[a].position_A - centers[b].position_A).norm();
      if (r < 1.0)
        throw std::invalid_argument("SpinSystem: centers '" + centers[a].label +
                                    "' and '" + centers[b].label +
                                    "' closer than 1 angstrom");
    }

  for (const auto& n : nuclei) {
    if (!labels.insert(n.label).second)
      throw std::invalid_argument("SpinSystem: duplicate label '" + n.label + "'");
    if (n.larmor_MHz_per_T <= 0)
      throw std::invalid_argument("NuclearSpin '" + n.label + "': larmor_MHz_per_T must be > 0");
    if (center_index(n.attached_to) < 0)
      throw std::invalid_argument("NuclearSpin '" + n.label +
                                  "': attached_to '" + n.attached_to +
                                  "' is not a spin center");
  }

  for (const auto& cp : couplings) {
    if (cp.label_i == cp.label_j)
      throw std::invalid_argument("CouplingTensor: pair labels must be distinct");
    if (center_index(cp.label_i) < 0 || center_index(cp.label_j) < 0)
      throw std::invalid_argument("CouplingTensor: pair (" + cp.label_i + ", " +
                                  cp.label_j + ") references unknown centers");
  }

  double axis_norm = chiral_axis.norm();
  if (std::abs(axis_norm - 1.0) > 1e-9)
    throw std::invalid_argument("SpinSystem: chiral_axis must be a unit vector");
}

Mat3 dipolar_tensor(const Mat3& g_i, const Mat3& g_j, const Vec3& r_A) {
  double r = r_A.norm();
  if (r < 1.0)
    throw std::invalid_argument(
        "dipolar_tensor: degenerate geometry, separation " + std::to_string(r) +
        " angstrom < 1");
  Vec3 rhat = r_A / r;
  double d = constants::dipolar_MHz_A3 / (r * r * r);
  Vec3 gi_r = g_i * rhat;
  Vec3 gj_r = g_j * rhat;
  Mat3 J = d * (g_i * g_j - 3.0 * (gi_r * gj_r.transpose()));
  // Antisymmetric residual (only nonzero for non-commuting g pairs) discarded.
  return 0.5 * (J + J.transpose());
}

CouplingTensor make_dipolar_coupling(const SpinSystem& system,
                                     const std::string& label_i,
                                     const std::string& label_j,
                                     double isotropic_add_MHz) {
  int a = system.center_index(label_i);
  int b = system.center_index(label_j);
  if (a < 0 || b < 0)
    throw std::invalid_argument("make_dipolar_coupling: unknown center pair (" +
                                label_i + ", " + label_j + ")");
  Vec3 r = system.centers[b].position_A - system.centers[a].position_A;
  Mat3 J = dipolar_tensor(system.centers[a].g_tensor, system.centers[b].g_tensor, r);
  J += isotropic_add_MHz * Mat3::Identity();
  return CouplingTensor{label_i, label_j, J};
}

Matrix spin_operator(const SpinSystem& system, int site, Axis axis) {
  if (site < 0 || site >= system.site_count())
    throw std::invalid_argument("spin_operator: site index out of range");
  return embed_site_operator(system.site_count(), site, pauli_half(axis));
}

Matrix spin_operator(const SpinSystem& system, const std::string& site_label,
                     Axis axis) {
  int site = system.site_index(site_label);
  if (site < 0)
    throw std::invalid_argument("spin_operator: unknown site '" + site_label + "'");
  return spin_operator(system, site, axis);
}

Matrix spin_along(const SpinSystem& system, int site, const Vec3& n) {
  Vec3 u = n.normalized();
  return u.x() * spin_operator(system, site, Axis::x) +
         u.y() * spin_operator(system, site, Axis::y) +
         u.z() * spin_operator(system, site, Axis::z);
}

Matrix total_electron_spin(const SpinSystem& system, Axis axis) {
  Matrix sum = Matrix::Zero(system.dim(), system.dim());
  for (size_t k = 0; k < system.centers.size(); ++k)
    sum += spin_operator(system, int(k), axis);
  return sum;
}

Matrix build_static_hamiltonian(const SpinSystem& system, const Vec3& B_T) {
  if (!B_T.allFinite())
    throw std::invalid_argument("build_static_hamiltonian: non-finite field");
  const int d = system.dim();
  Matrix H = Matrix::Zero(d, d);

  // Electron Zeeman: (muB/h) S_i . g_i . B
  for (size_t k = 0; k < system.centers.size(); ++k) {
    Vec3 omega = constants::mu_B_MHz_per_T * (system.centers[k].g_tensor * B_T);
    for (int a = 0; a < 3; ++a)
      if (omega(a) != 0.0)
        H += omega(a) * spin_operator(system, int(k), Axis(a));
  }

  // Pairwise couplings: S_i . J_ij . S_j
  for (const auto& cp : system.couplings) {
    int i = system.center_index(cp.label_i);
    int j = system.center_index(cp.label_j);
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        if (cp.J_MHz(a, b) != 0.0)
          H += cp.J_MHz(a, b) * spin_operator(system, i, Axis(a)) *
               spin_operator(system, j, Axis(b));
  }

  // Nuclei: isotropic hyperfine A S.I and nuclear Zeeman -gamma/2pi B.I
  for (size_t k = 0; k < system.nuclei.size(); ++k) {
    const auto& n = system.nuclei[k];
    int nuc_site = int(system.centers.size() + k);
    int e_site = system.center_index(n.attached_to);
    if (n.hyperfine_A_MHz != 0.0)
      for (int a = 0; a < 3; ++a)
        H += n.hyperfine_A_MHz * spin_operator(system, e_site, Axis(a)) *
             spin_operator(system, nuc_site, Axis(a));
    for (int a = 0; a < 3; ++a)
      if (B_T(a) != 0.0)
        H -= n.larmor_MHz_per_T * B_T(a) * spin_operator(system, nuc_site, Axis(a));
  }

  return H;
}

std::vector<Transition> transition_table(const Matrix& H,
                                         const std::vector<Matrix>& observables,
                                         double threshold) {
  if (!is_hermitian(H, 1e-8))
    throw std::invalid_argument("transition_table: H not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  const auto& E = es.eigenvalues();
  const Matrix& V = es.eigenvectors();

  std::vector<Transition> out;
  for (size_t o = 0; o < observables.size(); ++o) {
    Matrix Ov = observables[o] * V;
    for (int i = 0; i < E.size(); ++i) {
      for (int j = i + 1; j < E.size(); ++j) {
        double me2 = std::norm(V.col(j).dot(Ov.col(i)));
        if (me2 >= threshold)
          out.push_back({i, j, E(j) - E(i), me2, int(o)});
      }
    }
  }
  return out;
}

SpinSystem rotate_system(const SpinSystem& system, const Mat3& R) {
  if ((R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      R.determinant() < 0)
    throw std::invalid_argument("rotate_system: R is not a proper rotation");
  SpinSystem out = system;
  for (auto& c : out.centers) {
    c.g_tensor = R * c.g_tensor * R.transpose();
    c.position_A = R * c.position_A;
  }
  out.chiral_axis = (R * system.chiral_axis).normalized();
  // Covariant transform; for geometry-derived tensors this equals re-deriving
  // from the rotated positions and g tensors.
  for (auto& cp : out.couplings) {
    cp.J_MHz = R * cp.J_MHz * R.transpose();
  }
  return out;
}

}  // namespace ciss
