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
#include "ciss/states.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ciss {

namespace {

const cplx kI(0.0, 1.0);

// SU(2) rotation taking z to the unit vector n (|up_n> = U|up>).
Eigen::Matrix2cd su2_z_to(const Vec3& n_in) {
  Vec3 n = n_in.normalized();
  double cz = n.z();
  if (cz > 1.0 - 1e-14) return Eigen::Matrix2cd::Identity();
  Vec3 axis;
  double angle;
  if (cz < -1.0 + 1e-14) {
    axis = Vec3::UnitX();
    angle = M_PI;
  } else {
    axis = Vec3::UnitZ().cross(n).normalized();
    angle = std::acos(cz);
  }
  Eigen::Matrix2cd sx, sy, sz;
  sx << 0, 1, 1, 0;
  sy << 0, -kI, kI, 0;
  sz << 1, 0, 0, -1;
  Eigen::Matrix2cd a_sigma = axis.x() * sx + axis.y() * sy + axis.z() * sz;
  return std::cos(angle / 2) * Eigen::Matrix2cd::Identity() -
         kI * std::sin(angle / 2) * a_sigma;
}

Matrix qubit_density(const QubitState& q) {
  Matrix rho = Matrix::Zero(2, 2);
  switch (q.kind) {
    case QubitState::Kind::Down: rho(1, 1) = 1.0; break;
    case QubitState::Kind::MaximallyMixed: rho(0, 0) = rho(1, 1) = 0.5; break;
    case QubitState::Kind::Thermal:
      if (q.p_up < 0.0 || q.p_up > 1.0)
        throw std::invalid_argument("QubitState: p_up outside [0, 1]");
      rho(0, 0) = q.p_up;
      rho(1, 1) = 1.0 - q.p_up;
      break;
  }
  return rho;
}

Matrix nucleus_density(const NucleusState& n) {
  Matrix rho = Matrix::Zero(2, 2);
  switch (n.kind) {
    case NucleusState::Kind::Up: rho(0, 0) = 1.0; break;
    case NucleusState::Kind::Down: rho(1, 1) = 1.0; break;
    case NucleusState::Kind::MaximallyMixed: rho(0, 0) = rho(1, 1) = 0.5; break;
  }
  return rho;
}

}  // namespace

std::string RPState::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Singlet: os << "singlet"; break;
    case Kind::Polarized: os << "polarized(p=" << p << ")"; break;
    case Kind::PsiU:
      os << "psi_u(theta=" << theta << ",phi=" << phi << ",lambda=" << lambda << ")";
      break;
  }
  return os.str();
}

CVector psi_u_vector(double theta, double phi, double lambda) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CVector v(4);
  v(0) = -s * std::exp(kI * lambda) * inv_sqrt2;          // uu
  v(1) = c * std::exp(kI * (lambda + phi)) * inv_sqrt2;   // ud
  v(2) = -c * inv_sqrt2;                                  // du
  v(3) = -s * std::exp(kI * phi) * inv_sqrt2;             // dd
  return v;
}

Matrix rp_density(const RPState& state, const Vec3& axis) {
  Matrix rho4(4, 4);
  switch (state.kind) {
    case RPState::Kind::Singlet: {
      CVector s = CVector::Zero(4);
      s(1) = 1.0 / std::sqrt(2.0);
      s(2) = -1.0 / std::sqrt(2.0);
      // Collective SU(2) rotations leave the singlet invariant; skip the basis change.
      return s * s.adjoint();
    }
    case RPState::Kind::Polarized: {
      if (state.p < -1.0 || state.p > 1.0)
        throw std::invalid_argument("RPState: polarization p outside [-1, 1]");
      rho4 = Matrix::Zero(4, 4);
      rho4(1, 1) = (1.0 + state.p) / 2.0;  // |ud><ud|, acceptor down
      rho4(2, 2) = (1.0 - state.p) / 2.0;  // |du><du|
      break;
    }
    case RPState::Kind::PsiU: {
      CVector v = psi_u_vector(state.theta, state.phi, state.lambda);
      rho4 = v * v.adjoint();
      break;
    }
  }
  Eigen::Matrix2cd u = su2_z_to(axis);
  if (u.isIdentity(1e-14)) return rho4;
  Matrix uu = kron(Matrix(u), Matrix(u));
  return uu * rho4 * uu.adjoint();
}

bool psi_u_reduces_to_singlet_check(double theta, double phi, double lambda) {
  CVector v = psi_u_vector(theta, phi, lambda);
  CVector s = CVector::Zero(4);
  s(1) = 1.0 / std::sqrt(2.0);
  s(2) = -1.0 / std::sqrt(2.0);
  return std::abs(std::norm(s.dot(v)) - 1.0) < 1e-12;
}

Matrix assemble_initial(const RPState& rp, const SensorState& sensor,
                        const SpinSystem& system) {
  if (system.centers.size() < 2)
    throw std::invalid_argument("assemble_initial: system has no radical pair");
  const size_t n_qubits = system.centers.size() - 2;
  if (n_qubits > 0 && !sensor.qubit)
    throw std::invalid_argument("assemble_initial: system has a qubit but no qubit state given");
  if (n_qubits == 0 && sensor.qubit)
    throw std::invalid_argument("assemble_initial: qubit state given but system has no qubit");
  if (!system.nuclei.empty() && !sensor.nucleus)
    throw std::invalid_argument("assemble_initial: system has nuclei but no nucleus state given");
  if (system.nuclei.empty() && sensor.nucleus)
    throw std::invalid_argument("assemble_initial: nucleus state given but system has no nuclei");

  Matrix rho = rp_density(rp, system.chiral_axis);
  for (size_t k = 0; k < n_qubits; ++k) rho = kron(rho, qubit_density(*sensor.qubit));
  for (size_t k = 0; k < system.nuclei.size(); ++k)
    rho = kron(rho, nucleus_density(*sensor.nucleus));
  return rho;
}

}  // namespace ciss
