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
#include "ciss/liouville.hpp"

#include <cmath>
#include <iostream>
#include <map>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "ciss/constants.hpp"

namespace ciss {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
const cplx kI(0.0, 1.0);

// Local quantization axis of one electron center: direction of g.B.
Vec3 local_axis(const SpinCenter& c, const Vec3& B_T) {
  Vec3 w = c.g_tensor * B_T;
  if (w.norm() < 1e-12) return Vec3::UnitZ();
  return w.normalized();
}

}  // namespace

void DissipationSpec::validate() const {
  if (t1_us <= 0 || t2_us <= 0 || t_r_us <= 0)
    throw std::invalid_argument("DissipationSpec: all times must be > 0");
  if (t2_us > 2.0 * t1_us)
    throw std::invalid_argument(
        "DissipationSpec: t2_us must satisfy t2 <= 2*t1 (physicality guard)");
}

void DriveSpec::validate() const {
  if (b1_mT < 0)
    throw std::invalid_argument("DriveSpec: b1_mT must be >= 0");
  if (freq_GHz <= 0)
    throw std::invalid_argument("DriveSpec: freq_GHz must be > 0");
}

Matrix hamiltonian_superop(const Matrix& H) {
  if (!is_hermitian(H, 1e-8))
    throw std::invalid_argument("hamiltonian_superop: H not Hermitian");
  return -kTwoPi * kI * (left_mult_superop(H) - right_mult_superop(H));
}

Matrix lindblad_superop(const Matrix& L) {
  Matrix LdL = L.adjoint() * L;
  return sandwich_superop(L, L.adjoint()) -
         0.5 * (left_mult_superop(LdL) + right_mult_superop(LdL));
}

Matrix relaxation_superop(const SpinSystem& system, const DissipationSpec& spec,
                          const Vec3& B_T) {
  spec.validate();
  const int d = system.dim();
  Matrix R = Matrix::Zero(d * d, d * d);

  const double gamma_1 = 1.0 / spec.t1_us;
  const double gamma_phi = 1.0 / spec.t2_us - 0.5 / spec.t1_us;
  if (gamma_phi < -1e-12)
    throw std::invalid_argument("relaxation_superop: negative pure-dephasing rate");

  for (size_t k = 0; k < system.centers.size(); ++k) {
    Vec3 n = local_axis(system.centers[k], B_T);
    Matrix sn = spin_along(system, int(k), n);

    Matrix sx_loc, sy_loc;
    {
      // Complete n to a right-handed local frame (n plays the role of z).
      Vec3 e1 = (std::abs(n.z()) < 0.9) ? Vec3::UnitZ().cross(n).normalized()
                                        : Vec3::UnitX().cross(n).normalized();
      Vec3 e2 = n.cross(e1);
      sx_loc = spin_along(system, int(k), e1);
      sy_loc = spin_along(system, int(k), e2);
    }
    Matrix lowering = sx_loc - kI * sy_loc;  // S^- about the local axis

    if (spec.t1_temperature == T1Temperature::Zero) {
      // Population decay toward the local ground state at 1/T1.
      R += gamma_1 * lindblad_superop(lowering);
    } else {
      // Symmetric up/down rates: populations equilibrate toward 1/2 with the
      // same 1/T1 population decay and 1/(2T1) coherence decay as the
      // zero-temperature variant.
      R += 0.5 * gamma_1 * lindblad_superop(lowering);
      R += 0.5 * gamma_1 * lindblad_superop(Matrix(lowering.adjoint()));
    }

    // Pure dephasing along the local axis.
    if (gamma_phi > 0)
      R += lindblad_superop(std::sqrt(2.0 * gamma_phi) * sn);
  }
  return R;
}

Matrix singlet_projector(const SpinSystem& system) {
  if (system.centers.size() < 2)
    throw std::invalid_argument("singlet_projector: system has no radical pair");
  const int d = system.dim();
  Matrix SdotS = Matrix::Zero(d, d);
  for (int a = 0; a < 3; ++a)
    SdotS += spin_operator(system, 0, Axis(a)) * spin_operator(system, 1, Axis(a));
  return 0.25 * Matrix::Identity(d, d) - SdotS;
}

Matrix recombination_superop(const SpinSystem& system, const DissipationSpec& spec) {
  spec.validate();
  const int d = system.dim();
  Matrix P = singlet_projector(system);
  if (spec.channel == RecombinationChannel::SingletAndTriplet)
    P += Matrix::Identity(d, d) - singlet_projector(system);
  const double rate = 1.0 / spec.t_r_us;
  return -0.5 * rate * (left_mult_superop(P) + right_mult_superop(P));
}

DriveTerms drive_superop(const SpinSystem& system, const DriveSpec& drive,
                         const Vec3& B_T) {
  drive.validate();
  const int d = system.dim();
  DriveTerms out;
  out.h_frame_shift = -drive.freq_MHz() * total_electron_spin(system, Axis::z);
  out.h_drive = Matrix::Zero(d, d);

  const double b1_T = drive.b1_mT * 1e-3;
  out.rwa_warning = B_T.norm() > 0 && b1_T >= 0.01 * B_T.norm();
  if (out.rwa_warning)
    std::cerr << "[cisspin] warning: b1 = " << drive.b1_mT
              << " mT is not small against |B| = " << B_T.norm() * 1e3
              << " mT; RWA validity questionable\n";

  Vec3 a(std::cos(drive.phase_rad), std::sin(drive.phase_rad), 0.0);
  for (size_t k = 0; k < system.centers.size(); ++k) {
    Vec3 w = constants::mu_B_MHz_per_T * (system.centers[k].g_tensor * a) * (b1_T / 2.0);
    // Longitudinal drive component is non-resonant; only the transverse part
    // survives the RWA.
    out.h_drive += w.x() * spin_operator(system, int(k), Axis::x) +
                   w.y() * spin_operator(system, int(k), Axis::y);
  }
  return out;
}

Matrix rotating_frame_hamiltonian(const SpinSystem& system, const Matrix& H_static,
                                  const DriveSpec& drive, const Vec3& B_T) {
  DriveTerms t = drive_superop(system, drive, B_T);
  return H_static + t.h_frame_shift + t.h_drive;
}

Generator build_generator(const SpinSystem& system, const Vec3& B_T,
                          const DriveSpec* drive, const DissipationSpec* dissipation) {
  Matrix H = build_static_hamiltonian(system, B_T);
  Generator G;
  G.dim = system.dim();
  if (drive) {
    H = rotating_frame_hamiltonian(system, H, *drive, B_T);
    G.frame_MHz = drive->freq_MHz();
  }
  G.matrix = hamiltonian_superop(H);
  if (dissipation) {
    G.matrix += relaxation_superop(system, *dissipation, B_T);
    if (dissipation->recombination_enabled)
      G.matrix += recombination_superop(system, *dissipation);
  }
  return G;
}

Matrix rotating_frame_unitary(const SpinSystem& system, double frame_MHz, double t_us) {
  Matrix Z = total_electron_spin(system, Axis::z);
  Matrix W = (kTwoPi * kI * frame_MHz * t_us * Z).exp();
  return W;
}

void propagate_visit(const Generator& G, const Matrix& rho0,
                     const std::vector<double>& t_grid_us,
                     const std::function<void(size_t, const Matrix&)>& sink) {
  if (rho0.rows() != G.dim || rho0.cols() != G.dim)
    throw std::invalid_argument("propagate: state dimension does not match generator");
  if (t_grid_us.empty()) return;
  if (t_grid_us.front() < 0)
    throw std::invalid_argument("propagate: t_grid must start at t >= 0");
  for (size_t k = 1; k < t_grid_us.size(); ++k)
    if (t_grid_us[k] < t_grid_us[k - 1])
      throw std::invalid_argument("propagate: t_grid must be ascending");

  // One exponential per distinct step size; uniform grids need exactly one.
  std::map<long long, Matrix> step_cache;
  auto step_exp = [&](double dt) -> const Matrix& {
    long long key = std::llround(dt * 1e12);
    auto it = step_cache.find(key);
    if (it == step_cache.end()) {
      Matrix U = (G.matrix * dt).exp();
      it = step_cache.emplace(key, std::move(U)).first;
    }
    return it->second;
  };

  CVector state = vec(rho0);
  double t_prev = 0.0;
  for (size_t k = 0; k < t_grid_us.size(); ++k) {
    double dt = t_grid_us[k] - t_prev;
    if (dt > 0) state = step_exp(dt) * state;
    t_prev = t_grid_us[k];

    Matrix rho = unvec(state, G.dim);
    if (!rho.allFinite())
      throw std::runtime_error("propagate: non-finite state (generator ill-conditioned)");
    rho = 0.5 * (rho + rho.adjoint().eval());  // roundoff drift only
    sink(k, rho);
  }
}

std::vector<Matrix> propagate(const Generator& G, const Matrix& rho0,
                              const std::vector<double>& t_grid_us) {
  std::vector<Matrix> traj(t_grid_us.size());
  propagate_visit(G, rho0, t_grid_us,
                  [&](size_t k, const Matrix& rho) { traj[k] = rho; });
  return traj;
}

std::vector<double> expectation(const std::vector<Matrix>& trajectory, const Matrix& O) {
  std::vector<double> out(trajectory.size());
  for (size_t k = 0; k < trajectory.size(); ++k) {
    if (O.rows() != trajectory[k].rows())
      throw std::invalid_argument("expectation: dimension mismatch");
    out[k] = (O * trajectory[k]).trace().real();
  }
  return out;
}

}  // namespace ciss
