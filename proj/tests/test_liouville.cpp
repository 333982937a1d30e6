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
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "ciss/constants.hpp"
#include "ciss/liouville.hpp"
#include "ciss/states.hpp"

using namespace ciss;

namespace {

SpinSystem single_spin(double g = 2.0) {
  SpinSystem s;
  s.centers.push_back({"e", Mat3::Identity() * g, Vec3(0, 0, 0)});
  return s;
}

SpinSystem rp_pair() {
  SpinSystem s;
  const double ge = constants::g_e;
  s.centers.push_back({"D", Mat3::Identity() * (ge - 0.001), Vec3(0, 0, 0)});
  s.centers.push_back({"A", Mat3::Identity() * (ge + 0.001), Vec3(0, 0, 25)});
  s.couplings.push_back(make_dipolar_coupling(s, "D", "A"));
  return s;
}

// Test-only dense exponential: plain Taylor series with scaling and squaring.
// Independent of the Pade implementation used by propagate.
Matrix taylor_expm(const Matrix& A) {
  double norm = A.cwiseAbs().sum();
  int s = 0;
  while (norm > 0.25) {
    norm /= 2;
    ++s;
  }
  Matrix X = A / std::pow(2.0, s);
  Matrix term = Matrix::Identity(A.rows(), A.cols());
  Matrix sum = term;
  for (int k = 1; k <= 40; ++k) {
    term = term * X / double(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() < 1e-18) break;
  }
  for (int k = 0; k < s; ++k) sum = sum * sum;
  return sum;
}

Matrix plus_x_state() {
  Matrix rho(2, 2);
  rho << 0.5, 0.5, 0.5, 0.5;
  return rho;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v(n);
  for (int k = 0; k < n; ++k) v[k] = a + (b - a) * k / double(n - 1);
  return v;
}

}  // namespace

TEST_CASE("hamiltonian superoperator: Larmor precession at the stated phase rate") {
  SpinSystem s = single_spin();
  const double omega = 7.5;  // MHz
  Matrix H = omega * spin_operator(s, 0, Axis::z);
  Generator G{hamiltonian_superop(H), 2, 0.0};

  auto t = linspace(0.0, 0.5, 41);
  auto traj = propagate(G, plus_x_state(), t);
  auto sx = expectation(traj, spin_operator(s, 0, Axis::x));
  for (size_t k = 0; k < t.size(); ++k)
    CHECK(sx[k] == doctest::Approx(0.5 * std::cos(2 * M_PI * omega * t[k])).epsilon(1e-9));
}

TEST_CASE("commuting state is stationary") {
  SpinSystem s = single_spin();
  Matrix H = 3.0 * spin_operator(s, 0, Axis::z);
  Generator G{hamiltonian_superop(H), 2, 0.0};
  Matrix rho0 = Matrix::Zero(2, 2);
  rho0(0, 0) = 0.8;
  rho0(1, 1) = 0.2;
  auto traj = propagate(G, rho0, linspace(0, 1.0, 5));
  for (const auto& rho : traj) CHECK((rho - rho0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("singlet/T0 oscillation at the Zeeman-difference frequency") {
  // two spins, J_zz only, Delta-nu Zeeman difference: analytic S <-> T0 beat
  SpinSystem s;
  s.centers.push_back({"D", Mat3::Identity() * 2.000, Vec3(0, 0, 0)});
  s.centers.push_back({"A", Mat3::Identity() * 2.002, Vec3(0, 0, 30)});
  CouplingTensor ct;
  ct.label_i = "D";
  ct.label_j = "A";
  ct.J_MHz = Mat3::Zero();
  ct.J_MHz(2, 2) = -4.0;
  s.couplings.push_back(ct);

  Vec3 B(0, 0, 0.35);
  double dnu = 0.002 * constants::mu_B_MHz_per_T * 0.35;
  Matrix H = build_static_hamiltonian(s, B);
  Generator G{hamiltonian_superop(H), 4, 0.0};

  Matrix P_s = singlet_projector(s);
  Matrix rho0 = rp_density(RPState::singlet());
  auto t = linspace(0.0, 0.2, 81);
  auto traj = propagate(G, rho0, t);
  auto ps = expectation(traj, P_s);
  for (size_t k = 0; k < t.size(); ++k) {
    double expected = std::pow(std::cos(M_PI * dnu * t[k]), 2);
    CHECK(ps[k] == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("T2 coherence decay and T1 population decay are exact") {
  SpinSystem s = single_spin();
  Vec3 B(0, 0, 0.35);
  DissipationSpec diss;
  diss.t1_us = 2.0;
  diss.t2_us = 0.5;
  diss.recombination_enabled = false;

  Matrix H = build_static_hamiltonian(s, B);

  for (auto temp : {T1Temperature::Infinite, T1Temperature::Zero}) {
    diss.t1_temperature = temp;
    Generator G{hamiltonian_superop(H) + relaxation_superop(s, diss, B), 2, 0.0};

    auto t = linspace(0.0, 1.0, 21);
    auto traj = propagate(G, plus_x_state(), t);
    for (size_t k = 0; k < t.size(); ++k) {
      double mag = std::abs(cplx(traj[k](0, 1)));
      CHECK(mag == doctest::Approx(0.5 * std::exp(-t[k] / diss.t2_us)).epsilon(1e-8));
    }

    // excited population decay at 1/T1, toward the mode's steady state
    Matrix up = Matrix::Zero(2, 2);
    up(0, 0) = 1.0;
    auto traj2 = propagate(G, up, t);
    for (size_t k = 0; k < t.size(); ++k) {
      double target = (temp == T1Temperature::Zero) ? 0.0 : 0.5;
      double expected = target + (1.0 - target) * std::exp(-t[k] / diss.t1_us);
      CHECK(traj2[k](0, 0).real() == doctest::Approx(expected).epsilon(1e-8));
    }
  }
}

TEST_CASE("per-site decoherence in a coupled-free three-spin system") {
  SpinSystem s;
  s.centers.push_back({"a", Mat3::Identity() * 2.0, Vec3(0, 0, 0)});
  s.centers.push_back({"b", Mat3::Identity() * 2.0, Vec3(0, 0, 20)});
  s.centers.push_back({"c", Mat3::Identity() * 1.98, Vec3(0, 0, 40)});
  Vec3 B(0, 0, 1.0);
  DissipationSpec diss;
  diss.recombination_enabled = false;
  Matrix H = build_static_hamiltonian(s, B);
  Generator G{hamiltonian_superop(H) + relaxation_superop(s, diss, B), 8, 0.0};

  // each site prepared along +x within an otherwise mixed register;
  // <S_x>(0) = 0.25 Tr[S_x^2] = 0.5 on the 8-dimensional space
  for (int site = 0; site < 3; ++site) {
    Matrix rho0 = Matrix::Identity(8, 8) / 8.0 +
                  0.25 * spin_operator(s, site, Axis::x);
    auto t = linspace(0.0, 0.5, 11);
    auto traj = propagate(G, rho0, t);
    auto sx = expectation(traj, spin_operator(s, site, Axis::x));
    auto sy = expectation(traj, spin_operator(s, site, Axis::y));
    for (size_t k = 0; k < t.size(); ++k) {
      double mag = std::hypot(sx[k], sy[k]);
      CHECK(mag == doctest::Approx(0.5 * std::exp(-t[k] / diss.t2_us)).epsilon(0.01));
    }
  }
}

TEST_CASE("unphysical T2 > 2 T1 is rejected") {
  DissipationSpec diss;
  diss.t1_us = 1.0;
  diss.t2_us = 2.5;
  CHECK_THROWS_WITH_AS(diss.validate(), doctest::Contains("t2 <= 2*t1"),
                       std::invalid_argument);
}

TEST_CASE("recombination: singlet decay, triplet inertness, coherence half rate") {
  SpinSystem s = rp_pair();
  DissipationSpec diss;
  diss.t_r_us = 10.0;
  Matrix K = recombination_superop(s, diss);
  Generator G{K, 4, 0.0};
  auto t = linspace(0.0, 5.0, 11);

  SUBCASE("pure singlet trace decays exponentially with T_R") {
    auto traj = propagate(G, rp_density(RPState::singlet()), t);
    for (size_t k = 0; k < t.size(); ++k)
      CHECK(traj[k].trace().real() ==
            doctest::Approx(std::exp(-t[k] / diss.t_r_us)).epsilon(1e-10));
  }
  SUBCASE("T+ population is untouched by the singlet channel") {
    Matrix rho0 = Matrix::Zero(4, 4);
    rho0(0, 0) = 1.0;  // |uu>
    auto traj = propagate(G, rho0, t);
    for (const auto& rho : traj)
      CHECK(rho.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("S-T0 coherence decays at half the singlet rate") {
    // equal S/T0 superposition: analytic 2x2 anticommutator solution
    CVector st0 = CVector::Zero(4);
    st0(1) = 1.0;  // (S + T0)/sqrt2 = |ud>
    Matrix rho0 = st0 * st0.adjoint();
    auto traj = propagate(G, rho0, t);
    Matrix P = singlet_projector(s);
    CVector sv = CVector::Zero(4);
    sv(1) = 1 / std::sqrt(2.0);
    sv(2) = -1 / std::sqrt(2.0);
    CVector tv = CVector::Zero(4);
    tv(1) = 1 / std::sqrt(2.0);
    tv(2) = 1 / std::sqrt(2.0);
    for (size_t k = 0; k < t.size(); ++k) {
      double pop_s = std::real((sv.adjoint() * traj[k] * sv)(0));
      double coh = std::abs(cplx((sv.adjoint() * traj[k] * tv)(0)));
      CHECK(pop_s == doctest::Approx(0.5 * std::exp(-t[k] / diss.t_r_us)).epsilon(1e-9));
      CHECK(coh == doctest::Approx(0.5 * std::exp(-t[k] / (2 * diss.t_r_us))).epsilon(1e-9));
    }
  }
  SUBCASE("two-channel variant removes everything uniformly") {
    diss.channel = RecombinationChannel::SingletAndTriplet;
    Generator G2{recombination_superop(s, diss), 4, 0.0};
    Matrix rho0 = Matrix::Identity(4, 4) / 4.0;
    auto traj = propagate(G2, rho0, t);
    for (size_t k = 0; k < t.size(); ++k)
      CHECK(traj[k].trace().real() ==
            doctest::Approx(std::exp(-t[k] / diss.t_r_us)).epsilon(1e-10));
  }
}

TEST_CASE("drive: on-resonance Rabi frequency matches g muB B1 / 2h") {
  SpinSystem s = single_spin(2.0023);
  DriveSpec mw;
  mw.b1_mT = 0.01;
  // resonance field for 9.8 GHz
  double b_res = 9800.0 / (2.0023 * constants::mu_B_MHz_per_T);
  mw.freq_GHz = 9.8;
  Vec3 B(0, 0, b_res);
  Generator G = build_generator(s, B, &mw, nullptr);

  Matrix down = Matrix::Zero(2, 2);
  down(1, 1) = 1.0;
  double rabi = 2.0023 * constants::mu_B_MHz_per_T * (0.01e-3) / 2.0;  // MHz
  auto t = linspace(0.0, 2.0 / rabi, 81);
  auto traj = propagate(G, down, t);
  auto sz = expectation(traj, spin_operator(s, 0, Axis::z));
  for (size_t k = 0; k < t.size(); ++k)
    CHECK(sz[k] == doctest::Approx(-0.5 * std::cos(2 * M_PI * rabi * t[k])).epsilon(1e-6));
}

TEST_CASE("zero drive amplitude reduces to the bare rotating-frame generator") {
  SpinSystem s = rp_pair();
  DriveSpec mw;
  mw.b1_mT = 0.0;
  mw.freq_GHz = 9.8;
  Vec3 B(0, 0, 0.3495);
  Matrix H = build_static_hamiltonian(s, B);
  Matrix expected = H - mw.freq_MHz() * total_electron_spin(s, Axis::z);
  Matrix got = rotating_frame_hamiltonian(s, H, mw, B);
  CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("detuned drive nutates at sqrt(rabi^2 + detuning^2)") {
  SpinSystem s = single_spin(2.0);
  DriveSpec mw;
  mw.freq_GHz = 9.8;
  mw.b1_mT = 0.05;
  double slope = 2.0 * constants::mu_B_MHz_per_T;  // MHz per T
  double b_res = 9800.0 / slope;
  double detuning = 1.0;  // MHz
  Vec3 B(0, 0, b_res + detuning / slope);
  Generator G = build_generator(s, B, &mw, nullptr);

  double rabi = slope * (0.05e-3) / 2.0;
  double nutation = std::hypot(rabi, detuning);
  // two-level analytic: P_up(t) = (rabi^2 / nutation^2) sin^2(pi nutation t)
  Matrix down = Matrix::Zero(2, 2);
  down(1, 1) = 1.0;
  auto t = linspace(0.0, 1.5, 61);
  auto traj = propagate(G, down, t);
  for (size_t k = 0; k < t.size(); ++k) {
    double p_up = traj[k](0, 0).real();
    double expected = (rabi * rabi / (nutation * nutation)) *
                      std::pow(std::sin(M_PI * nutation * t[k]), 2);
    CHECK(p_up == doctest::Approx(expected).epsilon(5e-4));
  }
}

TEST_CASE("rwa warning fires only for large b1") {
  SpinSystem s = single_spin();
  DriveSpec gentle;
  gentle.b1_mT = 0.01;
  CHECK_FALSE(drive_superop(s, gentle, Vec3(0, 0, 0.35)).rwa_warning);
  DriveSpec harsh;
  harsh.b1_mT = 5.0;
  CHECK(drive_superop(s, harsh, Vec3(0, 0, 0.35)).rwa_warning);
}

TEST_CASE("propagate: zero generator, purity conservation, grid validation") {
  SpinSystem s = rp_pair();
  Matrix rho0 = rp_density(RPState::psi_u(0.7, 0.2, 1.1));

  SUBCASE("zero generator is the identity map") {
    Generator G{Matrix::Zero(16, 16), 4, 0.0};
    auto traj = propagate(G, rho0, {0.0, 0.5, 2.0});
    for (const auto& rho : traj) CHECK((rho - rho0).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("unitary evolution preserves purity") {
    Matrix H = build_static_hamiltonian(s, Vec3(0, 0, 0.3495));
    Generator G{hamiltonian_superop(H), 4, 0.0};
    auto traj = propagate(G, rho0, linspace(0.0, 2.0, 21));
    for (const auto& rho : traj)
      CHECK(std::abs((rho * rho).trace().real() - 1.0) < 1e-9);
  }
  SUBCASE("descending grids are rejected") {
    Generator G{Matrix::Zero(16, 16), 4, 0.0};
    CHECK_THROWS_AS(propagate(G, rho0, {0.5, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(propagate(G, rho0, {-0.1, 0.2}), std::invalid_argument);
  }
}

TEST_CASE("propagate agrees with the independent Taylor exponential oracle") {
  SpinSystem s = rp_pair();
  Vec3 B(0, 0, 0.3495);
  DriveSpec mw;
  mw.freq_GHz = 9.8;
  mw.b1_mT = 0.01;
  DissipationSpec diss;
  Generator G = build_generator(s, B, &mw, &diss);

  SensorState none;
  Matrix rho0 = assemble_initial(RPState::polarized(1.0), none, s);

  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::vector<double> times(10);
  for (auto& tv : times) tv = u(rng);
  std::sort(times.begin(), times.end());

  auto traj = propagate(G, rho0, times);
  double worst = 0.0;
  for (size_t k = 0; k < times.size(); ++k) {
    Matrix U = taylor_expm(G.matrix * times[k]);
    Matrix expected = unvec(U * vec(rho0), 4);
    worst = std::max(worst, (traj[k] - expected).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("dissipative trajectories stay trace-one, Hermitian, and positive") {
  SpinSystem s = rp_pair();
  Vec3 B(0, 0, 0.3495);
  DissipationSpec diss;
  diss.recombination_enabled = false;  // trace preservation applies
  Generator G = build_generator(s, B, nullptr, &diss);

  SensorState none;
  Matrix rho0 = assemble_initial(RPState::psi_u(1.3, 0.5, 0.2), none, s);
  auto traj = propagate(G, rho0, linspace(0.0, 5.0, 26));
  for (const auto& rho : traj) {
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-9);
    CHECK(hermiticity_defect(rho) < 1e-10);
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    CHECK(es.eigenvalues().minCoeff() > -1e-8);
  }
}

TEST_CASE("generator spectrum: imaginary when coherent, damped when dissipative") {
  SpinSystem s = rp_pair();
  Vec3 B(0, 0, 0.3495);
  Matrix H = build_static_hamiltonian(s, B);

  Eigen::ComplexEigenSolver<Matrix> es_coherent(hamiltonian_superop(H));
  CHECK(es_coherent.eigenvalues().real().cwiseAbs().maxCoeff() < 1e-6);

  DissipationSpec diss;
  Generator G = build_generator(s, B, nullptr, &diss);
  Eigen::ComplexEigenSolver<Matrix> es_damped(G.matrix);
  CHECK(es_damped.eigenvalues().real().maxCoeff() <= 1e-9);
}

TEST_CASE("rotating-frame propagation back-transforms to the lab frame") {
  // z-aligned pair: the frame generator commutes exactly, so B1 = 0 rotating
  // and lab propagations must agree after the frame unitary.
  SpinSystem s = rp_pair();
  Vec3 B(0, 0, 0.3495);
  DriveSpec mw;
  mw.b1_mT = 0.0;
  mw.freq_GHz = 9.8;

  Matrix H = build_static_hamiltonian(s, B);
  Generator G_lab{hamiltonian_superop(H), 4, 0.0};
  Generator G_rot{hamiltonian_superop(rotating_frame_hamiltonian(s, H, mw, B)), 4,
                  mw.freq_MHz()};

  SensorState none;
  Matrix rho0 = assemble_initial(RPState::psi_u(0.8, 0.1, 0.6), none, s);
  auto t = linspace(0.0, 0.05, 11);
  auto lab = propagate(G_lab, rho0, t);
  auto rot = propagate(G_rot, rho0, t);
  for (size_t k = 0; k < t.size(); ++k) {
    Matrix W = rotating_frame_unitary(s, mw.freq_MHz(), t[k]);
    Matrix back = W.adjoint() * rot[k] * W;
    CHECK((back - lab[k]).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("expectation basics") {
  SpinSystem s = single_spin();
  Matrix H = 5.0 * spin_operator(s, 0, Axis::z);
  Generator G{hamiltonian_superop(H), 2, 0.0};
  Matrix up = Matrix::Zero(2, 2);
  up(0, 0) = 1.0;
  auto traj = propagate(G, up, linspace(0.0, 1.0, 9));
  auto ones = expectation(traj, Matrix::Identity(2, 2));
  auto szs = expectation(traj, spin_operator(s, 0, Axis::z));
  for (double v : ones) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : szs) CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
}
