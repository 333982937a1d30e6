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
#include "ciss/spinsys.hpp"

using namespace ciss;

namespace {

// Independent scalar evaluation of the point-dipole constant from CODATA
// literals, kept separate from the library's constants header.
double oracle_dipolar_d_MHz(double g, double r_angstrom) {
  const double mu0_4pi = 1e-7;            // T m / A
  const double mu_b = 9.2740100783e-24;   // J / T
  const double h = 6.62607015e-34;        // J s
  double r_m = r_angstrom * 1e-10;
  return mu0_4pi * g * g * mu_b * mu_b / (h * r_m * r_m * r_m) * 1e-6;
}

SpinSystem fig2_system() {
  SpinSystem s;
  const double ge = constants::g_e;
  s.centers.push_back({"D", Mat3::Identity() * (ge - 0.001), Vec3(0, 0, 0)});
  s.centers.push_back({"A", Mat3::Identity() * (ge + 0.001), Vec3(0, 0, 25)});
  Mat3 gq = Mat3::Zero();
  gq.diagonal() << 1.98, 1.98, 1.96;
  s.centers.push_back({"Q", gq, Vec3(0, 0, 33)});
  s.couplings.push_back(make_dipolar_coupling(s, "D", "A"));
  s.couplings.push_back(make_dipolar_coupling(s, "A", "Q"));
  return s;
}

Mat3 rot_y(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitY()).toRotationMatrix();
}

}  // namespace

TEST_CASE("dipolar tensor reproduces the 8 angstrom qubit coupling scale") {
  Mat3 ga = Mat3::Identity() * (constants::g_e + 0.001);
  Mat3 gq = Mat3::Zero();
  gq.diagonal() << 1.98, 1.98, 1.96;
  Mat3 J = dipolar_tensor(ga, gq, Vec3(0, 0, 8.0));
  // Axial component ~ -200 MHz for the A-Q pair of the qubit-sensor setup.
  CHECK(J(2, 2) < 0);
  CHECK(std::abs(J(2, 2)) > 180.0);
  CHECK(std::abs(J(2, 2)) < 220.0);
  // Off-diagonal elements vanish for coaxial diagonal tensors.
  CHECK(std::abs(J(0, 1)) < 1e-12);
  CHECK(std::abs(J(0, 2)) < 1e-12);
}

TEST_CASE("dipolar tensor matches the independent scalar oracle at 25 angstrom") {
  const double g = 2.0023;
  Mat3 J = dipolar_tensor(Mat3::Identity() * g, Mat3::Identity() * g, Vec3(0, 0, 25.0));
  double d = oracle_dipolar_d_MHz(g, 25.0);
  CHECK(J(0, 0) == doctest::Approx(d).epsilon(1e-12));
  CHECK(J(1, 1) == doctest::Approx(d).epsilon(1e-12));
  CHECK(J(2, 2) == doctest::Approx(-2.0 * d).epsilon(1e-12));
  // The quoted magnitudes: J_zz ~ -6.7 MHz, J_xx ~ +3.3 MHz.
  CHECK(J(2, 2) == doctest::Approx(-6.66).epsilon(0.01));
  CHECK(J(0, 0) == doctest::Approx(3.33).epsilon(0.01));
  // 52.04 MHz at 1 nm for g = 2.0023.
  CHECK(oracle_dipolar_d_MHz(g, 10.0) == doctest::Approx(52.04).epsilon(1e-3));
}

TEST_CASE("dipolar tensor is traceless for isotropic g and symmetric under pair swap") {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec3 r(u(rng) * 20, u(rng) * 20, u(rng) * 20);
    if (r.norm() < 2.0) continue;
    double g1 = 2.0 + 0.2 * u(rng), g2 = 2.0 + 0.2 * u(rng);
    Mat3 J = dipolar_tensor(Mat3::Identity() * g1, Mat3::Identity() * g2, r);
    CHECK(std::abs(J.trace()) < 1e-9);
    CHECK((J - J.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    // (i,j) <-> (j,i) with r -> -r gives the same tensor.
    Mat3 Jswap = dipolar_tensor(Mat3::Identity() * g2, Mat3::Identity() * g1, Vec3(-r));
    CHECK((J - Jswap).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("dipolar tensor rejects degenerate geometry") {
  CHECK_THROWS_AS(dipolar_tensor(Mat3::Identity() * 2, Mat3::Identity() * 2,
                                 Vec3(0, 0, 0.5)),
                  std::invalid_argument);
}

TEST_CASE("spin operators: placement, algebra, and cross-site commutation") {
  SpinSystem s;
  s.centers.push_back({"a", Mat3::Identity() * 2.0, Vec3(0, 0, 0)});
  s.centers.push_back({"b", Mat3::Identity() * 2.0, Vec3(0, 0, 10)});

  Matrix sz1 = spin_operator(s, "a", Axis::z);
  CHECK(sz1(0, 0).real() == doctest::Approx(0.5));
  CHECK(sz1(1, 1).real() == doctest::Approx(0.5));
  CHECK(sz1(2, 2).real() == doctest::Approx(-0.5));
  CHECK(sz1(3, 3).real() == doctest::Approx(-0.5));

  for (auto site : {"a", "b"}) {
    Matrix sx = spin_operator(s, site, Axis::x);
    Matrix sy = spin_operator(s, site, Axis::y);
    Matrix sz = spin_operator(s, site, Axis::z);
    CHECK(std::abs(sx.trace()) < 1e-14);
    CHECK(is_hermitian(sx, 1e-14));
    Matrix comm = sx * sy - sy * sx;
    CHECK((comm - cplx(0, 1) * sz).cwiseAbs().maxCoeff() < 1e-14);
  }
  // distinct sites commute
  Matrix c = spin_operator(s, "a", Axis::x) * spin_operator(s, "b", Axis::z) -
             spin_operator(s, "b", Axis::z) * spin_operator(s, "a", Axis::x);
  CHECK(c.cwiseAbs().maxCoeff() < 1e-14);

  CHECK_THROWS_AS(spin_operator(s, "nope", Axis::x), std::invalid_argument);
}

TEST_CASE("static Hamiltonian: single-center Zeeman splitting") {
  SpinSystem s;
  s.centers.push_back({"e", Mat3::Identity() * 2.0023, Vec3(0, 0, 0)});
  Matrix H = build_static_hamiltonian(s, Vec3(0, 0, 1.0));
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  double gap = es.eigenvalues()(1) - es.eigenvalues()(0);
  // g muB/h = 13996.245 MHz/T per unit g; frozen independently.
  CHECK(gap == doctest::Approx(28024.68).epsilon(1e-5));
}

TEST_CASE("static Hamiltonian: coupling-only limit at zero field") {
  SpinSystem s;
  s.centers.push_back({"a", Mat3::Identity() * 2.0, Vec3(0, 0, 0)});
  s.centers.push_back({"b", Mat3::Identity() * 2.0, Vec3(0, 0, 12)});
  s.couplings.push_back(make_dipolar_coupling(s, "a", "b"));
  Matrix H = build_static_hamiltonian(s, Vec3::Zero());

  Matrix expected = Matrix::Zero(4, 4);
  const Mat3& J = s.couplings[0].J_MHz;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      if (J(a, b) != 0.0)
        expected += J(a, b) * spin_operator(s, 0, Axis(a)) * spin_operator(s, 1, Axis(b));
  CHECK((H - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(is_hermitian(H, 1e-12));
}

TEST_CASE("static Hamiltonian is Hermitian for tilted fields and anisotropic g") {
  SpinSystem s = fig2_system();
  s.nuclei.push_back({"F", 40.0, 10.0, "A"});
  std::mt19937 rng(999);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    Vec3 B(u(rng), u(rng), u(rng));
    Matrix H = build_static_hamiltonian(s, B);
    CHECK(hermiticity_defect(H) < 1e-10);
  }
}

TEST_CASE("full qubit-sensor system resonates near 1.24 T at 34 GHz") {
  SpinSystem s = fig2_system();
  Matrix H = build_static_hamiltonian(s, Vec3(0, 0, 1.2394));
  auto table = transition_table(H, {total_electron_spin(s, Axis::x)}, 1e-4);
  bool near = false;
  for (const auto& t : table)
    if (std::abs(t.gap_MHz - 34000.0) < 100.0) near = true;
  CHECK(near);
}

TEST_CASE("transition table basics") {
  SpinSystem two;
  two.centers.push_back({"e", Mat3::Identity() * 2.0, Vec3(0, 0, 0)});
  Matrix H = build_static_hamiltonian(two, Vec3(0, 0, 0.35));

  SUBCASE("two-level S_x gives a single transition with |m.e.|^2 = 1/4") {
    auto table = transition_table(H, {spin_operator(two, 0, Axis::x)});
    REQUIRE(table.size() == 1);
    CHECK(table[0].me2 == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(table[0].gap_MHz > 0);
  }
  SUBCASE("diagonal observable yields no off-diagonal transitions") {
    auto table = transition_table(H, {spin_operator(two, 0, Axis::z)});
    CHECK(table.empty());
  }
}

TEST_CASE("transition table: radical pair doublet structure") {
  SpinSystem s;
  const double ge = constants::g_e;
  s.centers.push_back({"D", Mat3::Identity() * (ge - 0.001), Vec3(0, 0, 0)});
  s.centers.push_back({"A", Mat3::Identity() * (ge + 0.001), Vec3(0, 0, 25)});
  s.couplings.push_back(make_dipolar_coupling(s, "D", "A"));
  Matrix H = build_static_hamiltonian(s, Vec3(0, 0, 0.3495));
  auto table = transition_table(H, {total_electron_spin(s, Axis::x)}, 1e-4);
  REQUIRE(table.size() == 4);
  // Two doublets separated by the g difference, each split by the dipolar
  // coupling.
  std::vector<double> gaps;
  for (const auto& t : table) gaps.push_back(t.gap_MHz);
  std::sort(gaps.begin(), gaps.end());
  double zeeman_split = 0.002 * constants::mu_B_MHz_per_T * 0.3495;
  CHECK(std::abs((gaps[3] + gaps[2]) / 2 - (gaps[1] + gaps[0]) / 2) ==
        doctest::Approx(zeeman_split).epsilon(0.15));
  CHECK(gaps[1] - gaps[0] > 1.0);
}

TEST_CASE("rotate_system: identity, axial invariance, axis swap") {
  SpinSystem s;
  s.centers.push_back({"a", Mat3::Identity() * 2.0, Vec3(0, 0, 0)});
  s.centers.push_back({"b", Mat3::Identity() * 2.0, Vec3(0, 0, 10)});
  s.couplings.push_back(make_dipolar_coupling(s, "a", "b"));

  SUBCASE("identity rotation returns an equal system") {
    SpinSystem r = rotate_system(s, Mat3::Identity());
    CHECK((r.centers[1].position_A - s.centers[1].position_A).norm() < 1e-14);
    CHECK((r.couplings[0].J_MHz - s.couplings[0].J_MHz).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("rotation about z leaves a z-aligned dipolar pair unchanged") {
    Mat3 Rz = Eigen::AngleAxisd(1.1, Vec3::UnitZ()).toRotationMatrix();
    SpinSystem r = rotate_system(s, Rz);
    CHECK((r.couplings[0].J_MHz - s.couplings[0].J_MHz).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("90 degrees about y swaps J_zz and J_xx") {
    SpinSystem r = rotate_system(s, rot_y(M_PI / 2));
    // oracle: re-derive the tensor from the rotated geometry
    Mat3 J_expected = dipolar_tensor(r.centers[0].g_tensor, r.centers[1].g_tensor,
                                     r.centers[1].position_A - r.centers[0].position_A);
    CHECK((r.couplings[0].J_MHz - J_expected).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(r.couplings[0].J_MHz(0, 0) == doctest::Approx(s.couplings[0].J_MHz(2, 2)));
    CHECK(r.couplings[0].J_MHz(2, 2) == doctest::Approx(s.couplings[0].J_MHz(0, 0)));
  }
  SUBCASE("non-orthogonal matrix is rejected") {
    Mat3 bad = Mat3::Identity();
    bad(0, 1) = 0.3;
    CHECK_THROWS_AS(rotate_system(s, bad), std::invalid_argument);
  }
}

TEST_CASE("spectrum invariant under joint rotation of system and field") {
  SpinSystem s = fig2_system();
  std::mt19937 rng(777);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec3 B(0.01, -0.02, 1.2);
  Matrix H0 = build_static_hamiltonian(s, B);
  Eigen::SelfAdjointEigenSolver<Matrix> es0(H0);

  for (int k = 0; k < 4; ++k) {
    Eigen::Quaterniond q(u(rng), u(rng), u(rng), u(rng));
    q.normalize();
    Mat3 R = q.toRotationMatrix();
    Matrix H1 = build_static_hamiltonian(rotate_system(s, R), R * B);
    Eigen::SelfAdjointEigenSolver<Matrix> es1(H1);
    CHECK((es0.eigenvalues() - es1.eigenvalues()).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("system validation guards") {
  SpinSystem s;
  s.centers.push_back({"a", Mat3::Identity() * 2.0, Vec3(0, 0, 0)});
  s.centers.push_back({"b", Mat3::Identity() * 2.0, Vec3(0, 0, 0.5)});
  CHECK_THROWS_WITH_AS(s.validate(), doctest::Contains("1 angstrom"),
                       std::invalid_argument);

  SpinSystem big;
  for (int k = 0; k < 7; ++k)
    big.centers.push_back({"c" + std::to_string(k), Mat3::Identity() * 2.0,
                           Vec3(0, 0, 5.0 * k)});
  CHECK_THROWS_WITH_AS(big.validate(), doctest::Contains("64"), std::invalid_argument);

  SpinSystem exotic;
  exotic.centers.push_back({"x", Mat3::Identity() * 3.2, Vec3(0, 0, 0)});
  CHECK_THROWS_AS(exotic.validate(), std::invalid_argument);
  exotic.allow_exotic_g = true;
  CHECK_NOTHROW(exotic.validate());

  SpinSystem nuc;
  nuc.centers.push_back({"a", Mat3::Identity() * 2.0, Vec3(0, 0, 0)});
  nuc.nuclei.push_back({"n", 40.0, 10.0, "zz"});
  CHECK_THROWS_WITH_AS(nuc.validate(), doctest::Contains("attached_to"),
                       std::invalid_argument);

  SpinSystem axis = fig2_system();
  axis.chiral_axis = Vec3(0, 0, 2.0);
  CHECK_THROWS_WITH_AS(axis.validate(), doctest::Contains("unit"),
                       std::invalid_argument);
}
