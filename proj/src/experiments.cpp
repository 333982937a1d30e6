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
#include "ciss/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <Eigen/Eigenvalues>

#include "ciss/constants.hpp"

namespace ciss {

namespace {

const cplx kI(0.0, 1.0);

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_ascending(const std::vector<double>& v, const char* what) {
  if (v.empty()) throw std::invalid_argument(std::string(what) + ": empty grid");
  for (size_t k = 1; k < v.size(); ++k)
    if (v[k] <= v[k - 1])
      throw std::invalid_argument(std::string(what) + ": grid must be strictly ascending");
}

// Deterministic chunked parallel map; item order and results never depend on
// the thread count.
void parallel_for(size_t n, int threads, const std::function<void(size_t)>& fn) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  size_t n_workers = std::min<size_t>(threads, n);
  std::mutex err_mutex;
  std::string first_error;
  bool failed = false;

  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w] {
      size_t lo = n * w / n_workers;
      size_t hi = n * (w + 1) / n_workers;
      for (size_t i = lo; i < hi; ++i) {
        try {
          fn(i);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!failed) {
            failed = true;
            first_error = e.what();
          }
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failed) throw std::runtime_error(first_error);
}

Mat3 rotation_between(const Vec3& from, const Vec3& to) {
  Vec3 a = from.normalized(), b = to.normalized();
  double c = a.dot(b);
  if (c > 1.0 - 1e-14) return Mat3::Identity();
  if (c < -1.0 + 1e-14) {
    // 180 degrees about any axis perpendicular to a.
    Vec3 perp = (std::abs(a.z()) < 0.9) ? a.cross(Vec3::UnitZ()).normalized()
                                        : a.cross(Vec3::UnitX()).normalized();
    return Eigen::AngleAxisd(M_PI, perp).toRotationMatrix();
  }
  Vec3 axis = a.cross(b).normalized();
  return Eigen::AngleAxisd(std::acos(c), axis).toRotationMatrix();
}

// True when positions sit on the chiral axis and every g tensor is invariant
// under rotations about it; the third Euler angle is then redundant.
bool axially_symmetric(const SpinSystem& system) {
  const Vec3 n = system.chiral_axis;
  Mat3 quarter = Eigen::AngleAxisd(M_PI / 2, n).toRotationMatrix();
  for (const auto& c : system.centers) {
    Vec3 r_perp = c.position_A - n * n.dot(c.position_A);
    if (r_perp.norm() > 1e-9) return false;
    if ((quarter * c.g_tensor * quarter.transpose() - c.g_tensor)
            .cwiseAbs()
            .maxCoeff() > 1e-9)
      return false;
  }
  return true;
}

// One propagation: signal(t) = sum_e <S_y,i> in the rotating frame.
std::vector<double> trepr_time_series(const SpinSystem& oriented, const Matrix& rho0,
                                      const Matrix& Sy_total, double b_mT,
                                      const TreprPlan& plan,
                                      const DissipationSpec* dissipation) {
  Vec3 B(0, 0, b_mT * 1e-3);
  Generator G = build_generator(oriented, B, &plan.mw, dissipation);
  std::vector<double> t_us(plan.t_grid_ns.size());
  for (size_t k = 0; k < t_us.size(); ++k) t_us[k] = plan.t_grid_ns[k] * 1e-3;

  std::vector<double> signal(t_us.size());
  propagate_visit(G, rho0, t_us, [&](size_t k, const Matrix& rho) {
    signal[k] = (Sy_total * rho).trace().real();
  });
  return signal;
}

SpectrumResult make_trepr_result(const TreprPlan& plan) {
  SpectrumResult res;
  res.axes.push_back({"time_ns", "ns", plan.t_grid_ns});
  res.axes.push_back({"field_mT", "mT", plan.b_grid_mT});
  res.data.assign(plan.t_grid_ns.size() * plan.b_grid_mT.size(), 0.0);
  res.metadata["experiment"] = "trepr_map";
  res.metadata["signal"] = "sum_e <S_y> (rotating frame)";
  res.metadata["sign_convention"] = "positive=absorption";
  res.metadata["frame_GHz"] = fmt_double(plan.mw.freq_GHz);
  res.metadata["b1_mT"] = fmt_double(plan.mw.b1_mT);
  res.metadata["phase_rad"] = fmt_double(plan.mw.phase_rad);
  return res;
}

void require_parallel_axis(const SpinSystem& system) {
  if (system.chiral_axis.dot(Vec3::UnitZ()) < 1.0 - 1e-9)
    throw std::invalid_argument(
        "trepr_map: fixed-parallel orientation requires chiral_axis along lab z "
        "(field direction)");
}

int find_axis(const SpectrumResult& spec, const std::string& name) {
  for (size_t a = 0; a < spec.axes.size(); ++a)
    if (spec.axes[a].name == name) return int(a);
  return -1;
}

}  // namespace

void TreprPlan::validate() const {
  check_ascending(b_grid_mT, "TreprPlan.b_grid_mT");
  check_ascending(t_grid_ns, "TreprPlan.t_grid_ns");
  if (t_grid_ns.front() < 0)
    throw std::invalid_argument("TreprPlan: time grid must start at t >= 0");
  mw.validate();
  if (window_stop_ns < window_start_ns)
    throw std::invalid_argument("TreprPlan: window_stop_ns < window_start_ns");
  if (window_start_ns < t_grid_ns.front() - 1e-9 ||
      window_stop_ns > t_grid_ns.back() + 1e-9)
    throw std::invalid_argument("TreprPlan: integration window outside the time grid");
  if (fwhm_mT < 0) throw std::invalid_argument("TreprPlan: fwhm_mT must be >= 0");
  if (orientation.powder && orientation.n_points < 16)
    throw std::invalid_argument("TreprPlan: powder grids below 16 points are rejected");
}

void NmrPlan::validate() const {
  check_ascending(nu_grid_MHz, "NmrPlan.nu_grid_MHz");
  if (linewidth_MHz <= 0)
    throw std::invalid_argument("NmrPlan: linewidth_MHz must be > 0");
  if (!b0_T.allFinite())
    throw std::invalid_argument("NmrPlan: non-finite field");
}

size_t SpectrumResult::expected_size() const {
  size_t n = 1;
  for (const auto& a : axes) n *= a.values.size();
  return n;
}

double& SpectrumResult::at2(size_t i0, size_t i1) {
  return data[i0 + axes[0].values.size() * i1];
}

double SpectrumResult::at2(size_t i0, size_t i1) const {
  return data[i0 + axes[0].values.size() * i1];
}

void SpectrumResult::validate_shape() const {
  if (data.size() != expected_size())
    throw std::invalid_argument("SpectrumResult: data size does not match axes");
}

std::vector<Mat3> powder_orientations(int n_points, const SpinSystem& system) {
  if (n_points < 16)
    throw std::invalid_argument("powder_orientations: n < 16 rejected");
  int m = (n_points + 1) / 2;  // hemisphere count; antipodes complete the grid

  Mat3 align = rotation_between(system.chiral_axis, Vec3::UnitZ());

  const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
  std::vector<Mat3> base;
  base.reserve(2 * m);
  for (int k = 0; k < m; ++k) {
    double z = 1.0 - (k + 0.5) / m;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double th = golden_angle * k;
    Vec3 u(r * std::cos(th), r * std::sin(th), z);
    base.push_back(rotation_between(Vec3::UnitZ(), u));
    base.push_back(rotation_between(Vec3::UnitZ(), Vec3(-u)));
  }

  std::vector<Mat3> out;
  if (axially_symmetric(system)) {
    out.reserve(base.size());
    for (const auto& R : base) out.push_back(R * align);
  } else {
    // Third Euler angle about the molecular axis, four-fold subdivision.
    out.reserve(base.size() * 4);
    for (const auto& R : base)
      for (int g = 0; g < 4; ++g) {
        Mat3 spin = Eigen::AngleAxisd(g * M_PI / 2, Vec3::UnitZ()).toRotationMatrix();
        out.push_back(R * spin * align);
      }
  }
  return out;
}

SpectrumResult trepr_map_from_state(const SpinSystem& system, const Matrix& rho0,
                                    const TreprPlan& plan,
                                    const DissipationSpec* dissipation, int threads) {
  plan.validate();
  if (plan.orientation.powder)
    throw std::invalid_argument("trepr_map_from_state: powder orientation not supported");
  if (rho0.rows() != system.dim())
    throw std::invalid_argument("trepr_map_from_state: state dimension mismatch");

  const size_t n_b = plan.b_grid_mT.size();
  const size_t n_t = plan.t_grid_ns.size();
  Matrix Sy = total_electron_spin(system, Axis::y);

  std::vector<std::vector<double>> series(n_b);
  parallel_for(n_b, threads, [&](size_t ib) {
    try {
      series[ib] = trepr_time_series(system, rho0, Sy, plan.b_grid_mT[ib], plan,
                                     dissipation);
    } catch (const std::exception& e) {
      throw std::runtime_error("trepr_map at B = " + fmt_double(plan.b_grid_mT[ib]) +
                               " mT: " + e.what());
    }
  });

  SpectrumResult res = make_trepr_result(plan);
  res.metadata["state"] = "explicit";
  res.metadata["orientation"] = "parallel";
  for (size_t ib = 0; ib < n_b; ++ib)
    for (size_t it = 0; it < n_t; ++it) res.at2(it, ib) = series[ib][it];
  return res;
}

SpectrumResult trepr_map(const SpinSystem& system, const RPState& rp,
                         const SensorState& sensor, const TreprPlan& plan,
                         const DissipationSpec* dissipation, int threads) {
  plan.validate();
  if (plan.orientation.powder)
    return powder_average(system, rp, sensor, plan, dissipation, threads);

  require_parallel_axis(system);
  Matrix rho0 = assemble_initial(rp, sensor, system);
  SpectrumResult res = trepr_map_from_state(system, rho0, plan, dissipation, threads);
  res.metadata["state"] = rp.describe();
  return res;
}

SpectrumResult powder_average(const SpinSystem& system, const RPState& rp,
                              const SensorState& sensor, const TreprPlan& plan,
                              const DissipationSpec* dissipation, int threads) {
  plan.validate();
  if (!plan.orientation.powder)
    throw std::invalid_argument("powder_average: plan.orientation must be a powder grid");

  const std::vector<Mat3> rotations = powder_orientations(plan.orientation.n_points, system);
  const size_t n_orient = rotations.size();
  const size_t n_b = plan.b_grid_mT.size();
  const size_t n_t = plan.t_grid_ns.size();

  // Rotated molecule and its initial state per orientation; the polarized
  // initial state follows the chiral axis while the singlet does not change.
  std::vector<SpinSystem> oriented(n_orient);
  std::vector<Matrix> rho0(n_orient);
  for (size_t k = 0; k < n_orient; ++k) {
    oriented[k] = rotate_system(system, rotations[k]);
    rho0[k] = assemble_initial(rp, sensor, oriented[k]);
  }
  Matrix Sy = total_electron_spin(system, Axis::y);

  std::vector<std::vector<double>> series(n_orient * n_b);
  parallel_for(n_orient * n_b, threads, [&](size_t item) {
    size_t k = item / n_b;
    size_t ib = item % n_b;
    try {
      series[item] = trepr_time_series(oriented[k], rho0[k], Sy,
                                       plan.b_grid_mT[ib], plan, dissipation);
    } catch (const std::exception& e) {
      throw std::runtime_error("powder_average at B = " +
                               fmt_double(plan.b_grid_mT[ib]) + " mT, orientation " +
                               std::to_string(k) + ": " + e.what());
    }
  });

  SpectrumResult res = make_trepr_result(plan);
  res.metadata["state"] = rp.describe();
  res.metadata["orientation"] = "powder:" + std::to_string(n_orient);
  const double w = 1.0 / double(n_orient);
  for (size_t ib = 0; ib < n_b; ++ib)
    for (size_t it = 0; it < n_t; ++it) {
      double acc = 0.0;
      for (size_t k = 0; k < n_orient; ++k) acc += series[k * n_b + ib][it];
      res.at2(it, ib) = acc * w;
    }
  return res;
}

SpectrumResult integrate_window(const SpectrumResult& map, double window_start_ns,
                                double window_stop_ns) {
  map.validate_shape();
  if (map.axes.size() != 2 || map.axes[0].name != "time_ns")
    throw std::invalid_argument("integrate_window: expects a (time, field) map");
  if (window_stop_ns < window_start_ns)
    throw std::invalid_argument("integrate_window: window reversed");

  const auto& t = map.axes[0].values;
  std::vector<size_t> idx;
  for (size_t k = 0; k < t.size(); ++k)
    if (t[k] >= window_start_ns - 1e-9 && t[k] <= window_stop_ns + 1e-9)
      idx.push_back(k);
  if (idx.empty())
    throw std::invalid_argument("integrate_window: window contains no time samples");

  const size_t n_b = map.axes[1].values.size();
  SpectrumResult out;
  out.axes.push_back(map.axes[1]);
  out.data.assign(n_b, 0.0);
  out.metadata = map.metadata;
  out.metadata["experiment"] = "trepr_spectrum";
  out.metadata["window_ns"] =
      fmt_double(window_start_ns) + ".." + fmt_double(window_stop_ns);

  for (size_t ib = 0; ib < n_b; ++ib) {
    if (idx.size() == 1) {
      out.data[ib] = map.at2(idx[0], ib);
      continue;
    }
    double integral = 0.0;
    for (size_t q = 1; q < idx.size(); ++q) {
      double dt = t[idx[q]] - t[idx[q - 1]];
      integral += 0.5 * dt * (map.at2(idx[q], ib) + map.at2(idx[q - 1], ib));
    }
    out.data[ib] = integral / (t[idx.back()] - t[idx.front()]);
  }
  return out;
}

namespace {

// Unit-area gaussian convolution on a uniform grid, zero padded.
std::vector<double> convolve_gaussian(const std::vector<double>& y, double step,
                                      double fwhm) {
  const double sigma = fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  const int half = std::max(1, int(std::ceil(5.0 * sigma / step)));
  std::vector<double> kernel(2 * half + 1);
  double sum = 0.0;
  for (int m = -half; m <= half; ++m) {
    double x = m * step;
    kernel[m + half] = std::exp(-0.5 * x * x / (sigma * sigma));
    sum += kernel[m + half];
  }
  for (auto& k : kernel) k /= sum;

  std::vector<double> out(y.size(), 0.0);
  for (size_t i = 0; i < y.size(); ++i) {
    double acc = 0.0;
    for (int m = -half; m <= half; ++m) {
      long long j = (long long)i + m;
      if (j < 0 || j >= (long long)y.size()) continue;  // zero padding
      acc += kernel[m + half] * y[j];
    }
    out[i] = acc;
  }
  return out;
}

bool uniform_spacing(const std::vector<double>& v, double& step) {
  step = (v.back() - v.front()) / double(v.size() - 1);
  for (size_t k = 1; k < v.size(); ++k)
    if (std::abs((v[k] - v[k - 1]) - step) > 1e-9 * std::max(1.0, std::abs(step)))
      return false;
  return true;
}

std::vector<double> linear_resample(const std::vector<double>& x,
                                    const std::vector<double>& y,
                                    const std::vector<double>& xq) {
  std::vector<double> out(xq.size());
  for (size_t q = 0; q < xq.size(); ++q) {
    auto it = std::upper_bound(x.begin(), x.end(), xq[q]);
    size_t hi = std::clamp<size_t>(it - x.begin(), 1, x.size() - 1);
    size_t lo = hi - 1;
    double f = (xq[q] - x[lo]) / (x[hi] - x[lo]);
    out[q] = (1 - f) * y[lo] + f * y[hi];
  }
  return out;
}

}  // namespace

SpectrumResult broaden(const SpectrumResult& spec, double fwhm,
                       const std::string& axis_name) {
  spec.validate_shape();
  if (fwhm == 0.0) return spec;
  if (fwhm < 0.0) throw std::invalid_argument("broaden: fwhm must be >= 0");

  int ax = find_axis(spec, axis_name);
  if (ax < 0) throw std::invalid_argument("broaden: no axis named '" + axis_name + "'");
  const auto& x = spec.axes[ax].values;
  if (x.size() < 2) return spec;

  double step = 0.0;
  bool uniform = uniform_spacing(x, step);
  if (fwhm < std::abs(step)) {
    std::cerr << "[cisspin] warning: broaden fwhm " << fwhm
              << " below the axis step " << step << "; returning input unchanged\n";
    return spec;
  }

  std::vector<double> xu = x;
  if (!uniform) {
    for (size_t k = 0; k < xu.size(); ++k)
      xu[k] = x.front() + step * double(k);
  }

  SpectrumResult out = spec;
  out.metadata["fwhm_" + axis_name] = fmt_double(fwhm);

  const size_t n_ax = x.size();
  const size_t n_other = spec.data.size() / n_ax;
  // Stride walk: axis 0 is contiguous, axis 1 strides by len(axis 0).
  const size_t stride = (ax == 0) ? 1 : spec.axes[0].values.size();
  const size_t outer_stride = (ax == 0) ? n_ax : 1;

  for (size_t o = 0; o < n_other; ++o) {
    std::vector<double> line(n_ax);
    for (size_t k = 0; k < n_ax; ++k) line[k] = spec.data[o * outer_stride + k * stride];
    if (!uniform) line = linear_resample(x, line, xu);
    std::vector<double> conv = convolve_gaussian(line, step, fwhm);
    if (!uniform) conv = linear_resample(xu, conv, x);
    for (size_t k = 0; k < n_ax; ++k) out.data[o * outer_stride + k * stride] = conv[k];
  }
  return out;
}

SpectrumResult trepr_map_broadened(const SpinSystem& system, const RPState& rp,
                                   const SensorState& sensor, const Matrix* rho0,
                                   const TreprPlan& plan,
                                   const DissipationSpec* dissipation, int threads,
                                   SpectrumResult* raw_out) {
  plan.validate();
  auto run_plan = [&](const TreprPlan& p) {
    if (rho0) return trepr_map_from_state(system, *rho0, p, dissipation, threads);
    return trepr_map(system, rp, sensor, p, dissipation, threads);
  };

  const auto& b = plan.b_grid_mT;
  double step = 0.0;
  int refine = 1;
  if (plan.fwhm_mT > 0 && b.size() > 2 && uniform_spacing(b, step)) {
    double g_max = 0.0;
    for (const auto& c : system.centers) {
      Eigen::SelfAdjointEigenSolver<Mat3> es(c.g_tensor);
      g_max = std::max(g_max, es.eigenvalues().cwiseAbs().maxCoeff());
    }
    double slope_MHz_per_mT = constants::mu_B_MHz_per_T * 1e-3 * g_max;
    double t_max_us = plan.t_grid_ns.back() * 1e-3;
    if (slope_MHz_per_mT * t_max_us > 0) {
      double nyquist_step = 1.0 / (2.0 * slope_MHz_per_mT * t_max_us);
      refine = std::clamp(int(std::ceil(step / nyquist_step)), 1, 16);
    }
  }
  if (refine == 1) {
    SpectrumResult raw = run_plan(plan);
    if (raw_out) *raw_out = raw;
    return broaden(raw, plan.fwhm_mT);
  }

  TreprPlan fine = plan;
  fine.b_grid_mT.resize((b.size() - 1) * refine + 1);
  for (size_t k = 0; k < fine.b_grid_mT.size(); ++k)
    fine.b_grid_mT[k] = b.front() + step * double(k) / refine;

  // The fine grid contains every plan node, so both the raw and the broadened
  // plan-grid maps decimate from one sweep.
  SpectrumResult dense_raw = run_plan(fine);
  auto decimate = [&](const SpectrumResult& dense) {
    SpectrumResult out = dense;
    out.axes[1].values = b;
    out.data.assign(plan.t_grid_ns.size() * b.size(), 0.0);
    for (size_t ib = 0; ib < b.size(); ++ib)
      for (size_t it = 0; it < plan.t_grid_ns.size(); ++it)
        out.at2(it, ib) = dense.at2(it, ib * refine);
    return out;
  };
  if (raw_out) *raw_out = decimate(dense_raw);
  return decimate(broaden(dense_raw, plan.fwhm_mT));
}

SpectrumResult nmr_absorption(const SpinSystem& system, const RPState& rp,
                              const SensorState& sensor, const NmrPlan& plan) {
  plan.validate();
  if (system.nuclei.empty())
    throw std::invalid_argument("nmr_absorption: system has no probe nucleus");

  Matrix H = build_static_hamiltonian(system, plan.b0_T);
  Matrix rho0 = assemble_initial(rp, sensor, system);

  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  const auto& E = es.eigenvalues();
  const Matrix& V = es.eigenvectors();
  const int d = system.dim();

  std::vector<double> pops(d);
  for (int i = 0; i < d; ++i)
    pops[i] = (V.col(i).adjoint() * rho0 * V.col(i))(0).real();

  Matrix Ix = Matrix::Zero(d, d);
  for (size_t k = 0; k < system.nuclei.size(); ++k)
    Ix += spin_operator(system, int(system.centers.size() + k), Axis::x);
  Matrix IxV = Ix * V;

  SpectrumResult res;
  res.axes.push_back({"freq_MHz", "MHz", plan.nu_grid_MHz});
  res.data.assign(plan.nu_grid_MHz.size(), 0.0);
  res.metadata["experiment"] = "nmr_absorption";
  res.metadata["state"] = rp.describe();
  res.metadata["b0_T"] = fmt_double(plan.b0_T.norm());
  res.metadata["linewidth_MHz"] = fmt_double(plan.linewidth_MHz);
  res.metadata["signal"] = "chi'' (linear response)";

  const double hw = plan.linewidth_MHz / 2.0;  // lorentzian HWHM
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (E(j) <= E(i)) continue;
      double me2 = std::norm(V.col(j).dot(IxV.col(i)));
      double weight = (pops[i] - pops[j]) * me2;
      if (std::abs(weight) < 1e-14) continue;
      double nu0 = E(j) - E(i);
      for (size_t q = 0; q < plan.nu_grid_MHz.size(); ++q) {
        double dx = plan.nu_grid_MHz[q] - nu0;
        res.data[q] += weight * (hw / M_PI) / (dx * dx + hw * hw);
      }
    }
  }
  return res;
}

namespace {

// Maps each eigenstate to its dominant product-basis state; throws when the
// mapping is not one-to-one (strongly mixed states cannot anchor the
// selectivity check).
std::vector<int> product_state_assignment(const Matrix& V) {
  const int d = int(V.rows());
  std::vector<int> eig_of_basis(d, -1);
  for (int j = 0; j < d; ++j) {
    int best = 0;
    double best_w = 0.0;
    for (int b = 0; b < d; ++b) {
      double w = std::norm(V(b, j));
      if (w > best_w) {
        best_w = w;
        best = b;
      }
    }
    if (eig_of_basis[best] >= 0)
      throw std::runtime_error(
          "transfer_sequence: eigenstates are not product-like; selectivity "
          "check cannot identify transitions");
    eig_of_basis[best] = j;
  }
  return eig_of_basis;
}

}  // namespace

Matrix transfer_sequence(const SpinSystem& system, const Matrix& rho0,
                         const PulseProgram& program) {
  if (rho0.rows() != system.dim())
    throw std::invalid_argument("transfer_sequence: state dimension mismatch");
  if (program.pulses.empty()) return rho0;

  const int n_sites = system.site_count();
  const int d = system.dim();

  Matrix H = build_static_hamiltonian(system, program.pulse_field_T);
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  std::vector<int> eig_of_basis = product_state_assignment(es.eigenvectors());
  auto energy_of_basis = [&](int b) { return es.eigenvalues()(eig_of_basis[b]); };

  Matrix rho = rho0;
  for (const auto& pulse : program.pulses) {
    int t_site = system.center_index(pulse.target);
    int c_site = system.center_index(pulse.control);
    if (t_site < 0 || c_site < 0 || t_site == c_site)
      throw std::invalid_argument(
          "transfer_sequence: target/control must be distinct existing centers");

    // Resolution precondition: the target-flip gap must differ between the two
    // control manifolds by more than 10x the linewidth.
    auto bit = [&](int idx, int site) { return (idx >> (n_sites - 1 - site)) & 1; };
    double gap_by_control[2] = {0, 0};
    int count_by_control[2] = {0, 0};
    for (int b = 0; b < d; ++b) {
      if (bit(b, t_site) != 0) continue;  // target up in b
      int b_flip = b | (1 << (n_sites - 1 - t_site));
      int ctrl = bit(b, c_site);
      gap_by_control[ctrl] += std::abs(energy_of_basis(b) - energy_of_basis(b_flip));
      count_by_control[ctrl] += 1;
    }
    for (int s = 0; s < 2; ++s)
      if (count_by_control[s] > 0) gap_by_control[s] /= count_by_control[s];
    double separation = std::abs(gap_by_control[0] - gap_by_control[1]);
    if (separation <= 10.0 * program.selectivity_linewidth_MHz) {
      char msg[256];
      std::snprintf(msg, sizeof msg,
                    "transfer_sequence: pulse on '%s' (control '%s') not spectrally "
                    "resolved: gaps %.6g and %.6g MHz differ by %.6g MHz, need > %.6g",
                    pulse.target.c_str(), pulse.control.c_str(), gap_by_control[0],
                    gap_by_control[1], separation,
                    10.0 * program.selectivity_linewidth_MHz);
      throw std::runtime_error(msg);
    }

    // Conditional rotation as an ideal unitary: R on the target when the
    // control is in the addressed state, identity otherwise.
    Matrix s_axis = spin_operator(system, t_site, pulse.axis);
    Matrix id = Matrix::Identity(d, d);
    Matrix R = std::cos(pulse.angle_rad / 2) * id -
               2.0 * kI * std::sin(pulse.angle_rad / 2) * s_axis;
    Matrix sz_c = spin_operator(system, c_site, Axis::z);
    Matrix P = pulse.control_up ? Matrix(0.5 * id + sz_c) : Matrix(0.5 * id - sz_c);
    Matrix U = R * P + (id - P);
    rho = U * rho * U.adjoint();
  }
  return rho;
}

double polarization_along(const Matrix& rho, const SpinSystem& system,
                          const std::string& center_label, const Vec3& axis) {
  int site = system.center_index(center_label);
  if (site < 0)
    throw std::invalid_argument("polarization_along: unknown center '" +
                                center_label + "'");
  Matrix S = spin_along(system, site, axis);
  return -2.0 * (S * rho).trace().real();
}

double acceptor_polarization(const Matrix& rho, const SpinSystem& system) {
  if (system.centers.size() < 2)
    throw std::invalid_argument("acceptor_polarization: system has no acceptor");
  return polarization_along(rho, system, system.centers[1].label, system.chiral_axis);
}

}  // namespace ciss
