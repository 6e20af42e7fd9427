#pragma once

/// @file simulate.hpp
/// @brief Open-loop experiments and closed-loop simulation.

#include <Eigen/Dense>
#include <boost/numeric/odeint.hpp>
#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ddc/plant.hpp"

namespace ddc {

using Disturbance = std::function<VectorXd(double)>;

inline Disturbance NoDisturbance(int q) {
  return [q](double) { return VectorXd::Zero(q); };
}
inline Disturbance FromExo(const ExoModel& exo) {
  return [exo](double t) { return exo.d(t); };
}
inline Disturbance FromNoise(const BoundedNoise& noise) {
  return [noise](double t) { return noise(t); };
}

struct UniformInput {
  double lo = -0.1;
  double hi = 0.1;
  unsigned seed = 1;
};
/// Explicit input samples, m x T.
struct InputSequence {
  MatrixXd U;
};
using InputLaw = std::variant<UniformInput, InputSequence>;

struct ExperimentDataset {
  std::string plant;
  VectorXd t;
  MatrixXd X;     // n x T
  MatrixXd U;     // m x T
  MatrixXd Xdot;  // n x T
  MatrixXd D;     // q x T, ground truth only
  nlohmann::json provenance = nlohmann::json::object();

  int n() const { return static_cast<int>(X.rows()); }
  int m() const { return static_cast<int>(U.rows()); }
  int T() const { return static_cast<int>(X.cols()); }
};

namespace internal {

using OdeState = std::vector<double>;

inline VectorXd ToEigen(const OdeState& s) { return Eigen::Map<const VectorXd>(s.data(), s.size()); }
inline OdeState FromEigen(const VectorXd& v) { return OdeState(v.data(), v.data() + v.size()); }

}  // namespace internal

struct ExperimentOptions {
  int T = 10;
  double dt = 0.05;
  /// RK4 steps per sampling interval.
  int substeps = 10;
};

/// Runs the plant from x0 with a piecewise-constant input and records
/// (t_i, x_i, u_i, xdot_i) at t_i = i dt. Derivatives are evaluated exactly
/// from the plant vector field, including the disturbance.
inline ExperimentDataset RunExperiment(const Plant& plant, const InputLaw& law, const VectorXd& x0,
                                       const ExperimentOptions& opt = {}, const Disturbance& dist = nullptr) {
  if (x0.size() != plant.n) throw std::invalid_argument("initial state has wrong dimension");
  if (opt.T <= 0 || opt.dt <= 0.0) throw std::invalid_argument("experiment needs T > 0 and dt > 0");
  const int n = plant.n, m = plant.m, T = opt.T;
  const Disturbance d = dist ? dist : NoDisturbance(plant.q());

  MatrixXd U(m, T);
  nlohmann::json law_json;
  if (const auto* uni = std::get_if<UniformInput>(&law)) {
    std::mt19937_64 rng(uni->seed);
    std::uniform_real_distribution<double> dist_u(uni->lo, uni->hi);
    for (int k = 0; k < T; ++k)
      for (int i = 0; i < m; ++i) U(i, k) = dist_u(rng);
    law_json = {{"kind", "uniform"}, {"lo", uni->lo}, {"hi", uni->hi}, {"seed", uni->seed}};
  } else {
    const auto& seq = std::get<InputSequence>(law);
    if (seq.U.rows() != m || seq.U.cols() != T) throw std::invalid_argument("input sequence has wrong shape");
    U = seq.U;
    law_json = {{"kind", "sequence"}};
  }

  ExperimentDataset ds;
  ds.plant = plant.name;
  ds.t.resize(T);
  ds.X.resize(n, T);
  ds.U = U;
  ds.Xdot.resize(n, T);
  ds.D.resize(plant.q(), T);

  boost::numeric::odeint::runge_kutta4<internal::OdeState> stepper;
  internal::OdeState state = internal::FromEigen(x0);
  const double h = opt.dt / opt.substeps;
  for (int k = 0; k < T; ++k) {
    const double tk = k * opt.dt;
    const VectorXd xk = internal::ToEigen(state);
    if (!xk.allFinite()) throw std::runtime_error("plant state escaped (non-finite) at t = " + std::to_string(tk));
    const VectorXd uk = U.col(k);
    const VectorXd dk = d(tk);
    ds.t(k) = tk;
    ds.X.col(k) = xk;
    ds.D.col(k) = dk;
    ds.Xdot.col(k) = plant.f(xk, uk) + plant.E * dk;
    if (k + 1 == T) break;
    auto rhs = [&](const internal::OdeState& s, internal::OdeState& ds_out, double t) {
      const VectorXd x = internal::ToEigen(s);
      const VectorXd v = plant.f(x, uk) + plant.E * d(t);
      ds_out.assign(v.data(), v.data() + v.size());
    };
    double t = tk;
    for (int j = 0; j < opt.substeps; ++j, t += h) stepper.do_step(rhs, state, t, h);
  }
  ds.provenance = {{"plant", plant.name}, {"input_law", law_json}, {"dt", opt.dt}, {"T", T},
                   {"x0", std::vector<double>(x0.data(), x0.data() + x0.size())}};
  return ds;
}

/// u = K Z(x - x_shift) + u_shift.
struct StaticFeedback {
  Dictionary dict;
  MatrixXd K;
  VectorXd x_shift;
  VectorXd u_shift;

  VectorXd operator()(const VectorXd& x) const {
    VectorXd u = x_shift.size() ? VectorXd(K * dict.Eval(x - x_shift)) : VectorXd(K * dict.Eval(x));
    if (u_shift.size()) u += u_shift;
    return u;
  }
};

/// Autonomous closed-loop vector field together with the input it applies.
struct ClosedLoop {
  int dim = 0;
  std::function<VectorXd(double, const VectorXd&)> rhs;
  std::function<VectorXd(double, const VectorXd&)> input;
};

inline ClosedLoop MakeClosedLoop(const Plant& plant, const StaticFeedback& fb, const Disturbance& dist = nullptr) {
  if (fb.K.rows() != plant.m || fb.K.cols() != fb.dict.s())
    throw std::invalid_argument("feedback gain shape does not match plant and dictionary");
  if (fb.dict.n() != plant.n) throw std::invalid_argument("feedback dictionary dimension does not match plant");
  ClosedLoop cl;
  cl.dim = plant.n;
  const Disturbance d = dist ? dist : NoDisturbance(plant.q());
  cl.input = [fb](double, const VectorXd& x) { return fb(x); };
  cl.rhs = [plant, fb, d](double t, const VectorXd& x) {
    VectorXd dx = plant.f(x, fb(x));
    if (plant.q() > 0) dx += plant.E * d(t);
    return dx;
  };
  return cl;
}

struct Trajectory {
  std::vector<double> t;
  MatrixXd X;  // dim x N
  MatrixXd U;  // m x N

  int size() const { return static_cast<int>(t.size()); }
  VectorXd final_state() const { return X.col(X.cols() - 1); }
};

struct SimulationOptions {
  double t_end = 20.0;
  /// Fixed RK4 step.
  double dt = 1e-3;
  /// Output sampling interval, rounded to a whole number of steps.
  double dt_out = 0.05;
  double divergence_bound = 1e8;
};

/// Fixed-step RK4 integration recorded on a uniform output grid.
inline Trajectory Simulate(const ClosedLoop& cl, const VectorXd& x0, const SimulationOptions& opt = {}) {
  if (x0.size() != cl.dim) throw std::invalid_argument("initial state has wrong dimension");
  if (!(opt.dt > 0.0) || !(opt.dt_out > 0.0) || !(opt.t_end >= 0.0))
    throw std::invalid_argument("simulation needs dt > 0, dt_out > 0 and t_end >= 0");
  const int per_out = std::max(1, static_cast<int>(std::lround(opt.dt_out / opt.dt)));
  const double h = opt.dt_out / per_out;
  const int N = static_cast<int>(std::floor(opt.t_end / opt.dt_out + 1e-9)) + 1;

  Trajectory tr;
  tr.t.resize(N);
  tr.X.resize(cl.dim, N);
  auto rhs = [&](const internal::OdeState& s, internal::OdeState& out, double t) {
    const VectorXd v = cl.rhs(t, internal::ToEigen(s));
    out.assign(v.data(), v.data() + v.size());
  };
  boost::numeric::odeint::runge_kutta4<internal::OdeState> stepper;
  internal::OdeState state = internal::FromEigen(x0);
  for (int k = 0; k < N; ++k) {
    const double tk = k * opt.dt_out;
    const VectorXd x = internal::ToEigen(state);
    if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > opt.divergence_bound)
      throw std::runtime_error("closed-loop trajectory diverged at t = " + std::to_string(tk));
    tr.t[k] = tk;
    tr.X.col(k) = x;
    if (k + 1 == N) break;
    for (int j = 0; j < per_out; ++j) stepper.do_step(rhs, state, tk + j * h, h);
  }

  const VectorXd u0 = cl.input(0.0, x0);
  tr.U.resize(u0.size(), N);
  for (int k = 0; k < N; ++k) tr.U.col(k) = cl.input(tr.t[k], tr.X.col(k));
  return tr;
}

}  // namespace ddc
