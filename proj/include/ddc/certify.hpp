#pragma once

/// @file certify.hpp
/// @brief Independent checks of synthesized controllers. Nothing here solves
/// an optimisation problem; everything is sampling, Newton iterations or
/// simulation.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddc/dictionary.hpp"
#include "ddc/plant.hpp"
#include "ddc/simulate.hpp"
#include "ddc/synthesis.hpp"

namespace ddc {

using VectorField = std::function<VectorXd(const VectorXd&)>;
using JacobianField = std::function<MatrixXd(const VectorXd&)>;

/// Deterministic Latin hypercube sample of a bounded box, one column per point.
inline MatrixXd LatinHypercube(const BoxSet& box, int count, unsigned seed) {
  if (!box.bounded()) throw std::invalid_argument("Latin hypercube needs a bounded box");
  const int n = box.dim();
  MatrixXd S(n, count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<int> perm(count);
  for (int k = 0; k < n; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const double lo = box[k].lo, hi = box[k].hi;
    for (int i = 0; i < count; ++i) S(k, i) = lo + (hi - lo) * (perm[i] + U(rng)) / count;
  }
  return S;
}

struct CertifyOptions {
  int samples = 10000;
  double tol = 1e-7;
  /// Unbounded coordinates are sampled on [-clip, clip].
  double clip = 5.0;
  unsigned seed = 20240;
};

struct ContractionCertificate {
  std::string mode;  // "data" or "ground-truth" (or "data+noise")
  MatrixXd P;
  double beta = 0.0;
  /// Condition factor c = sqrt(lambda_max(P^-1) / lambda_min(P^-1)).
  double c = 1.0;
  BoxSet box;
  int samples = 0;
  double worst = -std::numeric_limits<double>::infinity();
  VectorXd worst_x;
  double tol = 0.0;
  bool pass = false;

  nlohmann::json ToJson() const {
    nlohmann::json j = {{"mode", mode},        {"beta", beta}, {"c", c},       {"samples", samples},
                        {"worst_lambda_max", worst}, {"tol", tol},   {"pass", pass}, {"box", box.ToJson()}};
    j["worst_x"] = std::vector<double>(worst_x.data(), worst_x.data() + worst_x.size());
    return j;
  }
};

inline double ConditionFactor(const MatrixXd& Pinv) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(Pinv, Eigen::EigenvaluesOnly);
  return std::sqrt(es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff());
}

/// lambda_max(J^T P^-1 + P^-1 J + beta P^-1) over Latin-hypercube samples.
inline ContractionCertificate CertifyMetric(const MatrixXd& Pinv, double beta, const JacobianField& jac,
                                            const BoxSet& set, const CertifyOptions& opt = {},
                                            const std::string& mode = "data") {
  ContractionCertificate cert;
  cert.mode = mode;
  cert.P = Pinv.inverse();
  cert.beta = beta;
  cert.c = ConditionFactor(Pinv);
  cert.box = set.Clipped(opt.clip);
  cert.samples = opt.samples;
  cert.tol = opt.tol;
  const MatrixXd S = LatinHypercube(cert.box, opt.samples, opt.seed);
  for (int i = 0; i < S.cols(); ++i) {
    const MatrixXd J = jac(S.col(i));
    MatrixXd L = J.transpose() * Pinv + Pinv * J + beta * Pinv;
    L = 0.5 * (L + L.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(L, Eigen::EigenvaluesOnly);
    const double v = es.eigenvalues().maxCoeff();
    if (v > cert.worst) {
      cert.worst = v;
      cert.worst_x = S.col(i);
    }
  }
  cert.pass = cert.worst <= opt.tol;
  return cert;
}

/// J(x) = X1 G dZ/dx = M + N dQ/dx, built from data alone.
inline JacobianField DataJacobian(const SynthesisResult& r) {
  MatrixXd F(r.M.rows(), r.M.cols() + r.N.cols());
  F << r.M, r.N;
  const Dictionary dict = r.dict;
  return [F, dict](const VectorXd& x) { return MatrixXd(F * dict.Jacobian(x)); };
}

/// J(x) = (X1 - E D) G dZ/dx for one admissible noise matrix D.
inline JacobianField PerturbedDataJacobian(const SynthesisResult& r, const MatrixXd& X1, const MatrixXd& E,
                                           const MatrixXd& D) {
  const MatrixXd F = (X1 - E * D) * r.G();
  const Dictionary dict = r.dict;
  return [F, dict](const VectorXd& x) { return MatrixXd(F * dict.Jacobian(x)); };
}

/// Jacobian of x -> f(x, K Z(x - x_shift) + u_shift) from the plant's
/// factorization: A_t dZ_t/dx + B_t K dZ/dx.
inline JacobianField TruthJacobian(const Plant& plant, const StaticFeedback& fb) {
  if (!plant.truth) throw std::invalid_argument("plant " + plant.name + " has no ground-truth factorization");
  const Factorization t = *plant.truth;
  return [t, fb](const VectorXd& x) {
    const VectorXd xs = fb.x_shift.size() ? VectorXd(x - fb.x_shift) : x;
    return MatrixXd(t.A * t.dict.Jacobian(x) + t.B * fb.K * fb.dict.Jacobian(xs));
  };
}

inline ContractionCertificate CertifyContraction(const SynthesisResult& r, const BoxSet& set,
                                                 const CertifyOptions& opt = {}) {
  return CertifyMetric(r.Pinv, r.beta, DataJacobian(r), set, opt, "data");
}

inline ContractionCertificate CertifyContractionTruth(const SynthesisResult& r, const Plant& plant, const BoxSet& set,
                                                      const CertifyOptions& opt = {}) {
  return CertifyMetric(r.Pinv, r.beta, TruthJacobian(plant, StaticFeedback{r.dict, r.K, {}, {}}), set, opt,
                       "ground-truth");
}

/// Random D with D D^T <= Delta Delta^T: D = Delta Omega with |Omega| <= 1,
/// Omega a random r x T matrix scaled to spectral norm in [0, 1].
inline std::vector<MatrixXd> SampleNoiseMatrices(const MatrixXd& Delta, int T, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<MatrixXd> out;
  for (int k = 0; k < count; ++k) {
    MatrixXd Om(Delta.cols(), T);
    for (Eigen::Index i = 0; i < Om.size(); ++i) Om(i) = N(rng);
    const double s = Eigen::JacobiSVD<MatrixXd>(Om).singularValues()(0);
    // Every fourth sample sits on the boundary of the set.
    const double scale = (k % 4 == 0) ? 1.0 : U(rng);
    out.push_back(Delta * Om * (scale / s));
  }
  return out;
}

struct RobustCertificate {
  int draws = 0;
  int passed = 0;
  double worst = -std::numeric_limits<double>::infinity();
  bool pass = false;
  std::vector<ContractionCertificate> certificates;
};

/// Sampled contraction check for every noise draw D, using only data and
/// the noise model.
inline RobustCertificate CertifyRobust(const SynthesisResult& r, const DataMatrices& dm, const NoiseModel& noise,
                                       const BoxSet& set, int draws, const CertifyOptions& opt = {},
                                       unsigned seed = 99) {
  RobustCertificate rc;
  rc.draws = draws;
  for (const MatrixXd& D : SampleNoiseMatrices(noise.Delta, dm.T(), draws, seed)) {
    auto cert = CertifyMetric(r.Pinv, r.beta, PerturbedDataJacobian(r, dm.X1, noise.E, D), set, opt, "data+noise");
    rc.worst = std::max(rc.worst, cert.worst);
    if (cert.pass) ++rc.passed;
    rc.certificates.push_back(std::move(cert));
  }
  rc.pass = rc.passed == rc.draws;
  return rc;
}

// ---------------------------------------------------------------------------
// Equilibria

struct EquilibriumOptions {
  int max_iterations = 100;
  double tol = 1e-10;
  /// Fallback simulation horizon when Newton does not converge.
  double fallback_horizon = 200.0;
};

struct Equilibrium {
  VectorXd x;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Damped Newton on F(x) = 0 with backtracking on |F|.
inline Equilibrium FindEquilibrium(const VectorField& F, const JacobianField& J, const VectorXd& x_init,
                                   const EquilibriumOptions& opt = {}) {
  Equilibrium eq;
  VectorXd x = x_init;
  VectorXd fx = F(x);
  double nf = fx.norm();
  for (int it = 0; it < opt.max_iterations && nf > opt.tol; ++it) {
    eq.iterations = it + 1;
    const VectorXd dx = J(x).fullPivLu().solve(-fx);
    if (!dx.allFinite()) break;
    double step = 1.0;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      const VectorXd xn = x + step * dx;
      const VectorXd fn = F(xn);
      if (fn.allFinite() && fn.norm() < (1.0 - 1e-4 * step) * nf) {
        x = xn;
        fx = fn;
        nf = fn.norm();
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  eq.x = x;
  eq.residual = nf;
  eq.converged = nf <= opt.tol;
  eq.message = eq.converged ? "newton converged" : "newton did not reach the residual tolerance";
  return eq;
}

/// Newton with a simulation fallback: if Newton stalls, the endpoint of a
/// long simulation is polished and returned with a warning.
inline Equilibrium FindEquilibrium(const ClosedLoop& cl, const JacobianField& J, const VectorXd& x_init,
                                   const EquilibriumOptions& opt = {}) {
  VectorField F = [&cl](const VectorXd& x) { return cl.rhs(0.0, x); };
  Equilibrium eq = FindEquilibrium(F, J, x_init, opt);
  if (eq.converged) return eq;
  SimulationOptions so;
  so.t_end = opt.fallback_horizon;
  so.dt_out = opt.fallback_horizon;
  const VectorXd end = Simulate(cl, x_init, so).final_state();
  Equilibrium eq2 = FindEquilibrium(F, J, end, opt);
  eq2.message = std::string("warning: newton from the initial guess failed; ") +
                (eq2.converged ? "converged from the simulation endpoint" : "returning the simulation endpoint");
  if (!eq2.converged) {
    eq2.x = end;
    eq2.residual = F(end).norm();
  }
  return eq2;
}

/// Closed-loop field M x + N Q(x) + offset of a data representation.
inline VectorField RepresentationField(const MatrixXd& M, const MatrixXd& N, const Dictionary& dict,
                                       const VectorXd& offset = {}) {
  return [M, N, dict, offset](const VectorXd& x) {
    VectorXd v = M * x;
    if (N.cols()) v += N * dict.EvalQ(x);
    if (offset.size()) v += offset;
    return v;
  };
}

inline JacobianField RepresentationJacobian(const MatrixXd& M, const MatrixXd& N, const Dictionary& dict) {
  return [M, N, dict](const VectorXd& x) {
    MatrixXd Jx = M;
    if (N.cols()) Jx += N * dict.JacobianQ(x);
    return Jx;
  };
}

// ---------------------------------------------------------------------------
// Region of attraction

struct RoaOptions {
  /// Grid points per coordinate.
  int points = 1201;
  double r_excl = 1e-3;
  /// Largest level considered; the grid covers the ellipse V <= gamma_cap.
  double gamma_cap = 1e3;
  /// Second pass on the box of V <= refine * gamma from the first pass.
  double refine = 1.25;
};

struct RoaEstimate {
  MatrixXd Pinv;
  VectorXd center;
  double gamma = 0.0;
  /// The level reached gamma_cap without meeting a point with Vdot >= 0.
  bool box_limited = false;
  int points = 0;
  double r_excl = 0.0;
  VectorXd half_width;
  std::string message;

  bool empty() const { return !(gamma > 0.0); }

  nlohmann::json ToJson() const {
    nlohmann::json j = {{"gamma", gamma},     {"box_limited", box_limited}, {"grid_points_per_axis", points},
                        {"r_excl", r_excl},   {"message", message}};
    j["center"] = std::vector<double>(center.data(), center.data() + center.size());
    j["half_width"] = std::vector<double>(half_width.data(), half_width.data() + half_width.size());
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < Pinv.rows(); ++i) {
      std::vector<double> r(Pinv.cols());
      for (Eigen::Index k = 0; k < Pinv.cols(); ++k) r[k] = Pinv(i, k);
      rows.push_back(r);
    }
    j["Pinv"] = rows;
    return j;
  }
};

namespace internal {

/// Smallest V over grid points with Vdot >= 0 outside the exclusion ball,
/// on the grid spanning center +- half_width.
inline double MinNonDecreasingLevel(const VectorField& F, const MatrixXd& Pinv, const VectorXd& center,
                                    const VectorXd& half_width, int points, double r_excl) {
  const int n = static_cast<int>(center.size());
  std::vector<int> idx(n, 0);
  double best = std::numeric_limits<double>::infinity();
  VectorXd x(n);
  while (true) {
    for (int k = 0; k < n; ++k)
      x(k) = center(k) - half_width(k) + 2.0 * half_width(k) * idx[k] / std::max(1, points - 1);
    const VectorXd e = x - center;
    if (e.norm() > r_excl) {
      const double V = e.dot(Pinv * e);
      if (V < best) {
        const double Vdot = 2.0 * e.dot(Pinv * F(x));
        if (!(Vdot < 0.0)) best = V;
      }
    }
    int k = 0;
    while (k < n && ++idx[k] == points) idx[k++] = 0;
    if (k == n) break;
  }
  return best;
}

inline VectorXd EllipseHalfWidth(const MatrixXd& Pinv, double gamma) {
  const MatrixXd P = Pinv.inverse();
  return (gamma * P.diagonal().array()).sqrt().matrix();
}

}  // namespace internal

/// Largest grid-certified level gamma with Vdot < 0 on {V <= gamma} outside
/// a small ball around the center, V(x) = (x - c)^T P^-1 (x - c).
inline RoaEstimate EstimateRoa(const VectorField& F, const MatrixXd& Pinv, const VectorXd& center,
                               const RoaOptions& opt = {}) {
  RoaEstimate est;
  est.Pinv = Pinv;
  est.center = center;
  est.points = opt.points;
  est.r_excl = opt.r_excl;
  VectorXd hw = internal::EllipseHalfWidth(Pinv, opt.gamma_cap);
  double g = internal::MinNonDecreasingLevel(F, Pinv, center, hw, opt.points, opt.r_excl);
  est.half_width = hw;
  if (g >= opt.gamma_cap) {
    est.gamma = opt.gamma_cap;
    est.box_limited = true;
    est.message = "no point with Vdot >= 0 below the level cap; estimate is limited by the grid box";
    return est;
  }
  // Re-grid on the shrinking ellipse until the level stops dropping.
  for (int pass = 0; pass < 40 && g > 0.0; ++pass) {
    hw = internal::EllipseHalfWidth(Pinv, std::min(opt.gamma_cap, opt.refine * g));
    const double gn = internal::MinNonDecreasingLevel(F, Pinv, center, hw, opt.points, opt.r_excl);
    est.half_width = hw;
    if (!(gn < g * (1.0 - 1e-9))) break;
    g = gn;
  }
  est.gamma = g;
  est.message = g > 0.0 ? "grid certified" : "no positive level found: Vdot >= 0 arbitrarily close to the center";
  return est;
}

// ---------------------------------------------------------------------------
// Simulation-based checks

struct BehaviorOptions {
  int trials = 10;
  double horizon = 40.0;
  double tol = 1e-4;
  /// Fraction of the horizon treated as the tail.
  double tail = 0.1;
  unsigned seed = 3;
  SimulationOptions sim;
};

struct BehaviorReport {
  bool pass = false;
  bool diverged = false;
  double pairwise_gap = 0.0;
  double periodic_gap = std::numeric_limits<double>::quiet_NaN();
  std::vector<VectorXd> endpoints;
  std::string message;
};

inline std::vector<VectorXd> RandomInitialStates(const BoxSet& box, int count, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::vector<VectorXd> out;
  for (int k = 0; k < count; ++k) {
    VectorXd x(box.dim());
    for (int i = 0; i < box.dim(); ++i) x(i) = std::uniform_real_distribution<double>(box[i].lo, box[i].hi)(rng);
    out.push_back(x);
  }
  return out;
}

/// All trajectories approach one steady solution: the pairwise sup-norm gap
/// over the tail is below tol. With a period, the tail must also repeat.
inline BehaviorReport CheckConvergentBehavior(const ClosedLoop& cl, const std::vector<VectorXd>& x0s,
                                              const BehaviorOptions& opt = {}, double period = 0.0) {
  BehaviorReport rep;
  SimulationOptions so = opt.sim;
  so.t_end = opt.horizon;
  std::vector<Trajectory> trs;
  try {
    for (const auto& x0 : x0s) trs.push_back(Simulate(cl, x0, so));
  } catch (const std::exception& e) {
    rep.diverged = true;
    rep.message = e.what();
    return rep;
  }
  const int N = trs.front().size();
  const int start = static_cast<int>(std::floor((1.0 - opt.tail) * (N - 1)));
  for (std::size_t a = 0; a < trs.size(); ++a) {
    rep.endpoints.push_back(trs[a].final_state());
    for (std::size_t b = a + 1; b < trs.size(); ++b)
      for (int k = start; k < N; ++k)
        rep.pairwise_gap =
            std::max(rep.pairwise_gap, (trs[a].X.col(k) - trs[b].X.col(k)).lpNorm<Eigen::Infinity>());
  }
  rep.pass = rep.pairwise_gap <= opt.tol;
  if (period > 0.0) {
    const int shift = static_cast<int>(std::lround(period / so.dt_out));
    rep.periodic_gap = 0.0;
    for (const auto& tr : trs)
      for (int k = start; k + shift < N; ++k)
        rep.periodic_gap = std::max(rep.periodic_gap, (tr.X.col(k + shift) - tr.X.col(k)).norm());
    if (start + shift >= N) rep.periodic_gap = std::numeric_limits<double>::infinity();
    rep.pass = rep.pass && rep.periodic_gap <= opt.tol;
  }
  rep.message = rep.pass ? "convergent" : "trajectories did not settle onto one steady solution";
  return rep;
}

struct EnvelopeReport {
  bool pass = false;
  /// max over pairs and times of |x_a - x_b| / (c e^{-beta t / 2} |x_a(0) - x_b(0)|).
  double worst_ratio = 0.0;
  double c = 1.0;
  double beta = 0.0;
};

/// |x_a(t) - x_b(t)| <= (1 + slack) c e^{-beta t/2} |x_a(0) - x_b(0)| for every pair.
/// Gaps below `floor` are treated as converged.
inline EnvelopeReport CheckContractionEnvelope(const ClosedLoop& cl, const std::vector<VectorXd>& x0s,
                                               const MatrixXd& Pinv, double beta, double horizon,
                                               double slack = 0.05, double floor = 1e-9,
                                               const SimulationOptions& sim = {}) {
  EnvelopeReport rep;
  rep.c = ConditionFactor(Pinv);
  rep.beta = beta;
  SimulationOptions so = sim;
  so.t_end = horizon;
  std::vector<Trajectory> trs;
  for (const auto& x0 : x0s) trs.push_back(Simulate(cl, x0, so));
  for (std::size_t a = 0; a < trs.size(); ++a)
    for (std::size_t b = a + 1; b < trs.size(); ++b) {
      const double g0 = (trs[a].X.col(0) - trs[b].X.col(0)).norm();
      for (int k = 0; k < trs[a].size(); ++k) {
        const double g = (trs[a].X.col(k) - trs[b].X.col(k)).norm();
        if (g <= floor) continue;
        const double bound = rep.c * std::exp(-0.5 * beta * trs[a].t[k]) * g0;
        rep.worst_ratio = std::max(rep.worst_ratio, g / bound);
      }
    }
  rep.pass = rep.worst_ratio <= 1.0 + slack;
  return rep;
}

struct TrackingReport {
  bool pass = false;
  int trials = 0;
  int passed = 0;
  double worst_tail_error = 0.0;
  std::vector<Trajectory> trajectories;
  std::string message;
};

/// Bounded trajectories and |C x(t) - r| <= tol on the final tail fraction.
/// The closed loop acts on (x, xi); only the first n entries enter e.
inline TrackingReport CheckTracking(const ClosedLoop& cl, const MatrixXd& C, const VectorXd& r,
                                    const std::vector<VectorXd>& x0s, const BehaviorOptions& opt = {}) {
  TrackingReport rep;
  rep.trials = static_cast<int>(x0s.size());
  SimulationOptions so = opt.sim;
  so.t_end = opt.horizon;
  const int n = static_cast<int>(C.cols());
  for (const auto& x0 : x0s) {
    Trajectory tr;
    try {
      tr = Simulate(cl, x0, so);
    } catch (const std::exception& e) {
      rep.message = e.what();
      rep.worst_tail_error = std::numeric_limits<double>::infinity();
      continue;
    }
    const int N = tr.size();
    const int start = static_cast<int>(std::floor((1.0 - opt.tail) * (N - 1)));
    double worst = 0.0;
    for (int k = start; k < N; ++k)
      worst = std::max(worst, (C * tr.X.col(k).head(n) - r).lpNorm<Eigen::Infinity>());
    rep.worst_tail_error = std::max(rep.worst_tail_error, worst);
    if (worst <= opt.tol) ++rep.passed;
    rep.trajectories.push_back(std::move(tr));
  }
  rep.pass = rep.passed == rep.trials;
  if (rep.message.empty()) rep.message = rep.pass ? "tracking error settled" : "tracking error above tolerance";
  return rep;
}

}  // namespace ddc
