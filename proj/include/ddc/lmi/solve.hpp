#pragma once

/// @file solve.hpp
/// @brief Solving an LmiProgram and validating the recovered solution
/// against the original constraints.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "ddc/lmi/conic.hpp"
#include "ddc/lmi/ipm.hpp"
#include "ddc/lmi/program.hpp"

namespace ddc::lmi {

enum class SolveStatus { kOptimal, kNearOptimal, kInfeasible, kUnbounded, kNumericalFailure };

inline const char* ToString(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kNearOptimal: return "near-optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "?";
}

struct SolverOptions {
  IpmOptions ipm;
  /// Run the interior-point iterations in long double.
  bool extended_precision = true;
  /// Upper bound on the feasibility margin t in F(z) - t I >= 0.
  double margin_cap = 1.0;
  double violation_tol = 1e-7;
  /// Re-solve with single LMIs dropped to name the infeasible family.
  bool diagnose = true;
  /// Radii tried in turn for the ball on the reduced unknowns that keeps
  /// phase one bounded; the next one is used only while the ball is active.
  std::vector<double> radii = {1e2, 1e4, 1e6, 1e8};
};

/// Iteration cap from the environment, if set.
inline int MaxIterationsFromEnv(int fallback) {
  if (const char* v = std::getenv("DDC_SOLVER_MAX_ITERS")) {
    char* end = nullptr;
    long k = std::strtol(v, &end, 10);
    if (end != v && k > 0) return static_cast<int>(k);
  }
  return fallback;
}

struct ConstraintCheck {
  std::string name;
  std::string kind;  // "psd", "nsd" or "eq"
  /// Violation: lambda_max for NSD, -lambda_min for PSD, max |residual| for eq.
  double violation = 0.0;
  bool ok = true;
};

struct SolveReport {
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::string message;
  std::vector<MatrixXd> values;
  double objective = 0.0;
  /// Phase-one margin: largest t with every block >= t I (capped).
  double margin = 0.0;
  int iterations = 0;
  double seconds = 0.0;
  std::vector<ConstraintCheck> checks;
  double max_violation = 0.0;
  double equality_residual = 0.0;
  std::uint64_t program_hash = 0;
  std::vector<std::string> infeasible_families;

  bool feasible() const { return status == SolveStatus::kOptimal || status == SolveStatus::kNearOptimal; }
  const MatrixXd& operator[](Var v) const { return values.at(v.id); }
};

/// Evaluates every constraint of the program at the given values.
inline std::vector<ConstraintCheck> Validate(const LmiProgram& prog, const std::vector<MatrixXd>& values,
                                             double tol) {
  std::vector<ConstraintCheck> out;
  for (const auto& eq : prog.equalities()) {
    const MatrixXd r = LmiProgram::Evaluate(eq.E, values);
    const double v = r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
    out.push_back({eq.name, "eq", v, v <= tol});
  }
  for (const auto& lmi : prog.lmis()) {
    MatrixXd F = LmiProgram::Evaluate(lmi.F, values);
    F = 0.5 * (F + F.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(F, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();
    const bool psd = lmi.sense == Sense::kPsd;
    const double v = psd ? -ev(0) : ev(ev.size() - 1);
    out.push_back({lmi.name, psd ? "psd" : "nsd", v, v <= tol});
  }
  return out;
}

namespace internal {

struct PhaseResult {
  IpmStatus status = IpmStatus::kNumerical;
  VectorXd z;
  double value = 0.0;  // b^T y at the end
  int iterations = 0;
};

/// maximize b^T y with S_b = C_b - sum_k y_k A_bk >= 0.
template <typename Scalar>
PhaseResult RunIpm(const std::vector<MatrixXd>& C, const std::vector<std::vector<MatrixXd>>& A, const VectorXd& b,
                   const IpmOptions& opt) {
  IpmProblem<Scalar> pb;
  for (const auto& c : C) pb.C.push_back(c.cast<Scalar>());
  for (const auto& ab : A) {
    std::vector<typename IpmProblem<Scalar>::Mat> v;
    for (const auto& a : ab) v.push_back(a.cast<Scalar>());
    pb.A.push_back(std::move(v));
  }
  pb.b = b.cast<Scalar>();
  auto r = SolveIpm<Scalar>(pb, opt);
  return {r.status, r.y.template cast<double>(), r.dual_objective, r.iterations};
}

inline PhaseResult Run(const std::vector<MatrixXd>& C, const std::vector<std::vector<MatrixXd>>& A,
                       const VectorXd& b, const SolverOptions& opt) {
  IpmOptions io = opt.ipm;
  io.max_iterations = MaxIterationsFromEnv(io.max_iterations);
  return opt.extended_precision ? RunIpm<long double>(C, A, b, io) : RunIpm<double>(C, A, b, io);
}

/// Appends the ball |z| <= rho as the block [[rho, z^T], [z, rho I]] >= 0.
/// `extra` trailing unknowns (e.g. the margin t) do not enter it.
inline void AddBall(std::vector<MatrixXd>& C, std::vector<std::vector<MatrixXd>>& A, int nz, int extra, double rho) {
  const int d = nz + 1;
  C.push_back(rho * MatrixXd::Identity(d, d));
  std::vector<MatrixXd> ab;
  for (int k = 0; k < nz; ++k) {
    MatrixXd E = MatrixXd::Zero(d, d);
    E(0, k + 1) = E(k + 1, 0) = -1.0;
    ab.push_back(std::move(E));
  }
  for (int k = 0; k < extra; ++k) ab.push_back(MatrixXd::Zero(d, d));
  A.push_back(std::move(ab));
}

/// Phase one on the reduced form: maximize t s.t. H_b(z) - t I >= 0,
/// t <= cap, |z| <= rho. Blocks listed in `skip` are left out.
inline PhaseResult MarginProblem(const ReducedForm& rf, const SolverOptions& opt, double rho,
                                 const std::vector<bool>& skip = {}) {
  const int nz = rf.num_vars();
  std::vector<MatrixXd> C;
  std::vector<std::vector<MatrixXd>> A;
  for (std::size_t bi = 0; bi < rf.H0.size(); ++bi) {
    if (!skip.empty() && skip[bi]) continue;
    const int d = static_cast<int>(rf.H0[bi].rows());
    C.push_back(rf.H0[bi]);
    std::vector<MatrixXd> ab;
    for (int k = 0; k < nz; ++k) ab.push_back(-rf.H[bi][k]);
    ab.push_back(MatrixXd::Identity(d, d));
    A.push_back(std::move(ab));
  }
  C.push_back(MatrixXd::Constant(1, 1, opt.margin_cap));
  std::vector<MatrixXd> cap(nz, MatrixXd::Zero(1, 1));
  cap.push_back(MatrixXd::Ones(1, 1));
  A.push_back(std::move(cap));
  if (nz > 0) AddBall(C, A, nz, 1, rho);
  VectorXd b = VectorXd::Zero(nz + 1);
  b(nz) = 1.0;
  return Run(C, A, b, opt);
}

}  // namespace internal

inline SolveReport Solve(const LmiProgram& prog, const SolverOptions& opt = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;
  const ConicForm cf = Lower(prog);
  rep.program_hash = Hash(cf);
  const ReducedForm rf = Reduce(cf);
  rep.equality_residual = rf.equality_residual;
  auto finish = [&](SolveStatus s, std::string msg) {
    rep.status = s;
    rep.message = std::move(msg);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
  };
  auto set_values = [&](const VectorXd& z) {
    rep.values = prog.Unpack(rf.Recover(z));
    rep.checks = Validate(prog, rep.values, opt.violation_tol);
    rep.max_violation = -std::numeric_limits<double>::infinity();
    for (const auto& c : rep.checks) rep.max_violation = std::max(rep.max_violation, c.violation);
  };

  if (!rf.equalities_consistent) {
    rep.infeasible_families.push_back("equality");
    rep.values = prog.Unpack(rf.y0);
    return finish(SolveStatus::kInfeasible,
                  "equality constraints are inconsistent (residual " + std::to_string(rf.equality_residual) + ")");
  }

  const int nz = rf.num_vars();
  internal::PhaseResult p1;
  double rho = opt.radii.empty() ? 1e6 : opt.radii.front();
  for (std::size_t ri = 0; ri < std::max<std::size_t>(1, opt.radii.size()); ++ri) {
    rho = opt.radii.empty() ? 1e6 : opt.radii[ri];
    p1 = internal::MarginProblem(rf, opt, rho);
    rep.iterations += p1.iterations;
    if (p1.status != IpmStatus::kOptimal && p1.status != IpmStatus::kStalled &&
        p1.status != IpmStatus::kMaxIterations)
      continue;
    if (p1.z(nz) > 0.0 || p1.z.head(nz).norm() < 0.9 * rho) break;
  }
  if (p1.status != IpmStatus::kOptimal && p1.status != IpmStatus::kStalled && p1.status != IpmStatus::kMaxIterations)
    return finish(SolveStatus::kNumericalFailure, std::string("phase one ended with ") + ToString(p1.status));
  rep.margin = p1.z(nz);
  VectorXd z = p1.z.head(nz);
  set_values(z);

  if (rep.margin <= 0.0) {
    if (opt.diagnose && rf.H0.size() > 1) {
      for (std::size_t bi = 0; bi < rf.H0.size(); ++bi) {
        std::vector<bool> skip(rf.H0.size(), false);
        skip[bi] = true;
        auto pr = internal::MarginProblem(rf, opt, rho, skip);
        if (pr.z.size() && pr.z(nz) > 0.0) rep.infeasible_families.push_back(cf.blocks[bi].name);
      }
    }
    std::string msg = "no strictly feasible point (margin " + std::to_string(rep.margin) + ")";
    if (!rep.infeasible_families.empty()) {
      msg += "; feasible after dropping:";
      for (const auto& f : rep.infeasible_families) msg += " " + f;
    }
    return finish(SolveStatus::kInfeasible, msg);
  }

  SolveStatus status = p1.status == IpmStatus::kOptimal ? SolveStatus::kOptimal : SolveStatus::kNearOptimal;
  std::string msg = std::string("phase one ") + ToString(p1.status);
  if (prog.objective_kind() != ObjectiveKind::kFeasibility) {
    std::vector<MatrixXd> C = rf.H0;
    std::vector<std::vector<MatrixXd>> A;
    for (std::size_t bi = 0; bi < rf.H0.size(); ++bi) {
      std::vector<MatrixXd> ab;
      for (int k = 0; k < nz; ++k) ab.push_back(-rf.H[bi][k]);
      A.push_back(std::move(ab));
    }
    if (nz > 0) internal::AddBall(C, A, nz, 0, 10.0 * rho);
    internal::PhaseResult p2 = internal::Run(C, A, -rf.g, opt);
    rep.iterations += p2.iterations;
    msg += std::string(", phase two ") + ToString(p2.status);
    if (p2.status == IpmStatus::kPrimalInfeasible) return finish(SolveStatus::kUnbounded, msg);
    if (p2.status == IpmStatus::kOptimal || p2.status == IpmStatus::kStalled ||
        p2.status == IpmStatus::kMaxIterations) {
      // Keep the phase-two point only if it satisfies the original constraints.
      std::vector<MatrixXd> v = prog.Unpack(rf.Recover(p2.z));
      auto checks = Validate(prog, v, opt.violation_tol);
      bool ok = true;
      for (const auto& c : checks) ok = ok && c.ok;
      if (ok) {
        z = p2.z;
        set_values(z);
        status = p2.status == IpmStatus::kOptimal ? SolveStatus::kOptimal : SolveStatus::kNearOptimal;
      } else {
        status = SolveStatus::kNearOptimal;
        msg += " (phase-two point violated constraints; phase-one point kept)";
      }
    } else {
      status = SolveStatus::kNearOptimal;
      msg += " (phase-one point kept)";
    }
    rep.objective = rf.g.dot(z) + rf.g0;
    if (prog.objective_kind() == ObjectiveKind::kMaximize) rep.objective = -rep.objective;
  }
  for (const auto& c : rep.checks)
    if (!c.ok) {
      return finish(SolveStatus::kNumericalFailure,
                    msg + "; recovered solution violates " + c.name + " by " + std::to_string(c.violation));
    }
  return finish(status, msg);
}

}  // namespace ddc::lmi
