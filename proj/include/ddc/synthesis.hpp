#pragma once

/// @file synthesis.hpp
/// @brief Data-driven controller synthesis. Every mode builds an LMI program
/// in (P, Y1, G2, ...) from data matrices only and returns the gain
/// K = U0 [Y1 P^-1, G2] with the certificate data (P, alpha, beta).

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddc/datamat.hpp"
#include "ddc/dictionary.hpp"
#include "ddc/lmi/program.hpp"
#include "ddc/lmi/solve.hpp"

namespace ddc {

struct SynthesisOptions {
  /// Fixed decay parameter in feasibility mode.
  double alpha = 1e-3;
  /// Maximise alpha subject to trace(P) <= n p_max instead.
  bool margin_mode = false;
  double p_max = 100.0;
  /// Margin mode also imposes P >= p_min I, bounding cond(P) by n p_max / p_min.
  double p_min = 1.0;
  /// Strictness margin: P >= eps I, mu >= eps.
  double eps = 1e-6;
  lmi::SolverOptions solver;
};

/// Noise bound D D^T <= Delta Delta^T on the disturbance samples entering
/// through E (n x q).
struct NoiseModel {
  MatrixXd Delta;  // q x r
  MatrixXd E;      // n x q

  static NoiseModel Bounded(double delta, int T, const MatrixXd& E) {
    const int q = static_cast<int>(E.cols());
    return {delta * std::sqrt(static_cast<double>(T)) * MatrixXd::Identity(q, q), E};
  }
};

struct SynthesisResult {
  std::string mode;
  lmi::SolveStatus status = lmi::SolveStatus::kNumericalFailure;
  std::string message;
  Dictionary dict;  // dictionary the gain acts on
  MatrixXd K;       // m x s
  MatrixXd P;
  MatrixXd Pinv;
  MatrixXd Y1, G1, G2;
  MatrixXd M, N;  // data representation x' = M x + N Q(x)
  double alpha = 0.0;
  double beta = 0.0;
  double mu = std::numeric_limits<double>::quiet_NaN();
  lmi::SolveReport report;

  bool feasible() const { return report.feasible(); }
  /// G = [G1, G2], the data-based closed-loop factor.
  MatrixXd G() const {
    MatrixXd g(G1.rows(), G1.cols() + G2.cols());
    g << G1, G2;
    return g;
  }

  nlohmann::json ToJson() const {
    auto mat = [](const MatrixXd& A) {
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index i = 0; i < A.rows(); ++i) {
        std::vector<double> r(A.cols());
        for (Eigen::Index j = 0; j < A.cols(); ++j) r[j] = A(i, j);
        rows.push_back(r);
      }
      return rows;
    };
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : report.checks)
      checks.push_back({{"name", c.name}, {"kind", c.kind}, {"violation", c.violation}, {"ok", c.ok}});
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(report.program_hash));
    nlohmann::json j = {{"mode", mode},
                        {"status", lmi::ToString(status)},
                        {"message", message},
                        {"dictionary", dict.ToJson()},
                        {"K", mat(K)},
                        {"P", mat(P)},
                        {"alpha", alpha},
                        {"beta", beta},
                        {"residuals",
                         {{"equality", report.equality_residual},
                          {"max_violation", report.max_violation},
                          {"margin", report.margin},
                          {"checks", checks}}},
                        {"solver", {{"iterations", report.iterations}, {"seconds", report.seconds}}},
                        {"program_hash", hash}};
    if (!std::isnan(mu)) j["mu"] = mu;
    if (!report.infeasible_families.empty()) j["infeasible_families"] = report.infeasible_families;
    return j;
  }
};

namespace internal {

using lmi::Expr;
using lmi::Var;

inline MatrixXd NonzeroColumns(const MatrixXd& R) {
  std::vector<int> keep;
  for (Eigen::Index j = 0; j < R.cols(); ++j)
    if (R.col(j).cwiseAbs().maxCoeff() > 0.0) keep.push_back(static_cast<int>(j));
  MatrixXd out(R.rows(), keep.size());
  for (std::size_t k = 0; k < keep.size(); ++k) out.col(k) = R.col(keep[k]);
  return out;
}

inline MatrixXd Stack(std::initializer_list<MatrixXd> parts) {
  Eigen::Index rows = 0, cols = -1;
  for (const auto& p : parts) {
    rows += p.rows();
    if (cols < 0) cols = p.cols();
  }
  MatrixXd out(rows, std::max<Eigen::Index>(cols, 0));
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.middleRows(r, p.rows()) = p;
    r += p.rows();
  }
  return out;
}

/// Decision variables and constraints shared by every mode: P >= eps I,
/// Z0 Y1 = [P; 0], Z0 G2 = [0; I], and alpha handling.
struct Core {
  lmi::LmiProgram prog;
  Var P, Y1, G2;
  std::optional<Var> alpha;
  double alpha_fixed = 0.0;
  int n = 0, s = 0, T = 0;

  Expr AlphaI(int dim) const {
    if (alpha) return Expr::Scaled(*alpha, MatrixXd::Identity(dim, dim));
    return Expr(MatrixXd(alpha_fixed * MatrixXd::Identity(dim, dim)));
  }
};

inline Core MakeCore(const DataMatrices& dm, const SynthesisOptions& opt, bool with_g2_consistency = true) {
  Core c;
  c.n = dm.n();
  c.s = dm.s();
  c.T = dm.T();
  const int n = c.n, s = c.s, T = c.T;
  c.P = c.prog.NewSymmetric("P", n);
  c.Y1 = c.prog.NewMatrix("Y1", T, n);
  c.G2 = c.prog.NewMatrix("G2", T, s - n);
  c.prog.AddPsd("P>0", Expr(c.P) - Expr(MatrixXd(opt.eps * MatrixXd::Identity(n, n))));
  MatrixXd top = MatrixXd::Zero(s, n);
  top.topRows(n).setIdentity();
  c.prog.AddEquality("Z0*Y1=[P;0]", dm.Z0 * Expr(c.Y1) - top * Expr(c.P));
  if (with_g2_consistency && s > n) {
    MatrixXd bottom = MatrixXd::Zero(s, s - n);
    bottom.bottomRows(s - n).setIdentity();
    c.prog.AddEquality("Z0*G2=[0;I]", dm.Z0 * Expr(c.G2) - Expr(bottom));
  }
  if (opt.margin_mode) {
    c.alpha = c.prog.NewScalar("alpha");
    c.prog.AddPsd("alpha>0", Expr(*c.alpha) - Expr(MatrixXd::Constant(1, 1, opt.eps)));
    Expr tr = Expr::Zero(1, 1);
    for (int i = 0; i < n; ++i) {
      MatrixXd e = MatrixXd::Zero(n, 1);
      e(i) = 1.0;
      tr += e.transpose() * Expr(c.P) * e;
    }
    c.prog.AddPsd("trace(P)<=n*p_max", Expr(MatrixXd::Constant(1, 1, n * opt.p_max)) - tr);
    if (opt.p_min > 0.0)
      c.prog.AddPsd("P>=p_min*I", Expr(c.P) - Expr(MatrixXd(opt.p_min * MatrixXd::Identity(n, n))));
    c.prog.Maximize(Expr(*c.alpha));
  } else {
    c.alpha_fixed = opt.alpha;
  }
  return c;
}

inline Expr SymX1Y1(const Core& c, const MatrixXd& X1) {
  Expr xy = X1 * Expr(c.Y1);
  return xy + xy.transpose();
}

inline SynthesisResult Finish(const Core& c, const DataMatrices& dm, lmi::SolveReport rep, const std::string& mode,
                              bool linear_gain_only = false) {
  SynthesisResult r;
  r.mode = mode;
  r.dict = dm.dict;
  r.status = rep.status;
  r.message = rep.message;
  if (!rep.values.empty()) {
    r.P = rep[c.P];
    r.Y1 = rep[c.Y1];
    r.G2 = rep[c.G2];
    r.alpha = c.alpha ? rep[*c.alpha](0, 0) : c.alpha_fixed;
    Eigen::LDLT<MatrixXd> ldlt(r.P);
    r.Pinv = ldlt.solve(MatrixXd::Identity(c.n, c.n));
    r.Pinv = 0.5 * (r.Pinv + r.Pinv.transpose());
    r.G1 = r.Y1 * r.Pinv;
    r.K.resize(dm.m(), c.s);
    r.K.leftCols(c.n) = dm.U0 * r.G1;
    r.K.rightCols(c.s - c.n) = linear_gain_only ? MatrixXd::Zero(dm.m(), c.s - c.n) : MatrixXd(dm.U0 * r.G2);
    r.M = dm.X1 * r.G1;
    r.N = dm.X1 * r.G2;
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(r.Pinv, Eigen::EigenvaluesOnly);
    r.beta = r.alpha * es.eigenvalues()(0);
  }
  r.report = std::move(rep);
  return r;
}

inline void CheckShapes(const DataMatrices& dm) {
  if (dm.Z0.cols() != dm.X1.cols() || dm.U0.cols() != dm.X1.cols() || dm.X1.rows() != dm.n())
    throw std::invalid_argument("inconsistent data matrix shapes");
}

}  // namespace internal

/// Contractivity with a Lipschitz-type bound dQ/dx^T dQ/dx <= R_Q R_Q^T.
inline SynthesisResult SynthContractive(const DataMatrices& dm, const JacobianBound& bound,
                                        const SynthesisOptions& opt = {}, const std::string& mode = "contractive") {
  using namespace internal;
  CheckShapes(dm);
  if (bound.R_Q.rows() != dm.n()) throw std::invalid_argument("R_Q must have n rows");
  Core c = MakeCore(dm, opt);
  const MatrixXd RQ = NonzeroColumns(bound.R_Q);
  const int n = c.n, q = c.s - c.n, tau = static_cast<int>(RQ.cols());
  c.prog.AddNsd("contraction", lmi::SymmetricBlocks({
                                   {SymX1Y1(c, dm.X1) + c.AlphaI(n)},
                                   {(dm.X1 * Expr(c.G2)).transpose(), Expr(MatrixXd(-MatrixXd::Identity(q, q)))},
                                   {RQ.transpose() * Expr(c.P), Expr::Zero(tau, q),
                                    Expr(MatrixXd(-MatrixXd::Identity(tau, tau)))},
                               }));
  return Finish(c, dm, lmi::Solve(c.prog, opt.solver), mode);
}

/// Nonlinearities satisfying dQ^T R dQ + S dQ + dQ^T S^T <= W on the set.
inline SynthesisResult SynthGeneral(const DataMatrices& dm, const MatrixXd& S, const MatrixXd& W, const MatrixXd& R,
                                    const SynthesisOptions& opt = {}) {
  using namespace internal;
  CheckShapes(dm);
  Core c = MakeCore(dm, opt);
  const int n = c.n, q = c.s - c.n;
  if (S.rows() != n || S.cols() != q || W.rows() != n || W.cols() != n || R.rows() != q || R.cols() != q)
    throw std::invalid_argument("general mode needs S: n x (s-n), W: n x n, R: (s-n) x (s-n)");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (W + W.transpose()));
  if (es.eigenvalues().minCoeff() < -1e-12) throw std::invalid_argument("W must be positive semidefinite");
  const MatrixXd Wh = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                      es.eigenvectors().transpose();
  c.prog.AddNsd("contraction-general",
                lmi::SymmetricBlocks({
                    {SymX1Y1(c, dm.X1) + c.AlphaI(n)},
                    {(dm.X1 * Expr(c.G2)).transpose() - S.transpose() * Expr(c.P), Expr(MatrixXd(-R))},
                    {Wh * Expr(c.P), Expr::Zero(n, q), Expr(MatrixXd(-MatrixXd::Identity(n, n)))},
                }));
  return Finish(c, dm, lmi::Solve(c.prog, opt.solver), "general");
}

/// Largest eigenvalue of S dQ(x) + dQ(x)^T S^T over uniform samples of the
/// set (clipped to +-clip). A positive value means the monotonicity
/// precondition of SynthMonotone is violated somewhere on the set.
inline double MonotoneViolation(const Dictionary& dict, const MatrixXd& S, const BoxSet& set, int samples = 2000,
                                unsigned seed = 11, double clip = 5.0) {
  if (S.rows() != dict.n() || S.cols() != dict.num_nonlinear())
    throw std::invalid_argument("monotone check needs S: n x (s-n)");
  if (dict.num_nonlinear() == 0) return -std::numeric_limits<double>::infinity();
  const BoxSet box = set.Clipped(clip);
  std::mt19937_64 rng(seed);
  VectorXd x(dict.n());
  double worst = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    for (int i = 0; i < dict.n(); ++i) x(i) = std::uniform_real_distribution<double>(box[i].lo, box[i].hi)(rng);
    const MatrixXd H = S * dict.JacobianQ(x);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(H + H.transpose(), Eigen::EigenvaluesOnly);
    worst = std::max(worst, es.eigenvalues().maxCoeff());
  }
  return worst;
}

/// Monotone nonlinearities S dQ + dQ^T S^T <= 0: X1 G2 = P S and the linear
/// part alone must contract.
inline SynthesisResult SynthMonotone(const DataMatrices& dm, const MatrixXd& S, const SynthesisOptions& opt = {}) {
  using namespace internal;
  CheckShapes(dm);
  Core c = MakeCore(dm, opt);
  const int n = c.n, q = c.s - c.n;
  if (S.rows() != n || S.cols() != q) throw std::invalid_argument("monotone mode needs S: n x (s-n)");
  c.prog.AddNsd("contraction-linear", SymX1Y1(c, dm.X1) + c.AlphaI(n));
  c.prog.AddEquality("X1*G2=P*S", dm.X1 * Expr(c.G2) - Expr(c.P) * S);
  return Finish(c, dm, lmi::Solve(c.prog, opt.solver), "monotone");
}

/// dQ/dx in the convex hull of the given (s-n) x n vertices; one LMI per
/// vertex with beta P in the (1,1) block.
inline SynthesisResult SynthHull(const DataMatrices& dm, const std::vector<MatrixXd>& vertices, double beta,
                                 const SynthesisOptions& opt = {}) {
  using namespace internal;
  CheckShapes(dm);
  if (vertices.empty()) throw std::invalid_argument("hull mode needs at least one vertex");
  Core c = MakeCore(dm, opt);
  const int n = c.n, q = c.s - c.n;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const MatrixXd& Qi = vertices[i];
    if (Qi.rows() != q || Qi.cols() != n) throw std::invalid_argument("hull vertex must be (s-n) x n");
    c.prog.AddNsd("contraction-vertex-" + std::to_string(i),
                  lmi::SymmetricBlocks({
                      {SymX1Y1(c, dm.X1) + beta * Expr(c.P) + c.AlphaI(n)},
                      {(dm.X1 * Expr(c.G2)).transpose(), Expr(MatrixXd(-MatrixXd::Identity(q, q)))},
                      {Qi * Expr(c.P), Expr::Zero(q, q), Expr(MatrixXd(-MatrixXd::Identity(q, q)))},
                  }));
  }
  SynthesisResult r = Finish(c, dm, lmi::Solve(c.prog, opt.solver), "hull");
  if (!r.Pinv.size()) return r;
  r.beta += beta;
  return r;
}

/// Linearisation baseline: only the linear part is required to contract and
/// the gain acts on x alone.
inline SynthesisResult SynthTaylor(const DataMatrices& dm, const SynthesisOptions& opt = {}) {
  using namespace internal;
  CheckShapes(dm);
  Core c = MakeCore(dm, opt);
  c.prog.AddNsd("linear-part", SymX1Y1(c, dm.X1) + c.AlphaI(c.n));
  return Finish(c, dm, lmi::Solve(c.prog, opt.solver), "taylor", true);
}

/// Linearisation baseline that also minimises the spectral norm of X1 G2.
inline SynthesisResult SynthMinNonlinearity(const DataMatrices& dm, const SynthesisOptions& opt = {}) {
  using namespace internal;
  CheckShapes(dm);
  SynthesisOptions o = opt;
  o.margin_mode = false;
  Core c = MakeCore(dm, o);
  const int n = c.n, q = c.s - c.n;
  c.prog.AddNsd("linear-part", SymX1Y1(c, dm.X1) + c.AlphaI(n));
  Var t = c.prog.NewScalar("t");
  c.prog.AddPsd("norm-epigraph", lmi::SymmetricBlocks({
                                     {Expr::Scaled(t, MatrixXd::Identity(n, n))},
                                     {(dm.X1 * Expr(c.G2)).transpose(), Expr::Scaled(t, MatrixXd::Identity(q, q))},
                                 }));
  c.prog.Minimize(Expr(t));
  SynthesisResult r = Finish(c, dm, lmi::Solve(c.prog, o.solver), "min-nonlin");
  if (r.report.feasible()) r.mu = r.report[t](0, 0);
  return r;
}

/// Linearisation with remainder samples R0 R0^T <= Delta Delta^T, on data
/// shifted to the operating point. The dictionary should be coordinates only.
inline SynthesisResult SynthTaylorRemainder(const DataMatrices& dm, const MatrixXd& Delta,
                                            const SynthesisOptions& opt = {}) {
  using namespace internal;
  CheckShapes(dm);
  if (Delta.rows() != dm.n()) throw std::invalid_argument("Delta must have n rows");
  Core c = MakeCore(dm, opt);
  const int n = c.n, T = c.T;
  Var mu = c.prog.NewScalar("mu");
  c.prog.AddPsd("mu>0", Expr(mu) - Expr(MatrixXd::Constant(1, 1, opt.eps)));
  c.prog.AddNsd("taylor-remainder",
                lmi::SymmetricBlocks({
                    {SymX1Y1(c, dm.X1) + c.AlphaI(n) + Expr::Scaled(mu, Delta * Delta.transpose())},
                    {Expr(c.Y1), Expr::Scaled(mu, -MatrixXd::Identity(T, T))},
                }));
  SynthesisResult r = Finish(c, dm, lmi::Solve(c.prog, opt.solver), "taylor-remainder", true);
  if (r.report.feasible()) r.mu = r.report[mu](0, 0);
  return r;
}

/// Dynamic feedback v = K Z(x, u) with u' = v: Theorem-1 style program on
/// data of the input-integrator extension.
inline SynthesisResult SynthExtended(const DataMatrices& dm_ext, const JacobianBound& bound,
                                     const SynthesisOptions& opt = {}) {
  return SynthContractive(dm_ext, bound, opt, "extended");
}

/// Contractivity robust to every noise realisation with D D^T <= Delta Delta^T.
inline SynthesisResult SynthNoisy(const DataMatrices& dm, const JacobianBound& bound, const NoiseModel& noise,
                                  const SynthesisOptions& opt = {}) {
  using namespace internal;
  CheckShapes(dm);
  if (noise.E.rows() != dm.n() || noise.Delta.rows() != noise.E.cols())
    throw std::invalid_argument("noise model shapes: E n x q, Delta q x r");
  Core c = MakeCore(dm, opt);
  const MatrixXd RQ = NonzeroColumns(bound.R_Q);
  const int n = c.n, q = c.s - c.n, tau = static_cast<int>(RQ.cols()), T = c.T;
  Var mu = c.prog.NewScalar("mu");
  c.prog.AddPsd("mu>0", Expr(mu) - Expr(MatrixXd::Constant(1, 1, opt.eps)));
  const MatrixXd ED = noise.E * noise.Delta;
  c.prog.AddNsd("contraction-noisy",
                lmi::SymmetricBlocks({
                    {SymX1Y1(c, dm.X1) + c.AlphaI(n) + Expr::Scaled(mu, ED * ED.transpose())},
                    {(dm.X1 * Expr(c.G2)).transpose(), Expr(MatrixXd(-MatrixXd::Identity(q, q)))},
                    {RQ.transpose() * Expr(c.P), Expr::Zero(tau, q), Expr(MatrixXd(-MatrixXd::Identity(tau, tau)))},
                    {Expr(c.Y1), Expr(c.G2), Expr::Zero(T, tau), Expr::Scaled(mu, -MatrixXd::Identity(T, T))},
                }));
  SynthesisResult r = Finish(c, dm, lmi::Solve(c.prog, opt.solver), "noisy");
  if (r.report.feasible()) r.mu = r.report[mu](0, 0);
  return r;
}

/// Incomplete dictionary f = A Z + d(x) with a bound R_D on dd/dx and on the
/// remainder samples D D^T <= Delta Delta^T (E = I).
inline SynthesisResult SynthRemainder(const DataMatrices& dm, const JacobianBound& bound_q, const MatrixXd& R_D,
                                      const MatrixXd& Delta, const SynthesisOptions& opt = {}) {
  using namespace internal;
  CheckShapes(dm);
  const int n = dm.n();
  if (R_D.rows() != n || Delta.rows() != n) throw std::invalid_argument("R_D and Delta must have n rows");
  Core c = MakeCore(dm, opt);
  const int q = c.s - n, T = c.T;
  MatrixXd RQD(n, 0);
  {
    const MatrixXd a = NonzeroColumns(bound_q.R_Q), b = NonzeroColumns(R_D);
    RQD.resize(n, a.cols() + b.cols());
    RQD << a, b;
  }
  const int tt = static_cast<int>(RQD.cols()), s = c.s;
  Var mu = c.prog.NewScalar("mu");
  c.prog.AddPsd("mu>0", Expr(mu) - Expr(MatrixXd::Constant(1, 1, opt.eps)));
  // [G2^T X1^T; I_n] and [G2, 0_{T x n}] via embeddings.
  MatrixXd up = MatrixXd::Zero(s, q), lowI = MatrixXd::Zero(s, n);
  up.topRows(q).setIdentity();
  lowI.bottomRows(n).setIdentity();
  const Expr row2 = up * (dm.X1 * Expr(c.G2)).transpose() + Expr(lowI);
  const Expr row4 = Expr(c.G2) * up.transpose();
  c.prog.AddNsd("contraction-remainder",
                lmi::SymmetricBlocks({
                    {SymX1Y1(c, dm.X1) + c.AlphaI(n) + Expr::Scaled(mu, Delta * Delta.transpose())},
                    {row2, Expr(MatrixXd(-MatrixXd::Identity(s, s)))},
                    {RQD.transpose() * Expr(c.P), Expr::Zero(tt, s), Expr(MatrixXd(-MatrixXd::Identity(tt, tt)))},
                    {Expr(c.Y1), row4, Expr::Zero(T, tt), Expr::Scaled(mu, -MatrixXd::Identity(T, T))},
                }));
  SynthesisResult r = Finish(c, dm, lmi::Solve(c.prog, opt.solver), "remainder");
  if (r.report.feasible()) r.mu = r.report[mu](0, 0);
  return r;
}

/// Disturbances in the row space of W (known frequencies and constants):
/// adds W [Y1, G2] = 0 so the representation does not depend on them.
inline SynthesisResult SynthKnownFrequency(const DataMatrices& dm, const JacobianBound& bound, const MatrixXd& W,
                                           const SynthesisOptions& opt = {}, const std::string& mode = "known-freq") {
  using namespace internal;
  CheckShapes(dm);
  if (W.cols() != dm.T()) throw std::invalid_argument("annihilator must have T columns");
  Core c = MakeCore(dm, opt);
  const MatrixXd RQ = NonzeroColumns(bound.R_Q);
  const int n = c.n, q = c.s - c.n, tau = static_cast<int>(RQ.cols());
  c.prog.AddEquality("W*Y1=0", W * Expr(c.Y1));
  if (q > 0) c.prog.AddEquality("W*G2=0", W * Expr(c.G2));
  c.prog.AddNsd("contraction", lmi::SymmetricBlocks({
                                   {SymX1Y1(c, dm.X1) + c.AlphaI(n)},
                                   {(dm.X1 * Expr(c.G2)).transpose(), Expr(MatrixXd(-MatrixXd::Identity(q, q)))},
                                   {RQ.transpose() * Expr(c.P), Expr::Zero(tau, q),
                                    Expr(MatrixXd(-MatrixXd::Identity(tau, tau)))},
                               }));
  return Finish(c, dm, lmi::Solve(c.prog, opt.solver), mode);
}

/// Integral control on data of (x, xi) with xi' = y. The bound R_Q acts on x
/// and is padded with zero rows for xi. `C` is only used for the diagnosis.
inline SynthesisResult SynthIntegral(const DataMatrices& dm_int, const JacobianBound& bound_x, int p,
                                     const SynthesisOptions& opt = {}, const MatrixXd& C = {}) {
  const int nx = dm_int.n() - p;
  if (bound_x.R_Q.rows() != nx) throw std::invalid_argument("R_Q must have n rows (plant state)");
  JacobianBound padded{MatrixXd::Zero(nx + p, bound_x.R_Q.cols())};
  padded.R_Q.topRows(nx) = bound_x.R_Q;
  const MatrixXd ones = MatrixXd::Ones(1, dm_int.T());
  SynthesisResult r = SynthKnownFrequency(dm_int, padded, ones, opt, "integral");
  if (C.size()) {
    const auto d = Diagnose(C);
    if (!d.full_row_rank && !r.feasible())
      r.message += "; output matrix C is rank deficient (rank " + std::to_string(d.rank) + " < p = " +
                   std::to_string(p) + "), which rules out tracking of every constant reference";
  }
  return r;
}

}  // namespace ddc
