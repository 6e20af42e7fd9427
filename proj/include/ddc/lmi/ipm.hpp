#pragma once

/// @file ipm.hpp
/// @brief Infeasible-start primal-dual interior-point method for block
/// semidefinite programs (Nesterov-Todd direction, Mehrotra
/// predictor-corrector).
///
/// Problem pair, all blocks dense and symmetric:
///   (P) minimize <C, X>  s.t. <A_k, X> = b_k,        X >= 0
///   (D) maximize b^T y   s.t. S = C - sum_k y_k A_k >= 0

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace ddc::lmi {

enum class IpmStatus { kOptimal, kPrimalInfeasible, kDualInfeasible, kMaxIterations, kStalled, kNumerical };

inline const char* ToString(IpmStatus s) {
  switch (s) {
    case IpmStatus::kOptimal: return "optimal";
    case IpmStatus::kPrimalInfeasible: return "primal-infeasible";
    case IpmStatus::kDualInfeasible: return "dual-infeasible";
    case IpmStatus::kMaxIterations: return "max-iterations";
    case IpmStatus::kStalled: return "stalled";
    case IpmStatus::kNumerical: return "numerical-failure";
  }
  return "?";
}

struct IpmOptions {
  int max_iterations = 120;
  double gap_tol = 1e-10;
  /// Dual residual tolerance. The dual iterate is the point handed back.
  double feas_tol = 1e-10;
  /// Primal residual tolerance; looser because it only certifies the gap.
  double primal_feas_tol = 1e-7;
  double infeas_tol = 1e-9;
  bool verbose = false;
};

template <typename Scalar>
struct IpmProblem {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  std::vector<Mat> C;               // per block
  std::vector<std::vector<Mat>> A;  // A[b][k]
  Vec b;

  int num_blocks() const { return static_cast<int>(C.size()); }
  int m() const { return static_cast<int>(b.size()); }
};

template <typename Scalar>
struct IpmResult {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  IpmStatus status = IpmStatus::kNumerical;
  Vec y;
  std::vector<Mat> X;
  std::vector<Mat> S;
  int iterations = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
};

namespace internal {

template <typename Mat>
typename Mat::Scalar Inner(const Mat& a, const Mat& b) {
  return a.cwiseProduct(b).sum();
}

/// Largest step a such that X + a dX stays positive semidefinite, given the
/// Cholesky factor of X.
template <typename Mat>
typename Mat::Scalar MaxStep(const Eigen::LLT<Mat>& chol, const Mat& dX) {
  using Scalar = typename Mat::Scalar;
  Mat T = chol.matrixL().solve(dX);
  T = chol.matrixL().solve(T.transpose()).transpose();
  T = Scalar(0.5) * (T + T.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(T, Eigen::EigenvaluesOnly);
  const Scalar lmin = es.eigenvalues()(0);
  if (lmin >= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
  return Scalar(-1) / lmin;
}

}  // namespace internal

template <typename Scalar>
IpmResult<Scalar> SolveIpm(const IpmProblem<Scalar>& pb, const IpmOptions& opt = {}) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using std::abs;
  using std::max;
  using std::min;
  using std::sqrt;
  using internal::Inner;

  const int nb = pb.num_blocks();
  const int m = pb.m();
  IpmResult<Scalar> res;

  int total_dim = 0;
  for (const auto& c : pb.C) total_dim += static_cast<int>(c.rows());

  // Initial point.
  Scalar normb = pb.b.size() ? pb.b.norm() : Scalar(0);
  Scalar normC = 0;
  for (const auto& c : pb.C) normC += c.squaredNorm();
  normC = sqrt(normC);
  std::vector<Mat> X(nb), S(nb);
  for (int bi = 0; bi < nb; ++bi) {
    const int n = static_cast<int>(pb.C[bi].rows());
    const Scalar sn = sqrt(Scalar(n));
    Scalar xi = max(Scalar(10), sn), eta = max(Scalar(10), sn);
    for (int k = 0; k < m; ++k) {
      const Scalar na = pb.A[bi][k].norm();
      xi = max(xi, sn * (1 + abs(pb.b(k))) / (1 + na));
      eta = max(eta, (1 + na) / sn);
    }
    eta = max(eta, (1 + pb.C[bi].norm()) / sn);
    X[bi] = xi * Mat::Identity(n, n);
    S[bi] = eta * Mat::Identity(n, n);
  }
  Vec y = Vec::Zero(m);

  auto apply_A = [&](const std::vector<Mat>& Z) {
    Vec v = Vec::Zero(m);
    for (int bi = 0; bi < nb; ++bi)
      for (int k = 0; k < m; ++k) v(k) += Inner(pb.A[bi][k], Z[bi]);
    return v;
  };
  auto apply_At = [&](const Vec& v, int bi) {
    const int n = static_cast<int>(pb.C[bi].rows());
    Mat Z = Mat::Zero(n, n);
    for (int k = 0; k < m; ++k)
      if (v(k) != Scalar(0)) Z += v(k) * pb.A[bi][k];
    return Z;
  };

  Scalar prev_gap = std::numeric_limits<Scalar>::infinity();
  int stall = 0;
  int flat = 0;
  Scalar prev_dobj = std::numeric_limits<Scalar>::infinity();
  bool last_dual_converged = false;
  res.status = IpmStatus::kMaxIterations;
  for (int it = 0; it <= opt.max_iterations; ++it) {
    res.iterations = it;
    // Residuals and measures.
    Vec Rp = pb.b - apply_A(X);
    std::vector<Mat> Rd(nb);
    Scalar nRd = 0, gap = 0, pobj = 0;
    for (int bi = 0; bi < nb; ++bi) {
      Rd[bi] = pb.C[bi] - apply_At(y, bi) - S[bi];
      Rd[bi] = Scalar(0.5) * (Rd[bi] + Rd[bi].transpose());
      nRd += Rd[bi].squaredNorm();
      gap += Inner(X[bi], S[bi]);
      pobj += Inner(pb.C[bi], X[bi]);
    }
    nRd = sqrt(nRd);
    const Scalar dobj = pb.b.dot(y);
    const Scalar mu = gap / total_dim;
    const Scalar relgap = gap / (1 + abs(pobj) + abs(dobj));
    const Scalar pinf = (m ? Rp.norm() : Scalar(0)) / (1 + normb);
    const Scalar dinf = nRd / (1 + normC);
    res.primal_objective = static_cast<double>(pobj);
    res.dual_objective = static_cast<double>(dobj);
    res.relative_gap = static_cast<double>(relgap);
    res.primal_infeasibility = static_cast<double>(pinf);
    res.dual_infeasibility = static_cast<double>(dinf);
    if (opt.verbose)
      std::fprintf(stderr, "ipm %3d  pobj % .10e  dobj % .10e  gap %.2e  pinf %.2e  dinf %.2e\n", it,
                   static_cast<double>(pobj), static_cast<double>(dobj), static_cast<double>(relgap),
                   static_cast<double>(pinf), static_cast<double>(dinf));
    if (relgap < opt.gap_tol && pinf < opt.primal_feas_tol && dinf < opt.feas_tol) {
      res.status = IpmStatus::kOptimal;
      break;
    }
    // Converged dual point whose primal partner no longer improves.
    const bool dual_converged = dinf < opt.feas_tol && relgap < Scalar(1e-7);
    if (dual_converged && abs(dobj - prev_dobj) <= Scalar(1e-12) * (1 + abs(dobj))) {
      if (++flat >= 4) {
        res.status = IpmStatus::kStalled;
        break;
      }
    } else {
      flat = 0;
    }
    prev_dobj = dobj;
    // Certificates of infeasibility.
    {
      Vec AX = pb.b - Rp;
      if (pobj < 0 && AX.norm() / (-pobj) < opt.infeas_tol && -pobj > 1) {
        res.status = IpmStatus::kDualInfeasible;
        break;
      }
      Scalar nAtyS = 0;
      for (int bi = 0; bi < nb; ++bi) nAtyS += (apply_At(y, bi) + S[bi]).squaredNorm();
      if (dobj > 1 && sqrt(nAtyS) / dobj < opt.infeas_tol) {
        res.status = IpmStatus::kPrimalInfeasible;
        break;
      }
    }
    last_dual_converged = dual_converged;
    if (it == opt.max_iterations) break;

    // Nesterov-Todd scaling per block.
    std::vector<Mat> G(nb), Ginv(nb), W(nb);
    std::vector<Vec> lam(nb);
    std::vector<Eigen::LLT<Mat>> cholX(nb), cholS(nb);
    bool ok = true;
    for (int bi = 0; bi < nb && ok; ++bi) {
      cholX[bi].compute(X[bi]);
      cholS[bi].compute(S[bi]);
      if (cholX[bi].info() != Eigen::Success || cholS[bi].info() != Eigen::Success) {
        ok = false;
        break;
      }
      const Mat L = cholX[bi].matrixL();
      const Mat R = cholS[bi].matrixL();
      Eigen::JacobiSVD<Mat> svd(R.transpose() * L, Eigen::ComputeFullU | Eigen::ComputeFullV);
      lam[bi] = svd.singularValues();
      const Vec isd = lam[bi].cwiseSqrt().cwiseInverse();
      G[bi] = L * svd.matrixV() * isd.asDiagonal();
      // G^-1 = D^{1/2} V^T L^-1 ; built as (L^-T V D^{1/2})^T
      Mat LitV = L.transpose().template triangularView<Eigen::Upper>().solve(svd.matrixV());
      Ginv[bi] = (LitV * lam[bi].cwiseSqrt().asDiagonal()).transpose();
      W[bi] = G[bi] * G[bi].transpose();
    }
    if (!ok || (lam.size() && [&] {
          for (const auto& l : lam)
            if (!l.allFinite() || l.minCoeff() <= 0) return true;
          return false;
        }())) {
      res.status = IpmStatus::kNumerical;
      break;
    }

    // Schur complement M_kl = sum_b <A_k, W A_l W>.
    Mat M = Mat::Zero(m, m);
    std::vector<std::vector<Mat>> WAW(nb);
    for (int bi = 0; bi < nb; ++bi) {
      WAW[bi].resize(m);
      for (int l = 0; l < m; ++l) WAW[bi][l] = W[bi] * pb.A[bi][l] * W[bi];
      for (int k = 0; k < m; ++k)
        for (int l = k; l < m; ++l) M(k, l) += Inner(pb.A[bi][k], WAW[bi][l]);
    }
    M = M.template selfadjointView<Eigen::Upper>();
    Eigen::LLT<Mat> cholM(M);
    Eigen::LDLT<Mat> ldltM;
    bool use_ldlt = false;
    if (cholM.info() != Eigen::Success) {
      Scalar reg = Scalar(1e-14) * max(Scalar(1), M.diagonal().cwiseAbs().maxCoeff());
      ldltM.compute(M + reg * Mat::Identity(m, m));
      use_ldlt = true;
    }
    auto solveM = [&](const Vec& r) -> Vec { return use_ldlt ? Vec(ldltM.solve(r)) : Vec(cholM.solve(r)); };

    // Direction for complementarity right-hand side R (X-space).
    std::vector<Mat> WRdW(nb);
    for (int bi = 0; bi < nb; ++bi) WRdW[bi] = W[bi] * Rd[bi] * W[bi];
    auto direction = [&](const std::vector<Mat>& Rc, Vec& dy, std::vector<Mat>& dX, std::vector<Mat>& dS) {
      Vec rhs = Rp;
      for (int bi = 0; bi < nb; ++bi) {
        const Mat T = Rc[bi] - WRdW[bi];
        for (int k = 0; k < m; ++k) rhs(k) -= Inner(pb.A[bi][k], T);
      }
      dy = m ? solveM(rhs) : Vec();
      dX.resize(nb);
      dS.resize(nb);
      for (int bi = 0; bi < nb; ++bi) {
        dS[bi] = Rd[bi] - apply_At(dy, bi);
        dX[bi] = Rc[bi] - W[bi] * dS[bi] * W[bi];
        dX[bi] = Scalar(0.5) * (dX[bi] + dX[bi].transpose());
        dS[bi] = Scalar(0.5) * (dS[bi] + dS[bi].transpose());
      }
    };
    auto steps = [&](const std::vector<Mat>& dX, const std::vector<Mat>& dS, Scalar& ap, Scalar& ad) {
      ap = std::numeric_limits<Scalar>::infinity();
      ad = ap;
      for (int bi = 0; bi < nb; ++bi) {
        ap = min(ap, internal::MaxStep(cholX[bi], dX[bi]));
        ad = min(ad, internal::MaxStep(cholS[bi], dS[bi]));
      }
    };

    // Predictor.
    std::vector<Mat> Rc(nb);
    for (int bi = 0; bi < nb; ++bi) Rc[bi] = -X[bi];
    Vec dy;
    std::vector<Mat> dX, dS;
    direction(Rc, dy, dX, dS);
    Scalar ap, ad;
    steps(dX, dS, ap, ad);
    ap = min(Scalar(1), ap);
    ad = min(Scalar(1), ad);
    Scalar gap_aff = 0;
    for (int bi = 0; bi < nb; ++bi) gap_aff += Inner(Mat(X[bi] + ap * dX[bi]), Mat(S[bi] + ad * dS[bi]));
    const Scalar expon = max(Scalar(1), Scalar(3) * min(ap, ad) * min(ap, ad));
    Scalar sigma = min(Scalar(1), std::pow(max(Scalar(0), gap_aff / gap), expon));

    // Corrector in the scaled space.
    for (int bi = 0; bi < nb; ++bi) {
      const int n = static_cast<int>(lam[bi].size());
      const Mat dXt = Ginv[bi] * dX[bi] * Ginv[bi].transpose();
      const Mat dSt = G[bi].transpose() * dS[bi] * G[bi];
      Mat rhs = -(dXt * dSt + dSt * dXt);
      for (int i = 0; i < n; ++i) rhs(i, i) += 2 * sigma * mu - 2 * lam[bi](i) * lam[bi](i);
      Mat D(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) D(i, j) = rhs(i, j) / (lam[bi](i) + lam[bi](j));
      Rc[bi] = G[bi] * D * G[bi].transpose();
      Rc[bi] = Scalar(0.5) * (Rc[bi] + Rc[bi].transpose());
    }
    direction(Rc, dy, dX, dS);
    steps(dX, dS, ap, ad);
    const Scalar gamma = Scalar(0.9) + Scalar(0.09) * min(min(ap, ad), Scalar(1));
    ap = min(Scalar(1), gamma * ap);
    ad = min(Scalar(1), gamma * ad);
    if (!dy.allFinite() || !std::isfinite(static_cast<double>(ap)) || !std::isfinite(static_cast<double>(ad))) {
      res.status = IpmStatus::kNumerical;
      break;
    }
    for (int bi = 0; bi < nb; ++bi) {
      X[bi] += ap * dX[bi];
      S[bi] += ad * dS[bi];
    }
    y += ad * dy;

    if (ap < Scalar(1e-9) && ad < Scalar(1e-9)) {
      if (++stall >= 5) {
        res.status = IpmStatus::kStalled;
        break;
      }
    } else if (relgap >= prev_gap * Scalar(0.999999) && ap < Scalar(1e-4) && ad < Scalar(1e-4)) {
      if (++stall >= 10) {
        res.status = IpmStatus::kStalled;
        break;
      }
    } else {
      stall = 0;
    }
    prev_gap = relgap;
  }
  if (res.status == IpmStatus::kNumerical && last_dual_converged) res.status = IpmStatus::kStalled;
  res.y = y;
  res.X = X;
  res.S = S;
  return res;
}

}  // namespace ddc::lmi
