#pragma once

/// @file conic.hpp
/// @brief Lowering of an LmiProgram to the standard form
///   minimize c^T y  s.t.  Aeq y = beq,  F0_b + sum_k y_k F_bk >= 0,
/// and elimination of the equalities.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cstdint>
#include <cstring>
#include <ostream>
#include <string>
#include <vector>

#include "ddc/lmi/program.hpp"

namespace ddc::lmi {

/// Affine symmetric map F0 + sum_k y_k F[k] in sparse-by-variable storage.
struct ConicBlock {
  std::string name;
  int dim = 0;
  MatrixXd F0;
  std::vector<int> idx;
  std::vector<MatrixXd> F;
};

struct ConicForm {
  int num_vars = 0;
  VectorXd c;
  double c0 = 0.0;
  MatrixXd Aeq;
  VectorXd beq;
  std::vector<std::string> eq_names;  // one per row of Aeq
  std::vector<ConicBlock> blocks;
};

namespace internal {

/// Coefficients of an expression with respect to every scalar unknown.
inline std::map<int, MatrixXd> Coefficients(const LmiProgram& prog, const Expr& e) {
  std::map<int, MatrixXd> out;
  auto acc = [&](int k) -> MatrixXd& {
    auto it = out.find(k);
    if (it == out.end()) it = out.emplace(k, MatrixXd::Zero(e.rows(), e.cols())).first;
    return it->second;
  };
  for (const auto& t : e.terms()) {
    const VarInfo& v = prog.vars()[t.var];
    if (t.scale) {
      acc(v.offset) += t.M;
      continue;
    }
    LmiProgram::ForEachBasis(v, [&](int k, int i, int j, double w) {
      // basis matrix w (e_i e_j^T [+ e_j e_i^T if symmetric off-diagonal])
      MatrixXd& C = acc(v.offset + k);
      const int a = t.transposed ? j : i;
      const int b = t.transposed ? i : j;
      C.noalias() += w * t.L.col(a) * t.R.row(b);
      if (v.symmetric && i != j) C.noalias() += w * t.L.col(b) * t.R.row(a);
    });
  }
  return out;
}

}  // namespace internal

inline ConicForm Lower(const LmiProgram& prog) {
  ConicForm cf;
  cf.num_vars = prog.num_scalars();
  cf.c = VectorXd::Zero(cf.num_vars);
  if (prog.objective_kind() != ObjectiveKind::kFeasibility) {
    const double sign = prog.objective_kind() == ObjectiveKind::kMinimize ? 1.0 : -1.0;
    for (const auto& [k, C] : internal::Coefficients(prog, prog.objective())) cf.c(k) += sign * C(0, 0);
    cf.c0 = sign * prog.objective().constant()(0, 0);
  }

  int rows = 0;
  for (const auto& eq : prog.equalities()) rows += eq.E.rows() * eq.E.cols();
  cf.Aeq = MatrixXd::Zero(rows, cf.num_vars);
  cf.beq = VectorXd::Zero(rows);
  int r0 = 0;
  for (const auto& eq : prog.equalities()) {
    const int sz = eq.E.rows() * eq.E.cols();
    cf.beq.segment(r0, sz) = -Eigen::Map<const VectorXd>(eq.E.constant().data(), sz);
    for (const auto& [k, C] : internal::Coefficients(prog, eq.E))
      cf.Aeq.col(k).segment(r0, sz) += Eigen::Map<const VectorXd>(C.data(), sz);
    for (int i = 0; i < sz; ++i) cf.eq_names.push_back(eq.name);
    r0 += sz;
  }

  for (const auto& lmi : prog.lmis()) {
    const double sign = lmi.sense == Sense::kPsd ? 1.0 : -1.0;
    ConicBlock b;
    b.name = lmi.name;
    b.dim = lmi.F.rows();
    b.F0 = sign * 0.5 * (lmi.F.constant() + lmi.F.constant().transpose());
    for (auto& [k, C] : internal::Coefficients(prog, lmi.F)) {
      MatrixXd S = sign * 0.5 * (C + C.transpose());
      if (S.cwiseAbs().maxCoeff() == 0.0) continue;
      b.idx.push_back(k);
      b.F.push_back(std::move(S));
    }
    cf.blocks.push_back(std::move(b));
  }
  return cf;
}

/// Dense LMI-only problem in reduced coordinates z with y = y0 + N z:
///   minimize g^T z + g0  s.t.  H0_b + sum_k z_k H_bk >= 0.
struct ReducedForm {
  VectorXd y0;
  MatrixXd N;
  VectorXd g;
  double g0 = 0.0;
  std::vector<std::vector<MatrixXd>> H;  // H[b][k]
  std::vector<MatrixXd> H0;
  double equality_residual = 0.0;  // |Aeq y0 - beq|_inf
  bool equalities_consistent = true;

  int num_vars() const { return static_cast<int>(N.cols()); }
  VectorXd Recover(const VectorXd& z) const { return y0 + N * z; }
};

/// Eliminates equalities with a rank-revealing SVD, then drops directions
/// that leave every block and the objective unchanged.
inline ReducedForm Reduce(const ConicForm& cf, double rank_tol = 1e-10, double consistency_tol = 1e-9) {
  ReducedForm rf;
  const int nv = cf.num_vars;
  MatrixXd N0;
  if (cf.Aeq.rows() > 0) {
    Eigen::JacobiSVD<MatrixXd> svd(cf.Aeq, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > rank_tol * std::max(1.0, smax)) ++rank;
    const MatrixXd& U = svd.matrixU();
    const MatrixXd& V = svd.matrixV();
    VectorXd coeff = (U.leftCols(rank).transpose() * cf.beq).cwiseQuotient(sv.head(rank));
    rf.y0 = V.leftCols(rank) * coeff;
    N0 = V.rightCols(nv - rank);
    rf.equality_residual = (cf.Aeq * rf.y0 - cf.beq).lpNorm<Eigen::Infinity>();
    rf.equalities_consistent = rf.equality_residual <= consistency_tol * (1.0 + cf.beq.lpNorm<Eigen::Infinity>());
  } else {
    rf.y0 = VectorXd::Zero(nv);
    N0 = MatrixXd::Identity(nv, nv);
  }

  // Image of each reduced direction in every block and in the objective.
  const int nz0 = static_cast<int>(N0.cols());
  int stacked = 1;
  for (const auto& b : cf.blocks) stacked += b.dim * (b.dim + 1) / 2;
  MatrixXd Img = MatrixXd::Zero(stacked, nz0);
  {
    int r = 0;
    for (const auto& b : cf.blocks) {
      for (std::size_t t = 0; t < b.idx.size(); ++t) {
        const Eigen::RowVectorXd nrow = N0.row(b.idx[t]);
        int rr = r;
        for (int j = 0; j < b.dim; ++j)
          for (int i = 0; i <= j; ++i, ++rr) Img.row(rr) += b.F[t](i, j) * (i == j ? 1.0 : M_SQRT2) * nrow;
      }
      r += b.dim * (b.dim + 1) / 2;
    }
    Img.row(r) = cf.c.transpose() * N0;
  }
  MatrixXd basis;
  if (nz0 > 0) {
    Eigen::JacobiSVD<MatrixXd> svd(Img, Eigen::ComputeThinV);
    const VectorXd& sv = svd.singularValues();
    const double smax = sv.size() ? sv(0) : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > rank_tol * std::max(1.0, smax)) ++rank;
    basis = svd.matrixV().leftCols(rank);
  }
  rf.N = nz0 > 0 ? MatrixXd(N0 * basis) : MatrixXd::Zero(nv, 0);
  const int nz = static_cast<int>(rf.N.cols());

  rf.g = rf.N.transpose() * cf.c;
  rf.g0 = cf.c0 + cf.c.dot(rf.y0);
  for (const auto& b : cf.blocks) {
    MatrixXd H0 = b.F0;
    std::vector<MatrixXd> H(nz, MatrixXd::Zero(b.dim, b.dim));
    for (std::size_t t = 0; t < b.idx.size(); ++t) {
      H0 += rf.y0(b.idx[t]) * b.F[t];
      for (int k = 0; k < nz; ++k) {
        const double w = rf.N(b.idx[t], k);
        if (w != 0.0) H[k] += w * b.F[t];
      }
    }
    rf.H0.push_back(std::move(H0));
    rf.H.push_back(std::move(H));
  }
  return rf;
}

/// Stable 64-bit FNV-1a digest of the lowered problem data.
inline std::uint64_t Hash(const ConicForm& cf) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  auto mixd = [&](double v) {
    // round to 12 significant digits so tiny float noise does not change the id
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v == 0.0 ? 0.0 : v);
    mix(buf, std::strlen(buf));
  };
  mix(&cf.num_vars, sizeof cf.num_vars);
  for (Eigen::Index i = 0; i < cf.c.size(); ++i) mixd(cf.c(i));
  for (Eigen::Index i = 0; i < cf.Aeq.size(); ++i) mixd(cf.Aeq.data()[i]);
  for (Eigen::Index i = 0; i < cf.beq.size(); ++i) mixd(cf.beq(i));
  for (const auto& b : cf.blocks) {
    mix(&b.dim, sizeof b.dim);
    for (Eigen::Index i = 0; i < b.F0.size(); ++i) mixd(b.F0.data()[i]);
    for (std::size_t t = 0; t < b.idx.size(); ++t) {
      mix(&b.idx[t], sizeof b.idx[t]);
      for (Eigen::Index i = 0; i < b.F[t].size(); ++i) mixd(b.F[t].data()[i]);
    }
  }
  return h;
}

/// SDPA sparse format. SDPA solves min c^T x s.t. sum_k F_k x_k - F_0 >= 0;
/// equalities become a diagonal block of paired inequalities.
inline void WriteSdpa(std::ostream& os, const ConicForm& cf) {
  const int neq = static_cast<int>(cf.Aeq.rows());
  const int nblocks = static_cast<int>(cf.blocks.size()) + (neq > 0 ? 1 : 0);
  os << "\"lowered LMI program\"\n" << cf.num_vars << "\n" << nblocks << "\n";
  for (const auto& b : cf.blocks) os << b.dim << " ";
  if (neq > 0) os << -2 * neq;
  os << "\n";
  os.precision(17);
  for (int k = 0; k < cf.num_vars; ++k) os << cf.c(k) << (k + 1 < cf.num_vars ? " " : "\n");
  if (cf.num_vars == 0) os << "\n";
  for (std::size_t bi = 0; bi < cf.blocks.size(); ++bi) {
    const auto& b = cf.blocks[bi];
    for (int j = 0; j < b.dim; ++j)
      for (int i = 0; i <= j; ++i)
        if (b.F0(i, j) != 0.0) os << 0 << " " << bi + 1 << " " << i + 1 << " " << j + 1 << " " << -b.F0(i, j) << "\n";
    for (std::size_t t = 0; t < b.idx.size(); ++t)
      for (int j = 0; j < b.dim; ++j)
        for (int i = 0; i <= j; ++i)
          if (b.F[t](i, j) != 0.0)
            os << b.idx[t] + 1 << " " << bi + 1 << " " << i + 1 << " " << j + 1 << " " << b.F[t](i, j) << "\n";
  }
  if (neq > 0) {
    const std::size_t lp = cf.blocks.size() + 1;
    for (int r = 0; r < neq; ++r) {
      if (cf.beq(r) != 0.0) {
        os << 0 << " " << lp << " " << 2 * r + 1 << " " << 2 * r + 1 << " " << cf.beq(r) << "\n";
        os << 0 << " " << lp << " " << 2 * r + 2 << " " << 2 * r + 2 << " " << -cf.beq(r) << "\n";
      }
      for (int k = 0; k < cf.num_vars; ++k) {
        if (cf.Aeq(r, k) == 0.0) continue;
        os << k + 1 << " " << lp << " " << 2 * r + 1 << " " << 2 * r + 1 << " " << cf.Aeq(r, k) << "\n";
        os << k + 1 << " " << lp << " " << 2 * r + 2 << " " << 2 * r + 2 << " " << -cf.Aeq(r, k) << "\n";
      }
    }
  }
}

}  // namespace ddc::lmi
