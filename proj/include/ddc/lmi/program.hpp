#pragma once

/// @file program.hpp
/// @brief Modelling layer for linear matrix inequality programs: matrix
/// variables, affine matrix expressions, block constraints.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ddc::lmi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Handle to a decision variable registered in an LmiProgram.
struct Var {
  int id = -1;
  int rows = 0;
  int cols = 0;
};

struct VarInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  bool symmetric = false;
  int offset = 0;  // first scalar unknown
  int size = 0;    // number of scalar unknowns
};

/// Affine matrix expression constant + sum of terms. A term is either
/// L op(V) R with op the identity or the transpose, or v M for a 1x1
/// variable v.
class Expr {
 public:
  struct Term {
    int var = -1;
    bool scale = false;
    bool transposed = false;
    MatrixXd L;
    MatrixXd R;
    MatrixXd M;
  };

  Expr() = default;
  Expr(Var v) : rows_(v.rows), cols_(v.cols), constant_(MatrixXd::Zero(v.rows, v.cols)) {
    terms_.push_back({v.id, false, false, MatrixXd::Identity(v.rows, v.rows), MatrixXd::Identity(v.cols, v.cols), {}});
  }
  Expr(const MatrixXd& c) : rows_(static_cast<int>(c.rows())), cols_(static_cast<int>(c.cols())), constant_(c) {}

  static Expr Zero(int r, int c) { return Expr(MatrixXd::Zero(r, c)); }
  static Expr Identity(int n) { return Expr(MatrixXd::Identity(n, n)); }
  /// v * M for a scalar variable v.
  static Expr Scaled(Var v, const MatrixXd& M) {
    if (v.rows != 1 || v.cols != 1) throw std::invalid_argument("Scaled() needs a scalar variable");
    Expr e(MatrixXd::Zero(M.rows(), M.cols()));
    e.terms_.push_back({v.id, true, false, {}, {}, M});
    return e;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const MatrixXd& constant() const { return constant_; }
  const std::vector<Term>& terms() const { return terms_; }

  Expr transpose() const {
    Expr e;
    e.rows_ = cols_;
    e.cols_ = rows_;
    e.constant_ = constant_.transpose();
    for (const auto& t : terms_) {
      if (t.scale)
        e.terms_.push_back({t.var, true, false, {}, {}, t.M.transpose()});
      else
        e.terms_.push_back({t.var, false, !t.transposed, t.R.transpose(), t.L.transpose(), {}});
    }
    return e;
  }

  Expr& operator+=(const Expr& o) {
    CheckSameShape(o, "+");
    constant_ += o.constant_;
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
  }
  Expr& operator-=(const Expr& o) { return *this += -o; }
  Expr operator-() const { return -1.0 * *this; }

  friend Expr operator+(Expr a, const Expr& b) { return a += b; }
  friend Expr operator-(Expr a, const Expr& b) { return a -= b; }

  friend Expr operator*(double s, Expr e) {
    e.constant_ *= s;
    for (auto& t : e.terms_) (t.scale ? t.M : t.L) *= s;
    return e;
  }
  friend Expr operator*(const MatrixXd& A, Expr e) {
    if (A.cols() != e.rows_) throw std::invalid_argument("shape mismatch in matrix * expression");
    e.rows_ = static_cast<int>(A.rows());
    e.constant_ = A * e.constant_;
    for (auto& t : e.terms_) {
      if (t.scale)
        t.M = A * t.M;
      else
        t.L = A * t.L;
    }
    return e;
  }
  friend Expr operator*(Expr e, const MatrixXd& A) {
    if (A.rows() != e.cols_) throw std::invalid_argument("shape mismatch in expression * matrix");
    e.cols_ = static_cast<int>(A.cols());
    e.constant_ = e.constant_ * A;
    for (auto& t : e.terms_) {
      if (t.scale)
        t.M = t.M * A;
      else
        t.R = t.R * A;
    }
    return e;
  }

 private:
  void CheckSameShape(const Expr& o, const char* op) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument(std::string("shape mismatch in expression ") + op + ": " + std::to_string(rows_) +
                                  "x" + std::to_string(cols_) + " vs " + std::to_string(o.rows_) + "x" +
                                  std::to_string(o.cols_));
  }

  int rows_ = 0;
  int cols_ = 0;
  MatrixXd constant_;
  std::vector<Term> terms_;
};

/// Symmetric block matrix given by its lower triangle, row by row. Entry
/// (i, j) with j <= i; the upper triangle is implied. Diagonal blocks are
/// symmetrised. Missing blocks (std::nullopt) are zero.
using BlockRows = std::vector<std::vector<std::optional<Expr>>>;

inline Expr SymmetricBlocks(const BlockRows& rows) {
  const int nb = static_cast<int>(rows.size());
  std::vector<int> dims(nb, -1);
  for (int i = 0; i < nb; ++i) {
    if (static_cast<int>(rows[i].size()) != i + 1)
      throw std::invalid_argument("block row " + std::to_string(i) + " must have " + std::to_string(i + 1) + " entries");
    if (!rows[i][i]) throw std::invalid_argument("diagonal block " + std::to_string(i) + " is missing");
    if (rows[i][i]->rows() != rows[i][i]->cols())
      throw std::invalid_argument("diagonal block " + std::to_string(i) + " is not square");
    dims[i] = rows[i][i]->rows();
  }
  std::vector<int> off(nb + 1, 0);
  for (int i = 0; i < nb; ++i) off[i + 1] = off[i] + dims[i];
  const int N = off[nb];
  auto embed = [&](int i) {
    MatrixXd P = MatrixXd::Zero(N, dims[i]);
    P.middleRows(off[i], dims[i]).setIdentity();
    return P;
  };
  Expr F = Expr::Zero(N, N);
  for (int i = 0; i < nb; ++i) {
    for (int j = 0; j <= i; ++j) {
      if (!rows[i][j]) continue;
      const Expr& b = *rows[i][j];
      if (b.rows() != dims[i] || b.cols() != dims[j])
        throw std::invalid_argument("block (" + std::to_string(i) + "," + std::to_string(j) + ") has shape " +
                                    std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ", expected " +
                                    std::to_string(dims[i]) + "x" + std::to_string(dims[j]));
      if (b.rows() == 0 || b.cols() == 0) continue;
      const MatrixXd Pi = embed(i), Pj = embed(j);
      if (i == j) {
        F += 0.5 * (Pi * b * Pj.transpose());
        F += 0.5 * (Pj * b.transpose() * Pi.transpose());
      } else {
        F += Pi * b * Pj.transpose();
        F += Pj * b.transpose() * Pi.transpose();
      }
    }
  }
  return F;
}

enum class Sense { kPsd, kNsd };

struct LmiConstraint {
  std::string name;
  Expr F;
  Sense sense = Sense::kNsd;
};

struct EqualityConstraint {
  std::string name;
  Expr E;
};

enum class ObjectiveKind { kFeasibility, kMinimize, kMaximize };

class LmiProgram {
 public:
  Var NewSymmetric(const std::string& name, int n) { return Add(name, n, n, true); }
  Var NewMatrix(const std::string& name, int r, int c) { return Add(name, r, c, false); }
  Var NewScalar(const std::string& name) { return Add(name, 1, 1, false); }

  void AddPsd(const std::string& name, const Expr& F) { AddLmi(name, F, Sense::kPsd); }
  void AddNsd(const std::string& name, const Expr& F) { AddLmi(name, F, Sense::kNsd); }
  void AddEquality(const std::string& name, const Expr& E) {
    if (E.rows() == 0 || E.cols() == 0) return;
    eqs_.push_back({name, E});
  }

  void Minimize(const Expr& e) { SetObjective(ObjectiveKind::kMinimize, e); }
  void Maximize(const Expr& e) { SetObjective(ObjectiveKind::kMaximize, e); }

  const std::vector<VarInfo>& vars() const { return vars_; }
  const std::vector<LmiConstraint>& lmis() const { return lmis_; }
  const std::vector<EqualityConstraint>& equalities() const { return eqs_; }
  ObjectiveKind objective_kind() const { return obj_kind_; }
  const Expr& objective() const { return obj_; }
  int num_scalars() const { return vars_.empty() ? 0 : vars_.back().offset + vars_.back().size; }

  /// Basis matrices E_k of a variable such that V = sum_k y_k E_k with the
  /// trace-preserving scaled packing for symmetric variables.
  static void ForEachBasis(const VarInfo& v, auto&& fn) {
    if (v.symmetric) {
      int k = 0;
      for (int j = 0; j < v.cols; ++j)
        for (int i = 0; i <= j; ++i) fn(k++, i, j, i == j ? 1.0 : M_SQRT1_2);
    } else {
      int k = 0;
      for (int j = 0; j < v.cols; ++j)
        for (int i = 0; i < v.rows; ++i) fn(k++, i, j, 1.0);
    }
  }

  /// Packs variable values into the scalar vector.
  VectorXd Pack(const std::vector<MatrixXd>& values) const {
    VectorXd y(num_scalars());
    for (std::size_t id = 0; id < vars_.size(); ++id) {
      const auto& v = vars_[id];
      ForEachBasis(v, [&](int k, int i, int j, double w) {
        y(v.offset + k) = (v.symmetric && i != j) ? values[id](i, j) / w : values[id](i, j);
      });
    }
    return y;
  }

  std::vector<MatrixXd> Unpack(const VectorXd& y) const {
    std::vector<MatrixXd> out;
    for (const auto& v : vars_) {
      MatrixXd V = MatrixXd::Zero(v.rows, v.cols);
      ForEachBasis(v, [&](int k, int i, int j, double w) {
        V(i, j) += w * y(v.offset + k);
        if (v.symmetric && i != j) V(j, i) += w * y(v.offset + k);
      });
      out.push_back(V);
    }
    return out;
  }

  static MatrixXd Evaluate(const Expr& e, const std::vector<MatrixXd>& values) {
    MatrixXd out = e.constant();
    for (const auto& t : e.terms()) {
      const MatrixXd& V = values[t.var];
      if (t.scale)
        out += V(0, 0) * t.M;
      else if (t.transposed)
        out += t.L * V.transpose() * t.R;
      else
        out += t.L * V * t.R;
    }
    return out;
  }

 private:
  Var Add(const std::string& name, int r, int c, bool sym) {
    if (r < 0 || c < 0) throw std::invalid_argument("negative variable dimension");
    for (const auto& v : vars_)
      if (v.name == name) throw std::invalid_argument("duplicate variable name " + name);
    VarInfo info{name, r, c, sym, num_scalars(), sym ? r * (r + 1) / 2 : r * c};
    vars_.push_back(info);
    return {static_cast<int>(vars_.size()) - 1, r, c};
  }
  void AddLmi(const std::string& name, const Expr& F, Sense s) {
    if (F.rows() != F.cols()) throw std::invalid_argument("LMI " + name + " is not square");
    if (F.rows() == 0) return;
    lmis_.push_back({name, F, s});
  }
  void SetObjective(ObjectiveKind k, const Expr& e) {
    if (e.rows() != 1 || e.cols() != 1) throw std::invalid_argument("objective must be scalar");
    obj_kind_ = k;
    obj_ = e;
  }

  std::vector<VarInfo> vars_;
  std::vector<LmiConstraint> lmis_;
  std::vector<EqualityConstraint> eqs_;
  ObjectiveKind obj_kind_ = ObjectiveKind::kFeasibility;
  Expr obj_;
};

}  // namespace ddc::lmi
