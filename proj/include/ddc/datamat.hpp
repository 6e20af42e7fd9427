#pragma once

/// @file datamat.hpp
/// @brief Data matrices U0, X0, X1, Z0 and their rank diagnostics.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddc/dictionary.hpp"
#include "ddc/simulate.hpp"

namespace ddc {

struct DataMatrices {
  Dictionary dict;
  VectorXd times;
  MatrixXd U0;  // m x T
  MatrixXd X0;  // n x T
  MatrixXd X1;  // n x T
  MatrixXd Z0;  // s x T
  std::vector<std::string> warnings;

  int n() const { return static_cast<int>(X0.rows()); }
  int m() const { return static_cast<int>(U0.rows()); }
  int s() const { return static_cast<int>(Z0.rows()); }
  int T() const { return static_cast<int>(Z0.cols()); }
};

struct RankDiagnostics {
  int rows = 0;
  int cols = 0;
  int rank = 0;
  double sigma_max = 0.0;
  double sigma_min = 0.0;  // smallest of the min(rows, cols) singular values
  double condition = 0.0;
  bool full_row_rank = false;
};

/// Numerical rank with threshold rel_tol * sigma_max.
inline RankDiagnostics Diagnose(const MatrixXd& M, double rel_tol = 1e-8) {
  RankDiagnostics d;
  d.rows = static_cast<int>(M.rows());
  d.cols = static_cast<int>(M.cols());
  if (M.size() == 0) return d;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const VectorXd& sv = svd.singularValues();
  d.sigma_max = sv(0);
  d.sigma_min = sv(sv.size() - 1);
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv(k) > rel_tol * d.sigma_max) ++d.rank;
  d.condition = d.sigma_min > 0 ? d.sigma_max / d.sigma_min : std::numeric_limits<double>::infinity();
  d.full_row_rank = d.rank == d.rows;
  return d;
}

inline std::string FormatDiagnostics(const std::string& label, const RankDiagnostics& d) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-6s %3dx%-3d rank %3d  sigma_min %.3e  cond %.3e%s", label.c_str(), d.rows, d.cols,
                d.rank, d.sigma_min, d.condition, d.full_row_rank ? "" : "  (rank deficient)");
  return buf;
}

/// Stacks a dataset through a dictionary. Throws if Z0 lacks full row rank
/// unless `allow_rank_deficient` is set.
inline DataMatrices BuildDataMatrices(const ExperimentDataset& ds, const Dictionary& dict,
                                      bool allow_rank_deficient = false) {
  if (dict.n() != ds.n())
    throw std::invalid_argument("dictionary dimension " + std::to_string(dict.n()) + " does not match dataset " +
                                std::to_string(ds.n()));
  DataMatrices dm;
  dm.dict = dict;
  dm.times = ds.t;
  dm.U0 = ds.U;
  dm.X0 = ds.X;
  dm.X1 = ds.Xdot;
  dm.Z0 = dict.EvalColumns(ds.X);
  if (dm.T() < dm.s())
    dm.warnings.push_back("T = " + std::to_string(dm.T()) + " < s = " + std::to_string(dm.s()) +
                          ": Z0 cannot have full row rank");
  if (!allow_rank_deficient) {
    const auto d = Diagnose(dm.Z0);
    if (!d.full_row_rank)
      throw std::runtime_error("Z0 is rank deficient: rank " + std::to_string(d.rank) + " < s = " +
                               std::to_string(dm.s()) + "; collect more informative data" +
                               (dm.warnings.empty() ? "" : " (" + dm.warnings.front() + ")"));
  }
  return dm;
}

/// Data in deviation coordinates x - x*, u - u*.
inline ExperimentDataset ShiftDataset(const ExperimentDataset& ds, const VectorXd& x_star, const VectorXd& u_star) {
  ExperimentDataset out = ds;
  out.X.colwise() -= x_star;
  out.U.colwise() -= u_star;
  out.provenance["shift"] = {{"x", std::vector<double>(x_star.data(), x_star.data() + x_star.size())},
                             {"u", std::vector<double>(u_star.data(), u_star.data() + u_star.size())}};
  return out;
}

/// Annihilator W with rows cos(psi t_j), sin(psi t_j) per frequency and one
/// row of ones when constants are present. Exosystem samples lie in its row
/// space, so W [Y1, G2] = 0 removes them from the closed-loop representation.
inline MatrixXd BuildAnnihilator(const VectorXd& times, const std::vector<double>& frequencies, int num_constants) {
  if (frequencies.empty() && num_constants <= 0)
    throw std::invalid_argument("no disturbance model: annihilator needs a frequency or a constant");
  const int rows = 2 * static_cast<int>(frequencies.size()) + (num_constants > 0 ? 1 : 0);
  MatrixXd W(rows, times.size());
  int r = 0;
  for (double psi : frequencies) {
    if (psi <= 0.0) throw std::invalid_argument("annihilator frequencies must be positive");
    W.row(r++) = (psi * times.array()).cos().matrix().transpose();
    W.row(r++) = (psi * times.array()).sin().matrix().transpose();
  }
  if (num_constants > 0) W.row(r++).setOnes();
  return W;
}

inline MatrixXd BuildAnnihilator(const VectorXd& times, const ExoModel& exo) {
  return BuildAnnihilator(times, exo.frequencies, exo.num_constants);
}

/// Matrices for integral control from a dataset of the plant augmented with
/// xi' = y: state (x, xi), dictionary [x; xi; Q(x)], X1 = [xdot; y].
inline DataMatrices BuildIntegralMatrices(const ExperimentDataset& aug, const Dictionary& dict_x, int p,
                                          bool allow_rank_deficient = false) {
  if (aug.n() != dict_x.n() + p) throw std::invalid_argument("augmented dataset has wrong state dimension");
  return BuildDataMatrices(aug, dict_x.Lifted(dict_x.n() + p), allow_rank_deficient);
}

}  // namespace ddc
