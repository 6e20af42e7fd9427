#include <gtest/gtest.h>

#include <random>

#include "ddc/lmi/program.hpp"
#include "ddc/lmi/solve.hpp"

using namespace ddc;
using Eigen::MatrixXd;
using lmi::Expr;

namespace {

MatrixXd One(double v) { return MatrixXd::Constant(1, 1, v); }

double MinEig(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

MatrixXd RandomSymmetric(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> N;
  MatrixXd A(n, n);
  for (auto& v : A.reshaped()) v = N(rng);
  return 0.5 * (A + A.transpose());
}

}  // namespace

TEST(Lmi, ScalarUpperBound) {
  lmi::LmiProgram prog;
  auto p = prog.NewScalar("p");
  prog.AddNsd("p<=0", Expr(p));
  prog.Maximize(Expr(p));
  const auto rep = lmi::Solve(prog);
  ASSERT_TRUE(rep.feasible()) << rep.message;
  EXPECT_NEAR(rep[p](0, 0), 0.0, 1e-6);
  EXPECT_NEAR(rep.objective, 0.0, 1e-6);
}

TEST(Lmi, IdentityMinimisesTrace) {
  lmi::LmiProgram prog;
  auto P = prog.NewSymmetric("P", 2);
  prog.AddPsd("P>=I", Expr(P) - Expr::Identity(2));
  const Eigen::RowVector2d e1(1, 0), e2(0, 1);
  prog.Minimize(MatrixXd(e1) * Expr(P) * e1.transpose() + MatrixXd(e2) * Expr(P) * e2.transpose());
  const auto rep = lmi::Solve(prog);
  ASSERT_TRUE(rep.feasible()) << rep.message;
  EXPECT_LE((rep[P] - MatrixXd::Identity(2, 2)).norm(), 1e-5);
  EXPECT_NEAR(rep.objective, 2.0, 1e-5);
}

TEST(Lmi, RandomFeasibleProgramSatisfiesConstraintsWhenRechecked) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 8; ++trial) {
    const int k = 3, dim = 4;
    std::vector<MatrixXd> F;
    for (int i = 0; i < k; ++i) F.push_back(RandomSymmetric(dim, rng));
    const Eigen::Vector3d y_star = Eigen::Vector3d::Random();
    MatrixXd F0 = MatrixXd::Identity(dim, dim);
    for (int i = 0; i < k; ++i) F0 -= y_star(i) * F[i];

    lmi::LmiProgram prog;
    std::vector<lmi::Var> y;
    for (int i = 0; i < k; ++i) y.push_back(prog.NewScalar("y" + std::to_string(i)));
    auto P = prog.NewSymmetric("P", 3);
    auto Y = prog.NewMatrix("Y", 2, 3);
    Expr lmi = Expr(F0);
    for (int i = 0; i < k; ++i) lmi += Expr::Scaled(y[i], F[i]);
    prog.AddPsd("affine", lmi);
    const MatrixXd A = 0.5 * RandomSymmetric(3, rng) - 4.0 * MatrixXd::Identity(3, 3), Bm = MatrixXd::Random(3, 2);
    const Expr lyap = A * Expr(P) + Expr(P) * A + Bm * Expr(Y) + (Bm * Expr(Y)).transpose();
    prog.AddNsd("lyapunov", lyap + Expr::Identity(3));
    prog.AddPsd("P>=I", Expr(P) - Expr::Identity(3));
    prog.AddNsd("P<=50I", Expr(P) - 50.0 * Expr::Identity(3));
    prog.AddPsd("Y-box", lmi::SymmetricBlocks({{10.0 * Expr::Identity(2)}, {Expr(Y).transpose(), 10.0 * Expr::Identity(3)}}));
    Expr obj = Expr(MatrixXd::Zero(1, 1));
    for (int i = 0; i < k; ++i) obj += Expr::Scaled(y[i], One(1.0 + i));
    prog.AddPsd("y-lower", obj + Expr(One(20.0)));
    prog.Minimize(obj);
    const auto rep = lmi::Solve(prog);
    ASSERT_TRUE(rep.feasible()) << "trial " << trial << ": " << rep.message;

    // Recheck every constraint in its original form from the returned values.
    MatrixXd Fy = F0;
    for (int i = 0; i < k; ++i) Fy += rep[y[i]](0, 0) * F[i];
    EXPECT_GE(MinEig(Fy), -1e-7);
    const MatrixXd Pv = rep[P], Yv = rep[Y];
    EXPECT_LE((Pv - Pv.transpose()).norm(), 1e-12);
    EXPECT_GE(MinEig(-(A * Pv + Pv * A + Bm * Yv + (Bm * Yv).transpose() + MatrixXd::Identity(3, 3))), -1e-7);
    EXPECT_GE(MinEig(Pv - MatrixXd::Identity(3, 3)), -1e-7);
    EXPECT_GE(MinEig(50.0 * MatrixXd::Identity(3, 3) - Pv), -1e-7);
    double o = 0.0;
    for (int i = 0; i < k; ++i) o += (1.0 + i) * rep[y[i]](0, 0);
    EXPECT_NEAR(o, rep.objective, 1e-6 * std::max(1.0, std::abs(o)));
    EXPECT_LE(o, y_star(0) + 2 * y_star(1) + 3 * y_star(2) + 1e-6);
    EXPECT_LE(rep.max_violation, 1e-7);
  }
}

TEST(Lmi, EqualityConstraintsAreHonoured) {
  lmi::LmiProgram prog;
  auto X = prog.NewMatrix("X", 2, 3);
  const MatrixXd A = (MatrixXd(2, 2) << 1, 2, 3, 5).finished();
  const MatrixXd B = (MatrixXd(2, 3) << 1, 0, 2, -1, 4, 0).finished();
  prog.AddEquality("AX=B", A * Expr(X) - Expr(B));
  prog.AddPsd("bound", lmi::SymmetricBlocks({{100.0 * Expr::Identity(2)}, {Expr(X).transpose(), 100.0 * Expr::Identity(3)}}));
  const auto rep = lmi::Solve(prog);
  ASSERT_TRUE(rep.feasible()) << rep.message;
  EXPECT_LE((A * rep[X] - B).norm(), 1e-8);
  EXPECT_LE(rep.equality_residual, 1e-8);
}

TEST(Lmi, ContradictoryBoundsAreInfeasible) {
  lmi::LmiProgram prog;
  auto p = prog.NewScalar("p");
  prog.AddPsd("p>=1", Expr(p) - Expr(One(1.0)));
  prog.AddNsd("p<=0", Expr(p));
  const auto rep = lmi::Solve(prog);
  EXPECT_EQ(rep.status, lmi::SolveStatus::kInfeasible) << rep.message;
  EXPECT_FALSE(rep.feasible());
  EXPECT_FALSE(rep.infeasible_families.empty());
}

TEST(Lmi, InconsistentEqualitiesAreInfeasible) {
  lmi::LmiProgram prog;
  auto p = prog.NewScalar("p");
  prog.AddEquality("p=1", Expr(p) - Expr(One(1.0)));
  prog.AddEquality("p=2", Expr(p) - Expr(One(2.0)));
  EXPECT_FALSE(lmi::Solve(prog).feasible());
}

TEST(Lmi, ShapeErrorsThrow) {
  lmi::LmiProgram prog;
  auto P = prog.NewSymmetric("P", 2);
  auto q = prog.NewMatrix("q", 2, 1);
  EXPECT_THROW(Expr(P) + Expr(q), std::invalid_argument);
  EXPECT_THROW(Expr::Scaled(P, MatrixXd::Identity(2, 2)), std::invalid_argument);
  EXPECT_THROW(prog.AddPsd("nonsquare", Expr(q)), std::invalid_argument);
}

TEST(Lmi, IdenticalProgramsHashEqually) {
  auto build = [] {
    lmi::LmiProgram prog;
    auto p = prog.NewScalar("p");
    prog.AddNsd("p<=0", Expr(p));
    prog.Maximize(Expr(p));
    return lmi::Solve(prog);
  };
  EXPECT_EQ(build().program_hash, build().program_hash);
}
