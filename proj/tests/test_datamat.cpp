#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ddc/datamat.hpp"
#include "ddc/pipelines.hpp"

using namespace ddc;

namespace {

ExperimentDataset Scalar(std::vector<double> xs) {
  ExperimentDataset ds;
  const int T = static_cast<int>(xs.size());
  ds.t = VectorXd::LinSpaced(T, 0.0, T - 1.0);
  ds.X = Eigen::Map<VectorXd>(xs.data(), T).transpose();
  ds.U = MatrixXd::Zero(1, T);
  ds.Xdot = MatrixXd::Zero(1, T);
  return ds;
}

}  // namespace

TEST(DataMatrices, HandComputedLift) {
  const auto dm = BuildDataMatrices(Scalar({1, 2}), Dictionary(1, {BasisFunction::Monomial({2})}));
  MatrixXd want(2, 2);
  want << 1, 2, 1, 4;
  EXPECT_EQ(dm.Z0, want);
  EXPECT_EQ(Diagnose(dm.Z0).rank, 2);
  EXPECT_TRUE(dm.warnings.empty());
}

TEST(DataMatrices, NoiseFreeManipulatorMatchesGroundTruth) {
  const Plant p = Manipulator();
  const auto dm = BuildDataMatrices(golden::ManipulatorExperiment(), golden::ManipulatorDictCos());
  EXPECT_LE((dm.X1 - p.truth->A * dm.Z0 - p.truth->B * dm.U0).norm(), 1e-10);
}

TEST(DataMatrices, RepeatedColumnsAreFlagged) {
  const auto ds = Scalar({0.5, 0.5, 0.5});
  const Dictionary d(1, {BasisFunction::Monomial({2})});
  EXPECT_THROW(BuildDataMatrices(ds, d), std::runtime_error);
  const auto dm = BuildDataMatrices(ds, d, true);
  const auto diag = Diagnose(dm.Z0);
  EXPECT_FALSE(diag.full_row_rank);
  EXPECT_EQ(diag.rank, 1);
  EXPECT_NE(FormatDiagnostics("Z0", diag).find("rank deficient"), std::string::npos);
}

TEST(DataMatrices, ShortExperimentWarns) {
  const auto dm = BuildDataMatrices(Scalar({0.3}), Dictionary(1, {BasisFunction::Monomial({2})}), true);
  ASSERT_EQ(dm.warnings.size(), 1u);
  EXPECT_NE(dm.warnings.front().find("Z0 cannot have full row rank"), std::string::npos);
}

TEST(DataMatrices, DimensionMismatchThrows) {
  EXPECT_THROW(BuildDataMatrices(Scalar({1, 2}), Dictionary(2, {})), std::invalid_argument);
}

TEST(DataMatrices, ShiftSubtractsOperatingPoint) {
  const auto ds = golden::ManipulatorExperiment();
  const VectorXd xs = Eigen::Vector4d(1, 2, 3, 4);
  const auto sh = ShiftDataset(ds, xs, VectorXd::Constant(1, 0.5));
  EXPECT_TRUE((sh.X.col(3) + xs).isApprox(ds.X.col(3)));
  EXPECT_NEAR(sh.U(0, 2) + 0.5, ds.U(0, 2), 1e-15);
  EXPECT_EQ(sh.Xdot, ds.Xdot);
}

TEST(Annihilator, ConstantOnlyIsOnes) {
  const MatrixXd W = BuildAnnihilator(VectorXd::LinSpaced(9, 0, 0.4), {}, 1);
  EXPECT_EQ(W, MatrixXd::Ones(1, 9));
}

TEST(Annihilator, QuarterPeriod) {
  const MatrixXd W = BuildAnnihilator(Eigen::Vector3d(0, 0.25, 0.5), {2 * std::numbers::pi}, 0);
  MatrixXd want(2, 3);
  want << 1, 0, -1, 0, 1, 0;
  EXPECT_LE((W - want).norm(), 1e-12);
}

TEST(Annihilator, ExosystemSamplesLieInRowSpace) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.0, 10.0);
  VectorXd times(25);
  for (auto& t : times) t = U(rng);
  ExoModel exo;
  exo.frequencies = {0.7, 2.3};
  exo.num_constants = 1;
  exo.Gamma = MatrixXd::Random(3, exo.r());
  exo.w0 = VectorXd::Random(exo.r());
  const MatrixXd W = BuildAnnihilator(times, exo);
  EXPECT_EQ(W.rows(), 5);
  // Null space of W from a full SVD.
  Eigen::JacobiSVD<MatrixXd> svd(W, Eigen::ComputeFullV);
  const MatrixXd G = svd.matrixV().rightCols(W.cols() - W.rows());
  EXPECT_LE((W * G).norm(), 1e-10);
  MatrixXd D(3, times.size());
  for (Eigen::Index j = 0; j < times.size(); ++j) D.col(j) = exo.d(times(j));
  EXPECT_LE((D * G).norm(), 1e-10 * D.norm());
}

TEST(Annihilator, NoModelIsAnError) {
  try {
    BuildAnnihilator(VectorXd::LinSpaced(4, 0, 1), {}, 0);
    FAIL() << "expected an error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("no disturbance model"), std::string::npos);
  }
}

TEST(ExtendedData, CstrMatchesGroundTruth) {
  const Plant ext = AugmentInputIntegrator(Cstr());
  const auto dm = BuildDataMatrices(golden::CstrExperiment(), golden::CstrDict());
  EXPECT_EQ(dm.s(), 4);
  // Independent form of the extended model: rows of (4.25 x1 + x2 - 0.25 u - x1 u, -6.25 x1 - 2 x2, v).
  MatrixXd A(3, 4);
  A << 4.25, 1, -0.25, -1,
       -6.25, -2, 0, 0,
       0, 0, 0, 0;
  MatrixXd B(3, 1);
  B << 0, 0, 1;
  EXPECT_LE((dm.X1 - A * dm.Z0 - B * dm.U0).norm(), 1e-10);
  EXPECT_TRUE(ext.truth->A.isApprox(A));
}

TEST(ExtendedData, RestAtEquilibriumGivesZeroDerivatives) {
  ExperimentOptions eo;
  eo.T = 6;
  const auto ds =
      RunExperiment(AugmentInputIntegrator(Cstr()), InputSequence{MatrixXd::Zero(1, 6)}, VectorXd::Zero(3), eo);
  EXPECT_EQ(BuildDataMatrices(ds, golden::CstrDict(), true).X1.norm(), 0.0);
}

TEST(IntegralData, BottomRowIsRegulatedOutput) {
  const auto s = golden::IntegralCos();
  const auto dm = BuildIntegralMatrices(golden::IntegralExperiment(s), s.dict, 1);
  EXPECT_EQ(dm.n(), 5);
  EXPECT_EQ(dm.s(), 6);
  EXPECT_EQ(dm.X1.row(4), dm.X0.row(0));
  EXPECT_THROW(BuildIntegralMatrices(golden::ManipulatorExperiment(), s.dict, 1), std::invalid_argument);
}
