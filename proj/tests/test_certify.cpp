#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ddc/certify.hpp"
#include "ddc/pipelines.hpp"

using namespace ddc;
using namespace ddc::golden;

namespace {

const SynthesisResult& Example1Design() {
  static const SynthesisResult r = SynthContractive(BuildDataMatrices(ManipulatorExperiment(), ManipulatorDictCos()),
                                                    BoundJacobian(ManipulatorDictCos(), BoxSet::Full(4)));
  return r;
}

ClosedLoop Example1Loop(const Disturbance& d = nullptr) {
  const auto& r = Example1Design();
  return MakeClosedLoop(Manipulator(), StaticFeedback{r.dict, r.K, {}, {}}, d);
}

}  // namespace

TEST(Contraction, Example1DesignPassesOnBox) {
  const auto& r = Example1Design();
  ASSERT_TRUE(r.feasible()) << r.message;
  const auto data = CertifyContraction(r, BoxSet::Cube(4, 2.0));
  EXPECT_EQ(data.samples, 10000);
  EXPECT_TRUE(data.pass) << "worst " << data.worst;
  const auto truth = CertifyContractionTruth(r, Manipulator(), BoxSet::Cube(4, 2.0));
  EXPECT_TRUE(truth.pass) << "worst " << truth.worst;
  EXPECT_GE(data.c, 1.0);
}

TEST(Contraction, ZeroGainOnUnstablePlantFails) {
  MatrixXd A(2, 2), B(2, 1);
  A << 0.5, 1.0, 0.0, 0.3;
  B << 0, 1;
  const Plant p = FactoredPlant("linear-toy", Dictionary(2, {}), A, B);
  const auto cert = CertifyMetric(MatrixXd::Identity(2, 2), 0.0,
                                  TruthJacobian(p, StaticFeedback{Dictionary(2, {}), MatrixXd::Zero(1, 2), {}, {}}),
                                  BoxSet::Cube(2, 1.0));
  EXPECT_FALSE(cert.pass);
  EXPECT_GT(cert.worst, 0.0);
}

TEST(Contraction, LatinHypercubeCoversEveryStratum) {
  const BoxSet box({Interval{-1, 1}, Interval{2, 3}});
  const MatrixXd S = LatinHypercube(box, 50, 4);
  for (int k = 0; k < 2; ++k) {
    std::vector<int> hit(50, 0);
    for (int i = 0; i < 50; ++i) {
      const double u = (S(k, i) - box[k].lo) / (box[k].hi - box[k].lo);
      ASSERT_GE(u, 0.0);
      ASSERT_LT(u, 1.0);
      ++hit[static_cast<int>(u * 50)];
    }
    for (int h : hit) EXPECT_EQ(h, 1);
  }
  EXPECT_THROW(LatinHypercube(BoxSet::Full(1), 3, 1), std::invalid_argument);
}

TEST(Robust, NoisyDesignPassesSampledNoise) {
  const Plant p = ManipulatorMatchedDisturbance();
  const double delta = 0.01;
  const auto data = UniformExperiment(p, -0.1, 0.1, kSeed, FromNoise(BoundedNoise(p.q(), delta, kSeed + 2000)));
  const auto dm = BuildDataMatrices(data, ManipulatorDictCos());
  const NoiseModel noise = NoiseModel::Bounded(delta, dm.T(), p.E);
  const auto r = SynthNoisy(dm, BoundJacobian(ManipulatorDictCos(), BoxSet::Full(4)), noise);
  ASSERT_TRUE(r.feasible()) << r.message;
  CertifyOptions co;
  co.samples = 2000;
  const auto rc = CertifyRobust(r, dm, noise, BoxSet::Full(4), 10, co);
  EXPECT_TRUE(rc.pass) << rc.passed << "/" << rc.draws << " worst " << rc.worst;
  for (const auto& D : SampleNoiseMatrices(noise.Delta, dm.T(), 20, 1))
    EXPECT_LE(Eigen::JacobiSVD<MatrixXd>(D).singularValues()(0), noise.Delta.norm() + 1e-12);
}

TEST(Equilibrium, PublishedFirstDesign) {
  const auto eq = EquilibriumOfRepresentation(PublishedClosedLoopCos(), ManipulatorDictCos());
  EXPECT_TRUE(eq.converged) << eq.message;
  EXPECT_LE((eq.x - PublishedEquilibriumCos()).lpNorm<Eigen::Infinity>(), 5e-3) << eq.x.transpose();
}

TEST(Equilibrium, PublishedSecondDesign) {
  const auto eq = EquilibriumOfRepresentation(PublishedClosedLoopExtended(), ManipulatorDictExtended());
  EXPECT_TRUE(eq.converged) << eq.message;
  EXPECT_LE((eq.x - PublishedEquilibriumExtended()).lpNorm<Eigen::Infinity>(), 5e-3) << eq.x.transpose();
  EXPECT_TRUE(ManipulatorSetExtended(2.0).contains(eq.x));
}

TEST(Equilibrium, SurgeDesignSettlesAtOrigin) {
  const auto dm = BuildDataMatrices(SurgeExperiment(), SurgeDict1());
  const auto r = SynthContractive(dm, BoundJacobian(SurgeDict1(), SurgeSet1()));
  ASSERT_TRUE(r.feasible()) << r.message;
  const auto eq = FindEquilibrium(RepresentationField(r.M, r.N, r.dict), RepresentationJacobian(r.M, r.N, r.dict),
                                  Eigen::Vector2d(0.3, -0.2));
  EXPECT_TRUE(eq.converged);
  EXPECT_LE(eq.x.norm(), 1e-8);
}

TEST(Equilibrium, FallsBackToSimulationWithWarning) {
  const ClosedLoop cl = Example1Loop();
  const JacobianField broken = [](const VectorXd&) { return MatrixXd(MatrixXd::Zero(4, 4)); };
  EquilibriumOptions eo;
  eo.fallback_horizon = 300.0;
  const auto eq = FindEquilibrium(cl, broken, VectorXd::Zero(4), eo);
  EXPECT_NE(eq.message.find("warning"), std::string::npos);
  const auto ref = FindEquilibrium(cl, TruthJacobian(Manipulator(), StaticFeedback{Example1Design().dict,
                                                                                   Example1Design().K, {}, {}}),
                                   VectorXd::Zero(4));
  ASSERT_TRUE(ref.converged);
  EXPECT_LE((eq.x - ref.x).norm(), 1e-3);
}

TEST(Roa, PublishedSurgeDesigns) {
  const auto a = SurgeRoa(PublishedSurgeRoa1());
  EXPECT_GE(a.gamma, 95.0 * 0.95) << a.message;
  EXPECT_FALSE(a.box_limited);
  const auto b = SurgeRoa(PublishedSurgeRoa2());
  EXPECT_GE(b.gamma, 75.0 * 0.95) << b.message;
}

TEST(Roa, GloballyContractiveLinearLoopIsBoxLimited) {
  const VectorField F = [](const VectorXd& x) { return VectorXd(-x); };
  RoaOptions ro;
  ro.points = 101;
  const auto est = EstimateRoa(F, MatrixXd::Identity(2, 2), VectorXd::Zero(2), ro);
  EXPECT_TRUE(est.box_limited);
  EXPECT_EQ(est.gamma, ro.gamma_cap);
}

TEST(Roa, UnstableCenterShrinksToExclusionBall) {
  // Vdot > 0 everywhere, so no level beyond the excluded ball can be certified.
  const VectorField F = [](const VectorXd& x) { return VectorXd(x); };
  RoaOptions ro;
  ro.points = 101;
  const auto est = EstimateRoa(F, MatrixXd::Identity(2, 2), VectorXd::Zero(2), ro);
  EXPECT_FALSE(est.box_limited);
  EXPECT_LE(est.gamma, 4.0 * ro.r_excl * ro.r_excl);
}

TEST(Behavior, ConstantDisturbanceCollapsesToOnePoint) {
  const ExoModel exo = ExoModel::Constant(Eigen::Vector4d(0.1, 0.2, 0.3, 0.4));
  BehaviorOptions bo;
  bo.trials = 5;
  bo.horizon = 300.0;
  const auto x0s = RandomInitialStates(BoxSet::Cube(4, 1.0), 5, 2);
  const auto rep = CheckConvergentBehavior(Example1Loop(FromExo(exo)), x0s, bo);
  EXPECT_TRUE(rep.pass) << rep.message << " gap " << rep.pairwise_gap;
  const auto none = CheckConvergentBehavior(Example1Loop(), x0s, bo);
  EXPECT_TRUE(none.pass) << none.message << " gap " << none.pairwise_gap;
  EXPECT_GT((rep.endpoints.front() - none.endpoints.front()).norm(), 1e-3);
}

TEST(Behavior, KnownFrequencyDesignEntrains) {
  // x1' = x2 + 0.5 sin x1 + d1, x2' = u + d2, d of period 3 s.
  MatrixXd A(2, 3), B(2, 1);
  A << 0, 1, 0.5,
       0, 0, 0;
  B << 0, 1;
  Plant p = FactoredPlant("sine-toy", Dictionary(2, {BasisFunction::Sine(0)}), A, B);
  p.E = MatrixXd::Identity(2, 2);
  ExoModel exo;
  exo.frequencies = {2.0 * std::numbers::pi / 3.0};
  exo.Gamma = (MatrixXd(2, 2) << 0.2, -0.1, 0.05, 0.3).finished();
  exo.w0 = Eigen::Vector2d(1.0, 0.5);
  const auto dm = BuildDataMatrices(UniformExperiment(p, -1.0, 1.0, kSeed, FromExo(exo), 12), p.truth->dict);
  SynthesisOptions so;
  so.margin_mode = true;
  const auto r = SynthKnownFrequency(dm, BoundJacobian(dm.dict, BoxSet::Full(2)), BuildAnnihilator(dm.times, exo), so);
  ASSERT_TRUE(r.feasible()) << r.message;
  BehaviorOptions bo;
  bo.horizon = 120.0;
  bo.tail = 0.1;
  const auto cl = MakeClosedLoop(p, StaticFeedback{r.dict, r.K, {}, {}}, FromExo(exo));
  const auto rep = CheckConvergentBehavior(cl, RandomInitialStates(BoxSet::Cube(2, 1.0), 4, 3), bo, 3.0);
  EXPECT_TRUE(rep.pass) << rep.message << " gap " << rep.pairwise_gap << " periodic " << rep.periodic_gap;
}

TEST(Tracking, PublishedIntegralSetups) {
  for (const auto& s : {IntegralCos(), IntegralCosSin()}) {
    const auto dm = BuildIntegralMatrices(IntegralExperiment(s), s.dict, 1);
    const auto r = SynthIntegral(dm, s.bound, 1, {}, s.out.C);
    ASSERT_TRUE(r.feasible()) << r.message;
    std::vector<VectorXd> x0s;
    for (const auto& x : RandomInitialStates(BoxSet::Cube(4, 1.0), 3, 11)) {
      VectorXd z = VectorXd::Zero(5);
      z.head(4) = x;
      x0s.push_back(z);
    }
    BehaviorOptions bo;
    bo.horizon = kIntegralHorizon;
    bo.tol = 1e-3;
    const auto tr = CheckTracking(IntegralClosedLoop(s, r), s.out.C, s.r, x0s, bo);
    EXPECT_TRUE(tr.pass) << tr.message << " worst " << tr.worst_tail_error;
  }
}

TEST(Tracking, ZeroReferenceAtRestStaysAtRest) {
  // Surge with y = x1: the origin is an equilibrium of the augmented loop when r = 0 and d = 0.
  IntegralSetup s;
  s.plant = Surge();
  s.out.C = MatrixXd::Zero(1, 2);
  s.out.C(0, 0) = 1.0;
  s.r = VectorXd::Zero(1);
  s.d = VectorXd::Zero(2);
  s.dict = SurgeDict1();
  s.bound = BoundJacobian(SurgeDict1(), SurgeSet1());
  const auto dm = BuildIntegralMatrices(IntegralExperiment(s), s.dict, 1);
  const auto r = SynthIntegral(dm, s.bound, 1, {}, s.out.C);
  ASSERT_TRUE(r.feasible()) << r.message;
  BehaviorOptions bo;
  bo.horizon = 20.0;
  bo.tail = 1.0;
  bo.tol = 0.0;
  const auto tr = CheckTracking(IntegralClosedLoop(s, r), s.out.C, s.r, {VectorXd::Zero(3)}, bo);
  EXPECT_TRUE(tr.pass);
  EXPECT_EQ(tr.worst_tail_error, 0.0);
}
