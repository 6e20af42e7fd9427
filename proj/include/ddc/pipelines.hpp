#pragma once

/// @file pipelines.hpp
/// @brief Worked studies with pinned seeds: experiment setups shared by the
/// CLI and the tests, and end-to-end golden runs that compare certified
/// quantities with published reference values.

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddc/certify.hpp"
#include "ddc/datamat.hpp"
#include "ddc/dictionary.hpp"
#include "ddc/io.hpp"
#include "ddc/plant.hpp"
#include "ddc/simulate.hpp"
#include "ddc/svg.hpp"
#include "ddc/synthesis.hpp"

namespace ddc::golden {

inline constexpr unsigned kSeed = 7;

inline VectorXd UniformVector(int n, double lo, double hi, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(lo, hi);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = U(rng);
  return v;
}

/// T samples with inputs and initial state uniform in [lo, hi].
inline ExperimentDataset UniformExperiment(const Plant& plant, double lo, double hi, unsigned seed,
                                           const Disturbance& d = nullptr, int T = 10) {
  ExperimentOptions eo;
  eo.T = T;
  return RunExperiment(plant, UniformInput{lo, hi, seed}, UniformVector(plant.n, lo, hi, seed + 1000), eo, d);
}

// Manipulator ---------------------------------------------------------------

inline Dictionary ManipulatorDictCos() { return Dictionary(4, {BasisFunction::Cosine(0)}); }
inline Dictionary ManipulatorDictExtended() {
  return Dictionary(4, {BasisFunction::Cosine(0), BasisFunction::Monomial({2}), BasisFunction::Sine(1)});
}
inline BoxSet ManipulatorSetExtended(double w) {
  BoxSet b = BoxSet::Full(4);
  b[0] = Interval{-w, w};
  return b;
}
inline ExperimentDataset ManipulatorExperiment(unsigned seed = kSeed, const Disturbance& d = nullptr) {
  return UniformExperiment(Manipulator(), -0.1, 0.1, seed, d);
}

/// Closed-loop matrices published for the two manipulator designs.
inline MatrixXd PublishedClosedLoopCos() {
  MatrixXd A(4, 5);
  A << 0, 1, 0, 0, 0, -2, 0, 1, 0, -1.96, 0, 0, 0, 1, 0, -24.8923, -102.1423, -53.6282, -12.2658, 0.0982;
  return A;
}
inline MatrixXd PublishedClosedLoopExtended() {
  MatrixXd A(4, 7);
  A << 0, 1, 0, 0, 0, 0, 0, -2, 0, 1, 0, -1.96, 0, 0, 0, 0, 0, 1, 0, 0, 0, -1069.1743, -1203.9634, -319.1524,
      -35.2523, 0.2666, -0.0001, 0;
  return A;
}
inline VectorXd PublishedEquilibriumCos() { return (VectorXd(4) << -0.6382, 0, 0.2977, 0).finished(); }
inline VectorXd PublishedEquilibriumExtended() { return (VectorXd(4) << -0.3447, 0, 1.1554, 0).finished(); }

/// Equilibrium of the data representation x' = A Z(x), Newton from 0.
inline Equilibrium EquilibriumOfRepresentation(const MatrixXd& A, const Dictionary& dict) {
  const int n = dict.n();
  const MatrixXd M = A.leftCols(n), N = A.rightCols(A.cols() - n);
  return FindEquilibrium(RepresentationField(M, N, dict), RepresentationJacobian(M, N, dict), VectorXd::Zero(n));
}

// Linearisation baseline around a known operating point.

inline constexpr double kTaylorU = 0.1845;
inline MatrixXd TaylorDelta() {
  MatrixXd D = MatrixXd::Zero(4, 4);
  D(1, 1) = 0.0197;
  return D;
}
/// Plant equilibrium for u = 0.1845 closest to the published operating point.
inline VectorXd TaylorOperatingPoint() {
  const Plant p = Manipulator();
  const VectorXd u = VectorXd::Constant(1, kTaylorU);
  VectorField F = [&](const VectorXd& x) { return p.f(x, u); };
  JacobianField J = [&](const VectorXd& x) { return MatrixXd(p.truth->A * p.truth->dict.Jacobian(x)); };
  return FindEquilibrium(F, J, PublishedEquilibriumExtended()).x;
}
/// Experiment near the operating point: x0 - x* and u - u* in [-0.05, 0.05],
/// sampled every 0.2 s.
inline ExperimentDataset TaylorExperiment(unsigned seed = kSeed) {
  const Plant p = Manipulator();
  const VectorXd xs = TaylorOperatingPoint();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-0.05, 0.05);
  MatrixXd Useq(1, 10);
  for (int k = 0; k < 10; ++k) Useq(0, k) = kTaylorU + U(rng);
  ExperimentOptions eo;
  eo.dt = 0.2;
  return RunExperiment(p, InputSequence{Useq}, xs + UniformVector(4, -0.05, 0.05, seed + 1000), eo);
}

/// sqrt(T) max_i delta(x~_i) with delta(x~) = 4|cos x~1 - 1| + 2|sin x~1 - x~1|,
/// the remainder over-approximation evaluated on shifted data.
inline double TaylorRemainderScale(const ExperimentDataset& shifted) {
  double c = 0.0;
  for (int k = 0; k < shifted.T(); ++k) {
    const double e = shifted.X(0, k);
    c = std::max(c, 4.0 * std::abs(std::cos(e) - 1.0) + 2.0 * std::abs(std::sin(e) - e));
  }
  return std::sqrt(static_cast<double>(shifted.T())) * c;
}

// Surge ---------------------------------------------------------------------

inline Dictionary SurgeDict1() { return Dictionary(2, {BasisFunction::Monomial({2}), BasisFunction::Monomial({3})}); }
inline Dictionary SurgeDict2() {
  return Dictionary(2, {BasisFunction::Monomial({2}), BasisFunction::Monomial({3}), BasisFunction::Monomial({0, 2}),
                        BasisFunction::Monomial({0, 3})});
}
inline BoxSet SurgeSet1() { return BoxSet({Interval{-1, 1}, Interval{}}); }
inline BoxSet SurgeSet2() { return BoxSet({Interval{-1, 1}, Interval{-0.1, 0.1}}); }
inline ExperimentDataset SurgeExperiment(unsigned seed = kSeed) { return UniformExperiment(Surge(), -1.0, 1.0, seed); }

struct PublishedRoaCase {
  Dictionary dict;
  MatrixXd K;
  MatrixXd Pinv;
  double gamma;
};
inline PublishedRoaCase PublishedSurgeRoa1() {
  MatrixXd K(1, 4), Pi(2, 2);
  K << 472.8008, -26.7351, 0.9875, 0.1960;
  Pi << 7.1505, -0.3761, -0.3761, 0.0335;
  return {SurgeDict1(), K, Pi, 95.0};
}
inline PublishedRoaCase PublishedSurgeRoa2() {
  MatrixXd K(1, 6), Pi(2, 2);
  K << 418.8709, -37.8660, 0.5014, 0.3406, -0.0002, 0.0001;
  Pi << 18.8524, -1.6006, -1.6006, 0.1770;
  return {SurgeDict2(), K, Pi, 75.0};
}

/// Grid ROA of the true surge loop under a fixed published design.
inline RoaEstimate SurgeRoa(const PublishedRoaCase& c, const RoaOptions& opt = {}) {
  const ClosedLoop cl = MakeClosedLoop(Surge(), StaticFeedback{c.dict, c.K, {}, {}});
  VectorField F = [cl](const VectorXd& x) { return cl.rhs(0.0, x); };
  return EstimateRoa(F, c.Pinv, VectorXd::Zero(2), opt);
}

// CSTR ----------------------------------------------------------------------

inline Dictionary CstrDict() { return Dictionary(3, {BasisFunction::Product(0, 2)}); }
inline BoxSet CstrSet(double w) { return BoxSet({Interval{-w, w}, Interval{}, Interval{-w, w}}); }
/// Bound used in the worked study: diag(2w, 0, 2w).
inline JacobianBound CstrBound(double w) {
  MatrixXd R = MatrixXd::Zero(3, 3);
  R(0, 0) = R(2, 2) = 2.0 * w;
  return {R};
}
inline ExperimentDataset CstrExperiment(unsigned seed = kSeed) {
  return UniformExperiment(AugmentInputIntegrator(Cstr()), -0.1, 0.1, seed);
}

// Integral control ----------------------------------------------------------

struct IntegralSetup {
  Plant plant;
  OutputMap out;
  VectorXd r;
  VectorXd d;
  Dictionary dict;  // on x
  JacobianBound bound;
};
inline IntegralSetup IntegralCos() {
  MatrixXd C = MatrixXd::Zero(1, 4);
  C(0, 0) = 1.0;
  MatrixXd R = MatrixXd::Zero(4, 4);
  R(0, 0) = 1.0;
  return {Manipulator(), {C}, VectorXd::Constant(1, std::numbers::pi / 3), (VectorXd(4) << 0.1, 0.2, 0.3, 0.4).finished(),
          ManipulatorDictCos(), {R}};
}
inline IntegralSetup IntegralCosSin() {
  IntegralSetup s = IntegralCos();
  s.dict = Dictionary(4, {BasisFunction::Cosine(0), BasisFunction::Sine(1)});
  s.bound.R_Q(1, 1) = 1.0;
  return s;
}
/// Experiment on (x, xi) with xi' = y and the constant disturbance acting.
inline ExperimentDataset IntegralExperiment(const IntegralSetup& s, unsigned seed = kSeed) {
  const Plant aug = AugmentOutputIntegrator(s.plant, s.out, VectorXd::Zero(s.out.p()), s.d);
  return UniformExperiment(aug, -0.1, 0.1, seed);
}
/// Tracking horizon [s]. The integrator mode of the feasibility-mode designs
/// decays with a time constant of roughly 40 s.
inline constexpr double kIntegralHorizon = 400.0;

/// Closed loop of the integral design tracking s.r under disturbance s.d.
inline ClosedLoop IntegralClosedLoop(const IntegralSetup& s, const SynthesisResult& r) {
  const Plant aug = AugmentOutputIntegrator(s.plant, s.out, s.r, s.d);
  return MakeClosedLoop(aug, StaticFeedback{r.dict, r.K, {}, {}});
}

// Noise and disturbances ------------------------------------------------------

/// Manipulator with an unknown input-matched disturbance, E = e4.
inline Plant ManipulatorMatchedDisturbance() {
  Plant p = Manipulator();
  p.E = MatrixXd::Zero(4, 1);
  p.E(3, 0) = 1.0;
  return p;
}

// Golden runs -----------------------------------------------------------------

struct Row {
  std::string quantity;
  double value = 0.0;
  std::string reference;
  bool pass = false;
};

struct Outcome {
  std::string name;
  std::vector<Row> rows;
  nlohmann::json report = nlohmann::json::object();
  /// Relative file name to content.
  std::map<std::string, std::string> files;

  bool ok() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return true;
  }
};

inline nlohmann::json ResultSummary(const SynthesisResult& r) {
  nlohmann::json j = r.ToJson();
  j["K_norm"] = r.K.size() ? r.K.norm() : 0.0;
  return j;
}

inline Outcome RunManipulator() {
  Outcome o{"manipulator", {}, {}, {}};
  const auto ds = ManipulatorExperiment();
  const SynthesisOptions so;
  {
    const Dictionary dict = ManipulatorDictCos();
    const auto r = SynthContractive(BuildDataMatrices(ds, dict), BoundJacobian(dict, BoxSet::Full(4)), so);
    o.rows.push_back({"Q = cos x1 feasible", r.feasible() ? 1.0 : 0.0, "feasible", r.feasible()});
    o.report["cos"] = ResultSummary(r);
    if (r.feasible()) {
      const auto cert = CertifyContraction(r, BoxSet::Full(4));
      o.rows.push_back({"Q = cos x1 worst sampled lambda_max", cert.worst, "<= 1e-7", cert.pass});
      o.report["cos"]["certificate"] = cert.ToJson();
    }
    const auto eq = EquilibriumOfRepresentation(PublishedClosedLoopCos(), dict);
    const double err = (eq.x - PublishedEquilibriumCos()).lpNorm<Eigen::Infinity>();
    o.rows.push_back({"x* of published loop, max error", err, "(-0.6382, 0, 0.2977, 0) within 5e-3", err <= 5e-3});
  }
  {
    const Dictionary dict = ManipulatorDictExtended();
    const auto r = SynthContractive(BuildDataMatrices(ds, dict), BoundJacobian(dict, ManipulatorSetExtended(1.0)), so);
    o.rows.push_back({"Q = (cos x1, x1^2, sin x2), w = 1 feasible", r.feasible() ? 1.0 : 0.0, "feasible", r.feasible()});
    o.report["extended"] = ResultSummary(r);
    if (r.feasible()) {
      const auto cert = CertifyContraction(r, ManipulatorSetExtended(1.0));
      o.rows.push_back({"extended dictionary worst sampled lambda_max", cert.worst, "<= 1e-7", cert.pass});
    }
    const auto eq = EquilibriumOfRepresentation(PublishedClosedLoopExtended(), dict);
    const double err = (eq.x - PublishedEquilibriumExtended()).lpNorm<Eigen::Infinity>();
    o.rows.push_back({"x* of published loop, max error", err, "(-0.3447, 0, 1.1554, 0) within 5e-3", err <= 5e-3});
  }
  return o;
}

inline Outcome RunManipulatorSweep(const std::vector<double>& ws = {1, 2, 5, 10, 20, 50, 100}) {
  Outcome o{"manipulator-sweep", {}, {}, {}};
  const auto ds = ManipulatorExperiment();
  const Dictionary dict = ManipulatorDictExtended();
  const auto dm = BuildDataMatrices(ds, dict);
  svg::Series gain{"|K_lin|", {}, {}};
  nlohmann::json table = nlohmann::json::array();
  double prev = 0.0;
  bool monotone = true;
  for (double w : ws) {
    const auto r = SynthContractive(dm, BoundJacobian(dict, ManipulatorSetExtended(w)));
    const double g = r.feasible() ? r.K.leftCols(4).norm() : 0.0;
    o.rows.push_back({"w = " + svg::internal::Fmt(w) + " feasible", r.feasible() ? 1.0 : 0.0, "feasible", r.feasible()});
    if (r.feasible()) {
      gain.x.push_back(std::log10(w));
      gain.y.push_back(std::log10(g));
    }
    monotone = monotone && g >= prev;
    prev = g;
    table.push_back({{"w", w}, {"feasible", r.feasible()}, {"linear_gain_norm", g}, {"margin", r.report.margin}});
  }
  o.rows.push_back({"linear gain magnitude non-decreasing in w", monotone ? 1.0 : 0.0, "increasing", monotone});
  o.report["sweep"] = table;
  o.files["gain_vs_w.svg"] = svg::LineChart({gain}, "linear gain vs set width", "log10 w", "log10 |K_lin|");
  return o;
}

inline Outcome RunSurge() {
  Outcome o{"surge", {}, {}, {}};
  const auto ds = SurgeExperiment();
  const std::vector<std::pair<Dictionary, BoxSet>> cases = {{SurgeDict1(), SurgeSet1()}, {SurgeDict2(), SurgeSet2()}};
  int k = 1;
  for (const auto& [dict, set] : cases) {
    const auto r = SynthContractive(BuildDataMatrices(ds, dict), BoundJacobian(dict, set));
    const std::string tag = "dictionary " + std::to_string(k);
    o.rows.push_back({tag + " feasible", r.feasible() ? 1.0 : 0.0, "feasible", r.feasible()});
    o.report[tag] = ResultSummary(r);
    if (r.feasible()) {
      const auto cert = CertifyContraction(r, set);
      o.rows.push_back({tag + " worst sampled lambda_max", cert.worst, "<= 1e-7", cert.pass});
    }
    ++k;
  }
  return o;
}

inline std::string SurgeRoaSvg(const PublishedRoaCase& c, const RoaEstimate& est, const std::string& title) {
  const ClosedLoop cl = MakeClosedLoop(Surge(), StaticFeedback{c.dict, c.K, {}, {}});
  const Eigen::Matrix2d Pi = c.Pinv;
  auto dec = [&](double a, double b) {
    const Eigen::Vector2d x(a, b);
    return 2.0 * x.dot(Pi * Eigen::Vector2d(cl.rhs(0.0, x))) < 0.0;
  };
  const double hx = 1.3 * est.half_width(0), hy = 1.3 * est.half_width(1);
  return svg::RoaPlot(dec, Pi, Eigen::Vector2d::Zero(), est.gamma, -hx, hx, -hy, hy, title);
}

inline Outcome RunSurgeRoa() {
  Outcome o{"surge-roa", {}, {}, {}};
  const std::vector<std::pair<PublishedRoaCase, double>> cases = {{PublishedSurgeRoa1(), 90.0}, {PublishedSurgeRoa2(), 71.0}};
  int k = 1;
  for (const auto& [c, threshold] : cases) {
    const auto est = SurgeRoa(c);
    o.rows.push_back({"design " + std::to_string(k) + " certified gamma", est.gamma,
                      ">= " + svg::internal::Fmt(threshold) + " (published " + svg::internal::Fmt(c.gamma) + ")",
                      est.gamma >= threshold});
    o.report["design" + std::to_string(k)] = est.ToJson();
    o.files["surge_roa_" + std::to_string(k) + ".svg"] =
        SurgeRoaSvg(c, est, "surge design " + std::to_string(k) + ", gamma = " + svg::internal::Fmt(est.gamma));
    ++k;
  }
  return o;
}

inline Outcome RunCstrExtended() {
  Outcome o{"cstr-extended", {}, {}, {}};
  const auto ds = CstrExperiment();
  const Dictionary dict = CstrDict();
  const auto dm = BuildDataMatrices(ds, dict);
  for (double w : {0.05, 0.1}) {
    const auto r = SynthExtended(dm, CstrBound(w));
    const std::string tag = "w = " + svg::internal::Fmt(w);
    o.rows.push_back({tag + " feasible", r.feasible() ? 1.0 : 0.0, "feasible", r.feasible()});
    o.report[tag] = ResultSummary(r);
    if (r.feasible()) {
      const auto cert = CertifyContraction(r, CstrSet(w));
      o.rows.push_back({tag + " worst sampled lambda_max", cert.worst, "<= 1e-7", cert.pass});
      o.rows.push_back({tag + " linear gain magnitude", r.K.leftCols(3).cwiseAbs().maxCoeff(), "reported", true});
    }
  }
  return o;
}

inline Outcome RunIntegralTracking() {
  Outcome o{"integral-tracking", {}, {}, {}};
  const std::vector<std::pair<std::string, IntegralSetup>> cases = {{"cos", IntegralCos()},
                                                                    {"cos-sin", IntegralCosSin()}};
  for (const auto& [tag, s] : cases) {
    const auto ds = IntegralExperiment(s);
    const auto dm = BuildIntegralMatrices(ds, s.dict, s.out.p());
    const auto r = SynthIntegral(dm, s.bound, s.out.p(), {}, s.out.C);
    o.rows.push_back({tag + " feasible", r.feasible() ? 1.0 : 0.0, "feasible", r.feasible()});
    o.report[tag] = ResultSummary(r);
    if (!r.feasible()) continue;
    const ClosedLoop cl = IntegralClosedLoop(s, r);
    std::vector<VectorXd> x0s;
    for (const auto& x : RandomInitialStates(BoxSet::Cube(4, 1.0), 10, 11)) {
      VectorXd z = VectorXd::Zero(5);
      z.head(4) = x;
      x0s.push_back(z);
    }
    BehaviorOptions bo;
    bo.horizon = kIntegralHorizon;
    bo.tol = 1e-3;
    const auto tr = CheckTracking(cl, s.out.C, s.r, x0s, bo);
    o.rows.push_back({tag + " worst tail |e|", tr.worst_tail_error, "<= 1e-3 on the last 10% of " + svg::internal::Fmt(kIntegralHorizon) + " s", tr.pass});
    std::vector<svg::Series> xs;
    for (int i = 0; i < 4 && !tr.trajectories.empty(); ++i) {
      svg::Series se{"x" + std::to_string(i + 1), tr.trajectories.front().t, {}};
      for (int k = 0; k < tr.trajectories.front().size(); ++k) se.y.push_back(tr.trajectories.front().X(i, k));
      xs.push_back(se);
    }
    o.files["tracking_" + tag + ".svg"] = svg::LineChart(xs, "integral control, dictionary " + tag, "t [s]", "state");
    if (!tr.trajectories.empty()) {
      const auto path = std::filesystem::temp_directory_path() / ("ddc_tracking_" + tag + ".csv");
      io::WriteTrajectory(path, tr.trajectories.front(), cl, s.out.C, s.r);
      o.files["tracking_" + tag + ".csv"] = io::ReadText(path);
      std::filesystem::remove(path);
    }
  }
  return o;
}

inline Outcome RunTaylorRemainder() {
  Outcome o{"taylor-remainder", {}, {}, {}};
  const VectorXd xs = TaylorOperatingPoint();
  const VectorXd us = VectorXd::Constant(1, kTaylorU);
  const auto ds = ShiftDataset(TaylorExperiment(), xs, us);
  const Dictionary lin(4, {});
  const auto dm = BuildDataMatrices(ds, lin);
  const auto r = SynthTaylorRemainder(dm, TaylorDelta());
  const double scale = TaylorRemainderScale(ds);
  o.rows.push_back({"sqrt(T) max delta over shifted data", scale, "<= 0.0197 (covered by Delta)", scale <= 0.0197});
  o.rows.push_back({"operating point error vs published x*", (xs - PublishedEquilibriumExtended()).lpNorm<Eigen::Infinity>(),
                    "<= 5e-3", (xs - PublishedEquilibriumExtended()).lpNorm<Eigen::Infinity>() <= 5e-3});
  o.rows.push_back({"feasible with Delta = diag(0, 0.0197, 0, 0)", r.feasible() ? 1.0 : 0.0, "feasible", r.feasible()});
  o.report["result"] = ResultSummary(r);
  if (!r.feasible()) return o;
  const ClosedLoop cl = MakeClosedLoop(Manipulator(), StaticFeedback{lin, r.K.leftCols(4), xs, us});
  double worst = 0.0;
  for (const auto& dx : RandomInitialStates(BoxSet::Cube(4, 0.05), 10, 13)) {
    SimulationOptions so;
    so.t_end = 60.0;
    worst = std::max(worst, (Simulate(cl, xs + dx, so).final_state() - xs).norm());
  }
  o.rows.push_back({"max |x(60) - x*| from x* + [-0.05, 0.05]^4", worst, "<= 1e-4", worst <= 1e-4});
  return o;
}

using Runner = std::function<Outcome()>;

inline const std::map<std::string, Runner>& Registry() {
  static const std::map<std::string, Runner> reg = {
      {"manipulator", [] { return RunManipulator(); }},
      {"manipulator-sweep", [] { return RunManipulatorSweep(); }},
      {"surge", [] { return RunSurge(); }},
      {"surge-roa", [] { return RunSurgeRoa(); }},
      {"cstr-extended", [] { return RunCstrExtended(); }},
      {"integral-tracking", [] { return RunIntegralTracking(); }},
      {"taylor-remainder", [] { return RunTaylorRemainder(); }},
  };
  return reg;
}

}  // namespace ddc::golden
