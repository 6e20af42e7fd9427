// End-to-end acceptance run: one PASS/FAIL line per criterion, exit status 1
// when any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ddc/certify.hpp"
#include "ddc/pipelines.hpp"

using namespace ddc;
using namespace ddc::golden;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string Fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Design {
  std::string label;
  SynthesisResult result;
  BoxSet set;
};

/// Feasible designs from criteria 1 to 3, certified again under criterion 4.
std::vector<Design> g_designs;

SynthesisResult Criterion1Design() {
  static const SynthesisResult r = [] {
    const Dictionary dict = ManipulatorDictCos();
    return SynthContractive(BuildDataMatrices(ManipulatorExperiment(), dict), BoundJacobian(dict, BoxSet::Full(4)));
  }();
  return r;
}

Verdict C1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = Criterion1Design();
  const double s = Seconds(t0);
  if (r.feasible()) g_designs.push_back({"manipulator cos x1", r, BoxSet::Full(4)});
  return {r.feasible() && s <= 10.0, Fmt("status %s, alpha %.3g, beta %.3g, %.2f s (limit 10 s)",
                                         lmi::ToString(r.status), r.alpha, r.beta, s)};
}

Verdict C2() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto dm = BuildDataMatrices(ManipulatorExperiment(), ManipulatorDictExtended());
  const std::vector<double> ws = {1, 2, 5, 10, 20, 30, 50, 70, 100};
  bool all = true, monotone = true;
  double prev = 0.0;
  std::ostringstream gains;
  for (double w : ws) {
    const auto r = SynthContractive(dm, BoundJacobian(dm.dict, ManipulatorSetExtended(w)));
    all = all && r.feasible();
    const double g = r.feasible() ? r.K.leftCols(4).norm() : 0.0;
    monotone = monotone && g >= prev;
    prev = g;
    gains << (gains.tellp() ? ", " : "") << "w=" << w << ":" << Fmt("%.3g", g);
    if (r.feasible()) g_designs.push_back({"manipulator extended w=" + Fmt("%g", w), r, ManipulatorSetExtended(w)});
  }
  const double s = Seconds(t0);
  return {all && monotone && s <= 300.0,
          Fmt("feasible for all w: %s, |K_lin| non-decreasing: %s, %.2f s (limit 300 s); |K_lin| ",
              all ? "yes" : "no", monotone ? "yes" : "no", s) +
              gains.str()};
}

Verdict C3() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto surge = SurgeExperiment();
  const auto cstr = CstrExperiment();
  std::vector<std::string> bad;
  auto record = [&](const std::string& label, const SynthesisResult& r, const BoxSet& set) {
    if (r.feasible())
      g_designs.push_back({label, r, set});
    else
      bad.push_back(label);
  };
  record("surge dictionary 1",
         SynthContractive(BuildDataMatrices(surge, SurgeDict1()), BoundJacobian(SurgeDict1(), SurgeSet1())),
         SurgeSet1());
  record("surge dictionary 2",
         SynthContractive(BuildDataMatrices(surge, SurgeDict2()), BoundJacobian(SurgeDict2(), SurgeSet2())),
         SurgeSet2());
  const auto dm = BuildDataMatrices(cstr, CstrDict());
  for (double w : {0.05, 0.1}) record("cstr extended w=" + Fmt("%g", w), SynthExtended(dm, CstrBound(w)), CstrSet(w));
  const double s = Seconds(t0);
  std::string miss;
  for (const auto& b : bad) miss += " " + b;
  return {bad.empty() && s <= 30.0,
          Fmt("4 programs, %zu infeasible%s, %.2f s (limit 30 s)", bad.size(), miss.c_str(), s)};
}

Verdict C4() {
  if (g_designs.empty()) return {false, "no feasible designs from criteria 1-3"};
  double worst = -1e300;
  std::string worst_label, failed;
  int passed = 0;
  for (const auto& d : g_designs) {
    const auto cert = CertifyContraction(d.result, d.set);
    if (cert.worst > worst) worst = cert.worst, worst_label = d.label;
    if (cert.pass)
      ++passed;
    else
      failed += " [" + d.label + Fmt(": %.3g", cert.worst) + "]";
  }
  return {passed == static_cast<int>(g_designs.size()),
          Fmt("%d/%zu designs certified with 10000 samples at tol 1e-7; largest lambda_max %.3g (%s)", passed,
              g_designs.size(), worst, worst_label.c_str()) +
              failed};
}

Verdict C5() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 4);
  int feasible = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4;
    const int m = 1 + (trial / 4) % 2;
    std::vector<BasisFunction> terms;
    const int want = 1 + trial % (8 - n > 4 ? 4 : 8 - n);
    for (int tries = 0; static_cast<int>(terms.size()) < want && tries < 50; ++tries) {
      const int i = static_cast<int>(rng() % n), j = static_cast<int>(rng() % n);
      BasisFunction f = BasisFunction::Sine(i);
      switch (pick(rng)) {
        case 0: f = BasisFunction::Sine(i); break;
        case 1: f = BasisFunction::Cosine(i); break;
        case 2:
          if (i == j) continue;
          f = BasisFunction::Product(std::min(i, j), std::max(i, j));
          break;
        case 3: {
          std::vector<int> e(i + 1, 0);
          e[i] = 2;
          f = BasisFunction::Monomial(e);
          break;
        }
        default: {
          std::vector<int> e(i + 1, 0);
          e[i] = 3;
          f = BasisFunction::Monomial(e);
        }
      }
      bool dup = false;
      for (const auto& g : terms) dup = dup || g == f;
      if (!dup) terms.push_back(f);
    }
    const Dictionary dict(n, terms);
    MatrixXd A(n, dict.s()), B(n, m);
    for (int i = 0; i < A.size(); ++i) A.data()[i] = N(rng);
    for (int i = 0; i < B.size(); ++i) B.data()[i] = N(rng);
    const Plant plant = FactoredPlant("random-" + std::to_string(trial), dict, A, B);
    ExperimentDataset ds;
    DataMatrices dm;
    try {
      ds = UniformExperiment(plant, -0.5, 0.5, 100 + trial);
      dm = BuildDataMatrices(ds, dict);
    } catch (const std::exception&) {
      continue;  // uninformative data: no design to check
    }
    const auto r = SynthContractive(dm, BoundJacobian(dict, BoxSet::Cube(n, 1.0)));
    if (!r.feasible()) continue;
    ++feasible;
    worst = std::max(worst, ((A + B * r.K) - dm.X1 * r.G()).norm());
  }
  return {feasible >= 10 && worst <= 1e-6,
          Fmt("%d/50 random plants feasible, max |(A+BK) - X1 G|_F = %.3g (limit 1e-6)", feasible, worst)};
}

Verdict C6() {
  const auto r = Criterion1Design();
  if (!r.feasible()) return {false, "criterion-1 design infeasible"};
  const ClosedLoop cl = MakeClosedLoop(Manipulator(), StaticFeedback{r.dict, r.K, {}, {}});
  BehaviorOptions bo;
  const auto x0s = RandomInitialStates(BoxSet::Cube(4, 1.0), 10, bo.seed);
  const auto rep = CheckConvergentBehavior(cl, x0s, bo);
  const auto eq = FindEquilibrium(cl, TruthJacobian(Manipulator(), StaticFeedback{r.dict, r.K, {}, {}}),
                                  VectorXd::Zero(4));
  double dist = 0.0;
  for (const auto& e : rep.endpoints) dist = std::max(dist, (e - eq.x).lpNorm<Eigen::Infinity>());
  std::ostringstream xs;
  xs << eq.x.transpose();
  return {rep.pass && eq.converged && dist <= 1e-5,
          Fmt("pairwise gap at t=%.0f: %.3g (limit 1e-4), equilibrium (%s), max |x(T) - x*| %.3g (limit 1e-5)",
              bo.horizon, rep.pairwise_gap, xs.str().c_str(), dist)};
}

Verdict C7() {
  bool ok = true;
  std::string detail;
  const std::vector<std::pair<PublishedRoaCase, double>> cases = {{PublishedSurgeRoa1(), 90.0}, {PublishedSurgeRoa2(), 71.0}};
  int k = 1;
  for (const auto& [c, threshold] : cases) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto est = SurgeRoa(c);
    const double s = Seconds(t0);
    ok = ok && est.gamma >= threshold && s <= 60.0;
    detail += Fmt("%sdesign %d gamma %.2f (>= %.0f, published %.0f) in %.1f s", k > 1 ? "; " : "", k, est.gamma,
                  threshold, c.gamma, s);
    ++k;
  }
  return {ok, detail};
}

Verdict C8() {
  const auto e1 = EquilibriumOfRepresentation(PublishedClosedLoopCos(), ManipulatorDictCos());
  const auto e2 = EquilibriumOfRepresentation(PublishedClosedLoopExtended(), ManipulatorDictExtended());
  const double d1 = (e1.x - PublishedEquilibriumCos()).lpNorm<Eigen::Infinity>();
  const double d2 = (e2.x - PublishedEquilibriumExtended()).lpNorm<Eigen::Infinity>();
  std::ostringstream a, b;
  a << e1.x.transpose();
  b << e2.x.transpose();
  return {e1.converged && e2.converged && d1 <= 5e-3 && d2 <= 5e-3,
          Fmt("(%s) error %.2g; (%s) error %.2g (limit 5e-3)", a.str().c_str(), d1, b.str().c_str(), d2)};
}

Verdict C9() {
  const Plant p = Manipulator();
  const Dictionary dict = ManipulatorDictCos();
  double worst = 0.0;
  int feasible = 0;
  const int trials = 5;
  for (int k = 0; k < trials; ++k) {
    const VectorXd d = UniformVector(4, -1.0, 1.0, 900 + k);
    const auto ds = ManipulatorExperiment(kSeed, FromExo(ExoModel::Constant(d)));
    const auto dm = BuildDataMatrices(ds, dict);
    const auto r = SynthKnownFrequency(dm, BoundJacobian(dict, BoxSet::Full(4)), BuildAnnihilator(dm.times, {}, 1));
    if (!r.feasible()) continue;
    ++feasible;
    worst = std::max(worst, ((p.truth->A + p.truth->B * r.K) - dm.X1 * r.G()).norm());
  }
  return {feasible == trials && worst <= 1e-6,
          Fmt("%d/%d constant disturbances in [-1,1]^4 feasible, max |(A+BK) - X1 G|_F = %.3g (limit 1e-6)",
              feasible, trials, worst)};
}

Verdict C10() {
  const Plant p = ManipulatorMatchedDisturbance();
  const double delta = 0.01;
  const Dictionary dict = ManipulatorDictCos();
  const auto data = UniformExperiment(p, -0.1, 0.1, kSeed, FromNoise(BoundedNoise(p.q(), delta, kSeed + 2000)));
  const auto dm = BuildDataMatrices(data, dict);
  const auto noise = NoiseModel::Bounded(delta, dm.T(), p.E);
  const auto r = SynthNoisy(dm, BoundJacobian(dict, BoxSet::Full(4)), noise);
  if (!r.feasible()) return {false, "noisy program infeasible: " + r.message};
  const auto rc = CertifyRobust(r, dm, noise, BoxSet::Full(4), 100);
  return {rc.pass, Fmt("%d/%d sampled D with DD^T <= Delta Delta^T certified at tol 1e-7, largest lambda_max %.3g",
                       rc.passed, rc.draws, rc.worst)};
}

Verdict C11() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail;
  for (const auto& [tag, s] : std::vector<std::pair<std::string, IntegralSetup>>{{"cos x1", IntegralCos()},
                                                                                 {"cos x1, sin x2", IntegralCosSin()}}) {
    const auto dm = BuildIntegralMatrices(IntegralExperiment(s), s.dict, s.out.p());
    const auto r = SynthIntegral(dm, s.bound, s.out.p(), {}, s.out.C);
    if (!r.feasible()) {
      ok = false;
      detail += "[" + tag + ": infeasible] ";
      continue;
    }
    std::vector<VectorXd> x0s;
    for (const auto& x : RandomInitialStates(BoxSet::Cube(4, 1.0), 10, 11)) {
      VectorXd z = VectorXd::Zero(5);
      z.head(4) = x;
      x0s.push_back(z);
    }
    BehaviorOptions bo;
    bo.horizon = kIntegralHorizon;
    bo.tol = 1e-3;
    const auto tr = CheckTracking(IntegralClosedLoop(s, r), s.out.C, s.r, x0s, bo);
    ok = ok && tr.pass;
    detail += Fmt("[%s: %d/%d trials, tail |e| %.2g] ", tag.c_str(), tr.passed, tr.trials, tr.worst_tail_error);
  }
  const double s = Seconds(t0);
  return {ok && s <= 60.0, detail + Fmt("horizon %.0f s, %.1f s (limit 60 s)", kIntegralHorizon, s)};
}

Verdict C12() {
  IntegralSetup s = IntegralCos();
  MatrixXd C(2, 4);
  C << 1, 0, 0, 0, 2, 0, 0, 0;
  s.out.C = C;
  s.r = VectorXd::Constant(2, 0.5);
  const auto dm = BuildIntegralMatrices(IntegralExperiment(s), s.dict, 2, true);
  const auto r = SynthIntegral(dm, s.bound, 2, {}, C);
  return {!r.feasible() && r.status == lmi::SolveStatus::kInfeasible,
          "C = [e1; 2 e1] (rank 1 < p = 2): status " + std::string(lmi::ToString(r.status)) + "; " + r.message};
}

Verdict C13() {
  const VectorXd xs = TaylorOperatingPoint();
  const VectorXd us = VectorXd::Constant(1, kTaylorU);
  const auto ds = ShiftDataset(TaylorExperiment(), xs, us);
  const auto dm = BuildDataMatrices(ds, Dictionary(4, {}));
  // remainder samples from the true linearisation must lie in the declared set
  const Plant plant = Manipulator();
  const MatrixXd A = plant.truth->A * plant.truth->dict.Jacobian(xs);
  const MatrixXd R0 = dm.X1 - A * dm.X0 - plant.truth->B * dm.U0;
  const MatrixXd gap = TaylorDelta() * TaylorDelta().transpose() - R0 * R0.transpose();
  const double covered = Eigen::SelfAdjointEigenSolver<MatrixXd>(gap).eigenvalues().minCoeff();
  if (covered < -1e-12) return {false, Fmt("R0 R0^T exceeds Delta Delta^T by %.3g", -covered)};
  const auto r = SynthTaylorRemainder(dm, TaylorDelta());
  if (!r.feasible()) return {false, "taylor-remainder program infeasible: " + r.message};
  const ClosedLoop cl = MakeClosedLoop(Manipulator(), StaticFeedback{dm.dict, r.K, xs, us});
  double worst = 0.0;
  for (const auto& dx : RandomInitialStates(BoxSet::Cube(4, 0.05), 10, 13)) {
    SimulationOptions so;
    so.t_end = 60.0;
    worst = std::max(worst, (Simulate(cl, xs + dx, so).final_state() - xs).norm());
  }
  std::ostringstream k;
  k << r.K;
  return {worst <= 1e-4, Fmt("R0 R0^T <= Delta Delta^T (min eig of gap %.3g), K = [%s], max |x(60) - x*| from 10 states in x* + [-0.05,0.05]^4: %.3g (limit 1e-4)",
                             covered, k.str().c_str(), worst)};
}

Verdict C14() {
  const auto r = Criterion1Design();
  if (!r.feasible()) return {false, "criterion-1 design infeasible"};
  const ClosedLoop cl = MakeClosedLoop(Manipulator(), StaticFeedback{r.dict, r.K, {}, {}});
  const auto x0s = RandomInitialStates(BoxSet::Cube(4, 1.0), 10, 3);
  const auto env = CheckContractionEnvelope(cl, x0s, r.Pinv, r.beta, 40.0);
  return {env.pass, Fmt("c = %.3g, beta = %.3g, worst gap / envelope = %.4f (limit 1.05)", env.c, env.beta,
                        env.worst_ratio)};
}

}  // namespace

int main() {
  std::cout << std::unitbuf;
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"manipulator cos x1 feasible", C1},
      {"manipulator extended dictionary, w = 1 and sweep to 100", C2},
      {"surge dictionaries and CSTR extended mode feasible", C3},
      {"contraction certificate for every feasible design", C4},
      {"data representation identity on random factored plants", C5},
      {"convergence to the unique equilibrium", C6},
      {"surge ROA levels with the published designs", C7},
      {"equilibria of the published closed loops", C8},
      {"constant-disturbance annihilation", C9},
      {"robustness to bounded noise", C10},
      {"integral tracking, both dictionaries", C11},
      {"rank-deficient output matrix detected", C12},
      {"linearisation baseline with remainder bound", C13},
      {"pairwise contraction envelope", C14},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " -- "
              << v.detail << "\n";
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
