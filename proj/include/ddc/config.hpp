#pragma once

/// @file config.hpp
/// @brief Run configuration for the command-line front end: JSON ingestion,
/// validation, dataset acquisition and dispatch to the synthesis modes.

#include <Eigen/Dense>
#include <algorithm>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddc/certify.hpp"
#include "ddc/datamat.hpp"
#include "ddc/dictionary.hpp"
#include "ddc/io.hpp"
#include "ddc/plant.hpp"
#include "ddc/simulate.hpp"
#include "ddc/synthesis.hpp"

namespace ddc {

/// Raised for malformed or incomplete configurations; `where` names the
/// offending field as a JSON pointer.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& where, const std::string& what)
      : std::runtime_error(where + ": " + what), where_(where) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

inline const std::vector<std::string>& KnownModes() {
  static const std::vector<std::string> modes = {"contractive", "general",  "monotone", "hull",
                                                 "taylor",      "min-nonlin", "taylor-remainder",
                                                 "extended",    "noisy",    "remainder", "known-freq", "integral"};
  return modes;
}

inline Plant PlantByName(const std::string& name) {
  if (name == "manipulator") return Manipulator();
  if (name == "surge") return Surge();
  if (name == "cstr") return Cstr();
  throw ConfigError("/plant", "unknown plant '" + name + "' (manipulator, surge, cstr)");
}

struct ExperimentConfig {
  int T = 10;
  double dt = 0.05;
  double input_lo = -0.1, input_hi = 0.1;
  unsigned seed = 7;
  std::optional<VectorXd> x0;
  /// Bounded noise of this magnitude when positive.
  double noise_delta = 0.0;
  /// Constant disturbance value, one entry per channel of E.
  std::optional<VectorXd> exo_constant;
};

struct RunConfig {
  std::string plant;
  std::string dataset;  // CSV path, used instead of `plant` when set
  ExperimentConfig experiment;
  std::optional<Dictionary> dictionary;
  std::optional<BoxSet> set;
  std::string mode = "contractive";
  nlohmann::json params = nlohmann::json::object();
  SynthesisOptions synthesis;
  CertifyOptions certify;
  std::string output = "out";
};

namespace internal {

inline MatrixXd Mat(const nlohmann::json& p, const std::string& key, const std::string& where) {
  if (!p.contains(key)) throw ConfigError(where + "/" + key, "required for this mode");
  try {
    return io::MatrixFromJson(p.at(key));
  } catch (const std::exception& e) {
    throw ConfigError(where + "/" + key, e.what());
  }
}

inline VectorXd Vec(const nlohmann::json& p, const std::string& key, const std::string& where) {
  if (!p.contains(key)) throw ConfigError(where + "/" + key, "required for this mode");
  try {
    return io::VectorFromJson(p.at(key));
  } catch (const std::exception& e) {
    throw ConfigError(where + "/" + key, e.what());
  }
}

template <class T>
T Get(const nlohmann::json& j, const std::string& key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "/" + key, e.what());
  }
}

/// Parameters each mode cannot do without.
inline std::vector<std::string> RequiredParams(const std::string& mode) {
  if (mode == "general") return {"S", "W", "R"};
  if (mode == "monotone") return {"S"};
  if (mode == "hull") return {"vertices"};
  if (mode == "taylor-remainder") return {"Delta"};
  if (mode == "noisy") return {"delta"};
  if (mode == "remainder") return {"R_D", "Delta"};
  if (mode == "known-freq") return {};
  if (mode == "integral") return {"C", "r"};
  return {};
}

}  // namespace internal

inline RunConfig ParseRunConfig(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  using internal::Get;
  if (!j.is_object()) throw ConfigError("/", "configuration must be a JSON object");
  static const std::set<std::string> known = {"plant",  "dataset", "experiment", "dictionary", "set",
                                              "mode",   "params",  "synthesis",  "solver",     "certify", "output"};
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError("/" + k, "unknown field");
  RunConfig c;
  c.plant = Get<std::string>(j, "plant", "", "");
  c.dataset = Get<std::string>(j, "dataset", "", "");
  if (c.plant.empty() == c.dataset.empty()) throw ConfigError("/plant", "give exactly one of 'plant' or 'dataset'");
  if (!c.dataset.empty()) {
    std::filesystem::path p = c.dataset;
    if (p.is_relative() && !base.empty()) p = base / p;
    if (!std::filesystem::exists(p)) throw ConfigError("/dataset", "file not found: " + p.string());
    c.dataset = p.string();
  } else {
    PlantByName(c.plant);
  }
  if (j.contains("experiment")) {
    const auto& e = j["experiment"];
    auto& x = c.experiment;
    x.T = Get<int>(e, "T", x.T, "/experiment");
    x.dt = Get<double>(e, "dt", x.dt, "/experiment");
    x.seed = Get<unsigned>(e, "seed", x.seed, "/experiment");
    if (e.contains("input")) {
      const auto in = Get<std::vector<double>>(e, "input", {}, "/experiment");
      if (in.size() != 2 || !(in[0] < in[1])) throw ConfigError("/experiment/input", "expected [lo, hi] with lo < hi");
      x.input_lo = in[0];
      x.input_hi = in[1];
    }
    if (e.contains("x0")) x.x0 = internal::Vec(e, "x0", "/experiment");
    x.noise_delta = Get<double>(e, "noise_delta", 0.0, "/experiment");
    if (e.contains("exo_constant")) x.exo_constant = internal::Vec(e, "exo_constant", "/experiment");
    if (x.T <= 0) throw ConfigError("/experiment/T", "must be positive");
    if (!(x.dt > 0)) throw ConfigError("/experiment/dt", "must be positive");
    if (x.noise_delta < 0) throw ConfigError("/experiment/noise_delta", "must be non-negative");
  }
  if (!j.contains("dictionary") || !j["dictionary"].is_object() || j["dictionary"].empty())
    throw ConfigError("/dictionary", "a dictionary {\"n\": .., \"terms\": [..]} is required");
  try {
    c.dictionary = Dictionary::FromJson(j["dictionary"]);
  } catch (const std::exception& e) {
    throw ConfigError("/dictionary", e.what());
  }
  if (j.contains("set")) {
    try {
      c.set = BoxSet::FromJson(j["set"]);
    } catch (const std::exception& e) {
      throw ConfigError("/set", e.what());
    }
  }
  c.mode = Get<std::string>(j, "mode", c.mode, "");
  if (std::find(KnownModes().begin(), KnownModes().end(), c.mode) == KnownModes().end())
    throw ConfigError("/mode", "unknown mode '" + c.mode + "'");
  if (j.contains("params")) c.params = j["params"];
  for (const auto& key : internal::RequiredParams(c.mode))
    if (!c.params.contains(key)) throw ConfigError("/params/" + key, "required for mode " + c.mode);
  if (j.contains("synthesis")) {
    const auto& s = j["synthesis"];
    c.synthesis.alpha = Get<double>(s, "alpha", c.synthesis.alpha, "/synthesis");
    c.synthesis.margin_mode = Get<bool>(s, "margin_mode", c.synthesis.margin_mode, "/synthesis");
    c.synthesis.p_max = Get<double>(s, "p_max", c.synthesis.p_max, "/synthesis");
    c.synthesis.eps = Get<double>(s, "eps", c.synthesis.eps, "/synthesis");
  }
  if (j.contains("solver")) {
    const auto& s = j["solver"];
    auto& ipm = c.synthesis.solver.ipm;
    ipm.max_iterations = Get<int>(s, "max_iterations", ipm.max_iterations, "/solver");
    ipm.gap_tol = Get<double>(s, "gap_tol", ipm.gap_tol, "/solver");
    ipm.feas_tol = Get<double>(s, "feas_tol", ipm.feas_tol, "/solver");
    c.synthesis.solver.violation_tol = Get<double>(s, "violation_tol", c.synthesis.solver.violation_tol, "/solver");
  }
  if (j.contains("certify")) {
    const auto& s = j["certify"];
    c.certify.samples = Get<int>(s, "samples", c.certify.samples, "/certify");
    c.certify.tol = Get<double>(s, "tol", c.certify.tol, "/certify");
    c.certify.clip = Get<double>(s, "clip", c.certify.clip, "/certify");
    c.certify.seed = Get<unsigned>(s, "seed", c.certify.seed, "/certify");
  }
  c.output = Get<std::string>(j, "output", c.output, "");
  return c;
}

inline RunConfig LoadRunConfig(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::ReadText(path));
  } catch (const nlohmann::json::parse_error& e) {
    // byte offset to line number for the message
    const std::string text = io::ReadText(path);
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const long line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n');
    throw ConfigError(path.string() + ":" + std::to_string(line), e.what());
  }
  return ParseRunConfig(j, path.parent_path());
}

/// Defaults of every tunable, as written by `print-defaults`.
inline nlohmann::json DefaultsJson() {
  const ExperimentConfig e;
  const SynthesisOptions s;
  const CertifyOptions c;
  const RoaOptions r;
  const BehaviorOptions b;
  return {
      {"experiment",
       {{"T", e.T}, {"dt", e.dt}, {"input", {e.input_lo, e.input_hi}}, {"seed", e.seed}, {"noise_delta", 0.0}}},
      {"mode", "contractive"},
      {"modes", KnownModes()},
      {"synthesis", {{"alpha", s.alpha}, {"margin_mode", s.margin_mode}, {"p_max", s.p_max}, {"eps", s.eps}}},
      {"solver",
       {{"max_iterations", s.solver.ipm.max_iterations},
        {"gap_tol", s.solver.ipm.gap_tol},
        {"feas_tol", s.solver.ipm.feas_tol},
        {"violation_tol", s.solver.violation_tol},
        {"env_max_iterations", "DDC_SOLVER_MAX_ITERS"}}},
      {"certify", {{"samples", c.samples}, {"tol", c.tol}, {"clip", c.clip}, {"seed", c.seed}}},
      {"roa", {{"points", r.points}, {"r_excl", r.r_excl}, {"gamma_cap", r.gamma_cap}, {"refine", r.refine}}},
      {"behavior", {{"trials", b.trials}, {"horizon", b.horizon}, {"tol", b.tol}, {"tail", b.tail}, {"seed", b.seed}}},
      {"output", "out"},
  };
}

/// Plant whose data the mode consumes: the input-integrator extension for
/// `extended`, the output-integrator augmentation (r = 0) for `integral`.
inline Plant DataPlant(const RunConfig& c) {
  Plant p = PlantByName(c.plant);
  if (c.params.contains("E")) {
    const MatrixXd E = internal::Mat(c.params, "E", "/params");
    if (E.rows() != p.n) throw ConfigError("/params/E", "must have n rows");
    p.E = E;
  }
  if (c.mode == "extended") return AugmentInputIntegrator(p);
  if (c.mode == "integral") {
    const MatrixXd C = internal::Mat(c.params, "C", "/params");
    if (C.cols() != p.n) throw ConfigError("/params/C", "must have n columns");
    VectorXd d = VectorXd::Zero(p.q());
    if (c.params.contains("d")) d = internal::Vec(c.params, "d", "/params");
    if (d.size() != p.q()) throw ConfigError("/params/d", "must have one entry per disturbance channel");
    return AugmentOutputIntegrator(p, {C}, VectorXd::Zero(C.rows()), d);
  }
  return p;
}

inline ExperimentDataset AcquireDataset(const RunConfig& c) {
  if (!c.dataset.empty()) return io::ReadDataset(c.dataset);
  const Plant p = DataPlant(c);
  const auto& e = c.experiment;
  VectorXd x0 = e.x0 ? *e.x0 : VectorXd();
  if (!e.x0) {
    std::mt19937_64 rng(e.seed + 1000);
    std::uniform_real_distribution<double> U(e.input_lo, e.input_hi);
    x0.resize(p.n);
    for (int i = 0; i < p.n; ++i) x0(i) = U(rng);
  }
  if (x0.size() != p.n) throw ConfigError("/experiment/x0", "must have " + std::to_string(p.n) + " entries");
  Disturbance dist;
  if (e.noise_delta > 0) {
    dist = FromNoise(BoundedNoise(p.q(), e.noise_delta, e.seed + 2000));
  } else if (e.exo_constant) {
    if (e.exo_constant->size() != p.q()) throw ConfigError("/experiment/exo_constant", "needs one entry per channel");
    dist = FromExo(ExoModel::Constant(*e.exo_constant));
  }
  ExperimentOptions eo;
  eo.T = e.T;
  eo.dt = e.dt;
  auto ds = RunExperiment(p, UniformInput{e.input_lo, e.input_hi, e.seed}, x0, eo, dist);
  if (e.noise_delta > 0) ds.provenance["noise"] = {{"kind", "bounded"}, {"delta", e.noise_delta}};
  if (e.exo_constant)
    ds.provenance["exo"] = {{"kind", "constant"}, {"value", std::vector<double>(e.exo_constant->data(),
                                                                                e.exo_constant->data() +
                                                                                    e.exo_constant->size())}};
  return ds;
}

/// Certification set: the declared set, else all of R^n.
inline BoxSet CertifySet(const RunConfig& c, int n) {
  if (c.set) {
    if (c.set->dim() != n) throw ConfigError("/set", "dimension does not match the dictionary");
    return *c.set;
  }
  return BoxSet::Full(n);
}

inline JacobianBound BoundFor(const RunConfig& c, const Dictionary& dict) {
  if (c.params.contains("R_Q")) return {internal::Mat(c.params, "R_Q", "/params")};
  try {
    return BoundJacobian(dict, CertifySet(c, dict.n()));
  } catch (const std::domain_error& e) {
    throw ConfigError("/set", std::string(e.what()) + "; bound the set or give params.R_Q");
  }
}

struct Pipeline {
  ExperimentDataset dataset;
  DataMatrices data;
  SynthesisResult result;
  /// Declared set for the state the gain acts on.
  BoxSet set;
  /// Shift of the operating point, empty unless taylor-remainder.
  VectorXd x_shift, u_shift;
};

/// Acquires data, builds the matrices and runs the configured mode.
inline Pipeline RunSynthesis(const RunConfig& c) {
  using internal::Mat;
  using internal::Vec;
  Pipeline out;
  out.dataset = AcquireDataset(c);
  const Dictionary& dict = *c.dictionary;
  const auto& p = c.params;
  const auto& opt = c.synthesis;
  auto& ds = out.dataset;

  if (c.mode == "integral") {
    const MatrixXd C = Mat(p, "C", "/params");
    const int px = static_cast<int>(C.rows());
    if (dict.n() + px != ds.n())
      throw ConfigError("/dictionary", "integral mode takes a dictionary on the plant state x only");
    out.data = BuildIntegralMatrices(ds, dict, px);
    out.set = CertifySet(c, dict.n());
    std::vector<Interval> iv;
    for (int i = 0; i < out.set.dim(); ++i) iv.push_back(out.set[i]);
    for (int i = 0; i < px; ++i) iv.push_back(Interval{});
    out.set = BoxSet(iv);
    out.result = SynthIntegral(out.data, BoundFor(c, dict), px, opt, C);
    return out;
  }
  if (c.mode == "taylor-remainder" && p.contains("x_star")) {
    const VectorXd xs = Vec(p, "x_star", "/params");
    const VectorXd us = p.contains("u_star") ? Vec(p, "u_star", "/params") : VectorXd::Zero(ds.m());
    ds = ShiftDataset(ds, xs, us);
    out.x_shift = xs;
    out.u_shift = us;
  }
  out.data = BuildDataMatrices(ds, dict);
  out.set = CertifySet(c, dict.n());
  const auto& dm = out.data;
  const std::string& m = c.mode;
  if (m == "contractive") {
    out.result = SynthContractive(dm, BoundFor(c, dict), opt);
  } else if (m == "extended") {
    out.result = SynthExtended(dm, BoundFor(c, dict), opt);
  } else if (m == "general") {
    out.result = SynthGeneral(dm, Mat(p, "S", "/params"), Mat(p, "W", "/params"), Mat(p, "R", "/params"), opt);
  } else if (m == "monotone") {
    const MatrixXd S = Mat(p, "S", "/params");
    out.result = SynthMonotone(dm, S, opt);
    const double v = MonotoneViolation(dict, S, out.set);
    if (v > 1e-9)
      out.result.message += "; warning: monotonicity precondition violated on sampled points (max eigenvalue " +
                            std::to_string(v) + ")";
  } else if (m == "hull") {
    std::vector<MatrixXd> vs;
    for (const auto& v : p.at("vertices")) vs.push_back(io::MatrixFromJson(v));
    out.result = SynthHull(dm, vs, internal::Get<double>(p, "beta", 0.0, "/params"), opt);
  } else if (m == "taylor") {
    out.result = SynthTaylor(dm, opt);
  } else if (m == "min-nonlin") {
    out.result = SynthMinNonlinearity(dm, opt);
  } else if (m == "taylor-remainder") {
    out.result = SynthTaylorRemainder(dm, Mat(p, "Delta", "/params"), opt);
  } else if (m == "noisy") {
    const Plant pl = DataPlant(c);
    const MatrixXd E = p.contains("E") ? Mat(p, "E", "/params") : pl.E;
    const NoiseModel noise = p.contains("Delta") ? NoiseModel{Mat(p, "Delta", "/params"), E}
                                                 : NoiseModel::Bounded(p.at("delta").get<double>(), dm.T(), E);
    out.result = SynthNoisy(dm, BoundFor(c, dict), noise, opt);
  } else if (m == "remainder") {
    out.result = SynthRemainder(dm, BoundFor(c, dict), Mat(p, "R_D", "/params"), Mat(p, "Delta", "/params"), opt);
  } else if (m == "known-freq") {
    const auto freqs = internal::Get<std::vector<double>>(p, "frequencies", {}, "/params");
    const int constants = internal::Get<int>(p, "constants", 1, "/params");
    if (freqs.empty() && constants == 0) throw ConfigError("/params", "known-freq needs frequencies or constants");
    out.result = SynthKnownFrequency(dm, BoundFor(c, dict), BuildAnnihilator(dm.times, freqs, constants), opt);
  }
  return out;
}

}  // namespace ddc
