// ddc: data-driven contractive control from the command line.
//
//   ddc experiment --plant manipulator --T 10 --input uniform:-0.1:0.1 --seed 7 --out data/run.csv
//   ddc synthesize --config run.json
//   ddc certify --config run.json --samples 10000
//   ddc simulate --config run.json --x0 0.5,0,0,0 --t-end 20
//   ddc reproduce surge-roa --out repro
//   ddc print-defaults
//
// Exit codes: 0 success, 1 usage or configuration error, 2 infeasible,
// 3 numerical failure, 4 certification failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddc/certify.hpp"
#include "ddc/config.hpp"
#include "ddc/io.hpp"
#include "ddc/pipelines.hpp"
#include "ddc/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInfeasible = 2, kNumerical = 3, kCertification = 4 };

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) out.push_back(part);
  return out;
}

Eigen::VectorXd ParseVector(const std::string& text) {
  const auto parts = Split(text, ',');
  Eigen::VectorXd v(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) v(i) = std::stod(parts[i]);
  return v;
}

/// Synthesis JSON as persisted: wall-clock time is reported on stdout only,
/// so that equal runs write equal bytes.
json PersistedResult(const ddc::SynthesisResult& r) {
  json j = r.ToJson();
  j["solver"].erase("seconds");
  if (r.Pinv.size()) j["Pinv"] = ddc::io::MatrixToJson(r.Pinv);
  return j;
}

int ExitFor(const ddc::SynthesisResult& r) {
  if (r.feasible()) return kOk;
  return r.status == ddc::lmi::SolveStatus::kInfeasible ? kInfeasible : kNumerical;
}

void PrintResult(const ddc::SynthesisResult& r) {
  std::cout << "mode        " << r.mode << "\n"
            << "status      " << ddc::lmi::ToString(r.status) << (r.feasible() ? " (feasible)" : " (not feasible)")
            << "\n";
  if (!r.message.empty()) std::cout << "message     " << r.message << "\n";
  if (r.feasible()) {
    std::cout << "alpha       " << r.alpha << "\n"
              << "beta        " << r.beta << "\n"
              << "|K|_F       " << r.K.norm() << "\n";
  }
  std::cout << "residuals   equality " << r.report.equality_residual << ", max LMI violation "
            << r.report.max_violation << ", margin " << r.report.margin << "\n"
            << "solver      " << r.report.iterations << " iterations, " << r.report.seconds << " s\n";
  for (const auto& f : r.report.infeasible_families) std::cout << "infeasible  " << f << "\n";
}

/// Closed loop of the configured plant under a synthesized gain. Integral
/// designs run on (x, xi) with the configured reference and disturbance.
ddc::ClosedLoop ClosedLoopFor(const ddc::RunConfig& c, const ddc::Pipeline& p) {
  if (c.dataset.size()) throw ddc::ConfigError("/plant", "simulation needs a plant model, not a dataset");
  ddc::Plant plant = ddc::DataPlant(c);
  if (c.mode == "integral") {
    const ddc::Plant base = ddc::PlantByName(c.plant);
    const Eigen::MatrixXd C = ddc::io::MatrixFromJson(c.params.at("C"));
    const Eigen::VectorXd r = ddc::io::VectorFromJson(c.params.at("r"));
    Eigen::VectorXd d = Eigen::VectorXd::Zero(base.q());
    if (c.params.contains("d")) d = ddc::io::VectorFromJson(c.params.at("d"));
    plant = ddc::AugmentOutputIntegrator(base, {C}, r, d);
  }
  return ddc::MakeClosedLoop(plant, ddc::StaticFeedback{p.result.dict, p.result.K, p.x_shift, p.u_shift});
}

int CmdExperiment(const std::string& plant_name, int T, double dt, const std::string& input, unsigned seed,
                  const std::string& noise, const std::string& exo, const std::string& out) {
  ddc::Plant plant = ddc::PlantByName(plant_name);
  const auto in = Split(input, ':');
  if (in.size() != 3 || in[0] != "uniform") throw ddc::ConfigError("--input", "expected uniform:lo:hi");
  const double lo = std::stod(in[1]), hi = std::stod(in[2]);
  if (!(lo < hi)) throw ddc::ConfigError("--input", "needs lo < hi");

  ddc::Disturbance dist;
  json noise_json, exo_json;
  if (!noise.empty()) {
    const auto parts = Split(noise, ':');
    if (parts.size() != 2 || parts[0] != "bounded") throw ddc::ConfigError("--noise", "expected bounded:delta");
    const double delta = std::stod(parts[1]);
    if (delta < 0) throw ddc::ConfigError("--noise", "delta must be non-negative");
    dist = ddc::FromNoise(ddc::BoundedNoise(plant.q(), delta, seed + 2000));
    noise_json = {{"kind", "bounded"}, {"delta", delta}};
  }
  if (!exo.empty()) {
    if (dist) throw ddc::ConfigError("--exo", "cannot be combined with --noise");
    const auto parts = Split(exo, ':');
    if (parts.size() != 2 || parts[0] != "const") throw ddc::ConfigError("--exo", "expected const:q=<channels> or const:v1,v2,..");
    Eigen::VectorXd value;
    if (parts[1].rfind("q=", 0) == 0) {
      const int q = std::stoi(parts[1].substr(2));
      if (q <= 0 || q > plant.n) throw ddc::ConfigError("--exo", "q must be in 1..n");
      // constant of random magnitude in [-1, 1] per channel on the first q states
      plant.E = Eigen::MatrixXd::Identity(plant.n, q);
      value = ddc::golden::UniformVector(q, -1.0, 1.0, seed + 3000);
    } else {
      value = ParseVector(parts[1]);
      if (value.size() != plant.q()) throw ddc::ConfigError("--exo", "needs one value per disturbance channel");
    }
    dist = ddc::FromExo(ddc::ExoModel::Constant(value));
    exo_json = {{"kind", "constant"},
                {"channels", value.size()},
                {"E", ddc::io::MatrixToJson(plant.E)},
                {"value", std::vector<double>(value.data(), value.data() + value.size())}};
  }
  ddc::ExperimentOptions eo;
  eo.T = T;
  eo.dt = dt;
  auto ds = ddc::RunExperiment(plant, ddc::UniformInput{lo, hi, seed},
                               ddc::golden::UniformVector(plant.n, lo, hi, seed + 1000), eo, dist);
  if (!noise_json.is_null()) ds.provenance["noise"] = noise_json;
  if (!exo_json.is_null()) ds.provenance["exo"] = exo_json;
  ddc::io::WriteDataset(out, ds);
  std::cout << "wrote " << out << " (" << ds.T() << " samples, n = " << ds.n() << ", m = " << ds.m() << ")\n";
  return kOk;
}

int CmdSynthesize(const ddc::RunConfig& c) {
  const auto p = ddc::RunSynthesis(c);
  for (const auto& w : p.data.warnings) std::cerr << "warning: " << w << "\n";
  PrintResult(p.result);
  const fs::path dir = c.output;
  ddc::io::WriteDataset(dir / "dataset.csv", p.dataset);
  const json j = PersistedResult(p.result);
  ddc::io::WriteJson(dir / "result.json", j);
  std::cout << "result      " << (dir / "result.json").string() << " (hash " << ddc::io::HashHex(j.dump(2) + "\n")
            << ")\n";
  return ExitFor(p.result);
}

int CmdCertify(ddc::RunConfig c, int samples, double tol) {
  if (samples > 0) c.certify.samples = samples;
  if (tol > 0) c.certify.tol = tol;
  const auto p = ddc::RunSynthesis(c);
  PrintResult(p.result);
  if (!p.result.feasible()) return ExitFor(p.result);
  json report;
  report["result"] = PersistedResult(p.result);
  bool ok = true;
  auto show = [&](const ddc::ContractionCertificate& cert) {
    std::cout << "certificate " << cert.mode << ": worst lambda_max " << cert.worst << " over " << cert.samples
              << " samples (tol " << cert.tol << ") " << (cert.pass ? "PASS" : "FAIL") << "\n";
    report["certificates"].push_back(cert.ToJson());
    ok = ok && cert.pass;
  };
  show(ddc::CertifyContraction(p.result, p.set, c.certify));
  if (c.dataset.empty() && c.mode != "extended" && c.mode != "integral") {
    const ddc::Plant plant = ddc::PlantByName(c.plant);
    if (plant.truth && p.x_shift.size() == 0) show(ddc::CertifyContractionTruth(p.result, plant, p.set, c.certify));
  }
  ddc::io::WriteJson(fs::path(c.output) / "certificate.json", report);
  return ok ? kOk : kCertification;
}

/// Certifies a stored gain (result.json) against a plant model. Needs no data.
int CmdCertifyResult(const fs::path& result_path, const std::string& plant_name, const std::string& set_json,
                     int samples, double tol) {
  const json j = ddc::io::ReadJson(result_path);
  const ddc::Dictionary dict = ddc::Dictionary::FromJson(j.at("dictionary"));
  const Eigen::MatrixXd K = ddc::io::MatrixFromJson(j.at("K"));
  const Eigen::MatrixXd Pinv = j.contains("Pinv") ? ddc::io::MatrixFromJson(j.at("Pinv"))
                                                  : Eigen::MatrixXd(ddc::io::MatrixFromJson(j.at("P")).inverse());
  const double beta = j.value("beta", 0.0);
  const ddc::Plant plant = ddc::PlantByName(plant_name);
  const ddc::BoxSet set = set_json.empty() ? ddc::BoxSet::Full(plant.n) : ddc::BoxSet::FromJson(json::parse(set_json));
  ddc::CertifyOptions opt;
  if (samples > 0) opt.samples = samples;
  if (tol > 0) opt.tol = tol;
  const auto cert = ddc::CertifyMetric(Pinv, beta, ddc::TruthJacobian(plant, ddc::StaticFeedback{dict, K, {}, {}}),
                                       set, opt, "ground-truth");
  std::cout << "certificate ground-truth: worst lambda_max " << cert.worst << " over " << cert.samples
            << " samples (tol " << cert.tol << ") " << (cert.pass ? "PASS" : "FAIL") << "\n";
  return cert.pass ? kOk : kCertification;
}

int CmdSimulate(const ddc::RunConfig& c, const std::string& x0_text, double t_end, bool svg) {
  const auto p = ddc::RunSynthesis(c);
  PrintResult(p.result);
  if (!p.result.feasible()) return ExitFor(p.result);
  const ddc::ClosedLoop cl = ClosedLoopFor(c, p);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(cl.dim);
  if (!x0_text.empty()) {
    const Eigen::VectorXd v = ParseVector(x0_text);
    if (v.size() > cl.dim) throw ddc::ConfigError("--x0", "has more entries than the closed-loop state");
    x0.head(v.size()) = v;
  }
  if (p.x_shift.size()) x0 += p.x_shift;
  ddc::SimulationOptions so;
  so.t_end = t_end;
  const auto tr = ddc::Simulate(cl, x0, so);
  const fs::path dir = c.output;
  Eigen::MatrixXd C;
  Eigen::VectorXd r;
  if (c.mode == "integral") {
    C = ddc::io::MatrixFromJson(c.params.at("C"));
    r = ddc::io::VectorFromJson(c.params.at("r"));
  }
  ddc::io::WriteTrajectory(dir / "trajectory.csv", tr, cl, C, r);
  std::cout << "trajectory  " << (dir / "trajectory.csv").string() << " (" << tr.size() << " samples), x(t_end) = "
            << tr.final_state().transpose() << "\n";
  if (svg) {
    std::vector<ddc::svg::Series> series;
    for (int i = 0; i < tr.X.rows(); ++i) {
      ddc::svg::Series s{"x" + std::to_string(i + 1), tr.t, {}};
      for (int k = 0; k < tr.size(); ++k) s.y.push_back(tr.X(i, k));
      series.push_back(std::move(s));
    }
    ddc::io::WriteText(dir / "trajectory.svg", ddc::svg::LineChart(series, "closed-loop response", "t [s]", "state"));
  }
  return kOk;
}

int CmdReproduce(const std::string& name, const fs::path& out) {
  const auto& reg = ddc::golden::Registry();
  std::vector<std::string> names;
  if (name == "all") {
    for (const auto& [k, v] : reg) names.push_back(k);
  } else if (reg.count(name)) {
    names.push_back(name);
  } else {
    std::string known;
    for (const auto& [k, v] : reg) known += " " + k;
    throw ddc::ConfigError("reproduce", "unknown golden pipeline '" + name + "'; known:" + known + " all");
  }
  bool ok = true;
  for (const auto& n : names) {
    const auto o = reg.at(n)();
    const fs::path dir = out / n;
    json rows = json::array();
    std::cout << "== " << n << "\n";
    std::printf("%-52s %14s  %-40s %s\n", "quantity", "value", "reference", "");
    for (const auto& r : o.rows) {
      std::printf("%-52s %14.6g  %-40s %s\n", r.quantity.c_str(), r.value, r.reference.c_str(),
                  r.pass ? "ok" : "MISMATCH");
      rows.push_back({{"quantity", r.quantity}, {"value", r.value}, {"reference", r.reference}, {"pass", r.pass}});
    }
    json report = o.report;
    for (auto& [k, v] : report.items())
      if (v.is_object() && v.contains("solver")) v["solver"].erase("seconds");
    ddc::io::WriteJson(dir / "summary.json", {{"name", n}, {"rows", rows}, {"report", report}});
    for (const auto& [file, content] : o.files) {
      ddc::io::WriteText(dir / file, content);
      std::cout << "wrote " << (dir / file).string() << "\n";
    }
    ok = ok && o.ok();
  }
  return ok ? kOk : kCertification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven contractive control synthesis and certification"};
  app.require_subcommand(1);

  auto* exp = app.add_subcommand("experiment", "Run a plant experiment and write a dataset CSV with a JSON sidecar");
  std::string plant = "manipulator", input = "uniform:-0.1:0.1", noise, exo, out = "dataset.csv";
  int T = 10;
  double dt = 0.05;
  unsigned seed = 7;
  exp->add_option("--plant", plant, "manipulator | surge | cstr")->capture_default_str();
  exp->add_option("--T", T, "number of samples")->capture_default_str()->check(CLI::PositiveNumber);
  exp->add_option("--dt", dt, "sampling interval [s]")->capture_default_str()->check(CLI::PositiveNumber);
  exp->add_option("--input", input, "input law uniform:lo:hi")->capture_default_str();
  exp->add_option("--seed", seed, "seed for input and initial state")->capture_default_str();
  exp->add_option("--noise", noise, "bounded:delta");
  exp->add_option("--exo", exo, "const:q=<channels> (random per channel) or const:v1,v2,..");
  exp->add_option("--out", out, "dataset CSV path")->capture_default_str();

  std::string config;
  auto* syn = app.add_subcommand("synthesize", "Synthesize a contractive controller from a run configuration");
  syn->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  std::string out_dir;
  syn->add_option("--out", out_dir, "output directory (overrides the configuration)");

  auto* cer = app.add_subcommand("certify", "Synthesize and certify by Jacobian sampling, or certify a stored result");
  std::string result_path, set_json;
  int samples = 0;
  double tol = 0.0;
  auto* cer_config = cer->add_option("--config", config, "run configuration (JSON)")->check(CLI::ExistingFile);
  auto* cer_result = cer->add_option("--result", result_path, "stored result.json")->check(CLI::ExistingFile);
  cer_config->excludes(cer_result);
  cer->add_option("--plant", plant, "plant model for --result")->capture_default_str();
  cer->add_option("--set", set_json, "box as JSON, e.g. [[-1,1],[\"-inf\",\"inf\"]]");
  cer->add_option("--samples", samples, "Latin-hypercube samples (default 10000)");
  cer->add_option("--tol", tol, "largest admissible eigenvalue (default 1e-7)");
  cer->add_option("--out", out_dir, "output directory (overrides the configuration)");

  auto* sim = app.add_subcommand("simulate", "Synthesize and simulate the closed loop");
  std::string x0;
  double t_end = 20.0;
  bool svg = false;
  sim->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("--x0", x0, "initial state, comma separated (missing entries are zero)");
  sim->add_option("--t-end", t_end, "horizon [s]")->capture_default_str()->check(CLI::PositiveNumber);
  sim->add_flag("--svg", svg, "also write trajectory.svg");
  sim->add_option("--out", out_dir, "output directory (overrides the configuration)");

  auto* rep = app.add_subcommand("reproduce", "Run a golden pipeline and compare with published values");
  std::string name;
  std::string repro_out = "repro";
  rep->add_option("name", name, "manipulator | manipulator-sweep | surge | surge-roa | cstr-extended | "
                                "integral-tracking | taylor-remainder | all")
      ->required();
  rep->add_option("--out", repro_out, "output directory")->capture_default_str();

  auto* def = app.add_subcommand("print-defaults", "Print every configurable default as JSON");

  CLI11_PARSE(app, argc, argv);

  auto load = [&]() {
    ddc::RunConfig c = ddc::LoadRunConfig(config);
    if (!out_dir.empty()) c.output = out_dir;
    return c;
  };
  try {
    if (*exp) return CmdExperiment(plant, T, dt, input, seed, noise, exo, out);
    if (*syn) return CmdSynthesize(load());
    if (*cer) {
      if (!result_path.empty()) return CmdCertifyResult(result_path, plant, set_json, samples, tol);
      if (config.empty()) throw ddc::ConfigError("certify", "give --config or --result");
      return CmdCertify(load(), samples, tol);
    }
    if (*sim) return CmdSimulate(load(), x0, t_end, svg);
    if (*rep) return CmdReproduce(name, repro_out);
    if (*def) {
      std::cout << ddc::DefaultsJson().dump(2) << "\n";
      return kOk;
    }
  } catch (const ddc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}
