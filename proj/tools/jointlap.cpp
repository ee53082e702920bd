// Command line entry points: fit a joint model from CSV data, simulate
// benchmark scenarios, and run replicate benchmarks.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "jointlap/bench.hpp"
#include "jointlap/infer.hpp"
#include "jointlap/simulate.hpp"

namespace {

using nlohmann::json;
using namespace jointlap;

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3 };

LogLevel log_level() {
  const char* env = std::getenv("JOINTLAP_LOG");
  if (!env) return LogLevel::warn;
  const std::string v(env);
  if (v == "debug") return LogLevel::debug;
  if (v == "info") return LogLevel::info;
  if (v == "error") return LogLevel::error;
  return LogLevel::warn;
}

void log_info(const std::string& msg) {
  if (log_level() <= LogLevel::info) std::cerr << "[jointlap] " << msg << "\n";
}

Term parse_term(const std::string& s) {
  if (s == "intercept") return Term::Intercept();
  if (s[0] == 't' && s.find(':') == std::string::npos) {
    const int col = s.size() == 1 ? 0 : std::stoi(s.substr(1));
    return Term::Time(col);
  }
  if (s[0] == 'x') {
    const auto colon = s.find(':');
    if (colon == std::string::npos)
      return Term::Covariate(std::stoi(s.substr(1)) - 1);
    const int cov = std::stoi(s.substr(1, colon - 1)) - 1;
    const std::string rest = s.substr(colon + 1);
    const int col = rest == "t" ? 0 : std::stoi(rest.substr(1));
    return Term::Interaction(cov, col);
  }
  throw SpecError("term", "cannot parse term '" + s + "'");
}

TimeBasis parse_basis(const json& j) {
  TimeBasis b;
  if (j.is_null()) return b;
  const std::string kind = j.value("kind", "linear");
  if (kind == "linear") return b;
  if (kind != "ns" && kind != "natural_spline")
    throw SpecError("time_basis.kind", "unknown basis kind '" + kind + "'");
  b.kind = TimeBasis::Kind::natural_spline;
  b.interior_knots = j.at("interior_knots").get<std::vector<double>>();
  b.boundary_knots = j.at("boundary_knots").get<std::vector<double>>();
  return b;
}

ModelSpec parse_model(const json& jm) {
  ModelSpec spec;
  for (const auto& js : jm.at("longitudinal")) {
    LongSubmodelSpec sm;
    sm.marker_id = js.value("marker", 1);
    sm.family.kind = family_from_name(js.at("family").get<std::string>());
    for (const auto& t : js.at("fixed"))
      sm.fixed_terms.push_back(parse_term(t.get<std::string>()));
    sm.random_terms = js.value("random", std::vector<int>{});
    sm.time_basis = parse_basis(js.value("time_basis", json()));
    spec.longitudinal.push_back(std::move(sm));
  }
  for (const auto& jb : jm.at("re_blocks")) {
    REBlockSpec blk;
    for (const auto& m : jb.at("members"))
      blk.members.emplace_back(m.at(0).get<int>(), m.at(1).get<int>());
    blk.iw_nu = jb.value("iw_nu", 0.0);
    blk.iw_scale = jb.value("iw_scale", 1.0);
    spec.re_blocks.push_back(std::move(blk));
  }
  for (const auto& jv : jm.at("survival")) {
    SurvSubmodelSpec sv;
    sv.cause_id = jv.value("cause", 1);
    sv.n_covariates = jv.value("n_covariates", 0);
    if (jv.contains("baseline")) {
      const auto& jb = jv.at("baseline");
      const std::string kind = jb.value("kind", "rw2");
      if (kind == "rw1")
        sv.baseline.kind = BaselineSpec::Kind::rw1;
      else if (kind == "rw2")
        sv.baseline.kind = BaselineSpec::Kind::rw2;
      else
        throw SpecError("baseline.kind", "unknown baseline kind '" + kind + "'");
      sv.baseline.bins = jb.value("bins", 15);
      sv.baseline.pc_lambda = jb.value("pc_lambda", 0.0);
    }
    for (const auto& ja : jv.value("associations", json::array())) {
      AssociationTerm at;
      at.source_marker = ja.at("marker").get<int>();
      const std::string kind = ja.value("kind", "current_value");
      if (kind == "current_value")
        at.kind = AssociationTerm::Kind::current_value;
      else if (kind == "current_slope")
        at.kind = AssociationTerm::Kind::current_slope;
      else if (kind == "shared_random_effect")
        at.kind = AssociationTerm::Kind::shared_random_effect;
      else
        throw SpecError("association.kind", "unknown kind '" + kind + "'");
      at.re_term = ja.value("re_term", 0);
      sv.association_terms.push_back(at);
    }
    spec.survival.push_back(std::move(sv));
  }
  if (jm.contains("priors")) {
    const auto& jp = jm.at("priors");
    spec.priors.beta_scale = jp.value("beta_scale", spec.priors.beta_scale);
    spec.priors.gamma_scale = jp.value("gamma_scale", spec.priors.gamma_scale);
    spec.priors.phi_scale = jp.value("phi_scale", spec.priors.phi_scale);
    spec.priors.resid_shape = jp.value("resid_shape", spec.priors.resid_shape);
    spec.priors.resid_rate = jp.value("resid_rate", spec.priors.resid_rate);
  }
  return validate(std::move(spec));
}

InferenceConfig parse_inference(const json& j) {
  InferenceConfig cfg;
  if (j.is_null()) return cfg;
  const std::string strat = j.value("strategy", "eb");
  if (strat == "eb" || strat == "EB")
    cfg.strategy = Strategy::EB;
  else if (strat == "full" || strat == "FULL")
    cfg.strategy = Strategy::FULL;
  else
    throw SpecError("inference.strategy", "unknown strategy '" + strat + "'");
  cfg.ccd_z = j.value("ccd_z", cfg.ccd_z);
  cfg.grad_tol = j.value("grad_tol", cfg.grad_tol);
  cfg.step_tol = j.value("step_tol", cfg.step_tol);
  cfg.max_outer_iterations =
      j.value("max_outer_iterations", cfg.max_outer_iterations);
  cfg.hyper_samples = j.value("hyper_samples", cfg.hyper_samples);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

void print_summary(std::ostream& os, const FitResult& fit) {
  os << "parameter            mean        sd      q2.5%     q97.5%\n";
  char buf[160];
  auto line = [&](const SummaryRow& r) {
    std::snprintf(buf, sizeof(buf), "%-16s %9.4f %9.4f %10.4f %10.4f\n",
                  r.name.c_str(), r.mean, r.sd, r.q025, r.q975);
    os << buf;
  };
  for (const auto& r : fit.latent_summaries)
    if (r.name.rfind("logbase", 0) != 0) line(r);
  for (const auto& r : fit.hyper_summaries) line(r);
  os << (fit.converged ? "converged" : "NOT CONVERGED") << " in "
     << fit.outer_iterations << " outer iterations, "
     << fit.timings.total_s << " s\n";
}

void write_baseline_csv(const FitResult& fit, const AssembledModel& model,
                        const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path);
  f << "cause,bin,t_mid,mean,q025,q975\n";
  f.precision(10);
  for (const auto& r : fit.latent_summaries) {
    if (r.name.rfind("logbase", 0) != 0) continue;
    const auto us = r.name.find("_bin");
    const int cause = std::stoi(r.name.substr(7, us - 7));
    const int bin = std::stoi(r.name.substr(us + 4));
    const double mid =
        0.5 * (model.partition.cuts[bin] + model.partition.cuts[bin + 1]);
    f << cause << "," << bin << "," << mid << "," << r.mean << "," << r.q025
      << "," << r.q975 << "\n";
  }
}

int cmd_fit(const std::string& config_path, const std::string& long_csv,
            const std::string& surv_csv, const std::string& out_dir) {
  std::ifstream cf(config_path);
  if (!cf) throw IoError("cannot open config file: " + config_path);
  const json jc = json::parse(cf);
  const ModelSpec spec = parse_model(jc.at("model"));
  const InferenceConfig icfg = parse_inference(jc.value("inference", json()));

  log_info("ingesting " + long_csv + " and " + surv_csv);
  auto [ld, sd] = ingest(long_csv, surv_csv);
  log_info("assembling model");
  const AssembledModel model(spec, ld, sd);
  Engine engine(model);
  log_info("fitting (latent dim " + std::to_string(model.index.dim()) + ")");
  const FitResult fit = engine.fit(icfg);

  std::filesystem::create_directories(out_dir);
  write_fit_json(fit, model, out_dir + "/fit.json");
  write_baseline_csv(fit, model, out_dir + "/baseline.csv");
  std::ofstream sf(out_dir + "/summary.txt");
  print_summary(sf, fit);
  print_summary(std::cout, fit);
  if (!fit.converged && !fit.failure_reason.empty())
    std::cerr << "jointlap: " << fit.failure_reason << "\n";
  return fit.converged ? 0 : 2;
}

int cmd_simulate(int scenario, std::uint64_t seed, const std::string& out_dir) {
  ScenarioConfig cfg = scenario_preset(scenario);
  cfg.seed = seed;
  log_info("simulating scenario " + std::to_string(scenario));
  const SimulatedData data = simulate_scenario(cfg);
  write_scenario(data, cfg, out_dir);
  log_info("event fraction " + std::to_string(data.event_fraction));
  return 0;
}

int cmd_bench(int scenario, int replicates, const std::string& strategy,
              std::uint64_t seed, int workers, const std::string& out_dir) {
  ScenarioConfig cfg = scenario_preset(scenario);
  const Strategy strat =
      (strategy == "full" || strategy == "FULL") ? Strategy::FULL : Strategy::EB;
  log_info("running " + std::to_string(replicates) + " replicates");
  const auto results =
      run_replicates(cfg, replicates, strat, seed, workers, out_dir);
  const BenchReport report = metrics(results, scenario_truth(cfg));
  emit_report(report, out_dir);
  std::cout << "converged " << report.converged << "/" << report.replicates
            << ", mean fit time " << report.mean_time_s << " s\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint longitudinal-survival models via nested Laplace "
               "approximations"};
  app.require_subcommand(1);

  std::string config_path, long_csv, surv_csv, out_dir;
  int scenario = 1, replicates = 1, workers = 1;
  std::uint64_t seed = 1;
  std::string strategy = "eb";

  auto* fit = app.add_subcommand("fit", "fit a model to CSV data");
  fit->add_option("--config", config_path, "model config JSON")->required();
  fit->add_option("--long", long_csv, "longitudinal CSV")->required();
  fit->add_option("--surv", surv_csv, "survival CSV")->required();
  fit->add_option("--out", out_dir, "output directory")->required();

  auto* sim = app.add_subcommand("simulate", "generate a benchmark dataset");
  sim->add_option("--scenario", scenario, "scenario id 1..10")->required();
  sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--out", out_dir, "output directory")->required();

  auto* bench = app.add_subcommand("bench", "replicate benchmark");
  bench->add_option("--scenario", scenario, "scenario id 1..10")->required();
  bench->add_option("--replicates", replicates, "number of replicates")
      ->required();
  bench->add_option("--strategy", strategy, "eb or full");
  bench->add_option("--seed", seed, "master RNG seed");
  bench->add_option("--workers", workers, "worker pool size");
  bench->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cmd_fit(config_path, long_csv, surv_csv, out_dir);
    if (sim->parsed()) return cmd_simulate(scenario, seed, out_dir);
    if (bench->parsed())
      return cmd_bench(scenario, replicates, strategy, seed, workers, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "jointlap: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
