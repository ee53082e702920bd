#include "jointlap/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <json.hpp>

namespace jointlap {

ReplicateResult extract_estimates(const FitResult& fit, int index) {
  ReplicateResult r;
  r.index = index;
  r.converged = fit.converged;
  r.failure_reason = fit.failure_reason;
  r.wall_s = fit.timings.total_s;
  for (const auto& row : fit.latent_summaries) {
    r.estimate[row.name] = row.mean;
    r.lo[row.name] = row.q025;
    r.hi[row.name] = row.q975;
  }
  for (const auto& row : fit.hyper_summaries) {
    r.estimate[row.name] = row.mean;
    r.lo[row.name] = row.q025;
    r.hi[row.name] = row.q975;
  }
  return r;
}

namespace {

ReplicateResult one_replicate(const ScenarioConfig& cfg, int index,
                              Strategy strategy, std::uint64_t master_seed,
                              const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  ReplicateResult r;
  r.index = index;
  try {
    ScenarioConfig rep_cfg = cfg;
    rep_cfg.seed = replicate_seed(master_seed, index);
    const SimulatedData data = simulate_scenario(rep_cfg);
    const ModelSpec spec = scenario_modelspec(rep_cfg);
    const AssembledModel model(spec, data.longitudinal, data.survival);
    Engine engine(model);
    InferenceConfig icfg;
    icfg.strategy = strategy;
    icfg.seed = rep_cfg.seed;
    const FitResult fit = engine.fit(icfg);
    r = extract_estimates(fit, index);
    if (!out_dir.empty()) {
      const std::string rep_dir =
          out_dir + "/replicates/" + std::to_string(index);
      std::filesystem::create_directories(rep_dir);
      write_fit_json(fit, model, rep_dir + "/fit.json");
      nlohmann::json tj = nlohmann::json::object();
      for (const auto& [k, v] : data.truth) tj[k] = v;
      std::ofstream f(rep_dir + "/truth.json");
      f << tj.dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    r.converged = false;
    r.failure_reason = e.what();
  }
  r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                 .count();
  return r;
}

}  // namespace

std::vector<ReplicateResult> run_replicates(const ScenarioConfig& cfg, int R,
                                            Strategy strategy,
                                            std::uint64_t master_seed,
                                            int workers,
                                            const std::string& out_dir) {
  if (R < 1) throw ValidationError("run_replicates: need R >= 1");
  std::vector<ReplicateResult> results(R);
  if (workers <= 1) {
    for (int i = 0; i < R; ++i)
      results[i] = one_replicate(cfg, i, strategy, master_seed, out_dir);
    return results;
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= R) return;
      results[i] = one_replicate(cfg, i, strategy, master_seed, out_dir);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, R); ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

namespace {

// betas first, then residual SDs, RE variances, covariances, phis;
// alphabetical within a group
int group_rank(const std::string& name) {
  if (name.rfind("beta", 0) == 0) return 0;
  if (name.rfind("sigma_eps", 0) == 0) return 1;
  if (name.rfind("sigma2_", 0) == 0) return 2;
  if (name.rfind("cov_", 0) == 0) return 3;
  if (name.rfind("phi", 0) == 0) return 4;
  return 5;
}

}  // namespace

BenchReport metrics(const std::vector<ReplicateResult>& results,
                    const std::map<std::string, double>& truth) {
  BenchReport rep;
  rep.replicates = static_cast<int>(results.size());

  std::vector<const ReplicateResult*> conv;
  for (const auto& r : results)
    if (r.converged) conv.push_back(&r);
  rep.converged = static_cast<int>(conv.size());
  if (conv.empty())
    throw NoConvergedReplicates("no converged replicates to summarize");

  std::vector<std::string> names;
  for (const auto& [k, v] : truth) names.push_back(k);
  std::stable_sort(names.begin(), names.end(),
                   [](const std::string& a, const std::string& b) {
                     const int ra = group_rank(a), rb = group_rank(b);
                     return ra != rb ? ra < rb : a < b;
                   });

  for (const auto& name : names) {
    MetricRow row;
    row.name = name;
    row.truth = truth.at(name);
    double sum = 0.0;
    int covered = 0;
    for (const auto* r : conv) {
      const auto it = r->estimate.find(name);
      if (it == r->estimate.end()) continue;
      row.estimates.push_back(it->second);
      sum += it->second - row.truth;
      if (r->lo.at(name) <= row.truth && row.truth <= r->hi.at(name))
        ++covered;
    }
    row.n_used = static_cast<int>(row.estimates.size());
    if (row.n_used > 0) {
      row.bias = sum / row.n_used;
      double ss = 0.0;
      for (double e : row.estimates) {
        const double d = (e - row.truth) - row.bias;
        ss += d * d;
      }
      row.sd = row.n_used > 1 ? std::sqrt(ss / (row.n_used - 1)) : 0.0;
      row.coverage = static_cast<double>(covered) / row.n_used;
    }
    rep.rows.push_back(std::move(row));
  }

  double tsum = 0.0;
  for (const auto& r : results) tsum += r.wall_s;
  rep.mean_time_s = tsum / rep.replicates;
  double tss = 0.0;
  for (const auto& r : results) {
    const double d = r.wall_s - rep.mean_time_s;
    tss += d * d;
  }
  rep.sd_time_s =
      rep.replicates > 1 ? std::sqrt(tss / (rep.replicates - 1)) : 0.0;
  return rep;
}

std::string bench_report_to_json(const BenchReport& report) {
  nlohmann::json j;
  j["replicates"] = report.replicates;
  j["converged"] = report.converged;
  j["mean_time_s"] = report.mean_time_s;
  j["sd_time_s"] = report.sd_time_s;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows)
    rows.push_back({{"name", r.name},
                    {"truth", r.truth},
                    {"bias", r.bias},
                    {"sd", r.sd},
                    {"coverage", r.coverage},
                    {"n_used", r.n_used},
                    {"estimates", r.estimates}});
  j["rows"] = rows;
  return j.dump(2);
}

BenchReport bench_report_from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  BenchReport rep;
  rep.replicates = j.at("replicates").get<int>();
  rep.converged = j.at("converged").get<int>();
  rep.mean_time_s = j.at("mean_time_s").get<double>();
  rep.sd_time_s = j.at("sd_time_s").get<double>();
  for (const auto& rj : j.at("rows")) {
    MetricRow r;
    r.name = rj.at("name").get<std::string>();
    r.truth = rj.at("truth").get<double>();
    r.bias = rj.at("bias").get<double>();
    r.sd = rj.at("sd").get<double>();
    r.coverage = rj.at("coverage").get<double>();
    r.n_used = rj.at("n_used").get<int>();
    r.estimates = rj.at("estimates").get<std::vector<double>>();
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

namespace {

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

void emit_report(const BenchReport& report, const std::string& dir) {
  if (report.rows.empty())
    throw ValidationError("emit_report: empty metric table");
  std::filesystem::create_directories(dir);

  {
    std::ofstream f(dir + "/report.csv");
    if (!f) throw IoError("cannot open " + dir + "/report.csv");
    f << "parameter,truth,bias,sd,coverage,n_used\n";
    for (const auto& r : report.rows)
      f << r.name << "," << fmt3(r.truth) << "," << fmt3(r.bias) << ","
        << fmt3(r.sd) << "," << fmt3(r.coverage) << "," << r.n_used << "\n";
    f << "# converged " << report.converged << "/" << report.replicates
      << "; time " << fmt3(report.mean_time_s) << " (" << fmt3(report.sd_time_s)
      << ") s; failed fits excluded from bias/SD/coverage\n";
    if (!f) throw IoError("failed writing report.csv");
  }
  {
    std::ofstream f(dir + "/report.md");
    if (!f) throw IoError("cannot open " + dir + "/report.md");
    f << "| Parameter | Truth | Bias | (SD) | CP |\n";
    f << "|---|---|---|---|---|\n";
    for (const auto& r : report.rows)
      f << "| " << r.name << " | " << fmt3(r.truth) << " | " << fmt3(r.bias)
        << " | (" << fmt3(r.sd) << ") | " << fmt3(r.coverage) << " |\n";
    f << "\nConvergence rate: " << report.converged << "/" << report.replicates
      << ". Mean time " << fmt3(report.mean_time_s) << " ("
      << fmt3(report.sd_time_s) << ") s. "
      << "Failed fits are excluded from bias/SD/CP.\n";
    if (!f) throw IoError("failed writing report.md");
  }
  {
    std::ofstream f(dir + "/report.json");
    if (!f) throw IoError("cannot open " + dir + "/report.json");
    f << bench_report_to_json(report) << "\n";
    if (!f) throw IoError("failed writing report.json");
  }
}

}  // namespace jointlap
