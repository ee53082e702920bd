#pragma once

// Replicate benchmark harness: simulate, fit, and summarize bias, SD of
// the estimates and coverage of the 95% intervals.

#include <map>
#include <string>
#include <vector>

#include "jointlap/infer.hpp"
#include "jointlap/simulate.hpp"

namespace jointlap {

struct ReplicateResult {
  int index = 0;
  bool converged = false;
  double wall_s = 0.0;
  std::string failure_reason;
  // parameter name -> posterior mean and 95% interval
  std::map<std::string, double> estimate, lo, hi;
};

struct MetricRow {
  std::string name;
  double truth = 0.0;
  double bias = 0.0;
  double sd = 0.0;
  double coverage = 0.0;
  int n_used = 0;
  std::vector<double> estimates;  // converged replicates, index order
};

struct BenchReport {
  std::vector<MetricRow> rows;
  int replicates = 0;
  int converged = 0;
  double mean_time_s = 0.0;
  double sd_time_s = 0.0;
};

// One simulate+fit per replicate; replicate i uses the stream derived
// from (master seed, i). Failures are recorded, never thrown. When
// out_dir is non-empty, writes replicates/<i>/fit.json and truth.json.
std::vector<ReplicateResult> run_replicates(const ScenarioConfig& cfg, int R,
                                            Strategy strategy,
                                            std::uint64_t master_seed,
                                            int workers = 1,
                                            const std::string& out_dir = "");

// Extraction used by run_replicates; exposed for tests.
ReplicateResult extract_estimates(const FitResult& fit, int index);

// Bias/SD/coverage over converged replicates only. Rows in a fixed
// canonical order (betas, residual SDs, RE variances, covariances,
// association scalars). Throws NoConvergedReplicates.
BenchReport metrics(const std::vector<ReplicateResult>& results,
                    const std::map<std::string, double>& truth);

// report.csv and report.md round to 3 decimals; report.json keeps full
// precision and round-trips through bench_report_from_json.
void emit_report(const BenchReport& report, const std::string& dir);
std::string bench_report_to_json(const BenchReport& report);
BenchReport bench_report_from_json(const std::string& json_text);

}  // namespace jointlap
