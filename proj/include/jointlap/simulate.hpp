#pragma once

// Benchmark data generation: linear marker trajectories with shared
// random effects, and event times from the permutational algorithm with
// a calibrated exponential marginal.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "jointlap/augment.hpp"
#include "jointlap/modelspec.hpp"

namespace jointlap {

struct ScenarioConfig {
  int id = 0;
  int n_subjects = 500;
  std::vector<FamilyKind> families;    // per marker
  std::vector<Eigen::VectorXd> beta;   // per marker: intercept, t, x1, x2
  std::vector<double> sigma_eps;       // per marker; used for gaussian only
  std::vector<bool> random_slope;      // per marker (binary markers: false)
  Eigen::MatrixXd re_cov;              // joint RE covariance, block order
  std::vector<double> phi;             // current-value association per marker
  double horizon = 5.0;
  double dropout_max = 10.0;           // drop-out ~ U(0, dropout_max)
  double target_event_fraction = 0.4;
  double cont_visit_spacing = 1.0;
  double binary_visit_spacing = 0.2;
  std::uint64_t seed = 1;

  int n_markers() const { return static_cast<int>(families.size()); }
  int re_dim() const;
  void check() const;  // Sigma PD, event fraction in (0,1)
};

// Per-subject generating truth; every trajectory is linear in t so the
// linear predictor is carried as two coefficients per marker.
struct SubjectTruth {
  std::vector<double> covariates;  // x1 ~ N(0,1), x2 ~ Bernoulli(0.5)
  std::vector<double> eta0, eta1;  // per marker: eta_k(t) = eta0 + eta1 t
  double eta(int k, double t) const { return eta0[k] + eta1[k] * t; }
};

// Covariates, random effects and full-schedule marker observations over
// [0, horizon]; truncation to each subject's follow-up happens later.
std::pair<LongDataset, std::vector<SubjectTruth>>
gen_covariates_and_trajectories(const ScenarioConfig& cfg,
                                std::mt19937_64& rng);

// Sylvestre-Abrahamowicz matching: marginal (time, status) pairs are
// sorted and events are assigned to risk-set subjects with probability
// proportional to exp(sum_k phi_k eta_ik(t) + gamma^T w_i); censorings
// are assigned uniformly. Subject ids are 1-based positions.
SurvDataset permalgo(const std::vector<double>& event_times,
                     const std::vector<double>& censoring_times,
                     const std::vector<SubjectTruth>& subjects,
                     const std::vector<double>& phi,
                     const std::vector<double>& gamma, std::mt19937_64& rng);

// Bisection on the marginal exponential rate; 20 pilot draws per
// evaluation, accepted within +-0.02 of the target fraction. Throws
// CalibrationFailure when no bracket exists or after 40 steps.
double calibrate_event_rate(const ScenarioConfig& cfg, double target);

ScenarioConfig scenario_preset(int id);  // 1..10, throws UnknownScenario

// The fitting model matching a scenario: linear trajectories, one joint
// RE block, single cause with an RW2 baseline and current-value links.
ModelSpec scenario_modelspec(const ScenarioConfig& cfg, int bins = 15);

// Generating parameter values keyed by report name (beta10, sigma_eps1,
// sigma2_b10, cov_b10_b11, phi1, ...).
std::map<std::string, double> scenario_truth(const ScenarioConfig& cfg);

struct SimulatedData {
  LongDataset longitudinal;
  SurvDataset survival;
  std::map<std::string, double> truth;  // parameter name -> value
  double marginal_rate = 0.0;
  double event_fraction = 0.0;
};

SimulatedData simulate_scenario(const ScenarioConfig& cfg);

// Per-replicate stream: same generator family, decorrelated seed.
std::uint64_t replicate_seed(std::uint64_t master_seed, int replicate);

// Two-cause smoke data: independent cause-specific exponential margins
// plus one Gaussian marker; exercises M = 2 plumbing only.
SimulatedData simulate_two_cause_smoke(int n_subjects, std::uint64_t seed);

// Writes long.csv, surv.csv and truth.json under dir (created if absent).
void write_scenario(const SimulatedData& data, const ScenarioConfig& cfg,
                    const std::string& dir);

}  // namespace jointlap
