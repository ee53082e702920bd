#pragma once

// Nested approximation engine: inner Gaussian approximation of the
// latent field, hyperparameter posterior exploration and posterior
// summaries.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jointlap/lgm.hpp"
#include "jointlap/numkernel.hpp"

namespace jointlap {

struct LoglikDerivs {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

// Log-likelihood of one observation as a function of the linear
// predictor, with analytic first and second derivatives. For the
// Gaussian family `scale` is the residual precision.
LoglikDerivs loglik_eta(FamilyKind family, double y, double eta,
                        double scale = 1.0);

struct GaussianApprox {
  Eigen::VectorXd mode;
  CholFactor curvature;       // factor of H = Q + A^T W A at the mode
  double logdet_Q = 0.0;
  double quad = 0.0;          // u*^T Q u*
  double loglik = 0.0;        // sum of observation log-likelihoods at u*
  int newton_iterations = 0;

  Eigen::VectorXd marginal_sd() const {
    return takahashi_marginal_variances(curvature).cwiseSqrt();
  }
};

struct HyperPoint {
  Eigen::VectorXd theta;
  double log_post = 0.0;
  double weight = 0.0;
  GaussianApprox approx;
  Eigen::VectorXd marginal_sd;
};

struct MixtureComponent {
  double weight = 0.0;
  double mean = 0.0;
  double sd = 0.0;
};
using MarginalMixture = std::vector<MixtureComponent>;

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

double mixture_mean(const MarginalMixture& mix);
double mixture_sd(const MarginalMixture& mix);
double mixture_quantile(const MarginalMixture& mix, double p);

enum class Strategy { EB, FULL };

struct InferenceConfig {
  Strategy strategy = Strategy::EB;
  double ccd_z = 1.2;           // axial exploration radius in std units
  double grad_step = 1e-4;      // central FD step for hyper gradients
  double grad_tol = 1e-3;
  double step_tol = 1e-4;
  int max_outer_iterations = 200;
  int max_inner_iterations = 100;
  int hyper_samples = 5000;     // MC draws for natural-scale summaries
  std::uint64_t seed = 1;
  bool skip_latent_re_summaries = true;  // keep fit.json small
};

struct StageTimings {
  double assemble_s = 0.0;
  double optimize_s = 0.0;
  double explore_s = 0.0;
  double summarize_s = 0.0;
  double total_s = 0.0;
};

struct FitResult {
  Strategy strategy = Strategy::EB;
  bool converged = false;
  std::string failure_reason;
  int outer_iterations = 0;
  Eigen::VectorXd theta_mode;
  Eigen::MatrixXd hyper_hessian;        // of log posterior at the mode
  std::vector<HyperPoint> points;
  std::vector<MarginalMixture> latent_mixtures;  // per reported coordinate
  std::vector<SummaryRow> latent_summaries;
  std::vector<SummaryRow> hyper_summaries;
  double log_marginal = 0.0;
  StageTimings timings;
};

class Engine {
 public:
  explicit Engine(const AssembledModel& model) : model_(&model) {}

  const AssembledModel& model() const { return *model_; }

  GaussianApprox inner_newton(const Eigen::VectorXd& theta,
                              const Eigen::VectorXd* warm_start = nullptr,
                              int max_iterations = 100) const;

  // Laplace approximation of the unnormalized log hyperparameter
  // posterior; -inf when the inner problem diverges. Warm-starts from
  // the most recent mode.
  double log_hyper_post(const Eigen::VectorXd& theta) const;

  std::pair<Eigen::VectorXd, Eigen::MatrixXd> optimize_hyper(
      const Eigen::VectorXd& theta0, const InferenceConfig& cfg,
      bool* converged = nullptr, int* iterations = nullptr) const;

  std::vector<HyperPoint> explore(const Eigen::VectorXd& theta_star,
                                  const Eigen::MatrixXd& hess,
                                  const InferenceConfig& cfg) const;

  FitResult fit(const InferenceConfig& cfg) const;

 private:
  const AssembledModel* model_;
  mutable std::optional<Eigen::VectorXd> warm_mode_;
};

// Per-coordinate Gaussian mixtures over the hyper points.
std::vector<MarginalMixture> latent_marginals(
    const std::vector<HyperPoint>& points, const std::vector<int>& coords);

// Natural-scale hyperparameter table: MC through the theta -> omega map.
std::vector<SummaryRow> hyper_summaries(const AssembledModel& model,
                                        const std::vector<HyperPoint>& points,
                                        const Eigen::MatrixXd& hyper_cov,
                                        int n_samples, std::uint64_t seed);

struct JointDraw {
  Eigen::VectorXd theta;
  Eigen::VectorXd u;
};

std::vector<JointDraw> sample_joint_posterior(
    const std::vector<HyperPoint>& points, const Eigen::MatrixXd& hyper_cov,
    int n_samples, std::uint64_t seed);

// JSON round trip of the fit (summaries, points, diagnostics, timings).
std::string fit_to_json(const FitResult& fit, const AssembledModel& model);
void write_fit_json(const FitResult& fit, const AssembledModel& model,
                    const std::string& path);

}  // namespace jointlap
