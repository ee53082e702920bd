#pragma once

// Declarative model description: longitudinal submodels, random-effect
// blocks, cause-specific hazards, priors, spline bases and the map
// between natural-scale hyperparameters and unconstrained coordinates.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "jointlap/errors.hpp"

namespace jointlap {

enum class FamilyKind { gaussian, poisson, binomial };
enum class LinkKind { identity, log, logit };

struct Family {
  FamilyKind kind = FamilyKind::gaussian;
  // canonical links only
  LinkKind link() const {
    switch (kind) {
      case FamilyKind::gaussian: return LinkKind::identity;
      case FamilyKind::poisson: return LinkKind::log;
      case FamilyKind::binomial: return LinkKind::logit;
    }
    return LinkKind::identity;
  }
};

std::string family_name(FamilyKind k);
FamilyKind family_from_name(const std::string& name);

// One design column of a linear predictor.
struct Term {
  enum class Kind { intercept, time, covariate, interaction };
  Kind kind = Kind::intercept;
  int basis_col = -1;  // for time / interaction: column of the time basis
  int cov_idx = -1;    // for covariate / interaction: index into covariates

  static Term Intercept() { return {Kind::intercept, -1, -1}; }
  static Term Time(int col) { return {Kind::time, col, -1}; }
  static Term Covariate(int idx) { return {Kind::covariate, -1, idx}; }
  static Term Interaction(int idx, int col) {
    return {Kind::interaction, col, idx};
  }
  bool operator==(const Term&) const = default;
  std::string label() const;
};

struct TimeBasis {
  enum class Kind { linear, natural_spline };
  Kind kind = Kind::linear;
  std::vector<double> interior_knots;
  std::vector<double> boundary_knots;  // {lower, upper}

  int cols() const {
    return kind == Kind::linear
               ? 1
               : static_cast<int>(interior_knots.size()) + 1;
  }
  // value and first derivative of each basis column at t
  void eval(double t, Eigen::RowVectorXd& basis,
            Eigen::RowVectorXd& deriv) const;
};

// Natural cubic spline with q = #interior + 1 columns; linear beyond the
// boundary knots. First column is t itself, the rest carry the curvature.
void ns_basis(const std::vector<double>& interior_knots,
              const std::vector<double>& boundary_knots, double t,
              Eigen::RowVectorXd& basis, Eigen::RowVectorXd& deriv);

struct LongSubmodelSpec {
  int marker_id = 1;  // 1-based
  Family family;
  std::vector<Term> fixed_terms;   // intercept always present
  std::vector<int> random_terms;   // indices into fixed_terms
  TimeBasis time_basis;
};

struct REBlockSpec {
  // (marker_id, random-term position within that marker) sharing one
  // correlated block
  std::vector<std::pair<int, int>> members;
  double iw_nu = 0.0;       // 0 means default dim + 2
  double iw_scale = 1.0;    // S = iw_scale * I
  int dim() const { return static_cast<int>(members.size()); }
};

struct AssociationTerm {
  enum class Kind { current_value, current_slope, shared_random_effect };
  int source_marker = 1;
  Kind kind = Kind::current_value;
  int re_term = 0;  // for shared_random_effect: random-term position
};

struct BaselineSpec {
  enum class Kind { rw1, rw2 };
  Kind kind = Kind::rw2;
  int bins = 15;
  double pc_lambda = 0.0;  // 0 means default so that P(sigma > 1) = 0.01
};

struct SurvSubmodelSpec {
  int cause_id = 1;  // 1-based, in 1..M
  int n_covariates = 0;  // gamma_m columns taken from the surv covariates
  BaselineSpec baseline;
  std::vector<AssociationTerm> association_terms;
};

struct PriorSpec {
  double beta_scale = 2.5;   // Gaussian(0, scale) on longitudinal fixed effects
  double gamma_scale = 2.5;  // same for hazard covariates
  double phi_scale = 2.5;    // Gaussian prior on association scalars
  // log-gamma prior on each Gaussian residual precision
  double resid_shape = 1.0;
  double resid_rate = 5e-5;
};

struct ModelSpec {
  std::vector<LongSubmodelSpec> longitudinal;
  std::vector<REBlockSpec> re_blocks;
  std::vector<SurvSubmodelSpec> survival;
  PriorSpec priors;

  int n_markers() const { return static_cast<int>(longitudinal.size()); }
  int n_causes() const { return static_cast<int>(survival.size()); }
};

// Verifies every invariant; fills defaults (iw_nu, pc_lambda) and returns
// the checked spec. Throws SpecError with a field path otherwise.
ModelSpec validate(ModelSpec spec);

// Random effects per subject = sum of block dims.
int re_dim_per_subject(const ModelSpec& spec);

// ---- prior densities ----------------------------------------------------

double gaussian_logpdf(double x, double mean, double scale);
// PC prior on a precision: pi(tau) = (lambda/2) tau^{-3/2} exp(-lambda/sqrt(tau))
double pc_prec_logpdf(double tau, double lambda);
double gamma_logpdf(double x, double shape, double rate);
double inv_wishart_logpdf(const Eigen::MatrixXd& sigma, double nu,
                          const Eigen::MatrixXd& scale);

// rate such that P(sigma > u) = alpha under the PC prior
double pc_lambda_for(double u, double alpha);

// ---- hyperparameter coordinates ----------------------------------------

// Natural-scale hyperparameters omega.
struct HyperNatural {
  std::vector<double> tau_eps;            // per Gaussian marker
  std::vector<Eigen::MatrixXd> re_cov;    // covariance Sigma per RE block
  std::vector<double> tau_baseline;       // per cause
  std::vector<double> phi;                // per association term, model order
};

// Layout of the unconstrained vector theta and the bijection to omega.
// Scalars map through log precision; RE blocks through the log-Cholesky
// coordinates of the block precision; phi through identity.
class HyperMap {
 public:
  explicit HyperMap(const ModelSpec& spec);

  int dim() const { return dim_; }
  int n_phi() const { return n_phi_; }
  int phi_offset() const { return phi_offset_; }

  HyperNatural to_natural(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd from_natural(const HyperNatural& omega) const;
  // log |d omega / d theta| for transporting priors stated on the
  // natural scale (covariance entries for RE blocks)
  double log_jacobian(const Eigen::VectorXd& theta) const;
  // log prior density of omega(theta) plus the Jacobian
  double log_prior(const Eigen::VectorXd& theta) const;

  // Precision matrix of RE block b at theta (the L L^T product).
  Eigen::MatrixXd block_precision(const Eigen::VectorXd& theta, int b) const;

  std::vector<std::string> names() const;

 private:
  Eigen::MatrixXd block_chol(const Eigen::VectorXd& theta, int b) const;

  const ModelSpec* spec_;
  int dim_ = 0;
  int n_phi_ = 0;
  std::vector<int> eps_offset_;    // per gaussian marker
  std::vector<int> block_offset_;  // per RE block
  std::vector<int> block_dim_;
  std::vector<int> base_offset_;   // per cause
  int phi_offset_ = 0;
};

}  // namespace jointlap
