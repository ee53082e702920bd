#include "jointlap/modelspec.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace jointlap {

std::string family_name(FamilyKind k) {
  switch (k) {
    case FamilyKind::gaussian: return "gaussian";
    case FamilyKind::poisson: return "poisson";
    case FamilyKind::binomial: return "binomial";
  }
  return "?";
}

FamilyKind family_from_name(const std::string& name) {
  if (name == "gaussian") return FamilyKind::gaussian;
  if (name == "poisson") return FamilyKind::poisson;
  if (name == "binomial") return FamilyKind::binomial;
  throw SpecError("family", "unknown family '" + name + "'");
}

std::string Term::label() const {
  switch (kind) {
    case Kind::intercept: return "intercept";
    case Kind::time: return "t" + std::to_string(basis_col);
    case Kind::covariate: return "x" + std::to_string(cov_idx + 1);
    case Kind::interaction:
      return "x" + std::to_string(cov_idx + 1) + ":t" +
             std::to_string(basis_col);
  }
  return "?";
}

// ---- natural cubic spline ------------------------------------------------

void ns_basis(const std::vector<double>& interior_knots,
              const std::vector<double>& boundary_knots, double t,
              Eigen::RowVectorXd& basis, Eigen::RowVectorXd& deriv) {
  if (boundary_knots.size() != 2)
    throw KnotOrderError("ns_basis: need exactly 2 boundary knots");
  const double lo = boundary_knots[0], hi = boundary_knots[1];
  if (!(lo < hi)) throw KnotOrderError("ns_basis: boundary knots not ordered");
  for (size_t i = 0; i < interior_knots.size(); ++i) {
    if (interior_knots[i] <= lo || interior_knots[i] >= hi)
      throw KnotOrderError("ns_basis: interior knot outside boundary");
    if (i > 0 && interior_knots[i] <= interior_knots[i - 1])
      throw KnotOrderError("ns_basis: interior knots not increasing");
  }

  // all knots: lower boundary, interior, upper boundary
  std::vector<double> xi;
  xi.push_back(lo);
  xi.insert(xi.end(), interior_knots.begin(), interior_knots.end());
  xi.push_back(hi);
  const int K = static_cast<int>(xi.size());
  const int q = K - 1;  // = #interior + 1 columns

  basis.resize(q);
  deriv.resize(q);
  basis[0] = t;
  deriv[0] = 1.0;

  auto cube = [](double x) { return x > 0 ? x * x * x : 0.0; };
  auto sq = [](double x) { return x > 0 ? x * x : 0.0; };
  auto d_val = [&](int k) {
    return (cube(t - xi[k]) - cube(t - xi[K - 1])) / (xi[K - 1] - xi[k]);
  };
  auto d_der = [&](int k) {
    return 3.0 * (sq(t - xi[k]) - sq(t - xi[K - 1])) / (xi[K - 1] - xi[k]);
  };
  // N_k = d_k - d_{K-2}; cubic terms cancel so every column is linear
  // beyond the boundary knots
  const double dl = d_val(K - 2), dl_der = d_der(K - 2);
  for (int k = 0; k < K - 2; ++k) {
    basis[k + 1] = d_val(k) - dl;
    deriv[k + 1] = d_der(k) - dl_der;
  }
}

void TimeBasis::eval(double t, Eigen::RowVectorXd& basis,
                     Eigen::RowVectorXd& deriv) const {
  if (kind == Kind::linear) {
    basis.resize(1);
    deriv.resize(1);
    basis[0] = t;
    deriv[0] = 1.0;
  } else {
    ns_basis(interior_knots, boundary_knots, t, basis, deriv);
  }
}

// ---- validation ----------------------------------------------------------

int re_dim_per_subject(const ModelSpec& spec) {
  int d = 0;
  for (const auto& b : spec.re_blocks) d += b.dim();
  return d;
}

ModelSpec validate(ModelSpec spec) {
  if (spec.longitudinal.empty())
    throw SpecError("longitudinal", "at least one submodel required");

  std::set<int> marker_ids;
  for (size_t k = 0; k < spec.longitudinal.size(); ++k) {
    const auto& sm = spec.longitudinal[k];
    const std::string path = "longitudinal[" + std::to_string(k) + "]";
    if (!marker_ids.insert(sm.marker_id).second)
      throw SpecError(path + ".marker_id", "duplicate marker id");
    bool has_intercept = false;
    for (const auto& term : sm.fixed_terms) {
      if (term.kind == Term::Kind::intercept) has_intercept = true;
      if ((term.kind == Term::Kind::time ||
           term.kind == Term::Kind::interaction) &&
          (term.basis_col < 0 || term.basis_col >= sm.time_basis.cols()))
        throw SpecError(path + ".fixed_terms", "time basis column out of range");
    }
    if (!has_intercept)
      throw SpecError(path + ".fixed_terms", "intercept must be present");
    std::set<int> seen;
    for (int r : sm.random_terms) {
      if (r < 0 || r >= static_cast<int>(sm.fixed_terms.size()))
        throw SpecError(path + ".random_terms",
                        "random term not among fixed terms");
      if (!seen.insert(r).second)
        throw SpecError(path + ".random_terms", "duplicate random term");
    }
    if (sm.time_basis.kind == TimeBasis::Kind::natural_spline) {
      // constructor-level knot checks
      Eigen::RowVectorXd b, d;
      sm.time_basis.eval(0.0, b, d);
    }
  }

  // RE blocks partition the random terms
  std::set<std::pair<int, int>> all_random;
  for (const auto& sm : spec.longitudinal)
    for (size_t r = 0; r < sm.random_terms.size(); ++r)
      all_random.insert({sm.marker_id, static_cast<int>(r)});
  std::set<std::pair<int, int>> covered;
  for (size_t b = 0; b < spec.re_blocks.size(); ++b) {
    auto& blk = spec.re_blocks[b];
    const std::string path = "re_blocks[" + std::to_string(b) + "]";
    if (blk.dim() > 10)
      throw SpecError(path, "correlated block dimension " +
                                std::to_string(blk.dim()) + " exceeds limit 10");
    for (const auto& m : blk.members) {
      if (!all_random.count(m))
        throw SpecError(path + ".members", "member is not a random term");
      if (!covered.insert(m).second)
        throw SpecError(path + ".members", "member appears in two blocks");
    }
    if (blk.iw_nu <= 0.0) blk.iw_nu = blk.dim() + 2;
    if (blk.iw_scale <= 0.0)
      throw SpecError(path + ".iw_scale", "scale must be positive");
  }
  if (covered != all_random)
    throw SpecError("re_blocks", "blocks do not cover every random term");

  for (size_t m = 0; m < spec.survival.size(); ++m) {
    auto& sv = spec.survival[m];
    const std::string path = "survival[" + std::to_string(m) + "]";
    sv.cause_id = static_cast<int>(m) + 1;
    if (sv.baseline.bins < 3)
      throw SpecError(path + ".baseline.bins", "need at least 3 bins");
    if (sv.baseline.pc_lambda <= 0.0)
      sv.baseline.pc_lambda = pc_lambda_for(1.0, 0.01);
    for (const auto& a : sv.association_terms) {
      auto it = std::find_if(spec.longitudinal.begin(), spec.longitudinal.end(),
                             [&](const LongSubmodelSpec& s) {
                               return s.marker_id == a.source_marker;
                             });
      if (it == spec.longitudinal.end())
        throw SpecError(path + ".association_terms", "unknown source marker");
      if (a.kind == AssociationTerm::Kind::shared_random_effect &&
          (a.re_term < 0 ||
           a.re_term >= static_cast<int>(it->random_terms.size())))
        throw SpecError(path + ".association_terms",
                        "shared random effect term out of range");
    }
  }

  if (spec.priors.beta_scale <= 0 || spec.priors.gamma_scale <= 0 ||
      spec.priors.phi_scale <= 0 || spec.priors.resid_shape <= 0 ||
      spec.priors.resid_rate <= 0)
    throw SpecError("priors", "all scales must be positive");

  return spec;
}

// ---- prior densities -----------------------------------------------------

double gaussian_logpdf(double x, double mean, double scale) {
  if (scale <= 0) throw SupportError("gaussian_logpdf: scale <= 0");
  const double z = (x - mean) / scale;
  return -std::log(scale) - 0.5 * std::log(2.0 * std::numbers::pi) -
         0.5 * z * z;
}

double pc_prec_logpdf(double tau, double lambda) {
  if (tau <= 0 || lambda <= 0) throw SupportError("pc_prec_logpdf: support");
  return std::log(lambda / 2.0) - 1.5 * std::log(tau) -
         lambda / std::sqrt(tau);
}

double gamma_logpdf(double x, double shape, double rate) {
  if (x <= 0 || shape <= 0 || rate <= 0)
    throw SupportError("gamma_logpdf: support");
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

double pc_lambda_for(double u, double alpha) {
  return -std::log(alpha) / u;
}

namespace {
double log_multigamma(double a, int d) {
  double s = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= d; ++j) s += std::lgamma(a + 0.5 * (1.0 - j));
  return s;
}
}  // namespace

double inv_wishart_logpdf(const Eigen::MatrixXd& sigma, double nu,
                          const Eigen::MatrixXd& scale) {
  const int d = static_cast<int>(sigma.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw SupportError("inv_wishart_logpdf: sigma not positive definite");
  Eigen::LLT<Eigen::MatrixXd> llt_s(scale);
  if (llt_s.info() != Eigen::Success)
    throw SupportError("inv_wishart_logpdf: scale not positive definite");
  double logdet_sigma = 0.0, logdet_scale = 0.0;
  for (int i = 0; i < d; ++i) {
    logdet_sigma += 2.0 * std::log(llt.matrixL()(i, i));
    logdet_scale += 2.0 * std::log(llt_s.matrixL()(i, i));
  }
  const double tr = llt.solve(scale).trace();
  return 0.5 * nu * logdet_scale - 0.5 * nu * d * std::log(2.0) -
         log_multigamma(0.5 * nu, d) -
         0.5 * (nu + d + 1.0) * logdet_sigma - 0.5 * tr;
}

// ---- hyperparameter map --------------------------------------------------

HyperMap::HyperMap(const ModelSpec& spec) : spec_(&spec) {
  int off = 0;
  for (const auto& sm : spec.longitudinal)
    if (sm.family.kind == FamilyKind::gaussian) eps_offset_.push_back(off++);
  for (const auto& blk : spec.re_blocks) {
    block_offset_.push_back(off);
    block_dim_.push_back(blk.dim());
    off += blk.dim() * (blk.dim() + 1) / 2;
  }
  for (size_t m = 0; m < spec.survival.size(); ++m) base_offset_.push_back(off++);
  phi_offset_ = off;
  for (const auto& sv : spec.survival)
    n_phi_ += static_cast<int>(sv.association_terms.size());
  off += n_phi_;
  dim_ = off;
}

Eigen::MatrixXd HyperMap::block_chol(const Eigen::VectorXd& theta,
                                     int b) const {
  const int d = block_dim_[b];
  const int off = block_offset_[b];
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) L(i, i) = std::exp(theta[off + i]);
  int p = off + d;
  for (int j = 0; j < d; ++j)
    for (int i = j + 1; i < d; ++i) L(i, j) = theta[p++];
  return L;
}

Eigen::MatrixXd HyperMap::block_precision(const Eigen::VectorXd& theta,
                                          int b) const {
  Eigen::MatrixXd L = block_chol(theta, b);
  return L * L.transpose();
}

HyperNatural HyperMap::to_natural(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim_)
    throw DimensionMismatch("to_natural: theta length mismatch");
  HyperNatural w;
  for (int off : eps_offset_) w.tau_eps.push_back(std::exp(theta[off]));
  for (size_t b = 0; b < block_offset_.size(); ++b) {
    Eigen::MatrixXd P = block_precision(theta, static_cast<int>(b));
    w.re_cov.push_back(P.inverse());
  }
  for (int off : base_offset_) w.tau_baseline.push_back(std::exp(theta[off]));
  for (int j = 0; j < n_phi_; ++j) w.phi.push_back(theta[phi_offset_ + j]);
  return w;
}

Eigen::VectorXd HyperMap::from_natural(const HyperNatural& omega) const {
  Eigen::VectorXd theta(dim_);
  if (omega.tau_eps.size() != eps_offset_.size() ||
      omega.re_cov.size() != block_offset_.size() ||
      omega.tau_baseline.size() != base_offset_.size() ||
      static_cast<int>(omega.phi.size()) != n_phi_)
    throw DimensionMismatch("from_natural: component count mismatch");
  for (size_t i = 0; i < eps_offset_.size(); ++i) {
    if (omega.tau_eps[i] <= 0) throw SupportError("tau_eps must be positive");
    theta[eps_offset_[i]] = std::log(omega.tau_eps[i]);
  }
  for (size_t b = 0; b < block_offset_.size(); ++b) {
    const int d = block_dim_[b];
    Eigen::LLT<Eigen::MatrixXd> llt(omega.re_cov[b].inverse());
    if (llt.info() != Eigen::Success)
      throw SupportError("re_cov must be positive definite");
    Eigen::MatrixXd L = llt.matrixL();
    const int off = block_offset_[b];
    for (int i = 0; i < d; ++i) theta[off + i] = std::log(L(i, i));
    int p = off + d;
    for (int j = 0; j < d; ++j)
      for (int i = j + 1; i < d; ++i) theta[p++] = L(i, j);
  }
  for (size_t m = 0; m < base_offset_.size(); ++m) {
    if (omega.tau_baseline[m] <= 0)
      throw SupportError("tau_baseline must be positive");
    theta[base_offset_[m]] = std::log(omega.tau_baseline[m]);
  }
  for (int j = 0; j < n_phi_; ++j) theta[phi_offset_ + j] = omega.phi[j];
  return theta;
}

double HyperMap::log_jacobian(const Eigen::VectorXd& theta) const {
  double lj = 0.0;
  for (int off : eps_offset_) lj += theta[off];       // d tau / d log tau
  for (int off : base_offset_) lj += theta[off];
  for (size_t b = 0; b < block_offset_.size(); ++b) {
    const int d = block_dim_[b];
    const int off = block_offset_[b];
    // theta -> L -> P = L L^T -> Sigma = P^{-1}, Jacobian of vech(Sigma)
    double sum_log_diag = 0.0;
    lj += d * std::log(2.0);
    for (int i = 0; i < d; ++i) {
      const double log_lii = theta[off + i];
      sum_log_diag += log_lii;
      lj += (d - i + 1) * log_lii;  // (d - i + 2) with 1-based i
    }
    lj -= 2.0 * (d + 1) * sum_log_diag;
  }
  return lj;
}

double HyperMap::log_prior(const Eigen::VectorXd& theta) const {
  const auto& pr = spec_->priors;
  HyperNatural w = to_natural(theta);
  double lp = log_jacobian(theta);
  for (double tau : w.tau_eps)
    lp += gamma_logpdf(tau, pr.resid_shape, pr.resid_rate);
  for (size_t b = 0; b < w.re_cov.size(); ++b) {
    const auto& blk = spec_->re_blocks[b];
    Eigen::MatrixXd S =
        blk.iw_scale * Eigen::MatrixXd::Identity(blk.dim(), blk.dim());
    lp += inv_wishart_logpdf(w.re_cov[b], blk.iw_nu, S);
  }
  for (size_t m = 0; m < w.tau_baseline.size(); ++m)
    lp += pc_prec_logpdf(w.tau_baseline[m],
                         spec_->survival[m].baseline.pc_lambda);
  for (double phi : w.phi) lp += gaussian_logpdf(phi, 0.0, pr.phi_scale);
  return lp;
}

std::vector<std::string> HyperMap::names() const {
  std::vector<std::string> out(dim_);
  size_t g = 0;
  for (const auto& sm : spec_->longitudinal)
    if (sm.family.kind == FamilyKind::gaussian) {
      out[eps_offset_[g]] = "log_tau_eps" + std::to_string(sm.marker_id);
      ++g;
    }
  for (size_t b = 0; b < block_offset_.size(); ++b) {
    const int d = block_dim_[b];
    for (int i = 0; i < d; ++i)
      out[block_offset_[b] + i] =
          "block" + std::to_string(b + 1) + "_logdiag" + std::to_string(i);
    int p = block_offset_[b] + d;
    for (int j = 0; j < d; ++j)
      for (int i = j + 1; i < d; ++i)
        out[p++] = "block" + std::to_string(b + 1) + "_off" +
                   std::to_string(i) + std::to_string(j);
  }
  for (size_t m = 0; m < base_offset_.size(); ++m)
    out[base_offset_[m]] = "log_tau_base" + std::to_string(m + 1);
  for (int j = 0; j < n_phi_; ++j)
    out[phi_offset_ + j] = "phi" + std::to_string(j + 1);
  return out;
}

}  // namespace jointlap
