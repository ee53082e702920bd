#include "jointlap/lgm.hpp"

#include <algorithm>
#include <cmath>

namespace jointlap {

int LatentIndex::dim() const {
  int d = n_subjects * re_dim + n_causes * bins;
  for (int g : gamma_size) d += g;
  for (int b : beta_size) d += b;
  return d;
}

int LatentIndex::gamma_offset(int cause_idx) const {
  int off = n_subjects * re_dim + n_causes * bins;
  for (int m = 0; m < cause_idx; ++m) off += gamma_size[m];
  return off;
}

int LatentIndex::beta_offset(int marker_idx) const {
  int off = n_subjects * re_dim + n_causes * bins;
  for (int g : gamma_size) off += g;
  for (int k = 0; k < marker_idx; ++k) off += beta_size[k];
  return off;
}

std::vector<std::string> LatentIndex::names(const ModelSpec& spec) const {
  std::vector<std::string> out(dim());
  for (int i = 0; i < n_subjects; ++i)
    for (const auto& [key, off] : re_coord)
      out[re_offset(i) + off] = "b_" + std::to_string(key.first) +
                                std::to_string(key.second) + "_subj" +
                                std::to_string(subject_ids[i]);
  for (int m = 0; m < n_causes; ++m)
    for (int b = 0; b < bins; ++b)
      out[baseline_offset(m) + b] =
          "logbase" + std::to_string(m + 1) + "_bin" + std::to_string(b);
  for (int m = 0; m < n_causes; ++m)
    for (int j = 0; j < gamma_size[m]; ++j)
      out[gamma_offset(m) + j] = gamma_size[m] == 1
                                     ? "gamma" + std::to_string(m + 1)
                                     : "gamma" + std::to_string(m + 1) + "_" +
                                           std::to_string(j + 1);
  for (size_t k = 0; k < spec.longitudinal.size(); ++k)
    for (int j = 0; j < beta_size[k]; ++j)
      out[beta_offset(static_cast<int>(k)) + j] =
          "beta" + std::to_string(spec.longitudinal[k].marker_id) +
          std::to_string(j);
  return out;
}

LatentIndex build_latent_index(const ModelSpec& spec, const SurvDataset& surv,
                               int n_surv_covariates) {
  LatentIndex idx;
  idx.n_subjects = static_cast<int>(surv.records.size());
  for (int i = 0; i < idx.n_subjects; ++i) {
    idx.subject_ids.push_back(surv.records[i].subject);
    idx.subject_index[surv.records[i].subject] = i;
  }
  idx.re_dim = re_dim_per_subject(spec);
  int off = 0;
  for (const auto& blk : spec.re_blocks)
    for (const auto& m : blk.members) idx.re_coord[m] = off++;
  idx.n_causes = spec.n_causes();
  if (idx.n_causes > 0) {
    idx.bins = spec.survival[0].baseline.bins;
    for (const auto& sv : spec.survival) {
      if (sv.baseline.bins != idx.bins)
        throw SpecError("survival.baseline.bins",
                        "all causes must share the bin count");
      (void)sv;
    }
  }
  for (const auto& sv : spec.survival) {
    if (sv.n_covariates > n_surv_covariates)
      throw SpecError("survival.n_covariates",
                      "more hazard covariates than survival data columns");
    idx.gamma_size.push_back(sv.n_covariates);
  }
  for (const auto& sm : spec.longitudinal)
    idx.beta_size.push_back(static_cast<int>(sm.fixed_terms.size()));
  return idx;
}

SymSparse rw1_precision(int B, double tau) {
  if (B < 2 || tau <= 0) throw ValidationError("rw1_precision: B >= 2, tau > 0");
  std::vector<Eigen::Triplet<double>> t;
  for (int r = 0; r < B - 1; ++r) {
    // row of D: (-1, 1); accumulate tau * D^T D
    t.emplace_back(r, r, tau);
    t.emplace_back(r + 1, r + 1, tau);
    t.emplace_back(r + 1, r, -tau);
  }
  return SymSparse(B, t);
}

SymSparse rw2_precision(int B, double tau) {
  if (B < 3 || tau <= 0) throw ValidationError("rw2_precision: B >= 3, tau > 0");
  std::vector<Eigen::Triplet<double>> t;
  const double d[3] = {1.0, -2.0, 1.0};
  for (int r = 0; r < B - 2; ++r)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j <= i; ++j)
        t.emplace_back(r + i, r + j, tau * d[i] * d[j]);
  return SymSparse(B, t);
}

Eigen::MatrixXd re_precision(const Eigen::VectorXd& theta_coords, int dim) {
  if (theta_coords.size() != dim * (dim + 1) / 2)
    throw DimensionMismatch("re_precision: coordinate count mismatch");
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) L(i, i) = std::exp(theta_coords[i]);
  int p = dim;
  for (int j = 0; j < dim; ++j)
    for (int i = j + 1; i < dim; ++i) L(i, j) = theta_coords[p++];
  return L * L.transpose();
}

namespace {

const LongSubmodelSpec& submodel_for(const ModelSpec& spec, int marker_id) {
  for (const auto& sm : spec.longitudinal)
    if (sm.marker_id == marker_id) return sm;
  throw SpecError("marker", "unknown marker id " + std::to_string(marker_id));
}

int marker_position(const ModelSpec& spec, int marker_id) {
  for (size_t k = 0; k < spec.longitudinal.size(); ++k)
    if (spec.longitudinal[k].marker_id == marker_id) return static_cast<int>(k);
  throw SpecError("marker", "unknown marker id");
}

double term_value(const Term& term, const Eigen::RowVectorXd& basis,
                  const std::vector<double>& cov) {
  switch (term.kind) {
    case Term::Kind::intercept: return 1.0;
    case Term::Kind::time: return basis[term.basis_col];
    case Term::Kind::covariate:
      return term.cov_idx < static_cast<int>(cov.size()) ? cov[term.cov_idx]
                                                         : 0.0;
    case Term::Kind::interaction:
      return (term.cov_idx < static_cast<int>(cov.size()) ? cov[term.cov_idx]
                                                          : 0.0) *
             basis[term.basis_col];
  }
  return 0.0;
}

double term_deriv(const Term& term, const Eigen::RowVectorXd& deriv,
                  const std::vector<double>& cov) {
  switch (term.kind) {
    case Term::Kind::intercept: return 0.0;
    case Term::Kind::time: return deriv[term.basis_col];
    case Term::Kind::covariate: return 0.0;
    case Term::Kind::interaction:
      return (term.cov_idx < static_cast<int>(cov.size()) ? cov[term.cov_idx]
                                                          : 0.0) *
             deriv[term.basis_col];
  }
  return 0.0;
}

// Full design row (fixed + random coefficients) of marker k for one
// subject at time t; use_deriv selects the time derivative.
SparseRow marker_design(const ModelSpec& spec, const LatentIndex& idx,
                        int marker_id, int subject_idx,
                        const std::vector<double>& cov, double t,
                        bool use_deriv) {
  const auto& sm = submodel_for(spec, marker_id);
  const int kpos = marker_position(spec, marker_id);
  Eigen::RowVectorXd basis, deriv;
  sm.time_basis.eval(t, basis, deriv);
  SparseRow row;
  const int boff = idx.beta_offset(kpos);
  for (size_t j = 0; j < sm.fixed_terms.size(); ++j) {
    const double v = use_deriv ? term_deriv(sm.fixed_terms[j], deriv, cov)
                               : term_value(sm.fixed_terms[j], basis, cov);
    if (v != 0.0) row.add(boff + static_cast<int>(j), v);
  }
  const int roff = idx.re_offset(subject_idx);
  for (size_t r = 0; r < sm.random_terms.size(); ++r) {
    const auto& term = sm.fixed_terms[sm.random_terms[r]];
    const double v = use_deriv ? term_deriv(term, deriv, cov)
                               : term_value(term, basis, cov);
    const int coord = idx.re_coord.at({marker_id, static_cast<int>(r)});
    if (v != 0.0) row.add(roff + coord, v);
  }
  return row;
}

}  // namespace

std::vector<ObsTerm> observation_terms(const ModelSpec& spec,
                                       const LongDataset& ld,
                                       const std::vector<PseudoObservation>& po,
                                       const SurvDataset& sd,
                                       const LatentIndex& idx) {
  // per-subject baseline covariates, taken from the first longitudinal row
  std::map<int, std::vector<double>> subj_cov;
  for (const auto& r : ld.records)
    if (!subj_cov.count(r.subject)) subj_cov[r.subject] = r.covariates;

  // gaussian markers get a residual-precision scale index in model order
  std::map<int, int> gauss_seq;
  int g = 0;
  for (const auto& sm : spec.longitudinal)
    if (sm.family.kind == FamilyKind::gaussian) gauss_seq[sm.marker_id] = g++;

  // global phi index per (cause position, association position)
  std::vector<int> phi_base(spec.survival.size(), 0);
  int acc = 0;
  for (size_t m = 0; m < spec.survival.size(); ++m) {
    phi_base[m] = acc;
    acc += static_cast<int>(spec.survival[m].association_terms.size());
  }

  std::vector<ObsTerm> terms;
  terms.reserve(ld.records.size() + po.size());

  for (const auto& r : ld.records) {
    const auto& sm = submodel_for(spec, r.marker);
    ObsTerm t;
    t.family = sm.family.kind;
    t.y = r.value;
    t.a = marker_design(spec, idx, r.marker, idx.subject_index.at(r.subject),
                        r.covariates, r.time, false);
    if (sm.family.kind == FamilyKind::gaussian)
      t.scale_index = gauss_seq.at(r.marker);
    terms.push_back(std::move(t));
  }

  std::vector<double> no_cov;
  for (const auto& p : po) {
    const int si = idx.subject_index.at(p.subject);
    const auto& sv = spec.survival[p.cause - 1];
    const auto cov_it = subj_cov.find(p.subject);
    const std::vector<double>& cov =
        cov_it != subj_cov.end() ? cov_it->second : no_cov;
    ObsTerm t;
    t.family = FamilyKind::poisson;
    t.y = p.y;
    t.offset = std::log(p.exposure);
    t.a.add(idx.baseline_offset(p.cause - 1) + p.bin, 1.0);
    const auto& w = sd.records[si].covariates;
    for (int j = 0; j < sv.n_covariates; ++j)
      if (w[j] != 0.0) t.a.add(idx.gamma_offset(p.cause - 1) + j, w[j]);
    for (size_t a = 0; a < sv.association_terms.size(); ++a) {
      const auto& at = sv.association_terms[a];
      const int phi_idx = phi_base[p.cause - 1] + static_cast<int>(a);
      SparseRow sub;
      switch (at.kind) {
        case AssociationTerm::Kind::current_value:
          sub = marker_design(spec, idx, at.source_marker, si, cov, p.t_eval,
                              false);
          break;
        case AssociationTerm::Kind::current_slope:
          sub = marker_design(spec, idx, at.source_marker, si, cov, p.t_eval,
                              true);
          break;
        case AssociationTerm::Kind::shared_random_effect: {
          const int coord = idx.re_coord.at({at.source_marker, at.re_term});
          sub.add(idx.re_offset(si) + coord, 1.0);
          break;
        }
      }
      t.phi_rows.emplace_back(phi_idx, std::move(sub));
    }
    terms.push_back(std::move(t));
  }
  return terms;
}

AssembledModel::AssembledModel(ModelSpec validated_spec, const LongDataset& ld,
                               const SurvDataset& sd)
    : spec(std::move(validated_spec)), hyper(spec) {
  int n_surv_cov = 0;
  for (const auto& r : sd.records)
    n_surv_cov = std::max(n_surv_cov, static_cast<int>(r.covariates.size()));
  index = build_latent_index(spec, sd, n_surv_cov);
  std::vector<PseudoObservation> po;
  if (!spec.survival.empty()) {
    partition = partition_time(sd, index.bins);
    po = poisson_augment(sd, partition, spec.n_causes());
  }
  terms = observation_terms(spec, ld, po, sd, index);
}

SymSparse AssembledModel::prior_precision(const Eigen::VectorXd& theta) const {
  std::vector<Eigen::Triplet<double>> trip;
  const HyperNatural w = hyper.to_natural(theta);

  // per-subject copies of every block precision
  std::vector<Eigen::MatrixXd> blocks;
  int blk_off = 0;
  for (size_t b = 0; b < spec.re_blocks.size(); ++b) {
    blocks.push_back(hyper.block_precision(theta, static_cast<int>(b)));
    blk_off += spec.re_blocks[b].dim();
  }
  (void)blk_off;
  for (int i = 0; i < index.n_subjects; ++i) {
    int off = index.re_offset(i);
    for (const auto& P : blocks) {
      const int d = static_cast<int>(P.rows());
      for (int r = 0; r < d; ++r)
        for (int c = 0; c <= r; ++c)
          trip.emplace_back(off + r, off + c, P(r, c));
      off += d;
    }
  }

  // baseline random walks with a small ridge on the rank-deficient part
  for (int m = 0; m < index.n_causes; ++m) {
    const auto& bl = spec.survival[m].baseline;
    const double tau = w.tau_baseline[m];
    SymSparse rw = bl.kind == BaselineSpec::Kind::rw2
                       ? rw2_precision(index.bins, tau)
                       : rw1_precision(index.bins, tau);
    const int off = index.baseline_offset(m);
    for (int j = 0; j < rw.lower().outerSize(); ++j)
      for (Eigen::SparseMatrix<double>::InnerIterator it(rw.lower(), j); it;
           ++it)
        trip.emplace_back(off + it.row(), off + it.col(), it.value());
    const double ridge = 1e-5 * tau;
    for (int b = 0; b < index.bins; ++b)
      trip.emplace_back(off + b, off + b, ridge);
  }

  const double gamma_prec =
      1.0 / (spec.priors.gamma_scale * spec.priors.gamma_scale);
  for (int m = 0; m < index.n_causes; ++m)
    for (int j = 0; j < index.gamma_size[m]; ++j)
      trip.emplace_back(index.gamma_offset(m) + j, index.gamma_offset(m) + j,
                        gamma_prec);

  const double beta_prec =
      1.0 / (spec.priors.beta_scale * spec.priors.beta_scale);
  for (size_t k = 0; k < spec.longitudinal.size(); ++k)
    for (int j = 0; j < index.beta_size[k]; ++j)
      trip.emplace_back(index.beta_offset(static_cast<int>(k)) + j,
                        index.beta_offset(static_cast<int>(k)) + j, beta_prec);

  return SymSparse(index.dim(), trip);
}

double AssembledModel::eta(const ObsTerm& t, const Eigen::VectorXd& u,
                           const std::vector<double>& phi) const {
  double e = t.offset + t.a.dot(u);
  for (const auto& [j, row] : t.phi_rows) e += phi[j] * row.dot(u);
  return e;
}

}  // namespace jointlap
