#pragma once

// Latent Gaussian model assembly: latent-vector layout, the sparse prior
// precision Q(omega) and observation terms tying each data point to a
// linear functional of the latent vector.

#include <Eigen/Sparse>
#include <map>
#include <vector>

#include "jointlap/augment.hpp"
#include "jointlap/modelspec.hpp"
#include "jointlap/numkernel.hpp"

namespace jointlap {

// Segments, in order: per-subject RE blocks, per-cause baseline spline
// values, survival fixed effects, longitudinal fixed effects.
struct LatentIndex {
  int n_subjects = 0;
  int re_dim = 0;  // per subject
  int bins = 0;
  int n_causes = 0;
  std::vector<int> subject_ids;          // dataset order
  std::map<int, int> subject_index;      // id -> position
  std::vector<int> gamma_size;           // per cause
  std::vector<int> beta_size;            // per marker
  // offset of (marker, random-term position) within a subject segment
  std::map<std::pair<int, int>, int> re_coord;

  int dim() const;
  int re_offset(int subject_idx) const { return subject_idx * re_dim; }
  int baseline_offset(int cause_idx) const {
    return n_subjects * re_dim + cause_idx * bins;
  }
  int gamma_offset(int cause_idx) const;
  int beta_offset(int marker_idx) const;
  std::vector<std::string> names(const ModelSpec& spec) const;
};

LatentIndex build_latent_index(const ModelSpec& spec, const SurvDataset& surv,
                               int n_surv_covariates);

// Random-walk smoothness priors on a regular grid: Q = tau * D^T D with D
// the difference matrix of the given order. Rank deficient (no ridge here).
SymSparse rw1_precision(int B, double tau);
SymSparse rw2_precision(int B, double tau);

// Block precision L L^T from log-Cholesky coordinates
// (log-diagonals first, then free off-diagonals column-major).
Eigen::MatrixXd re_precision(const Eigen::VectorXd& theta_coords, int dim);

struct SparseRow {
  std::vector<std::pair<int, double>> entries;
  void add(int idx, double v) { entries.emplace_back(idx, v); }
  double dot(const Eigen::VectorXd& u) const {
    double s = 0;
    for (const auto& [i, v] : entries) s += v * u[i];
    return s;
  }
};

struct ObsTerm {
  FamilyKind family = FamilyKind::gaussian;
  double y = 0.0;
  double offset = 0.0;
  SparseRow a;
  // association copies: contribution phi[j] * (row . u) for hyper phi index j
  std::vector<std::pair<int, SparseRow>> phi_rows;
  int scale_index = -1;  // gaussian marker sequence number, -1 otherwise
};

struct AssembledModel {
  ModelSpec spec;  // validated
  HyperMap hyper;
  LatentIndex index;
  BinPartition partition;
  std::vector<ObsTerm> terms;

  AssembledModel(ModelSpec validated_spec, const LongDataset& ld,
                 const SurvDataset& sd);

  // Prior precision of the latent field at theta; the rank-deficient
  // random-walk blocks carry a diagonal ridge of 1e-5 * tau.
  SymSparse prior_precision(const Eigen::VectorXd& theta) const;

  // eta for one term given the latent vector and phi values
  double eta(const ObsTerm& t, const Eigen::VectorXd& u,
             const std::vector<double>& phi) const;
};

// Builds the observation-term list (one per longitudinal record, one per
// pseudo-observation). Exposed separately for tests.
std::vector<ObsTerm> observation_terms(const ModelSpec& spec,
                                       const LongDataset& ld,
                                       const std::vector<PseudoObservation>& po,
                                       const SurvDataset& sd,
                                       const LatentIndex& index);

}  // namespace jointlap
