#pragma once

// Data ingestion and the piecewise-constant-hazard to Poisson
// augmentation that lets hazard terms enter the latent Gaussian model.

#include <string>
#include <vector>

#include "jointlap/errors.hpp"

namespace jointlap {

struct LongRecord {
  int subject = 0;
  int marker = 1;
  double time = 0.0;
  double value = 0.0;
  std::vector<double> covariates;
};

struct SurvRecord {
  int subject = 0;
  double time = 0.0;   // observed T* = min(T, C)
  int event = 0;       // 0 censored, 1..M cause
  std::vector<double> covariates;
};

struct LongDataset {
  std::vector<LongRecord> records;
};

struct SurvDataset {
  std::vector<SurvRecord> records;
  int max_event_code() const;
};

// Reads the two CSV schemas:
//   long: id,marker,time,value[,x1,x2,...]
//   surv: id,time,event[,w1,w2,...]
// Subjects present in the longitudinal file must appear in the survival
// file; longitudinal times may not exceed the subject's observed time.
std::pair<LongDataset, SurvDataset> ingest(const std::string& long_csv,
                                           const std::string& surv_csv);

// Same validation applied to already-loaded records.
void validate_datasets(const LongDataset& ld, const SurvDataset& sd);

struct BinPartition {
  std::vector<double> cuts;  // 0 = c_0 < c_1 < ... < c_B
  int bins() const { return static_cast<int>(cuts.size()) - 1; }
  double width(int b) const { return cuts[b + 1] - cuts[b]; }
  int bin_of(double t) const;  // bin containing t, (c_b, c_{b+1}]
};

// Equal-width cuts over [0, max T*].
BinPartition partition_time(const SurvDataset& surv, int B);

struct PseudoObservation {
  int subject = 0;
  int cause = 1;
  int bin = 0;
  int y = 0;           // event indicator
  double exposure = 0; // time spent in the bin
  double t_eval = 0;   // midpoint of the occupied bin piece
};

std::vector<PseudoObservation> poisson_augment(const SurvDataset& surv,
                                               const BinPartition& part,
                                               int M);

// Piecewise-constant cause-specific hazards aligned to a partition:
// hazards[m][b] is the hazard of cause m+1 on bin b.
double exact_surv_loglik(const SurvRecord& rec,
                         const std::vector<std::vector<double>>& hazards,
                         const BinPartition& part);

}  // namespace jointlap
