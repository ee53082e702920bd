#include "jointlap/augment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace jointlap {

int SurvDataset::max_event_code() const {
  int m = 0;
  for (const auto& r : records) m = std::max(m, r.event);
  return m;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_num(const std::string& s, const std::string& what, int lineno) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw SchemaError("line " + std::to_string(lineno) + ": cannot parse " +
                      what + " from '" + s + "'");
  }
}

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               size_t min_cols,
                                               const std::string& what) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + what + " file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() < min_cols)
      throw SchemaError(what + " line " + std::to_string(lineno) +
                        ": expected at least " + std::to_string(min_cols) +
                        " columns");
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw SchemaError(what + " file is empty: " + path);
  return rows;
}

}  // namespace

void validate_datasets(const LongDataset& ld, const SurvDataset& sd) {
  std::map<int, double> surv_time;
  for (const auto& r : sd.records) {
    if (r.time <= 0)
      throw ValidationError("subject " + std::to_string(r.subject) +
                            ": observed time must be positive");
    if (r.event < 0)
      throw ValidationError("subject " + std::to_string(r.subject) +
                            ": negative event code");
    if (!surv_time.emplace(r.subject, r.time).second)
      throw ValidationError("subject " + std::to_string(r.subject) +
                            ": duplicate survival record");
  }
  for (const auto& r : ld.records) {
    if (r.time < 0)
      throw NegativeTimeError("subject " + std::to_string(r.subject) +
                              ": negative longitudinal time");
    auto it = surv_time.find(r.subject);
    if (it == surv_time.end())
      throw OrphanSubjectError("subject " + std::to_string(r.subject) +
                               " has longitudinal data but no survival record");
    if (r.time > it->second + 1e-9)
      throw ValidationError("subject " + std::to_string(r.subject) +
                            ": longitudinal time " + std::to_string(r.time) +
                            " exceeds observed time " +
                            std::to_string(it->second));
  }
}

std::pair<LongDataset, SurvDataset> ingest(const std::string& long_csv,
                                           const std::string& surv_csv) {
  auto lrows = read_csv(long_csv, 4, "long");
  auto srows = read_csv(surv_csv, 3, "surv");
  if (lrows[0][0] != "id" || lrows[0][1] != "marker" || lrows[0][2] != "time" ||
      lrows[0][3] != "value")
    throw SchemaError("long header must start with id,marker,time,value");
  if (srows[0][0] != "id" || srows[0][1] != "time" || srows[0][2] != "event")
    throw SchemaError("surv header must start with id,time,event");

  LongDataset ld;
  for (size_t i = 1; i < lrows.size(); ++i) {
    const auto& f = lrows[i];
    LongRecord r;
    int ln = static_cast<int>(i + 1);
    r.subject = static_cast<int>(parse_num(f[0], "id", ln));
    r.marker = static_cast<int>(parse_num(f[1], "marker", ln));
    r.time = parse_num(f[2], "time", ln);
    r.value = parse_num(f[3], "value", ln);
    for (size_t c = 4; c < f.size(); ++c)
      r.covariates.push_back(parse_num(f[c], "covariate", ln));
    ld.records.push_back(std::move(r));
  }
  SurvDataset sd;
  for (size_t i = 1; i < srows.size(); ++i) {
    const auto& f = srows[i];
    SurvRecord r;
    int ln = static_cast<int>(i + 1);
    r.subject = static_cast<int>(parse_num(f[0], "id", ln));
    r.time = parse_num(f[1], "time", ln);
    r.event = static_cast<int>(parse_num(f[2], "event", ln));
    for (size_t c = 3; c < f.size(); ++c)
      r.covariates.push_back(parse_num(f[c], "covariate", ln));
    sd.records.push_back(std::move(r));
  }
  validate_datasets(ld, sd);
  return {std::move(ld), std::move(sd)};
}

int BinPartition::bin_of(double t) const {
  // bin b covers (c_b, c_{b+1}]; t = 0 falls in bin 0
  auto it = std::lower_bound(cuts.begin() + 1, cuts.end(), t);
  int b = static_cast<int>(it - cuts.begin()) - 1;
  return std::clamp(b, 0, bins() - 1);
}

BinPartition partition_time(const SurvDataset& surv, int B) {
  if (B < 3) throw ValidationError("partition_time: need B >= 3");
  double tmax = 0.0;
  for (const auto& r : surv.records) tmax = std::max(tmax, r.time);
  if (tmax <= 0) throw ValidationError("partition_time: no positive times");
  BinPartition p;
  p.cuts.resize(B + 1);
  for (int b = 0; b <= B; ++b) p.cuts[b] = tmax * b / B;
  p.cuts[B] = tmax;  // exact upper end
  return p;
}

std::vector<PseudoObservation> poisson_augment(const SurvDataset& surv,
                                               const BinPartition& part,
                                               int M) {
  std::vector<PseudoObservation> out;
  for (const auto& r : surv.records) {
    if (r.event > M)
      throw ValidationError("event code exceeds number of causes");
    const int last = part.bin_of(r.time);
    for (int m = 1; m <= M; ++m) {
      for (int b = 0; b <= last; ++b) {
        const double hi = std::min(r.time, part.cuts[b + 1]);
        const double lo = part.cuts[b];
        if (hi <= lo) continue;
        PseudoObservation po;
        po.subject = r.subject;
        po.cause = m;
        po.bin = b;
        po.exposure = hi - lo;
        po.t_eval = 0.5 * (lo + hi);
        po.y = (b == last && r.event == m) ? 1 : 0;
        out.push_back(po);
      }
    }
  }
  return out;
}

double exact_surv_loglik(const SurvRecord& rec,
                         const std::vector<std::vector<double>>& hazards,
                         const BinPartition& part) {
  double ll = 0.0;
  const int last = part.bin_of(rec.time);
  for (size_t m = 0; m < hazards.size(); ++m) {
    if (rec.event == static_cast<int>(m) + 1)
      ll += std::log(hazards[m][last]);
    // exact integral of the piecewise-constant hazard over (0, T*]
    for (int b = 0; b <= last; ++b) {
      const double hi = std::min(rec.time, part.cuts[b + 1]);
      const double lo = part.cuts[b];
      if (hi > lo) ll -= hazards[m][b] * (hi - lo);
    }
  }
  return ll;
}

}  // namespace jointlap
