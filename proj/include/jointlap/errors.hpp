#pragma once

#include <stdexcept>
#include <string>

namespace jointlap {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error {
  explicit NotPositiveDefinite(const std::string& msg) : Error(msg) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& msg) : Error(msg) {}
};

struct SpecError : Error {
  // field: dotted path to the offending entry in the model spec
  SpecError(const std::string& field, const std::string& msg)
      : Error(field + ": " + msg), field(field) {}
  std::string field;
};

struct KnotOrderError : Error {
  explicit KnotOrderError(const std::string& msg) : Error(msg) {}
};

struct SupportError : Error {
  explicit SupportError(const std::string& msg) : Error(msg) {}
};

struct SchemaError : Error {
  explicit SchemaError(const std::string& msg) : Error(msg) {}
};

struct OrphanSubjectError : Error {
  explicit OrphanSubjectError(const std::string& msg) : Error(msg) {}
};

struct NegativeTimeError : Error {
  explicit NegativeTimeError(const std::string& msg) : Error(msg) {}
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& msg) : Error(msg) {}
};

struct InnerDivergence : Error {
  explicit InnerDivergence(const std::string& msg) : Error(msg) {}
};

struct RiskSetExhausted : Error {
  explicit RiskSetExhausted(const std::string& msg) : Error(msg) {}
};

struct CalibrationFailure : Error {
  explicit CalibrationFailure(const std::string& msg) : Error(msg) {}
};

struct UnknownScenario : Error {
  explicit UnknownScenario(const std::string& msg) : Error(msg) {}
};

struct NoConvergedReplicates : Error {
  explicit NoConvergedReplicates(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace jointlap
