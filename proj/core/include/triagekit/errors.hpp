#pragma once

#include <stdexcept>
#include <string>

namespace triagekit {

/// Base class for all triagekit runtime failures.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// --- prediction ---

class MissingFeatureError : public Error {
public:
  explicit MissingFeatureError(std::string feature)
      : Error("missing feature on evaluated path: " + feature), feature_(std::move(feature)) {}
  const std::string& feature() const noexcept { return feature_; }

private:
  std::string feature_;
};

class NonFiniteValueError : public Error {
public:
  explicit NonFiniteValueError(const std::string& what) : Error("non-finite value: " + what) {}
};

// --- harmonization ---

class AnalyteMismatchError : public Error {
public:
  using Error::Error;
};

class UnitMismatchError : public Error {
public:
  using Error::Error;
};

class DegenerateIntervalError : public Error {
public:
  using Error::Error;
};

class UnknownAssayError : public Error {
public:
  explicit UnknownAssayError(std::string assay_id)
      : Error("unknown assay id: " + assay_id), assay_id_(std::move(assay_id)) {}
  const std::string& assay_id() const noexcept { return assay_id_; }

private:
  std::string assay_id_;
};

class MissingMappingError : public Error {
public:
  explicit MissingMappingError(std::string feature, const std::string& detail = {})
      : Error("no harmonization mapping for assay-sensitive feature '" + feature + "'" +
              (detail.empty() ? "" : ": " + detail)),
        feature_(std::move(feature)) {}
  const std::string& feature() const noexcept { return feature_; }

private:
  std::string feature_;
};

// --- cohort ingestion ---

class FileUnreadableError : public Error {
public:
  explicit FileUnreadableError(const std::string& path) : Error("cannot read file: " + path) {}
};

class SchemaError : public Error {
public:
  using Error::Error;
};

class DuplicateIdError : public Error {
public:
  explicit DuplicateIdError(const std::string& id) : Error("duplicate record id: " + id) {}
};

// --- synthesis ---

class InfeasibleSpecError : public Error {
public:
  using Error::Error;
};

// --- evaluation ---

/// Report-level failure: the whole evaluation is rejected, naming the record
/// that triggered it.
class EvaluationFailure : public Error {
public:
  EvaluationFailure(std::string record_id, const std::string& detail)
      : Error("record '" + record_id + "': " + detail), record_id_(std::move(record_id)) {}
  const std::string& record_id() const noexcept { return record_id_; }

private:
  std::string record_id_;
};

// --- configuration / registry files ---

class ConfigError : public Error {
public:
  using Error::Error;
};

class RegistryError : public Error {
public:
  using Error::Error;
};

}  // namespace triagekit
