#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace c2fa {

// Base class for all library errors.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or dimension mismatch between related objects.
class dimension_error : public error {
 public:
  using error::error;
};

// A linear system that cannot be solved; `deficiency` is the number of
// missing ranks when known.
class singular_error : public error {
 public:
  explicit singular_error(const std::string& what, int deficiency = 0)
      : error(what), deficiency_(deficiency) {}
  int deficiency() const noexcept { return deficiency_; }

 private:
  int deficiency_;
};

// A metric invoked on inputs where it is undefined (e.g. single-class labels).
class metric_error : public error {
 public:
  using error::error;
};

// Black-box evaluation failed; `row` is the offending mask row.
class oracle_error : public error {
 public:
  oracle_error(const std::string& what, long row) : error(what), row_(row) {}
  long row() const noexcept { return row_; }

 private:
  long row_;
};

// Invalid configuration value; `field` names the offending entry.
class config_error : public error {
 public:
  config_error(std::string field, const std::string& what)
      : error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace c2fa
