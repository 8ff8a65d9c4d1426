#pragma once

#include <stdexcept>
#include <string>

namespace uhlmann {

/// Error categories used across the library. The C API maps these 1:1 to
/// uhl_status codes.
enum class errc {
  syntax_error,
  unknown_identifier,
  domain_error,
  format_error,
  validation_error,
  unknown_model,
  eigensolver_failure,
  rank_change,
  degenerate_metric,
  not_pure,
  step_too_small,
  degenerate_spectrum,
  wrong_arity,
  no_solution,
  numerical_check_failed,
  invalid_argument,
};

const char* errc_name(errc code) noexcept;

/// Single exception type carrying a category plus optional source location
/// (byte offset into an expression, entry position in a model file).
class Error : public std::runtime_error {
 public:
  Error(errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Error(errc code, std::string message, long offset)
      : std::runtime_error(std::move(message)), code_(code), offset_(offset) {}

  errc code() const noexcept { return code_; }

  /// Byte offset into the offending expression source, or -1.
  long offset() const noexcept { return offset_; }

  /// Entry position (row, col) in a model file, or (-1, -1).
  int row() const noexcept { return row_; }
  int col() const noexcept { return col_; }

  Error& at_entry(int row, int col) {
    row_ = row;
    col_ = col;
    return *this;
  }

 private:
  errc code_;
  long offset_ = -1;
  int row_ = -1;
  int col_ = -1;
};

}  // namespace uhlmann
