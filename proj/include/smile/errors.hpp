#pragma once

#include <stdexcept>
#include <string>

namespace smile {

// Two error families drive the CLI exit codes: bad inputs (exit 2) and
// numerical failures (exit 3).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyFile : InputError {
  explicit EmptyFile(const std::string& path)
      : InputError("EmptyFile: " + path) {}
};

struct MissingColumn : InputError {
  explicit MissingColumn(const std::string& name)
      : InputError("MissingColumn: " + name) {}
};

struct NonNumericCell : InputError {
  NonNumericCell(std::size_t row, std::size_t col)
      : InputError("NonNumericCell: row " + std::to_string(row) + ", column " +
                   std::to_string(col)),
        row(row),
        col(col) {}
  std::size_t row, col;
};

struct AlreadyCentered : InputError {
  AlreadyCentered() : InputError("AlreadyCentered: dataset is already centered") {}
};

struct InvalidArgs : InputError {
  explicit InvalidArgs(const std::string& what) : InputError("InvalidArgs: " + what) {}
};

struct InvalidN : InputError {
  explicit InvalidN(const std::string& what) : InputError("InvalidN: " + what) {}
};

struct DegenerateColumn : NumericError {
  explicit DegenerateColumn(const std::string& what)
      : NumericError("DegenerateColumn: " + what) {}
};

struct EmptyBin : NumericError {
  explicit EmptyBin(int bin)
      : NumericError("EmptyBin: no observations in knot bin " + std::to_string(bin)),
        bin(bin) {}
  int bin;
};

struct UnsupportedOrder : InputError {
  explicit UnsupportedOrder(int order)
      : InputError("UnsupportedOrder: spline order " + std::to_string(order)) {}
};

struct SingularPilotFit : NumericError {
  SingularPilotFit() : NumericError("SingularPilotFit: quartic pilot regression is rank deficient") {}
};

struct InsufficientLocalData : NumericError {
  explicit InsufficientLocalData(double x0)
      : NumericError("InsufficientLocalData: fewer than 2 distinct points near x0 = " +
                     std::to_string(x0)) {}
};

struct NonFiniteObjective : NumericError {
  NonFiniteObjective() : NumericError("NonFiniteObjective: penalized objective is not finite") {}
};

struct AllGroupsExcluded : NumericError {
  AllGroupsExcluded() : NumericError("AllGroupsExcluded: every group has infinite weight") {}
};

struct ModelSingular : NumericError {
  explicit ModelSingular(const std::string& column)
      : NumericError("ModelSingular: rank-deficient refit design, offending column " + column),
        column(column) {}
  std::string column;
};

struct IndexNotNonlinear : InputError {
  explicit IndexNotNonlinear(int index)
      : InputError("IndexNotNonlinear: x index " + std::to_string(index) +
                   " is not in the selected nonlinear set") {}
};

struct BandwidthTooLarge : NumericError {
  explicit BandwidthTooLarge(const std::string& what)
      : NumericError("BandwidthTooLarge: " + what) {}
};

}  // namespace smile
