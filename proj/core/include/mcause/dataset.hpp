#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcause/joint_table.hpp"

namespace mcause {

// Integer-coded sample data: one row per unit, one column per variable.
class Dataset {
 public:
  Dataset() = default;
  // `values` is row-major; every entry must lie in [0, card) of its column.
  Dataset(std::vector<VarSpec> columns, std::vector<int> values);

  const std::vector<VarSpec>& columns() const { return columns_; }
  std::vector<std::string> names() const;
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return columns_.size(); }
  bool empty() const { return rows_ == 0; }

  int operator()(std::size_t row, std::size_t col) const {
    return values_[row * columns_.size() + col];
  }
  std::span<const int> row(std::size_t r) const {
    return {values_.data() + r * columns_.size(), columns_.size()};
  }
  std::span<const int> values() const { return values_; }

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t column_index(std::string_view name) const;
  std::vector<int> column(std::string_view name) const;
  Dataset select(std::span<const std::string> names) const;
  // Appends a column (e.g. a reconstructed confounder).
  Dataset with_column(VarSpec spec, std::span<const int> values) const;

 private:
  std::vector<VarSpec> columns_;
  std::vector<int> values_;
  std::size_t rows_ = 0;
};

// Reads a header row of names followed by integer-coded rows. Cardinalities
// come from `declared` when a column is listed there, else max level + 1.
Dataset read_csv(std::istream& in, std::span<const VarSpec> declared = {});
void write_csv(std::ostream& out, const Dataset& data);

// Empirical joint frequencies over `names` (in that order).
JointTable empirical_table(const Dataset& data,
                           std::span<const std::string> names);

}  // namespace mcause
