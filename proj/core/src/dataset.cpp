#include "mcause/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "mcause/error.hpp"

namespace mcause {

Dataset::Dataset(std::vector<VarSpec> columns, std::vector<int> values)
    : columns_(std::move(columns)), values_(std::move(values)) {
  std::set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.card < 1)
      throw InvalidInput("column '" + c.name + "' has cardinality < 1");
    if (!seen.insert(c.name).second)
      throw InvalidInput("duplicate column '" + c.name + "'");
  }
  if (columns_.empty()) {
    if (!values_.empty()) throw InvalidInput("values without columns");
    return;
  }
  if (values_.size() % columns_.size() != 0)
    throw InvalidInput("value count is not a multiple of the column count");
  rows_ = values_.size() / columns_.size();
  for (std::size_t i = 0; i < values_.size(); ++i) {
    const auto& c = columns_[i % columns_.size()];
    if (values_[i] < 0 || values_[i] >= c.card)
      throw InvalidInput("level " + std::to_string(values_[i]) +
                         " out of range for column '" + c.name + "'");
  }
}

std::vector<std::string> Dataset::names() const {
  std::vector<std::string> out;
  for (const auto& c : columns_) out.push_back(c.name);
  return out;
}

std::optional<std::size_t> Dataset::find(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return i;
  return std::nullopt;
}

std::size_t Dataset::column_index(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw UnknownVariable(std::string(name));
}

std::vector<int> Dataset::column(std::string_view name) const {
  std::size_t c = column_index(name);
  std::vector<int> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

Dataset Dataset::select(std::span<const std::string> names) const {
  std::vector<std::size_t> idx;
  std::vector<VarSpec> cols;
  for (const auto& n : names) {
    idx.push_back(column_index(n));
    cols.push_back(columns_[idx.back()]);
  }
  std::vector<int> vals;
  vals.reserve(rows_ * idx.size());
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c : idx) vals.push_back((*this)(r, c));
  return Dataset(std::move(cols), std::move(vals));
}

Dataset Dataset::with_column(VarSpec spec, std::span<const int> values) const {
  if (values.size() != rows_)
    throw InvalidInput("new column length differs from row count");
  std::vector<VarSpec> cols = columns_;
  cols.push_back(std::move(spec));
  std::vector<int> vals;
  vals.reserve(rows_ * cols.size());
  for (std::size_t r = 0; r < rows_; ++r) {
    auto rw = row(r);
    vals.insert(vals.end(), rw.begin(), rw.end());
    vals.push_back(values[r]);
  }
  return Dataset(std::move(cols), std::move(vals));
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r' && ch != ' ' && ch != '\t') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset read_csv(std::istream& in, std::span<const VarSpec> declared) {
  std::string line;
  if (!std::getline(in, line)) throw InvalidInput("CSV input is empty");
  auto header = split_line(line);
  std::vector<int> values;
  std::vector<int> max_level(header.size(), -1);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_line(line);
    if (fields.size() != header.size())
      throw InvalidInput("CSV line " + std::to_string(lineno) + " has " +
                         std::to_string(fields.size()) + " fields, expected " +
                         std::to_string(header.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      int v = 0;
      const auto& f = fields[c];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || v < 0)
        throw InvalidInput("CSV line " + std::to_string(lineno) +
                           ": invalid level '" + f + "'");
      values.push_back(v);
      max_level[c] = std::max(max_level[c], v);
    }
  }
  std::vector<VarSpec> cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    VarSpec spec{header[c], std::max(1, max_level[c] + 1)};
    for (const auto& d : declared)
      if (d.name == header[c]) spec.card = d.card;
    cols.push_back(spec);
  }
  return Dataset(std::move(cols), std::move(values));
}

void write_csv(std::ostream& out, const Dataset& data) {
  const auto& cols = data.columns();
  for (std::size_t c = 0; c < cols.size(); ++c)
    out << (c ? "," : "") << cols[c].name;
  out << '\n';
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c)
      out << (c ? "," : "") << data(r, c);
    out << '\n';
  }
}

JointTable empirical_table(const Dataset& data,
                           std::span<const std::string> names) {
  if (data.empty()) throw InvalidInput("empirical_table: no rows");
  std::vector<std::size_t> idx;
  std::vector<VarSpec> vars;
  for (const auto& n : names) {
    idx.push_back(data.column_index(n));
    vars.push_back(data.columns()[idx.back()]);
  }
  std::vector<double> counts(cell_count(vars), 0.0);
  for (std::size_t r = 0; r < data.rows(); ++r) {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < idx.size(); ++k)
      flat = flat * static_cast<std::size_t>(vars[k].card) +
             static_cast<std::size_t>(data(r, idx[k]));
    counts[flat] += 1.0;
  }
  const double n = static_cast<double>(data.rows());
  for (auto& c : counts) c /= n;
  return JointTable(std::move(vars), std::move(counts));
}

}  // namespace mcause
