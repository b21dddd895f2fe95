#include "msnet/timeseries.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

namespace msnet {

void validate_interval(const Interval& interval, std::size_t T) {
  if (interval.start < 1 || interval.start > interval.end || interval.end > T) {
    throw std::invalid_argument("invalid interval [" + std::to_string(interval.start) + ", " +
                                std::to_string(interval.end) + "] for T = " + std::to_string(T));
  }
}

namespace {

std::vector<std::string> default_labels(std::size_t n) {
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i + 1));
  return labels;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t begin = 0;
  while (true) {
    const auto comma = line.find(',', begin);
    cells.push_back(trim(std::string_view(line).substr(begin, comma == std::string::npos ? std::string::npos
                                                                                          : comma - begin)));
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return cells;
}

}  // namespace

MultivariateSeries::MultivariateSeries(Eigen::MatrixXd values, std::vector<std::string> labels)
    : values_(std::move(values)), labels_(std::move(labels)) {
  if (values_.cols() < 2) throw DataError("a series needs at least two nodes");
  if (values_.rows() < 1) throw DataError("a series needs at least one time point");
  if (labels_.size() != static_cast<std::size_t>(values_.cols())) {
    throw DataError("label count does not match column count");
  }
  if (std::set<std::string>(labels_.begin(), labels_.end()).size() != labels_.size()) {
    throw DataError("node labels must be distinct");
  }
  for (Eigen::Index j = 0; j < values_.cols(); ++j) {
    for (Eigen::Index i = 0; i < values_.rows(); ++i) {
      if (!std::isfinite(values_(i, j))) {
        throw DataError("non-finite value at row " + std::to_string(i + 1) + ", column '" + labels_[j] + "'");
      }
    }
  }
}

MultivariateSeries::MultivariateSeries(Eigen::MatrixXd values)
    : MultivariateSeries(values, default_labels(static_cast<std::size_t>(values.cols()))) {}

std::size_t MultivariateSeries::node_index(const std::string& key) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == key) return i;
  }
  std::size_t number = 0;
  const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), number);
  if (ec == std::errc() && ptr == key.data() + key.size() && number >= 1 && number <= N()) return number - 1;
  throw std::invalid_argument("unknown node '" + key + "'");
}

MultivariateSeries parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      labels = split_row(line);
      break;
    }
  }
  if (labels.empty()) throw DataError("empty CSV: missing header row");
  if (labels[0].rfind("\xEF\xBB\xBF", 0) == 0) labels[0].erase(0, 3);

  const std::size_t n = labels.size();
  std::vector<double> data;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (cells.size() != n) {
      throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(n) + " fields, found " +
                      std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const std::string& cell = cells[j];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw DataError("line " + std::to_string(line_no) + ", column " + std::to_string(j + 1) + " ('" +
                        labels[j] + "'): cannot parse '" + cell + "'");
      }
      if (!std::isfinite(value)) {
        throw DataError("line " + std::to_string(line_no) + ", column " + std::to_string(j + 1) + " ('" +
                        labels[j] + "'): non-finite value '" + cell + "'");
      }
      data.push_back(value);
    }
    ++rows;
  }
  if (rows == 0) throw DataError("CSV has a header but no data rows");
  Eigen::MatrixXd values(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < n; ++j) values(i, j) = data[i * n + j];
  }
  return MultivariateSeries(std::move(values), std::move(labels));
}

MultivariateSeries load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string to_csv(const MultivariateSeries& series) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  const auto& labels = series.labels();
  for (std::size_t j = 0; j < labels.size(); ++j) out << (j ? "," : "") << labels[j];
  out << '\n';
  const auto& v = series.values();
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) out << (j ? "," : "") << v(i, j);
    out << '\n';
  }
  return out.str();
}

void save_csv(const MultivariateSeries& series, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << to_csv(series);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

MultivariateSeries first_difference(const MultivariateSeries& series) {
  if (series.T() < 2) throw DataError("first difference needs at least two time points");
  const auto& v = series.values();
  Eigen::MatrixXd diff = v.bottomRows(v.rows() - 1) - v.topRows(v.rows() - 1);
  return MultivariateSeries(std::move(diff), series.labels());
}

void lagged_row(const MultivariateSeries& series, std::size_t target, std::size_t lags, std::size_t t,
                double* out) {
  std::size_t k = 0;
  for (std::size_t v = 0; v < series.N(); ++v) {
    if (v == target) continue;
    for (std::size_t l = 1; l <= lags; ++l) {
      out[k++] = series.at(static_cast<std::ptrdiff_t>(t) - static_cast<std::ptrdiff_t>(l), v);
    }
  }
}

LaggedDesign build_lagged_design(const MultivariateSeries& series, std::size_t target, std::size_t lags,
                                 const Interval& interval) {
  if (target >= series.N()) throw std::invalid_argument("target node out of range");
  if (lags == 0) throw std::invalid_argument("lag order must be positive");
  validate_interval(interval, series.T());

  LaggedDesign design;
  design.target = target;
  design.lags = lags;
  design.interval = interval;
  const std::size_t n = interval.length();
  const std::size_t d = (series.N() - 1) * lags;
  design.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  design.column_map.reserve(d);
  std::size_t col = 0;
  for (std::size_t v = 0; v < series.N(); ++v) {
    if (v == target) continue;
    const double* x = series.column(v);
    for (std::size_t l = 1; l <= lags; ++l, ++col) {
      design.column_map.push_back({v, l});
      double* dst = design.matrix.col(static_cast<Eigen::Index>(col)).data();
      for (std::size_t r = 0; r < n; ++r) {
        const auto src = static_cast<std::ptrdiff_t>(interval.start + r) - static_cast<std::ptrdiff_t>(l);
        dst[r] = src < 1 ? 0.0 : x[src - 1];
      }
    }
  }
  return design;
}

Eigen::VectorXd target_values(const MultivariateSeries& series, std::size_t target, const Interval& interval) {
  validate_interval(interval, series.T());
  return series.values().col(static_cast<Eigen::Index>(target)).segment(
      static_cast<Eigen::Index>(interval.start - 1), static_cast<Eigen::Index>(interval.length()));
}

}  // namespace msnet
