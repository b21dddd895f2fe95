#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace msnet {

// Raised for malformed input data (CSV syntax, non-finite values, bad shapes).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Closed time interval [start, end], 1-based.
struct Interval {
  std::size_t start = 1;
  std::size_t end = 1;

  std::size_t length() const { return end - start + 1; }
  bool contains(std::size_t t) const { return start <= t && t <= end; }
  bool operator==(const Interval&) const = default;
};

// Throws std::invalid_argument unless 1 <= start <= end <= T.
void validate_interval(const Interval& interval, std::size_t T);

// T x N panel; column u holds the series of node u (0-based internally).
class MultivariateSeries {
 public:
  MultivariateSeries(Eigen::MatrixXd values, std::vector<std::string> labels);
  // Labels default to "1".."N".
  explicit MultivariateSeries(Eigen::MatrixXd values);

  std::size_t T() const { return static_cast<std::size_t>(values_.rows()); }
  std::size_t N() const { return static_cast<std::size_t>(values_.cols()); }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<std::string>& labels() const { return labels_; }

  // X_t(u) with t 1-based and u 0-based; zero for t < 1.
  double at(std::ptrdiff_t t, std::size_t u) const {
    return t < 1 ? 0.0 : values_(t - 1, static_cast<Eigen::Index>(u));
  }
  const double* column(std::size_t u) const { return values_.col(static_cast<Eigen::Index>(u)).data(); }

  // Index of the node with this label, or of the 1-based number when no
  // label matches. Throws std::invalid_argument otherwise.
  std::size_t node_index(const std::string& label_or_number) const;

 private:
  Eigen::MatrixXd values_;
  std::vector<std::string> labels_;
};

struct LagColumn {
  std::size_t node;  // 0-based source node v
  std::size_t lag;   // 1..p
  bool operator==(const LagColumn&) const = default;
};

// |I| x (N-1)p design for target u. Columns run over nodes v != u in
// ascending order, lags 1..p within each node. Lagged values come from the
// whole series, so rows near I.start see observations before the interval.
struct LaggedDesign {
  Eigen::MatrixXd matrix;
  std::vector<LagColumn> column_map;
  std::size_t target = 0;
  std::size_t lags = 1;
  Interval interval;

  std::size_t rows() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(matrix.cols()); }
  std::size_t groups() const { return lags == 0 ? 0 : cols() / lags; }
};

MultivariateSeries load_csv(const std::filesystem::path& path);
MultivariateSeries parse_csv(const std::string& text);
// Values printed with max_digits10 so load(save(x)) == x bit for bit.
void save_csv(const MultivariateSeries& series, const std::filesystem::path& path);
std::string to_csv(const MultivariateSeries& series);

MultivariateSeries first_difference(const MultivariateSeries& series);

LaggedDesign build_lagged_design(const MultivariateSeries& series, std::size_t target, std::size_t lags,
                                 const Interval& interval);

// Fills row for time t (1-based) of the design for target u: (N-1)p entries.
void lagged_row(const MultivariateSeries& series, std::size_t target, std::size_t lags, std::size_t t,
                double* out);

// Observations X_t(u), t in I.
Eigen::VectorXd target_values(const MultivariateSeries& series, std::size_t target, const Interval& interval);

}  // namespace msnet
