#pragma once

// Global minimum-variance portfolios and a monthly rebalancing backtest.
// Returns are daily simple returns in percent throughout.

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "robshrink/estimators.hpp"

namespace robshrink {

class EstimationError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class DegenerateMonth : public NumericalError {
public:
  using NumericalError::NumericalError;
};

// Sigma^{-1} 1 / (1' Sigma^{-1} 1) via a Cholesky solve. Throws
// EstimationError when sigma is not positive definite.
Vector gmv_weights(const Matrix &sigma);

// Buy-and-hold weights at the end of a period: w_j a_j / sum_k w_k a_k with
// a_j = prod_s (1 + r_js / 100). month_returns is days x assets.
Vector drift_weights(const Vector &w, const Matrix &month_returns);

// sum_j |w_next_j - w_hold_j|.
double turnover(const Vector &w_next, const Vector &w_hold);

struct Metrics {
  double sd; // sqrt(252) * daily standard deviation
  double av; // 252 * daily mean
  double tr; // 100 (prod (1 + r / 100) - 1)
  double md; // largest peak-to-trough loss of the wealth curve, percent
  // av / sd; empty when sd == 0.
  std::optional<double> ir;

  // Throws NumericalError when sd == 0.
  double information_ratio() const;
};

Metrics compute_metrics(const std::vector<double> &daily_returns);

struct ReturnPanel {
  std::vector<std::string> dates;
  std::vector<std::string> assets;
  // days x assets; NaN marks a missing return.
  Matrix returns;
  // Same shape as returns when present; NaN marks a missing value.
  std::optional<Matrix> caps;

  Index days() const { return returns.rows(); }
  void validate() const;
};

// First column an ISO date (YYYY-MM-DD), then one column per asset; the
// header row names the assets. Empty cells are missing.
ReturnPanel read_return_panel(std::istream &returns);
ReturnPanel read_return_panel(std::istream &returns, std::istream &caps);
ReturnPanel read_return_panel_file(const std::string &returns_path,
                                   const std::string &caps_path = "");

struct BacktestConfig {
  int estimation_window = 252;
  int holding_period = 21;
  Index universe_size = 100;
  int max_missing = 32;
  Method estimator = Method::rcnl;
  EstimatorOptions options;

  void validate() const;
};

struct MonthRecord {
  std::string start_date;
  std::vector<std::string> assets;
  Vector weights;
  // Set when no estimate could be formed; equal weights are held instead.
  bool flagged = false;
  std::string flag_reason;
};

struct BacktestReport {
  std::vector<MonthRecord> months;
  std::vector<double> daily_returns;
  Metrics metrics;
  // Average over month transitions; empty with a single month.
  std::optional<double> turnover;
  int flagged_months = 0;
};

// Rebalances every holding_period days after the first estimation_window.
// Each month keeps assets with at most max_missing gaps in the window and no
// gaps in the holding period, fills the remaining window gaps with 0, takes
// the universe_size largest by capitalization on the last window day (or the
// first ones in column order without caps), and holds share counts fixed.
// Throws InvalidInput when the panel is shorter than one window plus one
// holding period.
BacktestReport rolling_backtest(const ReturnPanel &panel,
                                const BacktestConfig &cfg);

void write_report_json(std::ostream &out, const BacktestReport &report);
// Header "metric,value"; rows SD, TO, AV, TR, MD, IR, months, flagged.
void write_summary_csv(std::ostream &out, const BacktestReport &report);

} // namespace robshrink
