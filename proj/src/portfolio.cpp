#include "robshrink/portfolio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include "robshrink/matrix_io.hpp"

namespace robshrink {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_cells(const std::string &line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) {
      return cells;
    }
    start = comma + 1;
  }
}

bool is_iso_date(const std::string &s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
    return false;
  }
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (s[i] < '0' || s[i] > '9') {
      return false;
    }
  }
  const int month = std::stoi(s.substr(5, 2));
  const int day = std::stoi(s.substr(8, 2));
  return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

struct PanelCsv {
  std::vector<std::string> dates;
  std::vector<std::string> assets;
  Matrix values;
};

PanelCsv read_panel_csv(std::istream &in, const char *what) {
  PanelCsv out;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::vector<double>> rows;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) {
      continue;
    }
    const auto cells = split_cells(line);
    const std::string where =
        std::string(what) + " CSV line " + std::to_string(line_no);
    if (!have_header) {
      if (cells.size() < 2) {
        throw InvalidInput(where + ": header needs a date column and assets");
      }
      out.assets.assign(cells.begin() + 1, cells.end());
      have_header = true;
      continue;
    }
    if (cells.size() != out.assets.size() + 1) {
      throw InvalidInput(where + ": expected " +
                         std::to_string(out.assets.size() + 1) + " cells, got " +
                         std::to_string(cells.size()));
    }
    if (!is_iso_date(cells[0])) {
      throw InvalidInput(where + ": '" + cells[0] + "' is not a YYYY-MM-DD date");
    }
    out.dates.push_back(cells[0]);
    std::vector<double> row;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      const std::string &c = cells[j];
      if (c.empty()) {
        row.push_back(kNaN);
        continue;
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v)) {
        throw InvalidInput(where + ": cannot parse '" + c + "'");
      }
      row.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  if (!have_header || rows.empty()) {
    throw InvalidInput(std::string(what) + " CSV has no data rows");
  }
  out.values.resize(static_cast<Index>(rows.size()),
                    static_cast<Index>(out.assets.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return out;
}

// Portfolio returns (percent) of fixed share counts bought at weights w.
std::vector<double> held_returns(const Vector &w, const Matrix &r) {
  std::vector<double> out;
  Vector value = w;
  for (Index s = 0; s < r.rows(); ++s) {
    const double before = value.sum();
    value.array() *= 1.0 + r.row(s).transpose().array() / 100.0;
    if (before == 0.0) {
      throw DegenerateMonth("portfolio value reached zero");
    }
    out.push_back(100.0 * (value.sum() / before - 1.0));
  }
  return out;
}

double mean_of(const std::vector<double> &v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

} // namespace

Vector gmv_weights(const Matrix &sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() < 1 || !sigma.allFinite()) {
    throw EstimationError("gmv_weights: need a finite square matrix");
  }
  const Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw EstimationError("gmv_weights: covariance is not positive definite");
  }
  const Vector x = llt.solve(Vector::Ones(sigma.rows()));
  const double denom = x.sum();
  if (!std::isfinite(denom) || !(denom > 0.0) || !x.allFinite()) {
    throw EstimationError("gmv_weights: solve failed");
  }
  return x / denom;
}

Vector drift_weights(const Vector &w, const Matrix &month_returns) {
  if (month_returns.cols() != w.size()) {
    throw InvalidInput("drift_weights: returns have " +
                       std::to_string(month_returns.cols()) +
                       " columns for " + std::to_string(w.size()) + " weights");
  }
  Vector alpha = Vector::Ones(w.size());
  for (Index s = 0; s < month_returns.rows(); ++s) {
    alpha.array() *= 1.0 + month_returns.row(s).transpose().array() / 100.0;
  }
  const Vector grown = w.cwiseProduct(alpha);
  const double total = grown.sum();
  if (total == 0.0 || !std::isfinite(total)) {
    throw DegenerateMonth("drift_weights: portfolio value is zero");
  }
  return grown / total;
}

double turnover(const Vector &w_next, const Vector &w_hold) {
  if (w_next.size() != w_hold.size()) {
    throw InvalidInput("turnover: weight vectors differ in length");
  }
  return (w_next - w_hold).cwiseAbs().sum();
}

double Metrics::information_ratio() const {
  if (!ir) {
    throw NumericalError("information ratio undefined: zero standard deviation");
  }
  return *ir;
}

Metrics compute_metrics(const std::vector<double> &daily_returns) {
  if (daily_returns.empty()) {
    throw InvalidInput("metrics: empty return series");
  }
  const double mean = mean_of(daily_returns);
  double ss = 0.0;
  for (double r : daily_returns) {
    ss += (r - mean) * (r - mean);
  }
  const auto k = static_cast<double>(daily_returns.size());
  const auto [lo, hi] = std::minmax_element(daily_returns.begin(), daily_returns.end());
  const double daily_sd =
      (daily_returns.size() > 1 && *lo != *hi) ? std::sqrt(ss / (k - 1.0)) : 0.0;

  double wealth = 1.0;
  double peak = 1.0;
  double md = 0.0;
  for (double r : daily_returns) {
    wealth *= 1.0 + r / 100.0;
    peak = std::max(peak, wealth);
    md = std::max(md, (peak - wealth) / peak);
  }

  Metrics m{};
  m.sd = std::sqrt(252.0) * daily_sd;
  m.av = 252.0 * mean;
  m.tr = 100.0 * (wealth - 1.0);
  m.md = 100.0 * md;
  if (m.sd > 0.0) {
    m.ir = m.av / m.sd;
  }
  return m;
}

void ReturnPanel::validate() const {
  if (dates.size() != static_cast<std::size_t>(returns.rows()) ||
      assets.size() != static_cast<std::size_t>(returns.cols())) {
    throw InvalidInput("return panel: labels do not match the data shape");
  }
  for (std::size_t i = 1; i < dates.size(); ++i) {
    if (!(dates[i - 1] < dates[i])) {
      throw InvalidInput("return panel: dates not strictly increasing at " +
                         dates[i]);
    }
  }
  if (caps && (caps->rows() != returns.rows() || caps->cols() != returns.cols())) {
    throw InvalidInput("return panel: caps shape differs from returns");
  }
}

ReturnPanel read_return_panel(std::istream &returns) {
  PanelCsv r = read_panel_csv(returns, "returns");
  ReturnPanel panel{std::move(r.dates), std::move(r.assets), std::move(r.values),
                    std::nullopt};
  panel.validate();
  return panel;
}

ReturnPanel read_return_panel(std::istream &returns, std::istream &caps) {
  ReturnPanel panel = read_return_panel(returns);
  PanelCsv c = read_panel_csv(caps, "caps");
  if (c.dates != panel.dates || c.assets != panel.assets) {
    throw InvalidInput("caps CSV must have the same dates and assets as returns");
  }
  panel.caps = std::move(c.values);
  panel.validate();
  return panel;
}

ReturnPanel read_return_panel_file(const std::string &returns_path,
                                   const std::string &caps_path) {
  std::ifstream r(returns_path);
  if (!r) {
    throw InvalidInput("cannot open returns file '" + returns_path + "'");
  }
  if (caps_path.empty()) {
    return read_return_panel(r);
  }
  std::ifstream c(caps_path);
  if (!c) {
    throw InvalidInput("cannot open caps file '" + caps_path + "'");
  }
  return read_return_panel(r, c);
}

void BacktestConfig::validate() const {
  if (holding_period < 1 || estimation_window <= holding_period) {
    throw InvalidInput("backtest: need estimation_window > holding_period >= 1");
  }
  if (universe_size < 2) {
    throw InvalidInput("backtest: universe size must be at least 2");
  }
  if (max_missing < 0) {
    throw InvalidInput("backtest: max_missing must be non-negative");
  }
}

BacktestReport rolling_backtest(const ReturnPanel &panel,
                                const BacktestConfig &cfg) {
  cfg.validate();
  panel.validate();
  const Index window = cfg.estimation_window;
  const Index hold = cfg.holding_period;
  const Index days = panel.days();
  if (days < window + hold) {
    throw InvalidInput("backtest: panel has " + std::to_string(days) +
                       " days, need at least " + std::to_string(window + hold) +
                       " (estimation window + holding period)");
  }
  const Index n_assets = panel.returns.cols();

  BacktestReport report;
  std::vector<std::vector<Index>> columns;
  std::vector<double> transitions;

  for (Index start = window; start + hold <= days; start += hold) {
    const Matrix est = panel.returns.middleRows(start - window, window);
    const Matrix held = panel.returns.middleRows(start, hold);

    std::vector<Index> eligible;
    for (Index j = 0; j < n_assets; ++j) {
      const auto gaps = est.col(j).array().isNaN().count();
      const bool complete = !held.col(j).array().isNaN().any();
      const bool has_cap = !panel.caps || std::isfinite((*panel.caps)(start - 1, j));
      if (gaps <= cfg.max_missing && complete && has_cap) {
        eligible.push_back(j);
      }
    }
    if (panel.caps) {
      std::stable_sort(eligible.begin(), eligible.end(), [&](Index a, Index b) {
        return (*panel.caps)(start - 1, a) > (*panel.caps)(start - 1, b);
      });
    }
    if (static_cast<Index>(eligible.size()) > cfg.universe_size) {
      eligible.resize(static_cast<std::size_t>(cfg.universe_size));
    }
    std::sort(eligible.begin(), eligible.end());

    MonthRecord month;
    month.start_date = panel.dates[static_cast<std::size_t>(start)];
    const auto k = static_cast<Index>(eligible.size());
    Matrix window_data(window, k);
    Matrix month_data(hold, k);
    for (Index c = 0; c < k; ++c) {
      month.assets.push_back(panel.assets[static_cast<std::size_t>(eligible[c])]);
      window_data.col(c) = est.col(eligible[c]);
      month_data.col(c) = held.col(eligible[c]);
    }
    window_data = window_data.array().isNaN().select(0.0, window_data);

    if (k == 0) {
      month.flagged = true;
      month.flag_reason = "no eligible assets";
      month.weights = Vector();
      report.daily_returns.insert(report.daily_returns.end(),
                                  static_cast<std::size_t>(hold), 0.0);
    } else {
      try {
        const EstimateResult e =
            run_estimator(cfg.estimator, DataMatrix(window_data), cfg.options);
        month.weights = gmv_weights(e.matrix);
      } catch (const Error &err) {
        month.flagged = true;
        month.flag_reason = err.what();
        month.weights = Vector::Constant(k, 1.0 / static_cast<double>(k));
      }
      const auto r = held_returns(month.weights, month_data);
      report.daily_returns.insert(report.daily_returns.end(), r.begin(), r.end());
    }
    if (month.flagged) {
      ++report.flagged_months;
    }

    if (!report.months.empty()) {
      const MonthRecord &prev = report.months.back();
      const std::vector<Index> &prev_cols = columns.back();
      std::map<Index, Index> combined;
      for (Index j : prev_cols) {
        combined.emplace(j, 0);
      }
      for (Index j : eligible) {
        combined.emplace(j, 0);
      }
      Index pos = 0;
      for (auto &entry : combined) {
        entry.second = pos++;
      }
      const Index p_star = pos;
      Vector w_prev = Vector::Zero(p_star);
      Matrix r_prev = Matrix::Zero(hold, p_star);
      const Matrix prev_held = panel.returns.middleRows(start - hold, hold);
      for (std::size_t c = 0; c < prev_cols.size(); ++c) {
        const Index at = combined[prev_cols[c]];
        w_prev(at) = prev.weights(static_cast<Index>(c));
        r_prev.col(at) = prev_held.col(prev_cols[c]);
      }
      Vector w_next = Vector::Zero(p_star);
      for (Index c = 0; c < k; ++c) {
        w_next(combined[eligible[static_cast<std::size_t>(c)]]) = month.weights(c);
      }
      const Vector w_hold =
          prev_cols.empty() ? Vector::Zero(p_star) : drift_weights(w_prev, r_prev);
      transitions.push_back(turnover(w_next, w_hold));
    }
    columns.push_back(eligible);
    report.months.push_back(std::move(month));
  }

  report.metrics = compute_metrics(report.daily_returns);
  if (!transitions.empty()) {
    report.turnover = mean_of(transitions);
  }
  return report;
}

void write_report_json(std::ostream &out, const BacktestReport &report) {
  nlohmann::json metrics{{"SD", report.metrics.sd},
                         {"AV", report.metrics.av},
                         {"TR", report.metrics.tr},
                         {"MD", report.metrics.md}};
  metrics["TO"] = report.turnover ? nlohmann::json(*report.turnover) : nullptr;
  metrics["IR"] = report.metrics.ir ? nlohmann::json(*report.metrics.ir) : nullptr;
  nlohmann::json months = nlohmann::json::array();
  for (const auto &m : report.months) {
    nlohmann::json weights = nlohmann::json::array();
    for (Index i = 0; i < m.weights.size(); ++i) {
      weights.push_back(m.weights(i));
    }
    nlohmann::json rec{{"start_date", m.start_date},
                       {"assets", m.assets},
                       {"weights", weights},
                       {"flagged", m.flagged}};
    if (m.flagged) {
      rec["flag_reason"] = m.flag_reason;
    }
    months.push_back(std::move(rec));
  }
  nlohmann::json j{{"metrics", metrics},
                   {"flagged_months", report.flagged_months},
                   {"months", months},
                   {"daily_returns", report.daily_returns}};
  out << j.dump(2) << '\n';
}

void write_summary_csv(std::ostream &out, const BacktestReport &report) {
  auto opt = [](const std::optional<double> &v) {
    return v ? format_double(*v) : std::string("nan");
  };
  out << "metric,value\n"
      << "SD," << format_double(report.metrics.sd) << '\n'
      << "TO," << opt(report.turnover) << '\n'
      << "AV," << format_double(report.metrics.av) << '\n'
      << "TR," << format_double(report.metrics.tr) << '\n'
      << "MD," << format_double(report.metrics.md) << '\n'
      << "IR," << opt(report.metrics.ir) << '\n'
      << "months," << report.months.size() << '\n'
      << "flagged," << report.flagged_months << '\n';
}

} // namespace robshrink
