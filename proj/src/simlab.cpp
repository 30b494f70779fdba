#include "robshrink/simlab.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

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

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto end = comma == std::string_view::npos ? s.size() : comma;
    std::string item = trim(s.substr(start, end - start));
    if (!item.empty()) {
      out.push_back(std::move(item));
    }
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

template <typename T> T parse_number(const std::string &key, const std::string &v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + v + "'", key);
  }
  return out;
}

bool parse_bool(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes") {
    return true;
  }
  if (v == "false" || v == "0" || v == "no") {
    return false;
  }
  throw ConfigError("config key '" + key + "': expected true or false", key);
}

Vector primed_diagonal(Index p) {
  const auto ones = static_cast<Index>(std::floor(0.2 * static_cast<double>(p)));
  const auto threes = static_cast<Index>(std::floor(0.4 * static_cast<double>(p)));
  Vector d(p);
  for (Index i = 0; i < p; ++i) {
    d(i) = i < ones ? 1.0 : (i < ones + threes ? 3.0 : 10.0);
  }
  return d;
}

double mean_of(const std::vector<double> &v) {
  double s = 0.0;
  for (double x : v) {
    s += x;
  }
  return s / static_cast<double>(v.size());
}

} // namespace

std::string_view dispersion_name(DispersionKind kind) {
  switch (kind) {
  case DispersionKind::I:
    return "I";
  case DispersionKind::A:
    return "A";
  case DispersionKind::F:
    return "F";
  case DispersionKind::Iprime:
    return "I'";
  case DispersionKind::Aprime:
    return "A'";
  case DispersionKind::Fprime:
    return "F'";
  }
  return "?";
}

DispersionKind parse_dispersion(std::string_view name) {
  for (auto kind : {DispersionKind::I, DispersionKind::A, DispersionKind::F,
                    DispersionKind::Iprime, DispersionKind::Aprime,
                    DispersionKind::Fprime}) {
    if (dispersion_name(kind) == name) {
      return kind;
    }
  }
  throw InvalidInput("unknown dispersion structure '" + std::string(name) +
                     "' (expected I, A, F, I', A' or F')");
}

SpdMatrix make_dispersion(DispersionKind kind, Index p) {
  if (p < 1) {
    throw InvalidInput("make_dispersion: p must be at least 1");
  }
  Matrix base = Matrix::Identity(p, p);
  switch (kind) {
  case DispersionKind::I:
  case DispersionKind::Iprime:
    break;
  case DispersionKind::A:
  case DispersionKind::Aprime:
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < p; ++j) {
        base(i, j) = std::pow(0.7, static_cast<double>(std::abs(i - j)));
      }
    }
    break;
  case DispersionKind::F:
  case DispersionKind::Fprime:
    base.setConstant(0.5);
    base.diagonal().setOnes();
    break;
  }
  if (kind == DispersionKind::Iprime || kind == DispersionKind::Aprime ||
      kind == DispersionKind::Fprime) {
    const Vector d = primed_diagonal(p);
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < p; ++j) {
        base(i, j) *= std::sqrt(d(i) * d(j));
      }
    }
  }
  return SpdMatrix(SymMatrix::symmetrized(base));
}

Nu Nu::finite(double value) {
  if (!std::isfinite(value) || !(value > 2.0)) {
    throw InvalidInput("degrees of freedom must be finite and > 2, got " +
                       format_double(value));
  }
  Nu nu;
  nu.infinite_ = false;
  nu.value_ = value;
  return nu;
}

double Nu::value() const {
  if (infinite_) {
    throw InvalidInput("degrees of freedom are infinite");
  }
  return value_;
}

std::string Nu::to_string() const {
  return infinite_ ? "inf" : format_double(value_);
}

Nu Nu::parse(std::string_view text) {
  const std::string t = trim(text);
  if (t == "inf" || t == "infinity" || t == "Inf") {
    return infinity();
  }
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) {
    throw InvalidInput("cannot parse degrees of freedom '" + t + "'");
  }
  return finite(v);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ stream) ^ index);
}

DataMatrix sample_elliptical(const EllipticalSpec &spec, Index n,
                             std::uint64_t seed) {
  if (n < 2) {
    throw InvalidInput("sample_elliptical: n must be at least 2");
  }
  const Index p = spec.h.dim();
  const Eigen::LLT<Matrix> llt(spec.h.values());
  const Matrix l = llt.matrixL();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, p);
  Vector radial = Vector::Ones(n);
  for (Index t = 0; t < n; ++t) {
    for (Index j = 0; j < p; ++j) {
      g(t, j) = normal(rng);
    }
    if (!spec.nu.is_infinite()) {
      const double nu = spec.nu.value();
      std::chi_squared_distribution<double> chi2(nu);
      radial(t) = std::sqrt(nu / chi2(rng));
    }
  }
  Matrix y = g * l.transpose();
  y.array().colwise() *= radial.array();
  return DataMatrix(std::move(y));
}

double normalized_loss(const Matrix &estimate, const Matrix &truth) {
  const auto p = static_cast<double>(truth.rows());
  if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols()) {
    throw InvalidInput("normalized_loss: dimension mismatch");
  }
  const double te = estimate.trace();
  const double tt = truth.trace();
  if (!(te > 0.0) || !(tt > 0.0)) {
    throw InvalidInput("normalized_loss: trace must be positive");
  }
  return (estimate * (p / te) - truth * (p / tt)).squaredNorm();
}

PrialValue prial_from_losses(const std::vector<double> &estimate_losses,
                             const std::vector<double> &sample_losses) {
  if (estimate_losses.size() != sample_losses.size()) {
    throw InvalidInput("prial: loss vectors differ in length");
  }
  std::vector<double> a;
  std::vector<double> b;
  for (std::size_t r = 0; r < estimate_losses.size(); ++r) {
    if (std::isfinite(estimate_losses[r]) && std::isfinite(sample_losses[r])) {
      a.push_back(estimate_losses[r]);
      b.push_back(sample_losses[r]);
    }
  }
  if (a.empty()) {
    return {kNaN, kNaN};
  }
  const double a_bar = mean_of(a);
  const double b_bar = mean_of(b);
  if (!(b_bar > 0.0)) {
    throw DegenerateInput("prial: the sample matrix has zero loss");
  }
  const double ratio = a_bar / b_bar;
  const auto k = static_cast<double>(a.size());
  double se = kNaN;
  if (a.size() >= 2) {
    std::vector<double> d(a.size());
    for (std::size_t r = 0; r < a.size(); ++r) {
      d[r] = a[r] - ratio * b[r];
    }
    const double d_bar = mean_of(d);
    double ss = 0.0;
    for (double x : d) {
      ss += (x - d_bar) * (x - d_bar);
    }
    se = 100.0 * std::sqrt(ss / (k - 1.0)) / (std::sqrt(k) * b_bar);
  }
  return {100.0 * (1.0 - ratio), se};
}

PrialValue prial(const std::vector<Matrix> &estimates,
                 const std::vector<Matrix> &samples, const Matrix &truth) {
  if (estimates.size() != samples.size() || estimates.empty()) {
    throw InvalidInput("prial: need equally many estimates and samples");
  }
  std::vector<double> a;
  std::vector<double> b;
  for (std::size_t r = 0; r < estimates.size(); ++r) {
    a.push_back(normalized_loss(estimates[r], truth));
    b.push_back(normalized_loss(samples[r], truth));
  }
  return prial_from_losses(a, b);
}

PrialValue prial_difference(const std::vector<double> &losses_a,
                            const std::vector<double> &losses_b,
                            const std::vector<double> &sample_losses) {
  if (losses_a.size() != sample_losses.size() ||
      losses_b.size() != sample_losses.size()) {
    throw InvalidInput("prial_difference: loss vectors differ in length");
  }
  std::vector<double> a;
  std::vector<double> b;
  std::vector<double> s;
  for (std::size_t r = 0; r < sample_losses.size(); ++r) {
    if (std::isfinite(losses_a[r]) && std::isfinite(losses_b[r])) {
      a.push_back(losses_a[r]);
      b.push_back(losses_b[r]);
      s.push_back(sample_losses[r]);
    }
  }
  const PrialValue pa = prial_from_losses(a, s);
  const PrialValue pb = prial_from_losses(b, s);
  return {pa.prial - pb.prial, std::sqrt(pa.se * pa.se + pb.se * pb.se)};
}

void ScenarioConfig::validate() const {
  if (p < 1 || n < 2) {
    throw InvalidInput("scenario: need p >= 1 and n >= 2");
  }
  if (replications < 1) {
    throw InvalidInput("scenario: replications must be at least 1");
  }
  if (first_replication < 0) {
    throw InvalidInput("scenario: first_replication must be non-negative");
  }
  if (nu_grid.empty()) {
    throw InvalidInput("scenario: empty nu grid");
  }
  if (estimators.empty()) {
    throw InvalidInput("scenario: no estimators");
  }
  if (jobs < 1) {
    throw InvalidInput("scenario: jobs must be at least 1");
  }
}

const PrialCell &PrialTable::cell(Method estimator, const Nu &nu) const {
  for (const auto &row : rows) {
    if (row.estimator == estimator && row.nu == nu) {
      return row;
    }
  }
  throw InvalidInput("no PRIAL cell for " + std::string(method_name(estimator)) +
                     " at nu=" + nu.to_string());
}

PrialTable run_scenario(const ScenarioConfig &cfg) {
  cfg.validate();
  const SpdMatrix truth = make_dispersion(cfg.structure, cfg.p);
  const std::size_t n_nu = cfg.nu_grid.size();
  const auto reps = static_cast<std::size_t>(cfg.replications);
  const std::size_t n_est = cfg.estimators.size();

  PrialTable table;
  table.raw.resize(n_nu);
  for (std::size_t i = 0; i < n_nu; ++i) {
    table.raw[i].nu = cfg.nu_grid[i];
    table.raw[i].sample.assign(reps, kNaN);
    table.raw[i].losses.assign(n_est, std::vector<double>(reps, kNaN));
  }

  auto run_task = [&](std::size_t task) {
    const std::size_t i = task / reps;
    const std::size_t r = task % reps;
    const std::uint64_t rep_index =
        static_cast<std::uint64_t>(cfg.first_replication) + r;
    const EllipticalSpec spec{truth, cfg.nu_grid[i]};
    const DataMatrix y =
        sample_elliptical(spec, cfg.n, derive_seed(cfg.seed, i, rep_index));
    const Matrix s = run_estimator(Method::sample, y, cfg.options).matrix;
    table.raw[i].sample[r] = normalized_loss(s, truth.values());
    for (std::size_t e = 0; e < n_est; ++e) {
      try {
        const Matrix est = cfg.estimators[e] == Method::sample
                               ? s
                               : run_estimator(cfg.estimators[e], y, cfg.options)
                                     .matrix;
        table.raw[i].losses[e][r] = normalized_loss(est, truth.values());
      } catch (const Error &) {
        table.raw[i].losses[e][r] = kNaN;
      }
    }
  };

  const std::size_t tasks = n_nu * reps;
  const auto workers =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), tasks);
  if (workers <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) {
      run_task(t);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tasks; t = next++) {
          try {
            run_task(t);
          } catch (...) {
            const std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) {
              failure = std::current_exception();
            }
          }
        }
      });
    }
    for (auto &th : pool) {
      th.join();
    }
    if (failure) {
      std::rethrow_exception(failure);
    }
  }

  for (std::size_t i = 0; i < n_nu; ++i) {
    const auto &raw = table.raw[i];
    for (std::size_t e = 0; e < n_est; ++e) {
      int failures = 0;
      double loss_sum = 0.0;
      for (double l : raw.losses[e]) {
        if (std::isfinite(l)) {
          loss_sum += l;
        } else {
          ++failures;
        }
      }
      const int ok = cfg.replications - failures;
      const PrialValue v = prial_from_losses(raw.losses[e], raw.sample);
      table.rows.push_back(PrialCell{cfg.estimators[e], raw.nu, v.prial, v.se,
                                     ok > 0 ? loss_sum / ok : kNaN, failures});
    }
  }
  return table;
}

void write_prial_csv(std::ostream &out, const PrialTable &table) {
  out << "estimator,nu,prial,se\n";
  for (const auto &row : table.rows) {
    out << method_name(row.estimator) << ',' << row.nu.to_string() << ','
        << format_double(row.prial) << ',' << format_double(row.se) << '\n';
  }
}

ScenarioConfig parse_scenario_config(std::istream &in) {
  ScenarioConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string content = trim(line.substr(0, hash));
    if (content.empty()) {
      continue;
    }
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                            ": expected key = value",
                        "");
    }
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError("config key '" + key + "' given twice", key);
    }
    try {
      if (key == "structure") {
        cfg.structure = parse_dispersion(value);
      } else if (key == "p") {
        cfg.p = parse_number<Index>(key, value);
      } else if (key == "n") {
        cfg.n = parse_number<Index>(key, value);
      } else if (key == "nu") {
        cfg.nu_grid.clear();
        for (const auto &item : split_list(value)) {
          cfg.nu_grid.push_back(Nu::parse(item));
        }
      } else if (key == "replications") {
        cfg.replications = parse_number<int>(key, value);
      } else if (key == "seed") {
        cfg.seed = parse_number<std::uint64_t>(key, value);
        cfg.seed_from_config = true;
      } else if (key == "estimators") {
        cfg.estimators.clear();
        for (const auto &item : split_list(value)) {
          cfg.estimators.push_back(parse_method(item));
        }
      } else if (key == "demean") {
        cfg.options.demean = parse_bool(key, value);
      } else if (key == "rho") {
        cfg.options.rho = parse_number<double>(key, value);
      } else if (key == "epsilon") {
        cfg.options.epsilon = parse_number<double>(key, value);
      } else if (key == "max_iter") {
        cfg.options.max_iter = parse_number<int>(key, value);
      } else if (key == "first_replication") {
        cfg.first_replication = parse_number<int>(key, value);
      } else {
        throw ConfigError("unknown config key '" + key + "'", key);
      }
    } catch (const ConfigError &) {
      throw;
    } catch (const InvalidInput &e) {
      throw ConfigError("config key '" + key + "': " + e.what(), key);
    }
  }
  for (const char *required : {"structure", "p", "n", "nu", "estimators"}) {
    if (!seen.count(required)) {
      throw ConfigError(std::string("missing config key '") + required + "'",
                        required);
    }
  }
  return cfg;
}

} // namespace robshrink
