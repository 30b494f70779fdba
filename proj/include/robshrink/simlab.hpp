#pragma once

// Monte-Carlo lab: dispersion structures, elliptical samplers and PRIAL.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "robshrink/estimators.hpp"

namespace robshrink {

enum class DispersionKind { I, A, F, Iprime, Aprime, Fprime };

// "I", "A", "F", "I'", "A'", "F'".
std::string_view dispersion_name(DispersionKind kind);
DispersionKind parse_dispersion(std::string_view name);

// I: identity. A: 0.7^|i-j|. F: 1 on the diagonal, 0.5 elsewhere.
// Primed kinds rescale by D = diag(1 x floor(0.2p), 3 x floor(0.4p), 10 x rest)
// as D^{1/2} base D^{1/2}.
SpdMatrix make_dispersion(DispersionKind kind, Index p);

// Degrees of freedom of the multivariate t; infinity selects the Gaussian.
class Nu {
public:
  // Infinite.
  Nu() = default;
  static Nu finite(double value);
  static Nu infinity() noexcept { return Nu(); }

  bool is_infinite() const noexcept { return infinite_; }
  // Throws InvalidInput when infinite.
  double value() const;
  // "inf" or the shortest round-trip decimal.
  std::string to_string() const;
  // Accepts "inf", "infinity" or a number > 2.
  static Nu parse(std::string_view text);

  friend bool operator==(const Nu &a, const Nu &b) noexcept {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

private:
  bool infinite_ = true;
  double value_ = 0.0;
};

struct EllipticalSpec {
  SpdMatrix h;
  Nu nu = Nu::infinity();
};

// Rows are H^{1/2} g sqrt(nu / chi2_nu) with g standard normal; Gaussian
// rows H^{1/2} g when nu is infinite. H^{1/2} is the Cholesky factor.
DataMatrix sample_elliptical(const EllipticalSpec &spec, Index n,
                             std::uint64_t seed);

// SplitMix64 mixing of (seed, stream, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index);

// Squared Frobenius distance after scaling both matrices to trace p.
double normalized_loss(const Matrix &estimate, const Matrix &truth);

struct PrialValue {
  double prial;
  // Delta-method standard error of the ratio of means.
  double se;
};

// 100 (1 - mean loss(estimate) / mean loss(sample)); every matrix is scaled
// to trace p first. Throws DegenerateInput when the sample loss is 0.
PrialValue prial(const std::vector<Matrix> &estimates,
                 const std::vector<Matrix> &samples, const Matrix &truth);

// PRIAL from per-replication losses.
PrialValue prial_from_losses(const std::vector<double> &estimate_losses,
                             const std::vector<double> &sample_losses);

// PRIAL(a) - PRIAL(b) on paired replications with the combined standard
// error sqrt(se_a^2 + se_b^2).
PrialValue prial_difference(const std::vector<double> &losses_a,
                            const std::vector<double> &losses_b,
                            const std::vector<double> &sample_losses);

struct ScenarioConfig {
  DispersionKind structure = DispersionKind::I;
  Index p = 0;
  Index n = 0;
  std::vector<Nu> nu_grid;
  int replications = 1;
  std::uint64_t seed = 0;
  // Set by parse_scenario_config when the file names a seed.
  bool seed_from_config = false;
  std::vector<Method> estimators;
  EstimatorOptions options;
  // Replication indices run are first_replication .. first_replication+reps-1.
  int first_replication = 0;
  int jobs = 1;

  void validate() const;
};

struct PrialCell {
  Method estimator;
  Nu nu;
  double prial;
  double se;
  double mean_loss;
  int failures;
};

struct ReplicationLosses {
  Nu nu;
  std::vector<double> sample;
  // losses[e][r] for estimator e of the config; NaN marks a failed run.
  std::vector<std::vector<double>> losses;
};

struct PrialTable {
  std::vector<PrialCell> rows;
  std::vector<ReplicationLosses> raw;

  const PrialCell &cell(Method estimator, const Nu &nu) const;
};

// Failed estimator runs are counted per cell and excluded from that cell's
// averages, together with the matching sample losses.
PrialTable run_scenario(const ScenarioConfig &cfg);

void write_prial_csv(std::ostream &out, const PrialTable &table);

class ConfigError : public InvalidInput {
public:
  ConfigError(const std::string &what, std::string key)
      : InvalidInput(what), key_(std::move(key)) {}
  const std::string &key() const noexcept { return key_; }

private:
  std::string key_;
};

// Flat "key = value" lines; '#' starts a comment. Keys: structure, p, n, nu
// (comma list), replications, seed, estimators (comma list), demean, rho,
// epsilon, max_iter, first_replication. Unknown keys throw ConfigError.
ScenarioConfig parse_scenario_config(std::istream &in);

} // namespace robshrink
