#pragma once

#include <cstdint>
#include <string_view>

#include "weakclock/core_model.hpp"
#include "weakclock/trajectory.hpp"

namespace weakclock {

/// Uniform prior on [lo, hi], rad/s.
struct Prior {
  double lo = 0.0;
  double hi = 1.0;

  double width() const { return hi - lo; }
  double mean() const { return 0.5 * (lo + hi); }
  double variance() const { return width() * width() / 12.0; }

  /// The prior [0, delta_omega] implied by params.delta_omega.
  static Prior from_params(const ProtocolParams& params);
  /// Throws DomainError unless hi > lo, and, when params are given, unless the
  /// support lies in [0, pi/(2 tau)].
  void validate() const;
  void validate(const ProtocolParams& params) const;
};

enum class EstimatorKind { Auto, MLE, Bayesian };

std::string_view to_string(EstimatorKind kind);
EstimatorKind estimator_kind_from_string(std::string_view name);

/// Auto resolves to Bayesian when delta_omega T < pi and to MLE otherwise.
EstimatorKind resolve_estimator(EstimatorKind kind, const ProtocolParams& params,
                                const Prior& prior);

struct Estimate {
  double omega = 0.0;
  /// The record carries no usable signal; omega is the prior midpoint.
  bool degenerate = false;
};

/// Two-stage maximum-likelihood estimate.
///
/// Stage 1 takes the cosine transform of the per-step fractions of outcome 0,
/// less 1/2, on the bins pi k / (4 T) inside the prior and keeps its three
/// highest local maxima. Stage 2 maximizes the exact log-likelihood: a scan of
/// 64 points over pi / T either side of each kept bin, then golden-section
/// search over one scan spacing around the best point (60 iterations).
/// Records without signal return the prior midpoint, flagged degenerate.
Estimate mle_estimate(const Trajectory& traj, const ProtocolParams& params, const Prior& prior);

/// Stage 1 alone: fractions[n - 1] is the fraction of outcome 0 at time n tau.
/// Returns the index k of the best bin pi k / (oversample T), or -1 when no
/// bin lies in the prior or the fractions are constant.
int dft_peak_bin(const double* fractions, int steps, double tau, double T, const Prior& prior,
                 int oversample = 1);

/// Posterior mean on a midpoint grid over the prior. The grid starts at
/// grid_size points and doubles until the mean moves by less than
/// 1e-3 of the prior width.
Estimate bayesian_mmse_estimate(const Trajectory& traj, const ProtocolParams& params,
                                const Prior& prior, int grid_size = 2048);

Estimate estimate(EstimatorKind kind, const Trajectory& traj, const ProtocolParams& params,
                  const Prior& prior);

struct BmseOptions {
  bool stratified = true;
  int workers = 1;
};

struct BmseResult {
  double bmse = 0.0;
  double std_error = 0.0;
  long reps = 0;
  long degenerate = 0;
  EstimatorKind estimator = EstimatorKind::MLE;
};

/// Prior-weighted mean squared error over n_rep repetitions. Repetition i
/// draws omega from stratum i of the prior (or i.i.d. when not stratified)
/// and simulates with trajectory_seed(seed, i).
BmseResult bmse_experiment(const ProtocolParams& params, const Prior& prior, EstimatorKind kind,
                           long n_rep, std::uint64_t seed, const BmseOptions& options = {});

/// The omega drawn for repetition i of bmse_experiment.
double prior_draw(const Prior& prior, long index, long count, std::uint64_t seed, bool stratified);

enum class ThresholdCondition { MainText, SecondOrder };

struct ThresholdModel {
  double epsilon = 0.0;
  double q = 0.0;
  double cfi = 0.0;
  double predicted_bmse = 0.0;
  double required_N_eta = 0.0;
  double N_eta = 0.0;
};

/// Outlier model of the transform-based estimator. q is the outlier
/// probability, predicted_bmse = (1 - q) / cfi + q pi^2 / (48 tau^2) with the
/// small-back-action CFI of the protocol, and required_N_eta is the value of
/// N eta at which the estimator comes within epsilon of that CFI. Refuses
/// inputs with eta > 3/2, outside the model's validity.
ThresholdModel threshold_model(const ProtocolParams& params, double epsilon,
                               ThresholdCondition condition = ThresholdCondition::MainText);

/// Strength in (0, min(sqrt(1.5 tau / T), pi/4)] minimizing the threshold model's
/// predicted variance, with the protocol's fitted CFI in place of the
/// small-back-action one.
double optimal_strength(const ProtocolParams& params);

}  // namespace weakclock
