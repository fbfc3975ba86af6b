#include "weakclock/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "weakclock/errors.hpp"
#include "weakclock/information.hpp"
#include "weakclock/parallel.hpp"
#include "weakclock/rng.hpp"

namespace weakclock {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kScanPoints = 64;
constexpr int kGoldenIterations = 60;
// Only the real part of the transform is used, and it cancels for a signal
// half a bin off the grid; a finer grid keeps the loss small.
constexpr int kDftOversample = 4;
// Transform peaks handed to the exact-likelihood stage.
constexpr int kCandidates = 3;
constexpr int kMaxPosteriorGrid = 1 << 16;
constexpr std::uint64_t kPriorStream = 0x9B1D5A7C3E11ULL;
constexpr double kMaxEta = 1.5;

struct ScanResult {
  double omega = 0.0;
  double value = kNegInf;
};

template <typename F>
ScanResult scan(F&& f, double a, double b, int points) {
  ScanResult best{a, kNegInf};
  for (int i = 0; i < points; ++i) {
    const double w = points == 1 ? 0.5 * (a + b) : a + (b - a) * i / (points - 1);
    const double v = f(w);
    if (v > best.value) best = {w, v};
  }
  return best;
}

template <typename F>
ScanResult golden_max(F&& f, double a, double b, int iterations) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? ScanResult{c, fc} : ScanResult{d, fd};
}

std::vector<double> outcome_fractions(const Trajectory& traj) {
  std::vector<double> fractions(traj.weak_steps, 0.0);
  for (int q = 0; q < traj.qubits; ++q) {
    auto bits = traj.weak_outcomes(q);
    for (int n = 0; n < traj.weak_steps; ++n) fractions[n] += bits[n] == 0 ? 1.0 : 0.0;
  }
  for (double& f : fractions) f /= traj.qubits;
  return fractions;
}

double log_sum_exp(const std::vector<double>& values, double peak) {
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

}  // namespace

Prior Prior::from_params(const ProtocolParams& params) {
  if (!(params.delta_omega > 0.0)) throw DomainError("params carry no prior width");
  return Prior{0.0, params.delta_omega};
}

void Prior::validate() const {
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw DomainError("prior needs finite bounds with hi > lo");
  }
}

void Prior::validate(const ProtocolParams& params) const {
  validate();
  const double limit = kPi / (2.0 * params.tau) * (1.0 + 1e-12);
  if (lo < 0.0 || hi > limit) {
    throw DomainError("prior [" + std::to_string(lo) + ", " + std::to_string(hi) +
                      "] leaves [0, pi/(2 tau)]");
  }
}

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Auto: return "auto";
    case EstimatorKind::MLE: return "mle";
    case EstimatorKind::Bayesian: return "bayesian";
  }
  return "unknown";
}

EstimatorKind estimator_kind_from_string(std::string_view name) {
  if (name == "auto") return EstimatorKind::Auto;
  if (name == "mle") return EstimatorKind::MLE;
  if (name == "bayesian") return EstimatorKind::Bayesian;
  throw DomainError("unknown estimator '" + std::string(name) + "'");
}

EstimatorKind resolve_estimator(EstimatorKind kind, const ProtocolParams& params,
                                const Prior& prior) {
  if (kind != EstimatorKind::Auto) return kind;
  return prior.width() * params.T < kPi ? EstimatorKind::Bayesian : EstimatorKind::MLE;
}

namespace {

// Cosine transform of the fractions on bins k * bin_width covering the prior;
// entry j belongs to bin first + j.
std::vector<double> cosine_transform(const double* fractions, int steps, double tau,
                                     double bin_width, int first, int last) {
  std::vector<double> out;
  out.reserve(std::max(0, last - first + 1));
  for (int k = first; k <= last; ++k) {
    const double omega_k = bin_width * k;
    double b = 0.0;
    for (int n = 1; n <= steps; ++n) {
      // Offsets are taken from the no-signal level 1/2, so slow signals near
      // omega = 0 still show up in the lowest bins.
      b += (fractions[n - 1] - 0.5) * std::cos(2.0 * omega_k * n * tau);
    }
    out.push_back(b);
  }
  return out;
}

bool is_constant(const double* values, int count) {
  for (int n = 1; n < count; ++n) {
    if (values[n] != values[0]) return false;
  }
  return true;
}

struct BinRange {
  double width;
  int first;
  int last;
};

BinRange bin_range(double T, const Prior& prior, int oversample) {
  const double width = kPi / (oversample * T);
  const int first = std::max(0, static_cast<int>(std::ceil(prior.lo / width - 1e-9)));
  const int last = static_cast<int>(std::floor(prior.hi / width + 1e-9));
  return {width, first, last};
}

// Up to `count` local maxima of the transform, best first, at least one
// unoversampled bin apart.
std::vector<int> transform_peaks(const std::vector<double>& b, int first, int oversample,
                                 int count) {
  std::vector<int> maxima;
  for (int j = 0; j < static_cast<int>(b.size()); ++j) {
    const bool left = j == 0 || b[j] >= b[j - 1];
    const bool right = j + 1 == static_cast<int>(b.size()) || b[j] > b[j + 1];
    if (left && right) maxima.push_back(j);
  }
  std::stable_sort(maxima.begin(), maxima.end(), [&](int x, int y) { return b[x] > b[y]; });
  std::vector<int> chosen;
  for (int j : maxima) {
    bool apart = true;
    for (int c : chosen) apart = apart && std::abs(c - (j + first)) >= oversample;
    if (apart) chosen.push_back(j + first);
    if (static_cast<int>(chosen.size()) == count) break;
  }
  return chosen;
}

}  // namespace

int dft_peak_bin(const double* fractions, int steps, double tau, double T, const Prior& prior,
                 int oversample) {
  if (steps < 1) return -1;
  if (oversample < 1) throw DomainError("oversampling factor must be >= 1");
  if (is_constant(fractions, steps)) return -1;
  const BinRange bins = bin_range(T, prior, oversample);
  const std::vector<double> b = cosine_transform(fractions, steps, tau, bins.width, bins.first, bins.last);
  int best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < static_cast<int>(b.size()); ++j) {
    if (b[j] > best_value) {
      best_value = b[j];
      best = bins.first + j;
    }
  }
  return best;
}

Estimate mle_estimate(const Trajectory& traj, const ProtocolParams& params, const Prior& prior) {
  prior.validate(params);
  const bool weak_signal = params.g > 0.0 && params.p_e < 0.5 && traj.weak_steps > 0;
  const bool strong_signal = traj.has_strong && params.p_e_strong < 0.5;
  if (!weak_signal && !strong_signal) return {prior.mean(), true};

  const double bin_width = kPi / params.T;
  std::vector<int> candidates;
  if (weak_signal) {
    const std::vector<double> fractions = outcome_fractions(traj);
    if (!is_constant(fractions.data(), traj.weak_steps)) {
      const BinRange bins = bin_range(params.T, prior, kDftOversample);
      const std::vector<double> b = cosine_transform(fractions.data(), traj.weak_steps, params.tau,
                                                     bins.width, bins.first, bins.last);
      candidates = transform_peaks(b, bins.first, kDftOversample, kCandidates);
    }
    if (candidates.empty() && !strong_signal) return {prior.mean(), true};
  }

  auto objective = [&](double omega) { return log_likelihood(traj, omega, params); };
  const double spacing = 2.0 * bin_width / (kScanPoints - 1);
  ScanResult coarse;
  if (!candidates.empty()) {
    for (int bin : candidates) {
      const double centre = bin * bin_width / kDftOversample;
      const double a = std::max(prior.lo, centre - bin_width);
      const double b = std::min(prior.hi, centre + bin_width);
      const int points = std::max(2, static_cast<int>(std::ceil((b - a) / spacing)) + 1);
      const ScanResult local = scan(objective, a, b, points);
      if (local.value > coarse.value) coarse = local;
    }
  } else {
    const int points = std::max(kScanPoints, static_cast<int>(std::ceil(prior.width() / spacing)) + 1);
    coarse = scan(objective, prior.lo, prior.hi, points);
  }
  if (coarse.value == kNegInf) throw NumericError("likelihood vanishes on the whole search bracket");
  const double lo = std::max(prior.lo, coarse.omega - spacing);
  const double hi = std::min(prior.hi, coarse.omega + spacing);
  const ScanResult fine = golden_max(objective, lo, hi, kGoldenIterations);
  const double omega = fine.value >= coarse.value ? fine.omega : coarse.omega;
  return {std::clamp(omega, prior.lo, prior.hi), false};
}

Estimate bayesian_mmse_estimate(const Trajectory& traj, const ProtocolParams& params,
                                const Prior& prior, int grid_size) {
  prior.validate(params);
  if (grid_size < 256) throw DomainError("posterior grid needs at least 256 points");

  struct Posterior {
    double mean;
    bool flat;
  };
  auto posterior = [&](int points) -> Posterior {
    std::vector<double> logp(points);
    std::vector<double> omegas(points);
    double peak = kNegInf;
    double floor = std::numeric_limits<double>::infinity();
    for (int j = 0; j < points; ++j) {
      omegas[j] = prior.lo + prior.width() * (j + 0.5) / points;
      logp[j] = log_likelihood(traj, omegas[j], params);
      peak = std::max(peak, logp[j]);
      floor = std::min(floor, logp[j]);
    }
    if (peak == kNegInf || peak == floor) return {prior.mean(), true};
    const double norm = log_sum_exp(logp, peak);
    double mean = 0.0;
    for (int j = 0; j < points; ++j) mean += omegas[j] * std::exp(logp[j] - norm);
    return {mean, false};
  };

  Posterior current = posterior(grid_size);
  if (current.flat) return {prior.mean(), true};
  for (int points = 2 * grid_size; points <= kMaxPosteriorGrid; points *= 2) {
    const Posterior refined = posterior(points);
    const bool settled = std::abs(refined.mean - current.mean) < 1e-3 * prior.width();
    current = refined;
    if (settled) break;
  }
  return {std::clamp(current.mean, prior.lo, prior.hi), false};
}

Estimate estimate(EstimatorKind kind, const Trajectory& traj, const ProtocolParams& params,
                  const Prior& prior) {
  switch (resolve_estimator(kind, params, prior)) {
    case EstimatorKind::Bayesian: return bayesian_mmse_estimate(traj, params, prior);
    default: return mle_estimate(traj, params, prior);
  }
}

double prior_draw(const Prior& prior, long index, long count, std::uint64_t seed, bool stratified) {
  Engine rng(derive_seed(derive_seed(seed, kPriorStream), static_cast<std::uint64_t>(index)));
  const double u = uniform01(rng);
  const double fraction = stratified ? (static_cast<double>(index) + u) / count : u;
  return prior.lo + prior.width() * fraction;
}

BmseResult bmse_experiment(const ProtocolParams& params, const Prior& prior, EstimatorKind kind,
                           long n_rep, std::uint64_t seed, const BmseOptions& options) {
  params.validate();
  prior.validate(params);
  if (n_rep < 100) throw DomainError("BMSE experiment needs at least 100 repetitions");
  const EstimatorKind resolved = resolve_estimator(kind, params, prior);

  std::vector<double> squared(n_rep);
  std::vector<char> flags(n_rep, 0);
  parallel_for(static_cast<std::size_t>(n_rep), options.workers, [&](std::size_t i) {
    const double omega = prior_draw(prior, static_cast<long>(i), n_rep, seed, options.stratified);
    const Trajectory traj = simulate_trajectory(params, omega, trajectory_seed(seed, i));
    const Estimate est = estimate(resolved, traj, params, prior);
    squared[i] = (est.omega - omega) * (est.omega - omega);
    flags[i] = est.degenerate ? 1 : 0;
  });

  BmseResult result;
  result.reps = n_rep;
  result.estimator = resolved;
  double mean = 0.0;
  for (long i = 0; i < n_rep; ++i) {
    mean += squared[i];
    result.degenerate += flags[i];
  }
  mean /= n_rep;
  double var = 0.0;
  for (double s : squared) var += (s - mean) * (s - mean);
  var /= (n_rep - 1);
  result.bmse = mean;
  result.std_error = std::sqrt(var / n_rep);
  return result;
}

ThresholdModel threshold_model(const ProtocolParams& params, double epsilon,
                               ThresholdCondition condition) {
  params.validate();
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("epsilon must lie in (0, 1)");
  const double eta = params.eta();
  if (eta > kMaxEta * (1.0 + 1e-12)) {
    throw DomainError("threshold model needs eta = g^2 T / tau <= 3/2, got " + std::to_string(eta));
  }
  const double N = params.N;
  const double T = params.T;
  const double tau = params.tau;
  const double g = params.g;
  const double ratio = T / tau;

  ThresholdModel model;
  model.epsilon = epsilon;
  model.N_eta = N * eta;
  if (g > 0.0) {
    const double q = std::sqrt(T / (8.0 * kPi * N * tau * g * g)) * std::exp(-g * g * N * T / (2.0 * tau));
    model.q = std::clamp(q, 0.0, 1.0);
  } else {
    model.q = 1.0;
  }
  model.cfi = 8.0 * N * g * g * T * T * T / (3.0 * tau);
  if (params.has_strong()) model.cfi += 4.0 * N * T * T;
  const double plateau = kPi * kPi / (48.0 * tau * tau);
  model.predicted_bmse =
      (model.q < 1.0 ? (1.0 - model.q) / model.cfi : 0.0) + model.q * plateau;

  const double log_weak = std::log(std::pow(kPi, 1.5) / (36.0 * epsilon)) + 3.0 * std::log(ratio);
  if (condition == ThresholdCondition::MainText) {
    model.required_N_eta = 2.0 * log_weak;
  } else if (!params.has_strong()) {
    if (!(log_weak > 0.0)) throw DomainError("second-order threshold condition undefined here");
    model.required_N_eta = 2.0 * (log_weak + 0.5 * std::log(log_weak));
  } else {
    const double log_strong =
        std::log(std::pow(kPi, 1.5) * N * ratio * ratio * ratio / (48.0 * epsilon));
    if (!(log_strong > 0.0)) throw DomainError("second-order threshold condition undefined here");
    model.required_N_eta = 2.0 * (log_strong - 0.5 * std::log(log_strong));
  }
  return model;
}

double optimal_strength(const ProtocolParams& params) {
  params.validate();
  const double g_max = std::min(std::sqrt(kMaxEta * params.tau / params.T), 0.25 * kPi);
  const double plateau = kPi * kPi / (48.0 * params.tau * params.tau);
  const InformationKind fit =
      params.has_strong() ? InformationKind::FitWeakWithStrong : InformationKind::FitWeakOnly;

  auto neg_variance = [&](double log_g) {
    ProtocolParams p = params;
    p.g = std::min(std::exp(log_g), g_max);
    const double q = threshold_model(p, 0.5).q;
    const double cfi = analytic_information(fit, p).value;
    return -((1.0 - q) / cfi + q * plateau);
  };
  const double a = std::log(g_max) - std::log(1e4);
  const double b = std::log(g_max);
  const int points = 400;
  const ScanResult coarse = scan(neg_variance, a, b, points);
  const double step = (b - a) / (points - 1);
  const ScanResult fine =
      golden_max(neg_variance, std::max(a, coarse.omega - step), std::min(b, coarse.omega + step), 60);
  const double best = fine.value >= coarse.value ? fine.omega : coarse.omega;
  return std::min(std::exp(best), g_max);
}

}  // namespace weakclock
