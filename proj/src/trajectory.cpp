#include "weakclock/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include "json.hpp"

#include "weakclock/errors.hpp"
#include "weakclock/parallel.hpp"
#include "weakclock/rng.hpp"

namespace weakclock {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-run constants of the recursion, hoisted out of the step loop.
struct StepConstants {
  double sigma = 0.0;        // (1 - 2 p_e) sin 2g
  double contraction = 1.0;  // cos 2g
  double cos_rot = 1.0;
  double sin_rot = 0.0;
  double rot_rate = 0.0;     // d(rotation angle)/d omega for one period
  double strong_visibility = 1.0;
  // Last rotation before the projective readout ends exactly at T.
  double cos_last = 1.0;
  double sin_last = 0.0;
  double last_rate = 0.0;
  int weak_steps = 0;
  bool has_strong = false;
};

StepConstants make_constants(const ProtocolParams& p, double omega) {
  StepConstants k;
  k.sigma = (1.0 - 2.0 * p.p_e) * std::sin(2.0 * p.g);
  k.contraction = std::cos(2.0 * p.g);
  k.cos_rot = std::cos(2.0 * omega * p.tau);
  k.sin_rot = std::sin(2.0 * omega * p.tau);
  k.rot_rate = 2.0 * p.tau;
  k.weak_steps = p.weak_steps();
  k.has_strong = p.has_strong();
  k.strong_visibility = 1.0 - 2.0 * p.p_e_strong;
  const double last = p.T - (p.steps() - 1) * p.tau;
  k.cos_last = std::cos(2.0 * omega * last);
  k.sin_last = std::sin(2.0 * omega * last);
  k.last_rate = 2.0 * last;
  return k;
}

// Cartesian equatorial state with its omega-derivative.
struct Tangent {
  double u = 1.0, v = 0.0;
  double du = 0.0, dv = 0.0;
};

inline void rotate(Tangent& s, double c, double sn, double rate) {
  const double u = c * s.u + sn * s.v;
  const double v = -sn * s.u + c * s.v;
  const double du = c * s.du + sn * s.dv + rate * v;
  const double dv = -sn * s.du + c * s.dv - rate * u;
  s = {u, v, du, dv};
}

inline void rotate(double& u, double& v, double c, double sn) {
  const double nu = c * u + sn * v;
  v = -sn * u + c * v;
  u = nu;
}

// Measurement back-action with signed strength; returns d log p / d omega.
inline double back_action(Tangent& s, double sigma, double contraction, double inv_d) {
  const double dlogp = sigma * s.du * inv_d;
  const double a = (s.u + sigma) * inv_d;
  const double b = contraction * s.v * inv_d;
  const double da = s.du * (1.0 - sigma * sigma) * inv_d * inv_d;
  const double db = contraction * (s.dv * inv_d - s.v * sigma * s.du * inv_d * inv_d);
  s = {a, b, da, db};
  return dlogp;
}

void check_shape(const Trajectory& traj, const ProtocolParams& params) {
  if (traj.qubits != params.N || traj.weak_steps != params.weak_steps() ||
      traj.has_strong != params.has_strong() ||
      traj.weak.size() != static_cast<std::size_t>(traj.qubits) * traj.weak_steps ||
      traj.strong.size() != (traj.has_strong ? static_cast<std::size_t>(traj.qubits) : 0u)) {
    throw DomainError("trajectory shape does not match protocol parameters");
  }
}

// Scores one qubit record; returns false on a zero-probability step.
bool score_qubit(const StepConstants& k, const std::uint8_t* weak, int strong, double& logp,
                 double& score) {
  Tangent s;
  rotate(s, k.cos_rot, k.sin_rot, k.rot_rate);
  for (int i = 0; i < k.weak_steps; ++i) {
    const double sigma = weak[i] == 0 ? k.sigma : -k.sigma;
    const double d = 1.0 + sigma * s.u;
    if (d <= 0.0) return false;
    logp += std::log(0.5 * d);
    score += back_action(s, sigma, k.contraction, 1.0 / d);
    if (i + 1 < k.weak_steps || !k.has_strong) {
      rotate(s, k.cos_rot, k.sin_rot, k.rot_rate);
    } else {
      rotate(s, k.cos_last, k.sin_last, k.last_rate);
    }
  }
  if (k.has_strong) {
    if (k.weak_steps == 0) {
      // m = 1: the only rotation already happened; redo it with the exact length.
      s = Tangent{};
      rotate(s, k.cos_last, k.sin_last, k.last_rate);
    }
    const double vis = strong == 0 ? k.strong_visibility : -k.strong_visibility;
    const double d = 1.0 + vis * s.u;
    if (d <= 0.0) return false;
    logp += std::log(0.5 * d);
    score += vis * s.du / d;
  }
  return true;
}

// Likelihood of one qubit record as a running product, renormalized through
// frexp so that long records neither underflow nor pay a log per step.
double qubit_log_likelihood(const StepConstants& k, const std::uint8_t* weak, int strong) {
  double u = 1.0, v = 0.0;
  rotate(u, v, k.cos_rot, k.sin_rot);
  double prod = 1.0;
  long exponent = 0;
  for (int i = 0; i < k.weak_steps; ++i) {
    const double sigma = weak[i] == 0 ? k.sigma : -k.sigma;
    const double d = 1.0 + sigma * u;
    if (d <= 0.0) return kNegInf;
    prod *= d;
    const double inv_d = 1.0 / d;
    const double a = (u + sigma) * inv_d;
    const double b = k.contraction * v * inv_d;
    if (i + 1 < k.weak_steps || !k.has_strong) {
      u = k.cos_rot * a + k.sin_rot * b;
      v = -k.sin_rot * a + k.cos_rot * b;
    } else {
      u = k.cos_last * a + k.sin_last * b;
      v = -k.sin_last * a + k.cos_last * b;
    }
    if ((i & 31) == 31 || prod < 1e-200) {
      int e = 0;
      prod = std::frexp(prod, &e);
      exponent += e;
    }
  }
  if (k.has_strong) {
    if (k.weak_steps == 0) {
      u = k.cos_last;
    }
    const double vis = strong == 0 ? k.strong_visibility : -k.strong_visibility;
    const double d = 1.0 + vis * u;
    if (d <= 0.0) return kNegInf;
    prod *= d;
  }
  const int factors = k.weak_steps + (k.has_strong ? 1 : 0);
  return std::log(prod) + exponent * std::numbers::ln2 - factors * std::numbers::ln2;
}

// Draws one qubit record at the true omega and returns its score. With
// integrate_strong set, the projective outcome is not drawn; the return value
// is then E[score^2 | weak record], which has the same mean as score^2 but
// no heavy tail from near-certain readouts.
double sample_qubit(const StepConstants& k, Engine& rng, std::uint8_t* weak, std::uint8_t* strong,
                    bool integrate_strong = false) {
  Tangent s;
  rotate(s, k.cos_rot, k.sin_rot, k.rot_rate);
  double score = 0.0;
  for (int i = 0; i < k.weak_steps; ++i) {
    const double p0 = 0.5 * (1.0 + k.sigma * s.u);
    const int x = uniform01(rng) < p0 ? 0 : 1;
    weak[i] = static_cast<std::uint8_t>(x);
    const double sigma = x == 0 ? k.sigma : -k.sigma;
    score += back_action(s, sigma, k.contraction, 1.0 / (1.0 + sigma * s.u));
    if (i + 1 < k.weak_steps || !k.has_strong) {
      rotate(s, k.cos_rot, k.sin_rot, k.rot_rate);
    } else {
      rotate(s, k.cos_last, k.sin_last, k.last_rate);
    }
  }
  if (!k.has_strong) return integrate_strong ? score * score : score;
  if (k.weak_steps == 0) {
    s = Tangent{};
    rotate(s, k.cos_last, k.sin_last, k.last_rate);
  }
  if (integrate_strong) {
    // The strong score has zero conditional mean, so the cross term drops.
    const double vu = k.strong_visibility * s.u;
    const double vdu = k.strong_visibility * s.du;
    const double strong_info = vdu == 0.0 ? 0.0 : vdu * vdu / ((1.0 - vu) * (1.0 + vu));
    return score * score + strong_info;
  }
  const double p0 = 0.5 * (1.0 + k.strong_visibility * s.u);
  const int x = uniform01(rng) < p0 ? 0 : 1;
  *strong = static_cast<std::uint8_t>(x);
  const double vis = x == 0 ? k.strong_visibility : -k.strong_visibility;
  score += vis * s.du / (1.0 + vis * s.u);
  return score;
}

std::string pack_hex(const std::uint8_t* bits, std::size_t count) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve((count + 7) / 8 * 2);
  for (std::size_t start = 0; start < count; start += 8) {
    unsigned byte = 0;
    for (std::size_t i = start; i < std::min(count, start + 8); ++i) {
      byte |= static_cast<unsigned>(bits[i] & 1u) << (i - start);
    }
    out.push_back(kDigits[byte >> 4]);
    out.push_back(kDigits[byte & 15u]);
  }
  return out;
}

void unpack_hex(const std::string& hex, std::uint8_t* bits, std::size_t count) {
  if (hex.size() != (count + 7) / 8 * 2) throw DomainError("packed outcome string has wrong length");
  auto nibble = [](char c) -> unsigned {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw DomainError("invalid hex digit in packed outcome string");
  };
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned byte = nibble(hex[i / 8 * 2]) << 4 | nibble(hex[i / 8 * 2 + 1]);
    bits[i] = static_cast<std::uint8_t>((byte >> (i % 8)) & 1u);
  }
}

}  // namespace

std::uint64_t qubit_seed(std::uint64_t trajectory_seed, int qubit) {
  return derive_seed(trajectory_seed, static_cast<std::uint64_t>(qubit));
}

std::uint64_t trajectory_seed(std::uint64_t root, std::uint64_t index) {
  return derive_seed(root, index);
}

Trajectory simulate_trajectory(const ProtocolParams& params, double omega, std::uint64_t seed) {
  params.validate();
  if (!std::isfinite(omega)) throw DomainError("omega must be finite");
  const StepConstants k = make_constants(params, omega);
  Trajectory traj;
  traj.qubits = params.N;
  traj.weak_steps = k.weak_steps;
  traj.has_strong = k.has_strong;
  traj.seed = seed;
  traj.params_hash = params_hash(params);
  traj.weak.assign(static_cast<std::size_t>(params.N) * k.weak_steps, 0);
  traj.strong.assign(k.has_strong ? params.N : 0, 0);
  for (int q = 0; q < params.N; ++q) {
    Engine rng(qubit_seed(seed, q));
    std::uint8_t* strong = k.has_strong ? &traj.strong[q] : nullptr;
    sample_qubit(k, rng, traj.weak.data() + static_cast<std::size_t>(q) * k.weak_steps, strong);
  }
  return traj;
}

std::vector<Trajectory> simulate_batch(const ProtocolParams& params, std::span<const double> omegas,
                                       std::uint64_t root_seed, int workers) {
  params.validate();
  std::vector<Trajectory> out(omegas.size());
  parallel_for(omegas.size(), workers, [&](std::size_t i) {
    out[i] = simulate_trajectory(params, omegas[i], trajectory_seed(root_seed, i));
  });
  return out;
}

ScoredLikelihood score_trajectory(const Trajectory& traj, double omega,
                                  const ProtocolParams& params) {
  check_shape(traj, params);
  const StepConstants k = make_constants(params, omega);
  ScoredLikelihood result;
  for (int q = 0; q < traj.qubits; ++q) {
    const int strong = traj.has_strong ? traj.strong[q] : 0;
    if (!score_qubit(k, traj.weak_outcomes(q).data(), strong, result.log_likelihood,
                     result.score)) {
      result.log_likelihood = kNegInf;
      result.zero_probability = true;
      result.score = std::numeric_limits<double>::quiet_NaN();
      return result;
    }
  }
  return result;
}

double log_likelihood(const Trajectory& traj, double omega, const ProtocolParams& params) {
  check_shape(traj, params);
  const StepConstants k = make_constants(params, omega);
  double total = 0.0;
  for (int q = 0; q < traj.qubits; ++q) {
    const int strong = traj.has_strong ? traj.strong[q] : 0;
    total += qubit_log_likelihood(k, traj.weak_outcomes(q).data(), strong);
    if (total == kNegInf) break;
  }
  return total;
}

double sample_single_qubit_score(const ProtocolParams& params, double omega, std::uint64_t seed) {
  const StepConstants k = make_constants(params, omega);
  thread_local std::vector<std::uint8_t> weak;
  weak.resize(k.weak_steps);
  std::uint8_t strong = 0;
  Engine rng(qubit_seed(seed, 0));
  return sample_qubit(k, rng, weak.data(), &strong);
}

double sample_single_qubit_fisher(const ProtocolParams& params, double omega, std::uint64_t seed) {
  const StepConstants k = make_constants(params, omega);
  thread_local std::vector<std::uint8_t> weak;
  weak.resize(k.weak_steps);
  std::uint8_t strong = 0;
  Engine rng(qubit_seed(seed, 0));
  return sample_qubit(k, rng, weak.data(), &strong, /*integrate_strong=*/true);
}

Trajectory trajectory_from_bits(const ProtocolParams& params, std::uint32_t bits) {
  const int m = params.steps();
  Trajectory traj;
  traj.qubits = params.N;
  traj.weak_steps = params.weak_steps();
  traj.has_strong = params.has_strong();
  traj.params_hash = params_hash(params);
  traj.weak.resize(static_cast<std::size_t>(params.N) * traj.weak_steps);
  traj.strong.resize(traj.has_strong ? params.N : 0);
  for (int q = 0; q < params.N; ++q) {
    for (int i = 0; i < traj.weak_steps; ++i) {
      traj.weak[static_cast<std::size_t>(q) * traj.weak_steps + i] = (bits >> (q * m + i)) & 1u;
    }
    if (traj.has_strong) traj.strong[q] = (bits >> (q * m + m - 1)) & 1u;
  }
  return traj;
}

std::vector<OutcomeString> enumerate_outcome_distribution(const ProtocolParams& params,
                                                          double omega, int max_bits) {
  params.validate();
  const long total_bits = static_cast<long>(params.N) * params.steps();
  const int limit = std::min(max_bits, 20);
  if (total_bits > limit) {
    throw GuardError("enumeration of 2^" + std::to_string(total_bits) +
                     " outcome strings refused (limit 2^" + std::to_string(limit) + ")");
  }
  // Qubits are independent: tabulate one qubit, then take products.
  ProtocolParams single = params;
  single.N = 1;
  const int m = params.steps();
  const std::uint32_t per_qubit = 1u << m;
  std::vector<double> table(per_qubit);
  for (std::uint32_t b = 0; b < per_qubit; ++b) {
    const double lp = log_likelihood(trajectory_from_bits(single, b), omega, single);
    table[b] = lp == kNegInf ? 0.0 : std::exp(lp);
  }
  const std::uint64_t count = 1ull << total_bits;
  std::vector<OutcomeString> out(count);
  for (std::uint64_t b = 0; b < count; ++b) {
    double p = 1.0;
    for (int q = 0; q < params.N; ++q) p *= table[(b >> (q * m)) & (per_qubit - 1)];
    out[b] = {static_cast<std::uint32_t>(b), p};
  }
  return out;
}

std::string trajectory_to_json(const Trajectory& traj) {
  nlohmann::json j;
  j["qubits"] = traj.qubits;
  j["weak_steps"] = traj.weak_steps;
  j["has_strong"] = traj.has_strong;
  j["seed"] = traj.seed;
  j["params_hash"] = traj.params_hash;
  auto weak = nlohmann::json::array();
  for (int q = 0; q < traj.qubits; ++q) {
    weak.push_back(pack_hex(traj.weak_outcomes(q).data(), traj.weak_steps));
  }
  j["weak"] = std::move(weak);
  j["strong"] = pack_hex(traj.strong.data(), traj.strong.size());
  return j.dump();
}

Trajectory trajectory_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed trajectory JSON: ") + e.what());
  }
  Trajectory traj;
  try {
    traj.qubits = j.at("qubits").get<int>();
    traj.weak_steps = j.at("weak_steps").get<int>();
    traj.has_strong = j.at("has_strong").get<bool>();
    traj.seed = j.at("seed").get<std::uint64_t>();
    traj.params_hash = j.at("params_hash").get<std::uint64_t>();
    const auto& weak = j.at("weak");
    if (traj.qubits < 0 || traj.weak_steps < 0 || weak.size() != static_cast<std::size_t>(traj.qubits)) {
      throw DomainError("trajectory JSON has inconsistent sizes");
    }
    traj.weak.resize(static_cast<std::size_t>(traj.qubits) * traj.weak_steps);
    for (int q = 0; q < traj.qubits; ++q) {
      unpack_hex(weak[q].get<std::string>(),
                 traj.weak.data() + static_cast<std::size_t>(q) * traj.weak_steps, traj.weak_steps);
    }
    traj.strong.resize(traj.has_strong ? traj.qubits : 0);
    unpack_hex(j.at("strong").get<std::string>(), traj.strong.data(), traj.strong.size());
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("trajectory JSON: ") + e.what());
  }
  return traj;
}

}  // namespace weakclock
