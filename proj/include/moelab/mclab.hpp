#ifndef MOELAB_MCLAB_HPP
#define MOELAB_MCLAB_HPP

// Monte Carlo experiments on random channel outputs and random bipartite
// states. Every sample draws from its own substream, so results do not
// depend on the number of workers.

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "moelab/channel.hpp"
#include "moelab/parallel.hpp"
#include "moelab/stats.hpp"

namespace moelab {

struct McConfig {
  int d = 2;
  int n = 2;
  std::size_t samples = 100000;
  double c_mm = 2.0;
  std::uint64_t master_seed = 0;
  unsigned workers = 1;
};

struct McSummary {
  std::string experiment_id;
  McConfig config;
  std::size_t samples = 0;
  std::optional<double> p_hat_mm;
  std::optional<double> q_hat;
  std::optional<double> x_half_prob;
  std::optional<double> purity_mean;
  std::optional<double> ks_distance;
  /// Remaining estimates, standard errors and reference values, by name.
  std::map<std::string, double> values;
  /// Per-channel estimates where an experiment produces one per channel.
  std::vector<double> series;
  /// Set only when the experiment has an analytic reference to check against.
  std::optional<bool> pass;
  double wall_seconds = 0.0;
};

// Stream ids of the individual experiments.
namespace streams {
inline constexpr std::uint64_t kPurity = 0x5055524954590001ULL;
inline constexpr std::uint64_t kEquivChannel = 0x4551554956430002ULL;
inline constexpr std::uint64_t kEquivBipartite = 0x4551554956420003ULL;
inline constexpr std::uint64_t kMixedChannel = 0x4d49584544430004ULL;
inline constexpr std::uint64_t kMixedState = 0x4d49584544530005ULL;
inline constexpr std::uint64_t kOverlap = 0x4f5645524c500006ULL;
inline constexpr std::uint64_t kDecomp = 0x4445434f4d500007ULL;
}  // namespace streams

namespace detail {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline bool within_sigmas(double estimate, double reference, double se, double k = 4.0) {
  if (se == 0.0) return std::abs(estimate - reference) <= 1e-12;
  return std::abs(estimate - reference) <= k * se;
}

}  // namespace detail

/// Spectrum of the reduced state on E, rho_E = Tr_B |psi><psi|.
inline Spectrum reduced_spectrum(const BipartiteState& s) {
  const CMatrix c = s.coefficients();
  return hermitian_eigenvalues(CMatrix((c.adjoint() * c).transpose()));
}

/// Exact law of the largest eigenvalue of rho_E for D = 2:
/// density proportional to (2p - 1)^2 (p (1 - p))^(N - 2) on [1/2, 1].
class TwoLevelEigenLaw {
 public:
  explicit TwoLevelEigenLaw(int n) : n_(n) {
    detail::require(n >= 2, "TwoLevelEigenLaw: N must be >= 2");
    norm_ = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [this](double p) { return unnormalized(p); }, 0.5, 1.0, 15, 1e-14);
  }

  double density(double p) const { return (p < 0.5 || p > 1.0) ? 0.0 : unnormalized(p) / norm_; }

  /// F(hi) - F(lo) by seven-point Gauss-Legendre.
  double mass(double lo, double hi) const {
    lo = std::clamp(lo, 0.5, 1.0);
    hi = std::clamp(hi, 0.5, 1.0);
    if (hi <= lo) return 0.0;
    return boost::math::quadrature::gauss<double, 7>::integrate([this](double p) { return unnormalized(p); }, lo,
                                                                hi) /
           norm_;
  }

  /// E[p^2 + (1 - p)^2].
  double mean_purity() const {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
               [this](double p) { return (p * p + (1 - p) * (1 - p)) * unnormalized(p); }, 0.5, 1.0, 15, 1e-14) /
           norm_;
  }

  /// CDF at each point of an ascending sequence, integrated piecewise.
  std::vector<double> cdf_sorted(const std::vector<double>& xs) const {
    std::vector<double> out(xs.size());
    double acc = 0.0;
    double prev = 0.5;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      acc += mass(prev, xs[i]);
      prev = std::max(prev, std::clamp(xs[i], 0.5, 1.0));
      out[i] = std::min(acc, 1.0);
    }
    return out;
  }

 private:
  double unnormalized(double p) const {
    const double a = 2.0 * p - 1.0;
    return a * a * std::pow(p * (1.0 - p), n_ - 2);
  }

  int n_;
  double norm_;
};

/// E[Tr rho_E^2] for a uniformly random pure state on C^N (x) C^D.
inline double analytic_mean_purity(int d, int n) { return static_cast<double>(n + d) / (static_cast<double>(n) * d + 1.0); }

/// Mean purity of rho_E over random bipartite states, against (N + D) / (N D + 1);
/// for D = 2 also the KS distance of the largest eigenvalue to its exact law.
inline McSummary purity_statistics(const McConfig& cfg) {
  detail::require(cfg.d >= 1 && cfg.n >= cfg.d, "purity_statistics: requires N >= D >= 1");
  detail::require(cfg.samples >= 1, "purity_statistics: samples must be >= 1");
  detail::Stopwatch clock;
  const SeededStream base(cfg.master_seed, streams::kPurity);
  std::vector<double> purity(cfg.samples);
  std::vector<double> top(cfg.samples);
  parallel_for(cfg.samples, cfg.workers, [&](std::size_t i) {
    SeededStream rng = base.substream(i);
    const Spectrum s = reduced_spectrum(random_bipartite_state(cfg.n, cfg.d, rng));
    purity[i] = s.purity();
    top[i] = s.largest();
  });

  McSummary out;
  out.experiment_id = "purity";
  out.config = cfg;
  out.samples = cfg.samples;
  const auto est = stats::mean_estimate(purity);
  const double ref = analytic_mean_purity(cfg.d, cfg.n);
  out.purity_mean = est.mean;
  out.values["purity_stderr"] = est.std_error;
  out.values["purity_reference"] = ref;
  bool pass = detail::within_sigmas(est.mean, ref, est.std_error);
  if (cfg.d == 2) {
    const TwoLevelEigenLaw law(cfg.n);
    out.values["purity_reference_quadrature"] = law.mean_purity();
    std::sort(top.begin(), top.end());
    out.ks_distance = stats::ks_from_sorted_cdf(law.cdf_sorted(top));
  }
  out.pass = pass;
  out.wall_seconds = clock.seconds();
  return out;
}

/// Pooled eigenvalues of E^C(chi chi^dagger), fresh channel and input per
/// sample, against the pooled eigenvalues of random bipartite reduced states.
inline McSummary channel_vs_bipartite_equivalence(const McConfig& cfg) {
  detail::require(cfg.d >= 1 && cfg.n > cfg.d, "channel_vs_bipartite_equivalence: requires N > D");
  detail::require(cfg.samples >= 2, "channel_vs_bipartite_equivalence: samples must be >= 2");
  detail::Stopwatch clock;
  const std::size_t d = static_cast<std::size_t>(cfg.d);
  const SeededStream chan_base(cfg.master_seed, streams::kEquivChannel);
  const SeededStream bip_base(cfg.master_seed, streams::kEquivBipartite);
  std::vector<double> eig_c(cfg.samples * d), eig_b(cfg.samples * d);
  std::vector<std::vector<double>> mom_c(3, std::vector<double>(cfg.samples));
  std::vector<std::vector<double>> mom_b(3, std::vector<double>(cfg.samples));

  parallel_for(cfg.samples, cfg.workers, [&](std::size_t i) {
    SeededStream rc = chan_base.substream(i);
    const ChannelSpec ch = make_channel(cfg.n, cfg.d, rc);
    const PureState chi = random_pure_state(cfg.n, rc);
    const Spectrum sc = hermitian_eigenvalues(apply_conjugate_channel(ch, chi));
    SeededStream rb = bip_base.substream(i);
    const Spectrum sb = reduced_spectrum(random_bipartite_state(cfg.n, cfg.d, rb));
    for (std::size_t k = 0; k < d; ++k) {
      eig_c[i * d + k] = sc[k];
      eig_b[i * d + k] = sb[k];
    }
    for (int m = 0; m < 3; ++m) {
      double a = 0.0, b = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        a += std::pow(std::max(sc[k], 0.0), m + 1);
        b += std::pow(std::max(sb[k], 0.0), m + 1);
      }
      mom_c[static_cast<std::size_t>(m)][i] = a / static_cast<double>(d);
      mom_b[static_cast<std::size_t>(m)][i] = b / static_cast<double>(d);
    }
  });

  McSummary out;
  out.experiment_id = "channel_vs_bipartite";
  out.config = cfg;
  out.samples = cfg.samples;
  bool moments_ok = true;
  for (int m = 0; m < 3; ++m) {
    const auto ec = stats::mean_estimate(mom_c[static_cast<std::size_t>(m)]);
    const auto eb = stats::mean_estimate(mom_b[static_cast<std::size_t>(m)]);
    const std::string k = std::to_string(m + 1);
    out.values["moment" + k + "_channel"] = ec.mean;
    out.values["moment" + k + "_bipartite"] = eb.mean;
    const double se = std::hypot(ec.std_error, eb.std_error);
    out.values["moment" + k + "_stderr"] = se;
    if (m == 0) {
      moments_ok = moments_ok && std::abs(ec.mean - 1.0 / cfg.d) <= 1e-9 && std::abs(eb.mean - 1.0 / cfg.d) <= 1e-9;
    } else {
      moments_ok = moments_ok && detail::within_sigmas(ec.mean, eb.mean, se);
    }
  }
  out.purity_mean = out.values["moment2_channel"] * cfg.d;
  const double ks = stats::ks_two_sample(eig_c, eig_b);
  // Pooled eigenvalues within a sample are dependent; the threshold uses the
  // sample count, not the eigenvalue count.
  const double ks_threshold = std::max(0.01, stats::ks_critical(1e-4, cfg.samples, cfg.samples));
  out.ks_distance = ks;
  out.values["ks_threshold"] = ks_threshold;
  out.pass = moments_ok && ks <= ks_threshold;
  out.wall_seconds = clock.seconds();
  return out;
}

/// c_MM sqrt(ln N / (N - D)).
inline double maximally_mixed_band(int d, int n, double c_mm) {
  detail::require(n > d, "maximally_mixed_band: requires N > D");
  return c_mm * std::sqrt(std::log(static_cast<double>(n)) / (n - d));
}

inline bool close_to_maximally_mixed(const Spectrum& s, double band) {
  const double target = 1.0 / static_cast<double>(s.dim());
  for (double p : s.values())
    if (std::abs(p - target) > band) return false;
  return true;
}

/// For each of `channels` random channels, the fraction of `states_per_channel`
/// random inputs whose E^C output is close to maximally mixed; q_hat is the
/// fraction of channels where that fraction falls below 1/2.
inline McSummary mixed_probability(const McConfig& cfg, std::size_t channels, std::size_t states_per_channel) {
  detail::require(cfg.d >= 1 && cfg.n > cfg.d, "mixed_probability: requires N > D");
  detail::require(channels >= 1 && states_per_channel >= 1, "mixed_probability: counts must be >= 1");
  detail::require(cfg.c_mm > 0.0, "mixed_probability: c_mm must be positive");
  detail::Stopwatch clock;
  const double band = maximally_mixed_band(cfg.d, cfg.n, cfg.c_mm);
  const SeededStream chan_base(cfg.master_seed, streams::kMixedChannel);
  const SeededStream state_base(cfg.master_seed, streams::kMixedState);
  std::vector<double> p_hat(channels);
  parallel_for(channels, cfg.workers, [&](std::size_t c) {
    SeededStream rc = chan_base.substream(c);
    const ChannelSpec ch = make_channel(cfg.n, cfg.d, rc);
    const SeededStream states = state_base.substream(c);
    std::size_t hits = 0;
    for (std::size_t m = 0; m < states_per_channel; ++m) {
      SeededStream rs = states.substream(m);
      if (close_to_maximally_mixed(hermitian_eigenvalues(apply_conjugate_channel(ch, random_pure_state(cfg.n, rs))),
                                   band))
        ++hits;
    }
    p_hat[c] = static_cast<double>(hits) / static_cast<double>(states_per_channel);
  });

  McSummary out;
  out.experiment_id = "mixed_probability";
  out.config = cfg;
  out.samples = channels * states_per_channel;
  out.series = p_hat;
  std::size_t low = 0;
  double mean = 0.0;
  for (double p : p_hat) {
    mean += p;
    if (p < 0.5) ++low;
  }
  mean /= static_cast<double>(channels);
  const double q = static_cast<double>(low) / static_cast<double>(channels);
  out.p_hat_mm = mean;
  out.q_hat = q;
  out.values["band"] = band;
  out.values["q_hat_stderr"] = stats::binomial_stderr(q, channels);
  out.values["channels"] = static_cast<double>(channels);
  out.values["states_per_channel"] = static_cast<double>(states_per_channel);
  out.wall_seconds = clock.seconds();
  return out;
}

/// Pr[x^2 <= 1/2] for x^2 = 1 - |<psi0|chi>|^2, random chi against a fixed
/// random psi0, compared with 2^-(N-1).
inline McSummary overlap_probability(int n, std::size_t samples, std::uint64_t master_seed, unsigned workers = 1) {
  detail::require(n >= 2, "overlap_probability: N must be >= 2");
  detail::require(samples >= 1, "overlap_probability: samples must be >= 1");
  detail::Stopwatch clock;
  const SeededStream base(master_seed, streams::kOverlap);
  SeededStream ref_rng = base.substream(~std::uint64_t{0});
  const PureState psi0 = random_pure_state(n, ref_rng);
  std::vector<unsigned char> hit(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    SeededStream rng = base.substream(i);
    const PureState chi = random_pure_state(n, rng);
    const double x2 = 1.0 - std::norm(psi0.amplitudes().dot(chi.amplitudes()));
    hit[i] = x2 <= 0.5 ? 1 : 0;
  });
  std::size_t count = 0;
  for (unsigned char h : hit) count += h;

  McSummary out;
  out.experiment_id = "overlap";
  out.config.n = n;
  out.config.d = 0;
  out.config.samples = samples;
  out.config.master_seed = master_seed;
  out.config.workers = workers;
  out.samples = samples;
  const double p = static_cast<double>(count) / static_cast<double>(samples);
  const double ref = std::pow(0.5, n - 1);
  double se = stats::binomial_stderr(p, samples);
  if (se == 0.0) se = stats::binomial_stderr(ref, samples);
  out.x_half_prob = p;
  out.values["stderr"] = se;
  out.values["reference"] = ref;
  out.values["count"] = static_cast<double>(count);
  out.pass = detail::within_sigmas(p, ref, se);
  out.wall_seconds = clock.seconds();
  return out;
}

/// One draw of chi = z sqrt(1 - x^2) psi0 + x phi with phi orthogonal to psi0.
struct DecompositionSample {
  double x = 0.0;
  double y = 1.0;  // 1 - x^2
  cplx overlap_phase{1.0, 0.0};
  Spectrum q_spectrum;
  Spectrum reference_spectrum;
  /// max_i |q_i - (y p_i + (1 - y) / D)|, both spectra sorted descending.
  double deviation = 0.0;
  /// Trace norm of E^C(|phi><psi0|).
  double cross_trace_norm = 0.0;
};

/// Decomposes a given chi against psi0 and measures the mixture deviation.
inline DecompositionSample decompose(const ChannelSpec& ch, const PureState& psi0, const PureState& chi,
                                     const Spectrum& reference) {
  DecompositionSample s;
  const cplx c = psi0.amplitudes().dot(chi.amplitudes());
  s.y = std::min(1.0, std::norm(c));
  s.x = std::sqrt(std::max(0.0, 1.0 - s.y));
  s.overlap_phase = std::abs(c) > 0.0 ? c / std::abs(c) : cplx(1.0, 0.0);
  s.reference_spectrum = reference;
  s.q_spectrum = hermitian_eigenvalues(apply_conjugate_channel(ch, chi));
  const double dd = static_cast<double>(ch.d());
  for (std::size_t i = 0; i < s.q_spectrum.dim(); ++i)
    s.deviation = std::max(s.deviation, std::abs(s.q_spectrum[i] - (s.y * reference[i] + (1.0 - s.y) / dd)));
  const CVector rest = chi.amplitudes() - c * psi0.amplitudes();
  const double rn = rest.norm();
  if (rn > 1e-14) s.cross_trace_norm = trace_norm(complementary_operator(ch, rest / rn, psi0.amplitudes()));
  return s;
}

struct DecompositionResult {
  std::vector<DecompositionSample> samples;
  McSummary summary;
};

/// Samples chi either uniformly (conditioned = false) or from the uniform law
/// restricted to y >= 1/2 (conditioned = true): x^2 = u^(1/(N-1)) / 2, a
/// uniform phase z, and phi the normalized projection of a random state onto
/// the complement of psi0.
inline DecompositionResult decomposition_statistics(const ChannelSpec& ch, const PureState& psi0, std::size_t samples,
                                                    std::uint64_t master_seed, bool conditioned = true,
                                                    unsigned workers = 1) {
  detail::require(psi0.dim() == ch.n(), "decomposition_statistics: reference state dimension mismatch");
  detail::require(ch.n() >= 2, "decomposition_statistics: N must be >= 2");
  detail::require(samples >= 1, "decomposition_statistics: samples must be >= 1");
  detail::Stopwatch clock;
  const Spectrum reference = hermitian_eigenvalues(apply_conjugate_channel(ch, psi0));
  const SeededStream base(master_seed, streams::kDecomp);
  const Eigen::Index n = ch.n();
  DecompositionResult res;
  res.samples.resize(samples);
  parallel_for(samples, workers, [&](std::size_t i) {
    SeededStream rng = base.substream(i);
    PureState chi;
    if (conditioned) {
      const double x2 = 0.5 * std::pow(rng.uniform(), 1.0 / static_cast<double>(n - 1));
      const double phase = 2.0 * std::numbers::pi * rng.uniform();
      const cplx z = std::polar(1.0, phase);
      const PureState theta = random_pure_state(n, rng);
      CVector phi = theta.amplitudes() - psi0.amplitudes().dot(theta.amplitudes()) * psi0.amplitudes();
      phi /= phi.norm();
      chi = PureState::normalized(z * std::sqrt(1.0 - x2) * psi0.amplitudes() + std::sqrt(x2) * phi);
    } else {
      chi = random_pure_state(n, rng);
    }
    res.samples[i] = decompose(ch, psi0, chi, reference);
  });

  std::vector<double> dev_cond, dev_all, cross;
  for (const auto& s : res.samples) {
    dev_all.push_back(s.deviation);
    cross.push_back(s.cross_trace_norm);
    if (s.y >= 0.5) dev_cond.push_back(s.deviation);
  }
  McSummary& out = res.summary;
  out.experiment_id = "decomposition";
  out.config.d = static_cast<int>(ch.d());
  out.config.n = static_cast<int>(n);
  out.config.samples = samples;
  out.config.master_seed = master_seed;
  out.config.workers = workers;
  out.samples = samples;
  out.values["conditioned"] = conditioned ? 1.0 : 0.0;
  out.values["count_y_ge_half"] = static_cast<double>(dev_cond.size());
  out.values["median_deviation_y_ge_half"] = stats::median(dev_cond);
  out.values["mean_deviation_y_ge_half"] = stats::mean_estimate(dev_cond).mean;
  out.values["median_deviation"] = stats::median(dev_all);
  out.values["median_cross_trace_norm"] = stats::median(cross);
  out.values["mean_cross_trace_norm"] = stats::mean_estimate(cross).mean;
  out.values["reference_entropy"] = von_neumann_entropy(reference);
  out.wall_seconds = clock.seconds();
  return res;
}

}  // namespace moelab

#endif  // MOELAB_MCLAB_HPP
