#ifndef MOELAB_MOE_HPP
#define MOELAB_MOE_HPP

// Minimum output entropy search: multi-start projected gradient descent on
// the unit sphere, optimizing through the D x D complementary output.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "moelab/bounds.hpp"
#include "moelab/channel.hpp"
#include "moelab/parallel.hpp"

namespace moelab {

namespace tol {
inline constexpr double kLogFloor = 1e-14;  // eigenvalue floor inside ln(rho) for the gradient only
}

struct EntropyGradient {
  double value = 0.0;
  /// d/dRe + i d/dIm of the objective, i.e. 2 dS/d(conj psi). Not projected.
  CVector gradient;
  bool near_singular = false;
};

namespace detail {

inline CMatrix complementary_from_images(const CMatrix& w) { return (w.adjoint() * w).transpose(); }

inline double entropy_of_hermitian(const CMatrix& rho) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
  const RVector& ev = es.eigenvalues();
  return shannon_entropy(std::vector<double>(ev.data(), ev.data() + ev.size()));
}

}  // namespace detail

/// S(E^C(psi psi^dagger)) for any nonzero psi (no normalization applied).
inline double output_entropy(const ChannelSpec& ch, const CVector& psi) {
  return detail::entropy_of_hermitian(detail::complementary_from_images(weighted_images(ch, psi)));
}

/// Value of S(E^C(psi psi^dagger)) and its gradient through the adjoint of
/// rho -> E^C(rho) applied to -(ln rho_out + I).
inline EntropyGradient output_entropy_and_gradient(const ChannelSpec& ch, const CVector& psi) {
  if (psi.size() != ch.n()) throw PreconditionError("output_entropy_and_gradient: dimension mismatch");
  const CMatrix w = weighted_images(ch, psi);
  const CMatrix rho = detail::complementary_from_images(w);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rho + rho.adjoint()));
  const RVector& ev = es.eigenvalues();

  EntropyGradient out;
  out.value = shannon_entropy(std::vector<double>(ev.data(), ev.data() + ev.size()));
  RVector weight(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    if (ev(k) < tol::kLogFloor) out.near_singular = true;
    weight(k) = -(std::log(std::max(ev(k), tol::kLogFloor)) + 1.0);
  }
  const CMatrix m = es.eigenvectors() * weight.asDiagonal() * es.eigenvectors().adjoint();

  // dS/d(conj psi) = sum_j sqrt(P_j) U_j t_j,  t_j = sum_i M_ji w_i
  const CMatrix t = w * m.transpose();
  out.gradient = CVector::Zero(ch.n());
  for (Eigen::Index j = 0; j < ch.d(); ++j)
    out.gradient.noalias() += (2.0 * ch.sqrt_probabilities()(j)) * (ch.unitary(j) * t.col(j));
  return out;
}

/// Removes the radial component of g at the unit vector psi.
inline CVector tangent_projection(const CVector& psi, const CVector& g) {
  return g - psi.dot(g).real() * psi;
}

/// Fixes the global phase so the largest-magnitude amplitude is real positive
/// (lowest index on ties).
inline PureState phase_gauge(const PureState& psi) {
  const CVector& a = psi.amplitudes();
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < a.size(); ++k)
    if (std::abs(a(k)) > std::abs(a(best))) best = k;
  const double mag = std::abs(a(best));
  if (mag == 0.0) return psi;
  return PureState::normalized(a * (std::conj(a(best)) / mag));
}

struct EigenvectorSeed {
  PureState state;
  Eigen::Index a = 0;  // index of the largest amplitude
  Eigen::Index b = 0;  // index of the second largest
  Eigen::Index k = 0;  // eigenvector index
  double entropy = 0.0;
};

/// Eigenvectors of U_a U_b^dagger for the two largest amplitudes. For each
/// such state U_b^dagger psi and U_a^dagger psi coincide up to a phase, so the
/// output is a mixture of D - 1 pure states. Sorted by output entropy.
inline std::vector<EigenvectorSeed> eigenvector_seeds(const ChannelSpec& ch) {
  std::vector<EigenvectorSeed> seeds;
  if (ch.d() < 2) return seeds;
  const auto [a, b] = two_largest(ch.amplitudes());
  const CMatrix w = ch.unitary(a) * ch.unitary(b).adjoint();
  const auto [vecs, vals] = unitary_eigenvectors(w);
  (void)vals;

  const Eigen::Index n = ch.n();
  std::vector<CMatrix> images;
  images.reserve(static_cast<std::size_t>(ch.d()));
  for (Eigen::Index i = 0; i < ch.d(); ++i) images.push_back(ch.unitary(i).adjoint() * vecs);

  seeds.reserve(static_cast<std::size_t>(n));
  CMatrix wk(n, ch.d());
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index i = 0; i < ch.d(); ++i)
      wk.col(i) = ch.sqrt_probabilities()(i) * images[static_cast<std::size_t>(i)].col(k);
    EigenvectorSeed s{PureState::normalized(vecs.col(k)), a, b, k,
                      detail::entropy_of_hermitian(detail::complementary_from_images(wk))};
    seeds.push_back(std::move(s));
  }
  std::stable_sort(seeds.begin(), seeds.end(),
                   [](const EigenvectorSeed& x, const EigenvectorSeed& y) { return x.entropy < y.entropy; });
  return seeds;
}

struct MoeConfig {
  int starts = 32;        // random starts
  int max_iters = 2000;
  double grad_tol = 1e-8;
  bool eigenvector_seeding = true;
  int max_seeds = 64;     // eigenvector seeds appended after the random starts
  double armijo = 1e-4;
  double shrink = 0.5;
  bool record_traces = false;
  unsigned workers = 1;
};

struct DescentRun {
  PureState state;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after every accepted step, starting value first
};

/// Projected gradient descent with Armijo backtracking and a Barzilai-Borwein
/// initial step. Every accepted step decreases the objective.
inline DescentRun descend(const ChannelSpec& ch, const PureState& start, const MoeConfig& cfg) {
  DescentRun run;
  CVector psi = start.amplitudes();
  EntropyGradient eg = output_entropy_and_gradient(ch, psi);
  CVector gt = tangent_projection(psi, eg.gradient);
  double f = eg.value;
  if (cfg.record_traces) run.trace.push_back(f);
  double alpha = 0.1 / std::max(gt.norm(), 1e-300);

  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    const double gnorm2 = gt.squaredNorm();
    if (std::sqrt(gnorm2) <= cfg.grad_tol) {
      run.converged = true;
      break;
    }
    bool accepted = false;
    CVector trial;
    double f_trial = f;
    for (int bt = 0; bt < 80; ++bt) {
      trial = psi - alpha * gt;
      trial /= trial.norm();
      f_trial = output_entropy(ch, trial);
      const double decrease = cfg.armijo * alpha * gnorm2;
      const bool below_roundoff = decrease < 1e-15 * std::max(1.0, std::abs(f));
      if (f_trial <= f - decrease || (below_roundoff && f_trial <= f)) {
        accepted = true;
        break;
      }
      alpha *= cfg.shrink;
    }
    if (!accepted) break;  // no representable descent step left

    const EntropyGradient next = output_entropy_and_gradient(ch, trial);
    const CVector gt_next = tangent_projection(trial, next.gradient);
    const CVector s = trial - psi;
    const CVector y = gt_next - gt;
    const double sy = s.dot(y).real();
    const double bb = sy > 0.0 ? s.squaredNorm() / sy : 2.0 * alpha;
    alpha = std::clamp(bb, 1e-12, 1e6);

    psi = trial;
    f = f_trial;
    gt = gt_next;
    if (cfg.record_traces) run.trace.push_back(f);
  }
  if (!run.converged && gt.norm() <= cfg.grad_tol) run.converged = true;
  run.iterations = it;
  run.value = f;
  run.state = PureState::normalized(psi);
  return run;
}

struct MoeResult {
  double entropy_estimate = 0.0;
  PureState argmin_state;
  int starts = 0;
  int best_start = 0;
  std::vector<int> iterations_per_start;
  std::vector<bool> converged_flags;
  std::vector<std::string> seed_provenance;  // "random" or "eigenvector-pair(a,b,k)"
  std::vector<double> final_entropies;
  std::vector<std::vector<double>> traces;
};

struct MoeStart {
  PureState state;
  std::string provenance;
};

/// K random starts (substreams 0..K-1 of rng) followed by up to max_seeds
/// eigenvector seeds.
inline std::vector<MoeStart> moe_starts(const ChannelSpec& ch, const MoeConfig& cfg, const SeededStream& rng) {
  std::vector<MoeStart> starts;
  for (int k = 0; k < cfg.starts; ++k) {
    SeededStream sub = rng.substream(static_cast<std::uint64_t>(k));
    starts.push_back({random_pure_state(ch.n(), sub), "random"});
  }
  if (cfg.eigenvector_seeding && ch.d() >= 2) {
    std::vector<EigenvectorSeed> seeds = eigenvector_seeds(ch);
    const std::size_t take = std::min<std::size_t>(seeds.size(), static_cast<std::size_t>(std::max(0, cfg.max_seeds)));
    for (std::size_t s = 0; s < take; ++s)
      starts.push_back({seeds[s].state, "eigenvector-pair(" + std::to_string(seeds[s].a) + "," +
                                            std::to_string(seeds[s].b) + "," + std::to_string(seeds[s].k) + ")"});
  }
  if (starts.empty()) {
    SeededStream sub = rng.substream(0);
    starts.push_back({random_pure_state(ch.n(), sub), "random"});
  }
  return starts;
}

/// Runs descent from every given start; the estimate is the minimum final
/// entropy (lowest start index on ties), an upper bound on the true minimum.
inline MoeResult minimize_from(const ChannelSpec& ch, const std::vector<MoeStart>& starts, const MoeConfig& cfg) {
  detail::require(!starts.empty(), "minimize_output_entropy: no starts");
  std::vector<DescentRun> runs(starts.size());
  parallel_for(starts.size(), cfg.workers, [&](std::size_t i) { runs[i] = descend(ch, starts[i].state, cfg); });

  MoeResult r;
  r.starts = static_cast<int>(starts.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    r.iterations_per_start.push_back(runs[i].iterations);
    r.converged_flags.push_back(runs[i].converged);
    r.seed_provenance.push_back(starts[i].provenance);
    r.final_entropies.push_back(runs[i].value);
    if (cfg.record_traces) r.traces.push_back(std::move(runs[i].trace));
    if (runs[i].value < runs[best].value) best = i;
  }
  r.best_start = static_cast<int>(best);
  r.entropy_estimate = runs[best].value;
  r.argmin_state = phase_gauge(runs[best].state);
  return r;
}

inline MoeResult minimize_output_entropy(const ChannelSpec& ch, const MoeConfig& cfg, const SeededStream& rng) {
  detail::require(cfg.starts >= 1, "minimize_output_entropy: need at least one random start");
  return minimize_from(ch, moe_starts(ch, cfg, rng), cfg);
}

struct GapResult {
  double h_me = 0.0;
  double h_min_estimate = 0.0;
  /// 2 h_min_estimate - h_me; positive values point in the violation direction.
  double gap = 0.0;
  MoeResult moe;
};

inline GapResult entropy_gap_experiment(const ChannelSpec& ch, const MoeConfig& cfg, const SeededStream& rng) {
  GapResult g;
  g.h_me = me_output_entropy(ch);
  g.moe = minimize_output_entropy(ch, cfg, rng);
  g.h_min_estimate = g.moe.entropy_estimate;
  g.gap = 2.0 * g.h_min_estimate - g.h_me;
  return g;
}

}  // namespace moelab

#endif  // MOELAB_MOE_HPP
