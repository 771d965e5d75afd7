#ifndef MOELAB_CHANNEL_HPP
#define MOELAB_CHANNEL_HPP

// Random-unitary channel E(rho) = sum_i P_i U_i^dagger rho U_i, its entrywise
// conjugate, its complementary channel, and the output of E (x) conj(E) on the
// maximally entangled state.

#include <cstdint>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "moelab/linalg.hpp"
#include "moelab/random.hpp"

namespace moelab {

struct ChannelOptions {
  bool orthogonal = false;  // draw U_i from O(N), so conj(E) == E
  bool uniform_p = false;   // l_i = 1/sqrt(D) instead of the Gamma-type law
};

/// Where a channel came from, when it was generated rather than loaded.
struct ChannelProvenance {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  ChannelOptions options;
};

class ChannelSpec {
 public:
  ChannelSpec() = default;

  ChannelSpec(std::vector<CMatrix> unitaries, RVector amplitudes,
              std::optional<ChannelProvenance> provenance = std::nullopt)
      : u_(std::move(unitaries)), l_(std::move(amplitudes)), provenance_(provenance) {
    if (u_.empty()) throw ValidationError("ChannelSpec: at least one unitary required");
    if (static_cast<Eigen::Index>(u_.size()) != l_.size())
      throw ValidationError("ChannelSpec: number of amplitudes differs from number of unitaries");
    n_ = u_.front().rows();
    for (std::size_t i = 0; i < u_.size(); ++i) {
      if (u_[i].rows() != n_ || u_[i].cols() != n_) {
        std::ostringstream os;
        os << "ChannelSpec: unitary " << i << " is not " << n_ << "x" << n_;
        throw ValidationError(os.str());
      }
      const double res = unitarity_residual(u_[i]);
      if (!(res <= 1e-10)) {
        std::ostringstream os;
        os << "ChannelSpec: unitary " << i << " fails unitarity check (residual " << res << ")";
        throw ValidationError(os.str());
      }
    }
    for (Eigen::Index i = 0; i < l_.size(); ++i)
      if (!(l_(i) >= 0.0) || !std::isfinite(l_(i))) {
        std::ostringstream os;
        os << "ChannelSpec: amplitude " << i << " is negative or not finite";
        throw ValidationError(os.str());
      }
    l_norm_ = l_.norm();
    if (!(l_norm_ > 0.0)) throw ValidationError("ChannelSpec: amplitudes are all zero");
    p_ = l_.array().square() / (l_norm_ * l_norm_);
    sqrt_p_ = l_ / l_norm_;
  }

  Eigen::Index n() const { return n_; }
  Eigen::Index d() const { return static_cast<Eigen::Index>(u_.size()); }
  const std::vector<CMatrix>& unitaries() const { return u_; }
  const CMatrix& unitary(Eigen::Index i) const { return u_[static_cast<std::size_t>(i)]; }
  const RVector& amplitudes() const { return l_; }
  double l_norm() const { return l_norm_; }
  /// P_i = l_i^2 / L^2
  const RVector& probabilities() const { return p_; }
  /// l_i / L
  const RVector& sqrt_probabilities() const { return sqrt_p_; }
  const std::optional<ChannelProvenance>& provenance() const { return provenance_; }

  /// Channel built from the entrywise conjugates of the U_i.
  ChannelSpec conjugate() const {
    std::vector<CMatrix> c;
    c.reserve(u_.size());
    for (const auto& u : u_) c.push_back(u.conjugate());
    return ChannelSpec(std::move(c), l_, provenance_);
  }

 private:
  Eigen::Index n_ = 0;
  std::vector<CMatrix> u_;
  RVector l_;
  double l_norm_ = 0.0;
  RVector p_;
  RVector sqrt_p_;
  std::optional<ChannelProvenance> provenance_;
};

/// D Haar unitaries followed by D amplitudes, all from rng.
inline ChannelSpec make_channel(Eigen::Index n, Eigen::Index d, SeededStream& rng, ChannelOptions opts = {}) {
  detail::require(n >= 1 && d >= 1, "make_channel: n and d must be >= 1");
  ChannelProvenance prov{rng.master_seed(), rng.stream_id(), opts};
  std::vector<CMatrix> us;
  us.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    if (opts.orthogonal)
      us.push_back(haar_orthogonal(n, rng).cast<cplx>());
    else
      us.push_back(haar_unitary(n, rng));
  }
  RVector l = opts.uniform_p ? RVector(RVector::Constant(d, 1.0 / std::sqrt(static_cast<double>(d))))
                             : sample_amplitudes(d, n, rng);
  return ChannelSpec(std::move(us), std::move(l), prov);
}

inline ChannelSpec make_channel(Eigen::Index n, Eigen::Index d, std::uint64_t seed, std::uint64_t stream_id = 0,
                                ChannelOptions opts = {}) {
  SeededStream rng(seed, stream_id);
  return make_channel(n, d, rng, opts);
}

/// E(rho), or conj(E)(rho) when conjugated.
inline DensityMatrix apply(const ChannelSpec& ch, const DensityMatrix& rho, bool conjugated = false) {
  if (rho.dim() != ch.n()) throw PreconditionError("apply: state dimension differs from channel dimension");
  CMatrix out = CMatrix::Zero(ch.n(), ch.n());
  for (Eigen::Index i = 0; i < ch.d(); ++i) {
    const double p = ch.probabilities()(i);
    if (conjugated) {
      const CMatrix u = ch.unitary(i).conjugate();
      out.noalias() += p * (u.adjoint() * rho.matrix() * u);
    } else {
      out.noalias() += p * (ch.unitary(i).adjoint() * rho.matrix() * ch.unitary(i));
    }
  }
  return DensityMatrix(out);
}

/// Columns sqrt(P_i) U_i^dagger psi.
inline CMatrix weighted_images(const ChannelSpec& ch, const CVector& psi) {
  CMatrix w(ch.n(), ch.d());
  for (Eigen::Index i = 0; i < ch.d(); ++i)
    w.col(i).noalias() = ch.sqrt_probabilities()(i) * (ch.unitary(i).adjoint() * psi);
  return w;
}

/// D x D matrix with entries sqrt(P_i P_j) Tr(U_i^dagger |ket><bra| U_j),
/// row i, column j. With ket == bra this is E^C(|psi><psi|).
inline CMatrix complementary_operator(const ChannelSpec& ch, const CVector& ket, const CVector& bra) {
  if (ket.size() != ch.n() || bra.size() != ch.n())
    throw PreconditionError("complementary_operator: state dimension differs from channel dimension");
  const CMatrix wk = weighted_images(ch, ket);
  const CMatrix wb = weighted_images(ch, bra);
  // (wb^dagger wk)_{ji} = <w_j^bra | w_i^ket>
  return (wb.adjoint() * wk).transpose();
}

/// E^C(|psi><psi|), the complementary channel output.
inline DensityMatrix apply_conjugate_channel(const ChannelSpec& ch, const PureState& psi) {
  if (psi.dim() != ch.n())
    throw PreconditionError("apply_conjugate_channel: state dimension differs from channel dimension");
  return DensityMatrix(complementary_operator(ch, psi.amplitudes(), psi.amplitudes()));
}

/// Gram matrix of the D^2 weighted pure components of E (x) conj(E) applied to
/// the maximally entangled state. Row/column (i, j) has index i * D + j.
struct PairOutputGram {
  Eigen::Index d = 0;
  DensityMatrix gram;
};

namespace detail {

// Y_ij = U_i^dagger U_j, stored for i < j; Y_ii = I and Y_ji = Y_ij^dagger.
class PairProducts {
 public:
  explicit PairProducts(const ChannelSpec& ch) : d_(ch.d()), n_(ch.n()) {
    prod_.resize(static_cast<std::size_t>(d_ * d_));
    for (Eigen::Index i = 0; i < d_; ++i)
      for (Eigen::Index j = i + 1; j < d_; ++j) prod_[idx(i, j)].noalias() = ch.unitary(i).adjoint() * ch.unitary(j);
  }

  // sum_xy conj(Y_a)_xy (Y_b)_xy with a = (i, j), b = (k, l)
  cplx inner(Eigen::Index i, Eigen::Index j, Eigen::Index k, Eigen::Index l) const {
    if (i == j && k == l) return static_cast<double>(n_);
    if (i == j) return trace(k, l);
    if (k == l) return std::conj(trace(i, j));
    const bool a_adj = i > j;
    const bool b_adj = k > l;
    const CMatrix& a = prod_[a_adj ? idx(j, i) : idx(i, j)];
    const CMatrix& b = prod_[b_adj ? idx(l, k) : idx(k, l)];
    if (!a_adj && !b_adj) return a.reshaped().dot(b.reshaped());
    if (a_adj && b_adj) return b.reshaped().dot(a.reshaped());
    // one side adjointed: sum_xy A_yx B_xy = Tr(A B)
    if (a_adj) return a.transpose().cwiseProduct(b).sum();
    return std::conj(a.cwiseProduct(b.transpose()).sum());
  }

 private:
  std::size_t idx(Eigen::Index i, Eigen::Index j) const { return static_cast<std::size_t>(i * d_ + j); }
  cplx trace(Eigen::Index i, Eigen::Index j) const {
    return i < j ? prod_[idx(i, j)].trace() : std::conj(prod_[idx(j, i)].trace());
  }

  Eigen::Index d_;
  Eigen::Index n_;
  std::vector<CMatrix> prod_;
};

}  // namespace detail

/// Low-rank route to E (x) conj(E)(|Psi_ME><Psi_ME|): only N x N products and
/// the identity <Psi_ME|(A (x) B)|Psi_ME> = Tr(A B^T) / N are used.
inline PairOutputGram pair_output_gram(const ChannelSpec& ch) {
  const Eigen::Index d = ch.d();
  const Eigen::Index m = d * d;
  const double inv_n = 1.0 / static_cast<double>(ch.n());
  const RVector& sp = ch.sqrt_probabilities();
  const detail::PairProducts prods(ch);
  CMatrix g(m, m);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const Eigen::Index r = i * d + j;
      for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index l = 0; l < d; ++l) {
          const Eigen::Index c = k * d + l;
          if (c < r) continue;
          // sqrt(P_i P_j P_k P_l) <phi_kl | phi_ij>, with <phi_kl | phi_ij> = <Y_kl, Y_ij>_F / N
          const double w = sp(i) * sp(j) * sp(k) * sp(l);
          g(r, c) = w * prods.inner(k, l, i, j) * inv_n;
          g(c, r) = std::conj(g(r, c));
        }
    }
  return PairOutputGram{d, DensityMatrix(g)};
}

/// Entropy of E (x) conj(E)(|Psi_ME><Psi_ME|).
inline double me_output_entropy(const ChannelSpec& ch) {
  return von_neumann_entropy(hermitian_eigenvalues(pair_output_gram(ch).gram));
}

struct EnsembleMember {
  double probability = 0.0;
  DensityMatrix state;
};

/// H(sum p_k E(rho_k)) - sum p_k H(E(rho_k)).
inline double holevo_quantity(const ChannelSpec& ch, const std::vector<EnsembleMember>& ensemble,
                              bool conjugated = false) {
  if (ensemble.empty()) throw PreconditionError("holevo_quantity: empty ensemble");
  double psum = 0.0;
  for (const auto& m : ensemble) {
    if (!(m.probability >= 0.0)) throw PreconditionError("holevo_quantity: negative probability");
    if (m.state.dim() != ch.n()) throw PreconditionError("holevo_quantity: state dimension differs from channel");
    psum += m.probability;
  }
  if (std::abs(psum - 1.0) > 1e-12) throw PreconditionError("holevo_quantity: probabilities do not sum to 1");
  CMatrix avg = CMatrix::Zero(ch.n(), ch.n());
  double mean_entropy = 0.0;
  for (const auto& m : ensemble) {
    const DensityMatrix out = apply(ch, m.state, conjugated);
    avg += m.probability * out.matrix();
    mean_entropy += m.probability * von_neumann_entropy(out);
  }
  avg /= avg.trace().real();
  return von_neumann_entropy(DensityMatrix(avg)) - mean_entropy;
}

}  // namespace moelab

#endif  // MOELAB_CHANNEL_HPP
