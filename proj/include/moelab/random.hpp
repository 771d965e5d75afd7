#ifndef MOELAB_RANDOM_HPP
#define MOELAB_RANDOM_HPP

// Seeded sampling: counter-based generator, Haar unitaries and orthogonal
// matrices, the channel amplitude law, random pure and bipartite states.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string_view>

#include "moelab/linalg.hpp"

namespace moelab {

inline constexpr std::string_view kGeneratorId = "philox4x32-10/box-muller-v1";

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Philox4x32-10 keyed by a master seed; the stream id occupies the upper
/// half of the counter, so every (seed, stream) pair is a disjoint sequence.
///
/// Satisfies UniformRandomBitGenerator. All floating-point sampling below is
/// done with in-house transforms so a given (seed, stream) yields the same
/// doubles on every standard library.
class SeededStream {
 public:
  using result_type = std::uint64_t;

  SeededStream() : SeededStream(0, 0) {}
  SeededStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : seed_(master_seed), stream_(stream_id) {}

  std::uint64_t master_seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  /// Independent child stream, a pure function of (seed, stream_id, index).
  SeededStream substream(std::uint64_t index) const {
    return SeededStream(seed_, splitmix64(stream_ ^ splitmix64(index + 0x632BE59BD9B4E019ULL)));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t lo = next32();
    const std::uint64_t hi = next32();
    return (hi << 32) | lo;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Complex Gaussian with E|z|^2 = variance.
  cplx complex_normal(double variance = 1.0) {
    const double s = std::sqrt(0.5 * variance);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
  }

 private:
  std::uint32_t next32() {
    if (pos_ == 4) {
      block_ = philox(counter_);
      ++counter_;
      pos_ = 0;
    }
    return block_[pos_++];
  }

  std::array<std::uint32_t, 4> philox(std::uint64_t ctr) const {
    std::array<std::uint32_t, 4> c{static_cast<std::uint32_t>(ctr), static_cast<std::uint32_t>(ctr >> 32),
                                   static_cast<std::uint32_t>(stream_),
                                   static_cast<std::uint32_t>(stream_ >> 32)};
    std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
      c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k0, static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k1, static_cast<std::uint32_t>(p0)};
      k0 += 0x9E3779B9u;
      k1 += 0xBB67AE85u;
    }
    return c;
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Matrix of i.i.d. complex Gaussians, E|z|^2 = variance, filled column by column.
inline CMatrix ginibre(Eigen::Index rows, Eigen::Index cols, SeededStream& rng, double variance = 1.0) {
  CMatrix z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = rng.complex_normal(variance);
  return z;
}

/// Haar-distributed n x n unitary: QR of a Ginibre matrix with the phases of
/// diag(R) moved into Q.
inline CMatrix haar_unitary(Eigen::Index n, SeededStream& rng) {
  detail::require(n >= 1, "haar_unitary: n must be >= 1");
  const CMatrix z = ginibre(n, n, rng);
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  const CMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double a = std::abs(r(j, j));
    if (a > 0.0) q.col(j) *= r(j, j) / a;
  }
  return q;
}

/// Haar-distributed real orthogonal matrix (sign correction by sign(R_jj)).
inline RMatrix haar_orthogonal(Eigen::Index n, SeededStream& rng) {
  detail::require(n >= 1, "haar_orthogonal: n must be >= 1");
  RMatrix z(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = rng.normal();
  Eigen::HouseholderQR<RMatrix> qr(z);
  RMatrix q = qr.householderQ();
  const RMatrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

/// D i.i.d. amplitudes with density proportional to l^(2N-1) exp(-N D l^2):
/// each is the length of an N-dim complex Gaussian vector whose components
/// have variance 1/(N D).
inline RVector sample_amplitudes(Eigen::Index d, Eigen::Index n, SeededStream& rng) {
  detail::require(d >= 1 && n >= 1, "sample_amplitudes: D and N must be >= 1");
  const double var = 1.0 / (static_cast<double>(n) * static_cast<double>(d));
  RVector l(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) s += std::norm(rng.complex_normal(var));
    l(i) = std::sqrt(s);
  }
  return l;
}

/// Uniform on the unit sphere of C^n.
inline PureState random_pure_state(Eigen::Index n, SeededStream& rng) {
  detail::require(n >= 1, "random_pure_state: n must be >= 1");
  CVector v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = rng.complex_normal();
  return PureState::normalized(v);
}

/// Pure state on B (x) E, amplitude index b * dim_e + e.
struct BipartiteState {
  Eigen::Index dim_b = 1;
  Eigen::Index dim_e = 1;
  PureState state;

  BipartiteState() = default;
  BipartiteState(Eigen::Index nb, Eigen::Index ne, PureState psi) : dim_b(nb), dim_e(ne), state(std::move(psi)) {
    detail::require(nb >= 1 && ne >= 1, "BipartiteState: dimensions must be >= 1");
    if (state.dim() != nb * ne) throw ValidationError("BipartiteState: amplitude count != dim_b * dim_e");
  }

  /// Amplitudes as a dim_b x dim_e coefficient matrix.
  CMatrix coefficients() const {
    CMatrix c(dim_b, dim_e);
    for (Eigen::Index b = 0; b < dim_b; ++b)
      for (Eigen::Index e = 0; e < dim_e; ++e) c(b, e) = state(b * dim_e + e);
    return c;
  }
};

inline BipartiteState random_bipartite_state(Eigen::Index n, Eigen::Index d, SeededStream& rng) {
  detail::require(n >= 1 && d >= 1, "random_bipartite_state: dimensions must be >= 1");
  return BipartiteState(n, d, random_pure_state(n * d, rng));
}

}  // namespace moelab

#endif  // MOELAB_RANDOM_HPP
