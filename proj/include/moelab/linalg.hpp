#ifndef MOELAB_LINALG_HPP
#define MOELAB_LINALG_HPP

// Dense complex linear algebra and entropy kernels.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "moelab/errors.hpp"

namespace moelab {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using RMatrix = Eigen::MatrixXd;

namespace tol {
inline constexpr double kNorm = 1e-10;         // state norm, trace, hermiticity
inline constexpr double kNegativeEig = 1e-10;  // eigenvalues below -kNegativeEig are PSD violations
inline constexpr double kZeroEig = 1e-12;      // eigenvalues below this count as exactly zero
inline constexpr double kSpectrumSum = 1e-9;
}  // namespace tol

/// Largest entrywise deviation |m - m^dagger|.
inline double max_asymmetry(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

/// Largest entrywise deviation |U^dagger U - I|.
inline double unitarity_residual(const CMatrix& u) {
  const auto n = u.rows();
  return (u.adjoint() * u - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

/// Unit-norm complex vector.
class PureState {
 public:
  PureState() = default;

  explicit PureState(CVector amplitudes) : amps_(std::move(amplitudes)) {
    detail::require(amps_.size() >= 1, "PureState: dimension must be positive");
    const double nrm = amps_.norm();
    if (std::abs(nrm - 1.0) > tol::kNorm) {
      std::ostringstream os;
      os << "PureState: norm " << nrm << " deviates from 1 by more than " << tol::kNorm;
      throw ValidationError(os.str());
    }
  }

  /// Rescales v to unit norm; v must be nonzero.
  static PureState normalized(const CVector& v) {
    const double nrm = v.norm();
    if (!(nrm > 0.0)) throw ValidationError("PureState: cannot normalize the zero vector");
    return PureState(CVector(v / nrm));
  }

  static PureState basis(Eigen::Index dim, Eigen::Index k) {
    detail::require(k >= 0 && k < dim, "PureState::basis: index out of range");
    CVector v = CVector::Zero(dim);
    v(k) = 1.0;
    return PureState(std::move(v));
  }

  Eigen::Index dim() const { return amps_.size(); }
  const CVector& amplitudes() const { return amps_; }
  cplx operator()(Eigen::Index k) const { return amps_(k); }

  /// |psi><psi|
  CMatrix projector() const { return amps_ * amps_.adjoint(); }

 private:
  CVector amps_;
};

/// Hermitian, unit-trace complex matrix. Positivity is checked when the
/// spectrum is taken, not at construction.
class DensityMatrix {
 public:
  DensityMatrix() = default;

  explicit DensityMatrix(const CMatrix& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw ValidationError("DensityMatrix: matrix must be square and non-empty");
    const double asym = max_asymmetry(m);
    if (asym > tol::kNorm) {
      std::ostringstream os;
      os << "DensityMatrix: not Hermitian, max asymmetry " << asym;
      throw ValidationError(os.str());
    }
    const double tr = m.trace().real();
    if (std::abs(tr - 1.0) > tol::kNorm) {
      std::ostringstream os;
      os << "DensityMatrix: trace " << tr << " deviates from 1";
      throw ValidationError(os.str());
    }
    m_ = 0.5 * (m + m.adjoint());
  }

  explicit DensityMatrix(const PureState& psi) : m_(psi.projector()) {}

  Eigen::Index dim() const { return m_.rows(); }
  const CMatrix& matrix() const { return m_; }

 private:
  CMatrix m_;
};

/// Eigenvalues of a density matrix, sorted descending.
class Spectrum {
 public:
  Spectrum() = default;

  explicit Spectrum(std::vector<double> values) : v_(std::move(values)) {
    detail::require(!v_.empty(), "Spectrum: empty");
    std::sort(v_.begin(), v_.end(), std::greater<>());
    double clipped_sum = 0.0;
    for (std::size_t i = 0; i < v_.size(); ++i) {
      const double x = v_[i];
      if (!(x >= -tol::kNegativeEig && x <= 1.0 + tol::kNegativeEig)) {
        std::ostringstream os;
        os << "Spectrum: eigenvalue " << x << " at position " << i << " outside [0,1]";
        throw ValidationError(os.str());
      }
      clipped_sum += std::clamp(x, 0.0, 1.0);
    }
    if (std::abs(clipped_sum - 1.0) > tol::kSpectrumSum) {
      std::ostringstream os;
      os << "Spectrum: eigenvalues sum to " << clipped_sum;
      throw ValidationError(os.str());
    }
  }

  std::size_t dim() const { return v_.size(); }
  const std::vector<double>& values() const { return v_; }
  double operator[](std::size_t i) const { return v_[i]; }
  double largest() const { return v_.front(); }

  double purity() const {
    double s = 0.0;
    for (double x : v_) s += x * x;
    return s;
  }

 private:
  std::vector<double> v_;
};

/// Sorted-descending eigenvalues of a Hermitian matrix, no normalization checks.
inline std::vector<double> hermitian_eigenvalues_raw(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw ValidationError("eigensolver failed to converge");
  const RVector& ev = es.eigenvalues();
  std::vector<double> out(ev.data(), ev.data() + ev.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

inline Spectrum hermitian_eigenvalues(const DensityMatrix& rho) {
  std::vector<double> ev = hermitian_eigenvalues_raw(rho.matrix());
  if (ev.back() < -tol::kNegativeEig) {
    std::ostringstream os;
    os << "density matrix is not positive semidefinite: eigenvalue " << ev.back();
    throw ValidationError(os.str());
  }
  return Spectrum(std::move(ev));
}

/// Validates a raw Hermitian matrix as a density matrix and returns its spectrum.
inline Spectrum hermitian_eigenvalues(const CMatrix& m) {
  return hermitian_eigenvalues(DensityMatrix(m));
}

/// -sum p ln p over a probability vector, 0 ln 0 = 0. Values below kZeroEig
/// count as 0 and values above 1 as 1.
inline double shannon_entropy(const std::vector<double>& p) {
  double s = 0.0;
  for (double x : p)
    if (x >= tol::kZeroEig && x < 1.0) s -= x * std::log(x);
  return s;
}

/// Von Neumann entropy in nats.
inline double von_neumann_entropy(const Spectrum& s) { return shannon_entropy(s.values()); }

inline double von_neumann_entropy(const DensityMatrix& rho) {
  return von_neumann_entropy(hermitian_eigenvalues(rho));
}

/// Sum of singular values.
inline double trace_norm(const CMatrix& m) {
  if (m.rows() != m.cols()) throw PreconditionError("trace_norm: matrix must be square");
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return svd.singularValues().sum();
}

/// (1/sqrt n) sum_a |a> (x) |a>, with the first factor as the major index.
inline PureState maximally_entangled(Eigen::Index n) {
  detail::require(n >= 1, "maximally_entangled: n must be >= 1");
  CVector v = CVector::Zero(n * n);
  const double a = 1.0 / std::sqrt(static_cast<double>(n));
  for (Eigen::Index k = 0; k < n; ++k) v(k * n + k) = a;
  return PureState::normalized(v);
}

/// Orthonormal eigenvectors of a unitary matrix.
///
/// Diagonalizes the Hermitian part first, then resolves every cluster of
/// nearly equal cosines (conjugate or repeated eigenphases) by a Schur
/// decomposition of the compressed block.
inline std::pair<CMatrix, CVector> unitary_eigenvectors(const CMatrix& w,
                                                        double cluster_gap = 1e-5) {
  const Eigen::Index n = w.rows();
  detail::require(n >= 1 && w.cols() == n, "unitary_eigenvectors: square input required");
  const CMatrix herm = 0.5 * (w + w.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm);
  if (es.info() != Eigen::Success) throw ValidationError("eigensolver failed to converge");
  CMatrix vecs = es.eigenvectors();
  const RVector& cosines = es.eigenvalues();

  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index end = start + 1;
    while (end < n && cosines(end) - cosines(end - 1) < cluster_gap) ++end;
    const Eigen::Index m = end - start;
    if (m > 1) {
      const CMatrix basis = vecs.middleCols(start, m);
      const CMatrix block = basis.adjoint() * w * basis;
      Eigen::ComplexSchur<CMatrix> schur(block);
      vecs.middleCols(start, m) = basis * schur.matrixU();
    }
    start = end;
  }

  CVector vals(n);
  const CMatrix wv = w * vecs;
  for (Eigen::Index k = 0; k < n; ++k) vals(k) = vecs.col(k).dot(wv.col(k));
  return {std::move(vecs), std::move(vals)};
}

}  // namespace moelab

#endif  // MOELAB_LINALG_HPP
