#ifndef MOELAB_BOUNDS_HPP
#define MOELAB_BOUNDS_HPP

// Closed-form entropy bounds and the inequality checkers used to validate
// them. Everything that can overflow is evaluated in log space.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "moelab/channel.hpp"

namespace moelab {

namespace detail {

// exp() with the convention that arguments below -745 underflow to exactly 0.
inline double safe_exp(double x) {
  if (x < -745.0) return 0.0;
  return std::exp(x);
}

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

inline void require_simplex(const std::vector<double>& p, const char* who, double slack = 1e-12) {
  double s = 0.0;
  for (double x : p) {
    if (!(x >= -slack)) throw PreconditionError(std::string(who) + ": negative probability");
    s += x;
  }
  if (std::abs(s - 1.0) > slack * std::max<double>(1.0, static_cast<double>(p.size())))
    throw PreconditionError(std::string(who) + ": probabilities do not sum to 1");
}

inline std::vector<double> to_std(const RVector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace detail

/// 2 ln d - (ln d) / d, the universal ceiling on the entangled-input output entropy.
inline double me_bound_universal(int d) {
  detail::require(d >= 1, "me_bound_universal: d must be >= 1");
  const double ld = std::log(static_cast<double>(d));
  return 2.0 * ld - ld / d;
}

/// Sum_i P_i^2.
inline double p_same(const std::vector<double>& p) {
  double s = 0.0;
  for (double x : p) s += x * x;
  return s;
}

/// -P_same ln P_same - sum_{i != j} P_i P_j ln(P_i P_j).
inline double me_bound(const std::vector<double>& p) {
  const double ps = p_same(p);
  double h = -detail::xlogx(ps);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      if (i != j) h -= detail::xlogx(p[i] * p[j]);
  return h;
}

/// Entropy of p with its two largest atoms merged (lowest index wins ties).
inline double merged_entropy_bound(const std::vector<double>& p) {
  if (p.size() < 2) throw PreconditionError("merged_entropy_bound: need at least two atoms");
  detail::require_simplex(p, "merged_entropy_bound");
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  double h = -detail::xlogx(p[order[0]] + p[order[1]]);
  for (std::size_t k = 2; k < order.size(); ++k) h -= detail::xlogx(p[order[k]]);
  return h;
}

/// Indices (a, b) of the two largest amplitudes; lowest index wins exact ties.
inline std::pair<Eigen::Index, Eigen::Index> two_largest(const RVector& l) {
  detail::require(l.size() >= 2, "two_largest: need at least two entries");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(l.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return l(a) > l(b); });
  return {order[0], order[1]};
}

struct BoundReport {
  int d = 0;
  int n = 0;
  std::uint64_t seed = 0;
  bool has_seed = false;
  double p_same = 0.0;
  double me_bound = 0.0;
  double me_bound_universal = 0.0;
  /// Entropy of P with the two largest atoms merged (0 when D == 1).
  double merged_bound = 0.0;
  /// ln D - merged_bound: the entropy deficit certified by the eigenvector-pair argument.
  double delta_s = 0.0;
};

inline BoundReport me_bound_channel(const ChannelSpec& ch) {
  BoundReport r;
  r.d = static_cast<int>(ch.d());
  r.n = static_cast<int>(ch.n());
  if (ch.provenance()) {
    r.seed = ch.provenance()->seed;
    r.has_seed = true;
  }
  const std::vector<double> p = detail::to_std(ch.probabilities());
  r.p_same = p_same(p);
  r.me_bound = me_bound(p);
  r.me_bound_universal = me_bound_universal(r.d);
  r.merged_bound = r.d >= 2 ? merged_entropy_bound(p) : 0.0;
  r.delta_s = std::log(static_cast<double>(r.d)) - r.merged_bound;
  return r;
}

/// ln F(p) = (N - D) [ln(D p) - (D p - 1)]; -inf at p = 0.
inline double log_f_of_p(double p, int d, int n) {
  detail::require(n > d && d >= 1, "f_of_p: requires N > D >= 1");
  detail::require(p >= 0.0 && p <= 1.0, "f_of_p: p must lie in [0, 1]");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  const double dp = d * p;
  return (n - d) * (std::log(dp) - (dp - 1.0));
}

/// F(p) = D^(N-D) p^(N-D) exp[-(N-D) D (p - 1/D)].
inline double f_of_p(double p, int d, int n) { return detail::safe_exp(log_f_of_p(p, d, n)); }

struct DeltaSBound {
  double delta_s = 0.0;
  double bound = 0.0;
};

/// delta_s = ln D - S(p) against D sum (p_i - 1/D)^2.
inline DeltaSBound quadratic_delta_s_bound(const std::vector<double>& p) {
  detail::require(!p.empty(), "quadratic_delta_s_bound: empty distribution");
  detail::require_simplex(p, "quadratic_delta_s_bound");
  const double d = static_cast<double>(p.size());
  double sq = 0.0;
  for (double x : p) sq += (x - 1.0 / d) * (x - 1.0 / d);
  return {std::log(d) - shannon_entropy(p), d * sq};
}

struct LogBoundPair {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// ln prod_i F(q_i) against -(N - D) D^2 sum_i (q_i - 1/D)^2 / (2 y^2), for
/// every q_i inside (x/D, y/D).
inline LogBoundPair product_f_bound(const std::vector<double>& q, int d, int n, double x, double y) {
  detail::require(n > d && d >= 1, "product_f_bound: requires N > D >= 1");
  detail::require(x > 0.0 && x < 1.0 && y > 1.0, "product_f_bound: requires 0 < x < 1 < y");
  detail::require(static_cast<int>(q.size()) == d, "product_f_bound: need D eigenvalues");
  LogBoundPair r;
  double sq = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!(q[i] > x / d && q[i] < y / d)) {
      std::ostringstream os;
      os << "product_f_bound: q[" << i << "] = " << q[i] << " outside (" << x / d << ", " << y / d << ")";
      throw PreconditionError(os.str());
    }
    r.lhs += log_f_of_p(q[i], d, n);
    sq += (q[i] - 1.0 / d) * (q[i] - 1.0 / d);
  }
  r.rhs = -static_cast<double>(n - d) * d * d * sq / (2.0 * y * y);
  return r;
}

/// dist^2 ln(D / dist^2), with the value 0 at dist = 0.
inline double fannes_slack(double dist, int d) {
  detail::require(d >= 2, "fannes_slack: D must be >= 2");
  detail::require(dist >= 0.0 && dist <= 1.0, "fannes_slack: distance must lie in [0, 1]");
  if (dist == 0.0) return 0.0;
  const double d2 = dist * dist;
  return d2 * std::log(d / d2);
}

/// c1 / d + p1(d) sqrt(ln n / n), p1 given by its coefficients in ascending
/// powers. The constants are reporting parameters only.
inline double delta_s_max(int d, int n, double c1, const std::vector<double>& poly_coeffs) {
  detail::require(d >= 2 && n >= 2, "delta_s_max: d and n must be >= 2");
  detail::require(c1 > 0.0, "delta_s_max: c1 must be positive");
  double p1 = 0.0;
  double pw = 1.0;
  for (double c : poly_coeffs) {
    p1 += c * pw;
    pw *= d;
  }
  return c1 / d + p1 * std::sqrt(std::log(static_cast<double>(n)) / n);
}

/// 2 delta_s_max < ln(d) / d
inline bool below_violation_threshold(int d, double dsm) { return 2.0 * dsm < std::log(static_cast<double>(d)) / d; }

}  // namespace moelab

#endif  // MOELAB_BOUNDS_HPP
