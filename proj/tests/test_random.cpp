#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "moelab/random.hpp"
#include "moelab/stats.hpp"

using namespace moelab;
using Catch::Matchers::WithinAbs;

namespace {

void check_within_4_sigma(const std::vector<double>& xs, double expected) {
  const auto m = stats::mean_estimate(xs);
  INFO("mean " << m.mean << " stderr " << m.std_error << " expected " << expected);
  CHECK(std::abs(m.mean - expected) <= 4.0 * m.std_error);
}

}  // namespace

TEST_CASE("philox known-answer block", "[randgen]") {
  SeededStream s(0, 0);
  CHECK(s() == ((std::uint64_t{0xe169c58du} << 32) | 0x6627e8d5u));
  CHECK(s() == ((std::uint64_t{0x9b00dbd8u} << 32) | 0xbc57ac4cu));
}

TEST_CASE("streams are reproducible and distinct", "[randgen]") {
  SeededStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differ_c = false, differ_d = false;
  for (int i = 0; i < 1000; ++i) {
    const auto x = a();
    CHECK(x == b());
    differ_c = differ_c || x != c();
    differ_d = differ_d || x != d();
  }
  CHECK(differ_c);
  CHECK(differ_d);

  SeededStream r1(1, 2), r2(1, 2);
  const CMatrix u1 = haar_unitary(16, r1);
  const CMatrix u2 = haar_unitary(16, r2);
  CHECK(u1 == u2);
  CHECK(SeededStream(5, 0).substream(3)() == SeededStream(5, 0).substream(3)());
  CHECK(SeededStream(5, 0).substream(3)() != SeededStream(5, 0).substream(4)());
}

TEST_CASE("uniform and normal moments", "[randgen]") {
  SeededStream rng(3, 0);
  std::vector<double> u, z, z2;
  for (int i = 0; i < 100000; ++i) {
    const double x = rng.uniform();
    REQUIRE(x > 0.0);
    REQUIRE(x < 1.0);
    u.push_back(x);
    const double g = rng.normal();
    z.push_back(g);
    z2.push_back(g * g);
  }
  check_within_4_sigma(u, 0.5);
  check_within_4_sigma(z, 0.0);
  check_within_4_sigma(z2, 1.0);
}

TEST_CASE("Haar unitaries", "[randgen]") {
  SeededStream rng(21, 0);
  for (int t = 0; t < 100; ++t) CHECK(unitarity_residual(haar_unitary(64, rng)) <= 1e-12);

  std::vector<double> re, im;
  for (int t = 0; t < 20000; ++t) {
    const CMatrix u = haar_unitary(1, rng);
    REQUIRE_THAT(std::abs(u(0, 0)), WithinAbs(1.0, 1e-15));
    re.push_back(u(0, 0).real());
    im.push_back(u(0, 0).imag());
  }
  check_within_4_sigma(re, 0.0);
  check_within_4_sigma(im, 0.0);

  std::vector<double> u11;
  for (int t = 0; t < 100000; ++t) u11.push_back(std::norm(haar_unitary(8, rng)(0, 0)));
  check_within_4_sigma(u11, 1.0 / 8.0);
}

TEST_CASE("Haar invariance smoke test", "[randgen]") {
  SeededStream rng(22, 0);
  SeededStream vr(99, 0);
  const CMatrix v = haar_unitary(8, vr);
  std::vector<double> plain, rotated;
  for (int t = 0; t < 10000; ++t) {
    const CMatrix u = haar_unitary(8, rng);
    plain.push_back(std::norm(u(0, 0)));
    rotated.push_back(std::norm((v * u)(0, 0)));
  }
  const auto a = stats::mean_estimate(plain);
  const auto b = stats::mean_estimate(rotated);
  CHECK(std::abs(a.mean - b.mean) <= 4.0 * std::hypot(a.std_error, b.std_error));

  // a non-uniform phase convention would bias the diagonal phase of U
  std::vector<double> diag_re;
  for (int t = 0; t < 20000; ++t) diag_re.push_back(haar_unitary(4, rng)(0, 0).real());
  check_within_4_sigma(diag_re, 0.0);
}

TEST_CASE("Haar orthogonal matrices", "[randgen]") {
  SeededStream rng(23, 0);
  for (int t = 0; t < 20; ++t) {
    const RMatrix o = haar_orthogonal(32, rng);
    CHECK((o.transpose() * o - RMatrix::Identity(32, 32)).cwiseAbs().maxCoeff() <= 1e-12);
  }
  std::vector<double> one, det;
  for (int t = 0; t < 10000; ++t) {
    const double x = haar_orthogonal(1, rng)(0, 0);
    REQUIRE(std::abs(x) == 1.0);
    one.push_back(x > 0 ? 1.0 : 0.0);
    const double dt = haar_orthogonal(4, rng).determinant();
    REQUIRE_THAT(std::abs(dt), WithinAbs(1.0, 1e-12));
    det.push_back(dt > 0 ? 1.0 : 0.0);
  }
  check_within_4_sigma(one, 0.5);
  check_within_4_sigma(det, 0.5);
}

TEST_CASE("amplitude law moments", "[randgen]") {
  SeededStream rng(24, 0);
  std::vector<double> l2;
  for (int t = 0; t < 100000; ++t) {
    const RVector l = sample_amplitudes(4, 64, rng);
    REQUIRE((l.array() >= 0.0).all());
    l2.push_back(l.squaredNorm());
    const RVector p = l.array().square() / l.squaredNorm();
    REQUIRE_THAT(p.sum(), WithinAbs(1.0, 1e-12));
  }
  check_within_4_sigma(l2, 1.0);
}

TEST_CASE("amplitude law matches the integrated density", "[randgen]") {
  // density of l proportional to l^(2N-1) exp(-N D l^2); compare the law of t = N D l^2
  const int d = 2, n = 16;
  const double nd = static_cast<double>(n * d);
  const auto density = [&](double l) { return std::exp((2.0 * n - 1) * std::log(l) - nd * l * l); };
  boost::math::quadrature::exp_sinh<double> tail;
  const double z = tail.integrate(density);
  const auto cdf = [&](double t) {
    const double lmax = std::sqrt(t / nd);
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(density, 0.0, lmax, 15, 1e-13) / z;
  };
  SeededStream rng(25, 0);
  std::vector<double> ts;
  for (int s = 0; s < 100000; ++s) {
    const double l = sample_amplitudes(d, n, rng)(0);
    ts.push_back(nd * l * l);
  }
  const double ks = stats::ks_one_sample(ts, cdf);
  INFO("KS distance " << ks);
  CHECK(ks <= 0.01);
}

TEST_CASE("random pure states", "[randgen]") {
  SeededStream rng(26, 0);
  std::vector<double> overlap;
  for (int t = 0; t < 100000; ++t) {
    const PureState s = random_pure_state(10, rng);
    REQUIRE_THAT(s.amplitudes().norm(), WithinAbs(1.0, 1e-12));
    overlap.push_back(std::norm(s(0)));
  }
  check_within_4_sigma(overlap, 0.1);
  const PureState one = random_pure_state(1, rng);
  CHECK_THAT(std::abs(one(0)), WithinAbs(1.0, 1e-15));
}

TEST_CASE("random bipartite states", "[randgen]") {
  SeededStream a(27, 0);
  const BipartiteState s = random_bipartite_state(5, 3, a);
  CHECK_THAT(s.state.amplitudes().norm(), WithinAbs(1.0, 1e-12));
  CHECK(s.coefficients()(2, 1) == s.state(2 * 3 + 1));

  SeededStream b(28, 0), c(28, 0);
  CHECK(random_bipartite_state(6, 1, b).state.amplitudes() == random_pure_state(6, c).amplitudes());
  CHECK_THROWS_AS(BipartiteState(2, 2, random_pure_state(3, c)), ValidationError);
}
