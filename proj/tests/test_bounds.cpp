#include <catch_amalgamated.hpp>

#include "moelab/bounds.hpp"
#include "moelab/channel.hpp"

using namespace moelab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ChannelSpec with_amplitudes(const std::vector<double>& l, int n = 4) {
  std::vector<CMatrix> us(l.size(), CMatrix::Identity(n, n));
  return ChannelSpec(us, Eigen::Map<const RVector>(l.data(), static_cast<Eigen::Index>(l.size())));
}

}  // namespace

TEST_CASE("universal entangled-input bound", "[bounds]") {
  CHECK(me_bound_universal(1) == 0.0);
  CHECK_THAT(me_bound_universal(2), WithinAbs(1.0397207708399179, 1e-15));
  CHECK_THAT(me_bound_universal(2), WithinAbs(1.5 * std::log(2.0), 1e-15));
  CHECK_THAT(me_bound_universal(4), WithinAbs(2.4260151319598084, 1e-15));
  CHECK_THAT(me_bound_universal(3), WithinAbs(1.8310204811135165, 1e-15));
  CHECK_THROWS_AS(me_bound_universal(0), PreconditionError);
}

TEST_CASE("channel bound report", "[bounds]") {
  const BoundReport uni = me_bound_channel(with_amplitudes({0.3, 0.3, 0.3, 0.3}));
  CHECK_THAT(uni.p_same, WithinAbs(0.25, 1e-15));
  CHECK_THAT(uni.me_bound, WithinAbs(me_bound_universal(4), 1e-14));

  const BoundReport deg = me_bound_channel(with_amplitudes({1.0, 0.0, 0.0}));
  CHECK(deg.p_same == 1.0);
  CHECK(deg.me_bound == 0.0);

  const BoundReport r = me_bound_channel(with_amplitudes({1.0, 1.0, std::sqrt(2.0)}));
  CHECK_THAT(r.p_same, WithinAbs(0.375, 1e-15));
  // P = (1/4, 1/4, 1/2): -P_same ln P_same - sum_{i != j} P_i P_j ln(P_i P_j)
  const double want = -0.375 * std::log(0.375) - 2 * (1.0 / 16) * std::log(1.0 / 16) -
                      4 * (1.0 / 8) * std::log(1.0 / 8);
  CHECK_THAT(r.me_bound, WithinAbs(want, 1e-14));
  CHECK(r.me_bound <= r.me_bound_universal + 1e-12);
  CHECK(r.d == 3);
}

TEST_CASE("random channels respect the bound chain", "[bounds]") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ChannelSpec ch = make_channel(16, 2 + static_cast<int>(seed % 3), seed, 9);
    const BoundReport b = me_bound_channel(ch);
    CHECK(b.p_same >= 1.0 / b.d - 1e-12);
    CHECK(b.p_same <= 1.0);
    CHECK(me_output_entropy(ch) <= b.me_bound + 1e-9);
    CHECK(b.me_bound <= b.me_bound_universal + 1e-12);
    CHECK(b.has_seed);
    CHECK(b.seed == seed);
  }
  CHECK(me_output_entropy(make_channel(16, 2, 1234, 0)) <= 1.039721);
}

TEST_CASE("merged-distribution bound", "[bounds]") {
  CHECK_THAT(merged_entropy_bound({0.25, 0.25, 0.25, 0.25}), WithinAbs(1.0397207708399179, 1e-15));
  CHECK_THAT(merged_entropy_bound({0.25, 0.25, 0.25, 0.25}),
             WithinAbs(std::log(4.0) - 0.5 * std::log(2.0), 1e-15));
  CHECK(merged_entropy_bound({1.0, 0.0, 0.0}) == 0.0);
  CHECK(merged_entropy_bound({0.5, 0.5}) == 0.0);
  CHECK_THROWS_AS(merged_entropy_bound({1.0}), PreconditionError);
  // merges 0.4 and 0.3 regardless of position
  CHECK_THAT(merged_entropy_bound({0.1, 0.4, 0.2, 0.3}),
             WithinAbs(-0.7 * std::log(0.7) - 0.1 * std::log(0.1) - 0.2 * std::log(0.2), 1e-15));
  for (int d = 2; d <= 8; ++d) {
    const std::vector<double> u(static_cast<std::size_t>(d), 1.0 / d);
    CHECK_THAT(merged_entropy_bound(u), WithinAbs(std::log(d) - 2.0 / d * std::log(2.0), 1e-14));
  }
}

TEST_CASE("two largest amplitudes break ties by index", "[bounds]") {
  RVector l(4);
  l << 0.5, 0.7, 0.7, 0.1;
  CHECK(two_largest(l) == std::pair<Eigen::Index, Eigen::Index>{1, 2});
  l << 0.7, 0.7, 0.7, 0.7;
  CHECK(two_largest(l) == std::pair<Eigen::Index, Eigen::Index>{0, 1});
  l << 0.1, 0.2, 0.3, 0.9;
  CHECK(two_largest(l) == std::pair<Eigen::Index, Eigen::Index>{3, 2});
}

TEST_CASE("F(p)", "[bounds]") {
  for (int d : {2, 3, 4, 8}) CHECK(f_of_p(1.0 / d, d, d + 5) == 1.0);
  CHECK(f_of_p(0.0, 2, 12) == 0.0);
  CHECK_THAT(f_of_p(1.0, 2, 12), WithinRel(std::pow(2.0, 10) * std::exp(-10.0), 1e-13));
  CHECK_THAT(f_of_p(1.0, 2, 12), WithinAbs(0.046489, 1e-6));
  CHECK_THROWS_AS(f_of_p(0.5, 4, 4), PreconditionError);
  CHECK(f_of_p(1.0, 2, 100000) == 0.0);
  for (int k = 0; k <= 1000; ++k) CHECK(f_of_p(k / 1000.0, 4, 32) <= 1.0 + 1e-12);
}

TEST_CASE("quadratic entropy-deficit bound", "[bounds]") {
  const DeltaSBound u = quadratic_delta_s_bound({0.25, 0.25, 0.25, 0.25});
  CHECK_THAT(u.delta_s, WithinAbs(0.0, 1e-15));
  CHECK(u.bound == 0.0);
  const DeltaSBound e = quadratic_delta_s_bound({1.0, 0.0});
  CHECK_THAT(e.delta_s, WithinAbs(std::log(2.0), 1e-15));
  CHECK_THAT(e.bound, WithinAbs(1.0, 1e-15));
  CHECK(e.delta_s <= e.bound);
}

TEST_CASE("product F bound", "[bounds]") {
  const LogBoundPair u = product_f_bound({0.5, 0.5}, 2, 20, 0.5, 1.5);
  CHECK(u.lhs == 0.0);
  CHECK(u.rhs == 0.0);

  const LogBoundPair b = product_f_bound({0.6, 0.4}, 2, 20, 0.5, 1.5);
  // 18 [ln 1.2 - 0.2 + ln 0.8 + 0.2] and -18 * 4 * 0.02 / 4.5
  CHECK_THAT(b.lhs, WithinAbs(18.0 * (std::log(1.2) + std::log(0.8)), 1e-13));
  CHECK_THAT(b.rhs, WithinAbs(-0.32, 1e-13));
  CHECK(b.lhs < b.rhs);

  try {
    product_f_bound({0.3, 0.7}, 2, 20, 0.5, 1.3);
    FAIL("expected a precondition error");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("q[1]") != std::string::npos);
  }
}

TEST_CASE("Fannes slack", "[bounds]") {
  CHECK(fannes_slack(0.0, 4) == 0.0);
  CHECK(fannes_slack(1e-9, 4) < 1e-15);
  CHECK_THAT(fannes_slack(0.1, 4), WithinAbs(0.01 * std::log(400.0), 1e-15));
  CHECK_THAT(fannes_slack(0.1, 4), WithinAbs(0.059915, 5e-7));
  CHECK_THAT(fannes_slack(1.0, 2), WithinAbs(std::log(2.0), 1e-15));
}

TEST_CASE("delta S max reporting", "[bounds]") {
  CHECK(delta_s_max(8, 100, 1.0, {}) == 1.0 / 8);
  CHECK(delta_s_max(8, 100, 1.0, {0.0}) == 1.0 / 8);
  CHECK(below_violation_threshold(8, delta_s_max(8, 100, 1.0, {})));
  CHECK_THAT(std::log(8.0) / 8, WithinAbs(0.2599, 1e-4));
  CHECK_FALSE(below_violation_threshold(4, delta_s_max(4, 100, 1.0, {})));
  const std::vector<double> d_squared = {0.0, 0.0, 1.0};
  CHECK_THAT(delta_s_max(3, 100, 1.0, d_squared), WithinAbs(1.0 / 3 + 9 * std::sqrt(std::log(100.0) / 100), 1e-15));
  double prev = delta_s_max(4, 3, 1.0, d_squared);
  for (int n = 4; n < 5000; n *= 2) {
    const double v = delta_s_max(4, n, 1.0, d_squared);
    CHECK(v < prev);
    prev = v;
  }
}
