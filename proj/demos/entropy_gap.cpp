// Samples one channel, prints its entangled-input entropy next to the bounds,
// then estimates the minimum output entropy.
#include <cstdio>

#include "moelab/moelab.hpp"

int main() {
  const int d = 4, n = 64;
  const moelab::ChannelSpec ch = moelab::make_channel(n, d, 2024, 0);
  const moelab::BoundReport b = moelab::me_bound_channel(ch);
  const double h_me = moelab::me_output_entropy(ch);
  std::printf("D=%d N=%d\n", d, n);
  std::printf("h_me            %.10f\n", h_me);
  std::printf("channel bound   %.10f\n", b.me_bound);
  std::printf("universal bound %.10f\n", b.me_bound_universal);

  moelab::MoeConfig cfg;
  cfg.starts = 4;
  cfg.max_seeds = 4;
  const moelab::MoeResult r = moelab::minimize_output_entropy(ch, cfg, moelab::SeededStream(2024, 1));
  std::printf("h_min estimate  %.10f (start %d, %s)\n", r.entropy_estimate, r.best_start,
              r.seed_provenance[static_cast<std::size_t>(r.best_start)].c_str());
  std::printf("2 h_min - h_me  %.10f\n", 2.0 * r.entropy_estimate - h_me);
  std::printf("ln D            %.10f\n", std::log(static_cast<double>(d)));
}
