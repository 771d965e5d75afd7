// End-to-end acceptance run. One PASS/FAIL line per criterion; exit status 1
// if any criterion fails.

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include "moelab/cli.hpp"
#include "moelab/moelab.hpp"
#include "oracles.hpp"

using namespace moelab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

struct Row {
  int id;
  std::string title;
  bool pass;
  std::string detail;
  double seconds;
};

std::vector<Row> g_rows;

void criterion(int id, const std::string& title, const std::function<void(Outcome&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  g_rows.push_back({id, title, o.pass, o.detail.str(), s});
  std::cout << "criterion " << std::setw(2) << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << title << "  ("
            << std::fixed << std::setprecision(1) << s << " s)" << std::defaultfloat << std::setprecision(6)
            << o.detail.str() << std::endl;
}

int run_cli(const std::vector<std::string>& args, std::string* captured = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err, false);
  if (captured) *captured = out.str();
  if (code != 0) std::cerr << "moelab " << args.front() << " exited " << code << ":\n" << err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("moelab_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Mean purity of a D = 2 reduced state from the largest-eigenvalue density
// (2p - 1)^2 (p (1 - p))^(N - 2) on [1/2, 1].
double qubit_mean_purity_quadrature(int n) {
  using boost::math::quadrature::gauss_kronrod;
  const auto w = [n](double p) { return (2 * p - 1) * (2 * p - 1) * std::pow(p * (1 - p), n - 2); };
  const double z = gauss_kronrod<double, 61>::integrate(w, 0.5, 1.0, 15, 1e-14);
  const double m = gauss_kronrod<double, 61>::integrate(
      [&](double p) { return (p * p + (1 - p) * (1 - p)) * w(p); }, 0.5, 1.0, 15, 1e-14);
  return m / z;
}

}  // namespace

int main() {
  std::cout << std::setprecision(6);

  criterion(1, "entangled-input entropy below the channel and universal bounds", [](Outcome& o) {
    const std::vector<int> ds = {2, 3, 4, 6, 8}, ns = {16, 32, 64};
    const int per_cell = 14;
    int channels = 0, violations = 0;
    double worst_margin = 1e300;
    for (int d : ds)
      for (int n : ns)
        for (int t = 0; t < per_cell; ++t) {
          const ChannelSpec ch = make_channel(n, d, 1000 + 100 * d + n, static_cast<std::uint64_t>(t));
          const double h = me_output_entropy(ch);
          const BoundReport b = me_bound_channel(ch);
          const double universal = 2 * std::log(d) - std::log(d) / d;
          ++channels;
          if (!(h <= b.me_bound + 1e-9 && b.me_bound <= universal + 1e-9)) ++violations;
          worst_margin = std::min(worst_margin, b.me_bound - h);
        }
    o.detail << " channels=" << channels << " violations=" << violations << " min(bound - h_me)=" << worst_margin;
    o.require(channels >= 200, "fewer than 200 channels");
    o.require(violations == 0, "bound violated");
  });

  criterion(2, "Gram spectrum equals the direct N^2 x N^2 spectrum", [](Outcome& o) {
    int channels = 0;
    double worst = 0.0;
    for (int d = 1; d <= 3; ++d)
      for (int n = 1; n <= 8; ++n) {
        const ChannelSpec ch = make_channel(n, d, 2000 + 10 * d + n, 0);
        const auto direct = hermitian_eigenvalues_raw(oracle::pair_output(ch));
        const auto gram = hermitian_eigenvalues_raw(pair_output_gram(ch).gram.matrix());
        const std::size_t sz = std::max(direct.size(), gram.size());
        const auto a = oracle::padded(direct, sz), b = oracle::padded(gram, sz);
        for (std::size_t k = 0; k < sz; ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
        ++channels;
      }
    o.detail << " channels=" << channels << " max|diff|=" << worst;
    o.require(channels >= 20, "fewer than 20 channels");
    o.require(worst <= 1e-9, "spectra differ");
  });

  criterion(3, "S(E(psi)) equals S(E^C(psi))", [](Outcome& o) {
    SeededStream rng(3000, 0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const int d = 1 + static_cast<int>(rng() % 8);
      const int n = 2 + static_cast<int>(rng() % 15);
      const ChannelSpec ch = make_channel(n, d, rng);
      const PureState psi = random_pure_state(n, rng);
      const double big = von_neumann_entropy(apply(ch, DensityMatrix(psi)));
      const double small = von_neumann_entropy(apply_conjugate_channel(ch, psi));
      worst = std::max(worst, std::abs(big - small));
    }
    o.detail << " pairs=1000 max|diff|=" << worst;
    o.require(worst <= 1e-9, "entropies differ");
  });

  criterion(4, "maximally entangled state fixed by U^dag (x) conj(U)^dag", [](Outcome& o) {
    SeededStream rng(4000, 0);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
      const int n = 2 + t % 15;
      const CMatrix u = haar_unitary(n, rng);
      const CVector me = maximally_entangled(n).amplitudes();
      const CMatrix k = Eigen::kroneckerProduct(u.adjoint(), u.conjugate().adjoint()).eval();
      worst = std::max(worst, (k * me - me).cwiseAbs().maxCoeff());
    }
    o.detail << " draws=100 max|diff|=" << worst;
    o.require(worst <= 1e-12, "state moved");
  });

  criterion(5, "Pr[x^2 <= 1/2] = 2^-(N-1)", [](Outcome& o) {
    for (int n = 2; n <= 8; ++n) {
      const McSummary s = overlap_probability(n, 1000000, 5000 + n);
      const double p = *s.x_half_prob, ref = std::pow(0.5, n - 1);
      double se = std::sqrt(p * (1 - p) / 1e6);
      if (se == 0.0) se = std::sqrt(ref * (1 - ref) / 1e6);
      const double z = (p - ref) / se;
      o.detail << " N=" << n << ":z=" << std::setprecision(3) << z << std::setprecision(6);
      o.require(std::abs(z) <= 4.0, "N=" + std::to_string(n) + " outside 4 sigma");
    }
  });

  criterion(6, "reduced-spectrum purity and channel/bipartite equivalence", [](Outcome& o) {
    const std::vector<std::pair<int, int>> cells = {{2, 2}, {2, 8}, {4, 16}};
    for (const auto& [d, n] : cells) {
      McConfig cfg;
      cfg.d = d;
      cfg.n = n;
      cfg.samples = 100000;
      cfg.master_seed = 6000 + 10 * d + n;
      const McSummary s = purity_statistics(cfg);
      const double ref = d == 2 ? qubit_mean_purity_quadrature(n) : static_cast<double>(n + d) / (n * d + 1.0);
      const double z = (*s.purity_mean - ref) / s.values.at("purity_stderr");
      o.detail << " (" << d << "," << n << "):mean=" << *s.purity_mean << ",ref=" << ref << ",z=" << std::setprecision(3)
               << z << std::setprecision(6);
      o.require(std::abs(z) <= 4.0, "purity outside 4 sigma");
    }
    McConfig eq;
    eq.d = 2;
    eq.n = 16;
    eq.samples = 100000;
    eq.master_seed = 6100;
    const McSummary s = channel_vs_bipartite_equivalence(eq);
    o.detail << " KS(2,16)=" << *s.ks_distance;
    o.require(*s.ks_distance <= 0.01, "KS distance above 0.01");
  });

  criterion(7, "deterministic inequality suites", [](Outcome& o) {
    cli::VerifyBoundsOptions v;
    v.grid_size = 10000;
    v.samples = 100000;
    v.seed = 7000;
    const auto suites = cli::bound_suites(v);
    std::size_t bad = 0;
    for (const auto& s : suites) {
      o.detail << " " << s.name << ":" << s.checked << "/" << s.violations.size();
      bad += s.violations.size();
    }
    o.require(suites.size() >= 6, "missing suites");
    o.require(bad == 0, "violations found");
  });

  criterion(8, "best eigenvector seed below the merged-atom bound", [](Outcome& o) {
    for (int n : {256, 1024})
      for (int d : {2, 4, 8}) {
        const ChannelSpec ch = make_channel(n, d, 8000 + d, static_cast<std::uint64_t>(n));
        const auto seeds = eigenvector_seeds(ch);
        const double best = seeds.front().entropy;
        const double merged = me_bound_channel(ch).merged_bound;
        o.detail << " (" << d << "," << n << "):seed=" << best << ",merged=" << merged;
        o.require(best <= merged + 1e-9, "seed above merged bound");
        if (n == 1024) {
          const double cap = std::log(d) - 2.0 / d * std::log(2.0) + 0.02;
          o.require(best <= cap, "seed above ln D - (2/D) ln 2 + 0.02 at D=" + std::to_string(d));
        }
      }
  });

  criterion(9, "gradient, monotone descent and qubit grid", [](Outcome& o) {
    const std::vector<std::pair<int, int>> chans = {{2, 6}, {3, 10}, {5, 16}};
    double worst_rel = 0.0;
    bool monotone = true;
    for (std::size_t c = 0; c < chans.size(); ++c) {
      const auto [d, n] = chans[c];
      const ChannelSpec ch = make_channel(n, d, 9000 + c, 0);
      SeededStream rng(9100 + c, 0);
      for (int t = 0; t < 50; ++t) {
        const CVector psi = random_pure_state(n, rng).amplitudes();
        const CVector g = output_entropy_and_gradient(ch, psi).gradient;
        const CVector fd = oracle::fd_gradient(ch, psi);
        worst_rel = std::max(worst_rel, (g - fd).norm() / fd.norm());
      }
      MoeConfig cfg;
      cfg.starts = 4;
      cfg.max_seeds = 4;
      cfg.record_traces = true;
      const MoeResult r = minimize_output_entropy(ch, cfg, SeededStream(9200 + c, 0));
      for (const auto& tr : r.traces)
        for (std::size_t k = 1; k < tr.size(); ++k) monotone = monotone && tr[k] <= tr[k - 1];
    }
    o.detail << " max rel grad error=" << worst_rel << " monotone=" << (monotone ? "yes" : "no");
    o.require(worst_rel <= 1e-5, "gradient mismatch");
    o.require(monotone, "trace increased");

    const ChannelSpec q = make_channel(2, 2, 9300, 0);
    const oracle::GridMinimum grid = oracle::qubit_grid_minimum(q, 1000);
    const MoeResult seeded = minimize_output_entropy(q, MoeConfig{}, SeededStream(9301, 0));
    MoeConfig plain;
    plain.eigenvector_seeding = false;
    const MoeResult unseeded = minimize_output_entropy(q, plain, SeededStream(9302, 0));
    o.detail << " grid points=" << grid.points << " grid min=" << std::setprecision(12) << grid.value
             << " resolution=" << grid.resolution << " optimizer=" << seeded.entropy_estimate
             << " unseeded=" << unseeded.entropy_estimate << std::setprecision(6);
    o.require(grid.points >= 1000000, "grid too small");
    o.require(seeded.entropy_estimate <= grid.value + grid.resolution, "optimizer above grid");
    o.require(unseeded.entropy_estimate <= grid.value + grid.resolution, "unseeded optimizer above grid");
  });

  criterion(10, "sweep replay and worker independence", [](Outcome& o) {
    const fs::path a = scratch("replay_a"), b = scratch("replay_b"), c = scratch("replay_c");
    const std::vector<std::string> base = {"gap-sweep", "--d-list", "2,3,4", "--n-list", "8,16", "--trials", "2",
                                           "--seed", "10000", "--starts", "3", "--max-seeds", "3",
                                           "--max-iters", "200"};
    auto with = [&](const fs::path& dir, const std::string& workers) {
      auto v = base;
      v.insert(v.end(), {"--out", dir.string(), "--workers", workers});
      return v;
    };
    o.require(run_cli(with(a, "1")) == 0, "sweep failed");
    o.require(run_cli(with(c, "3")) == 0, "parallel sweep failed");
    std::string said;
    o.require(run_cli({"replay", "--manifest", (a / "manifest.json").string(), "--out", b.string()}, &said) == 0, "replay failed");
    for (const char* f : {"gap.csv", "gap.jsonl"}) {
      const std::string fa = slurp(a / f);
      o.require(!fa.empty(), std::string(f) + " empty");
      o.require(fa == slurp(b / f), std::string(f) + " differs after replay");
      o.require(fa == slurp(c / f), std::string(f) + " differs with 3 workers");
    }
    o.detail << " replay and 3-worker outputs byte-identical=" << (o.pass ? "yes" : "no");
  });

  criterion(11, "gap sweep D=2..8, N up to 1024 with per-row bound chain", [](Outcome& o) {
    const fs::path dir = scratch("gap");
    std::string table;
    const int code = run_cli({"gap-sweep", "--d-list", "2,3,4,5,6,7,8", "--n-list", "16,64,256,1024", "--trials", "1",
                              "--seed", "11000", "--starts", "2", "--max-seeds", "4", "--max-iters", "150", "--out",
                              dir.string()},
                             &table);
    o.require(code == 0, "sweep exit code " + std::to_string(code));
    std::ifstream csv(dir / "gap.csv");
    std::string line;
    std::getline(csv, line);
    int rows = 0, chain_ok = 0, max_n = 0;
    double max_gap = -1e300;
    std::set<int> ds;
    while (std::getline(csv, line)) {
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
      if (f.size() != 9) continue;
      ++rows;
      ds.insert(std::stoi(f[0]));
      max_n = std::max(max_n, std::stoi(f[1]));
      const double h_me = std::stod(f[3]), gap = std::stod(f[5]), mb = std::stod(f[6]), ub = std::stod(f[7]);
      if (h_me <= mb + 1e-9 && mb <= ub + 1e-9 && f[8] == "PASS") ++chain_ok;
      max_gap = std::max(max_gap, gap);
    }
    std::cout << table;
    o.detail << " rows=" << rows << " chain consistent=" << chain_ok << " D values=" << ds.size() << " max N=" << max_n
             << " largest gap=" << max_gap;
    o.require(rows == 28, "expected 28 rows");
    o.require(chain_ok == rows, "bound chain broken");
    o.require(ds.size() == 7 && max_n == 1024, "grid not covered");
  });

  int failed = 0;
  std::cout << "\nsummary\n";
  for (const auto& r : g_rows) {
    std::cout << "criterion " << std::setw(2) << r.id << ": " << (r.pass ? "PASS" : "FAIL") << "  " << r.title << '\n';
    failed += r.pass ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria pass" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
