#ifndef MOELAB_CLI_HPP
#define MOELAB_CLI_HPP

// Command-line front end. Every command writes human-readable lines to `out`,
// diagnostics to `err`, and returns an exit code:
//   0 all checks pass, 1 usage or config error, 2 validation failure,
//   3 inequality violation.
// Records are JSON lines: {schema_version, experiment_id, config, results,
// manifest_digest}. A manifest next to every output recomputes the digest
// from everything that determines the numbers (not from timestamps).

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "moelab/bounds.hpp"
#include "moelab/channel.hpp"
#include "moelab/channel_io.hpp"
#include "moelab/mclab.hpp"
#include "moelab/moe.hpp"
#include "moelab/parallel.hpp"

#ifndef MOELAB_VERSION
#define MOELAB_VERSION "0.0.0"
#endif

namespace moelab::cli {

using nlohmann::json;

enum ExitCode : int { kOk = 0, kUsage = 1, kValidation = 2, kViolation = 3 };

inline constexpr int kSchemaVersion = 1;

inline std::string tool_version() { return std::string("moelab ") + MOELAB_VERSION; }

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

/// 17 significant digits, enough to round-trip any double.
inline std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Digest of the amplitudes of a state, as 17-digit text.
inline std::string state_digest(const PureState& psi) {
  std::string s;
  for (Eigen::Index k = 0; k < psi.dim(); ++k) s += fmt17(psi(k).real()) + "," + fmt17(psi(k).imag()) + ";";
  return sha256_hex(s);
}

struct RunManifest {
  std::string tool = tool_version();
  std::vector<std::string> command_line;
  std::string subcommand;
  std::uint64_t master_seed = 0;
  std::string generator_id{kGeneratorId};
  json configs = json::object();
  std::string started_at;
  std::string finished_at;
  std::map<std::string, std::string> output_digests;

  /// Hash over the fields that determine the numeric output.
  std::string digest() const {
    const json core = {{"tool", tool}, {"subcommand", subcommand}, {"master_seed", master_seed},
                       {"generator_id", generator_id}, {"configs", configs}};
    return sha256_hex(core.dump());
  }

  json to_json() const {
    return {{"schema_version", kSchemaVersion},
            {"tool", tool},
            {"command_line", command_line},
            {"subcommand", subcommand},
            {"master_seed", master_seed},
            {"generator_id", generator_id},
            {"configs", configs},
            {"manifest_digest", digest()},
            {"started_at", started_at},
            {"finished_at", finished_at},
            {"output_digests", output_digests}};
  }

  static RunManifest from_json(const json& j) {
    RunManifest m;
    m.tool = j.at("tool").get<std::string>();
    m.command_line = j.at("command_line").get<std::vector<std::string>>();
    m.subcommand = j.at("subcommand").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.generator_id = j.at("generator_id").get<std::string>();
    m.configs = j.at("configs");
    return m;
  }
};

inline json make_record(const std::string& experiment_id, json config, json results, const std::string& digest) {
  return {{"schema_version", kSchemaVersion},
          {"experiment_id", experiment_id},
          {"config", std::move(config)},
          {"results", std::move(results)},
          {"manifest_digest", digest}};
}

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json summary_results(const McSummary& s) {
  json r;
  r["samples"] = s.samples;
  r["p_hat_mm"] = opt_json(s.p_hat_mm);
  r["q_hat"] = opt_json(s.q_hat);
  r["x_half_prob"] = opt_json(s.x_half_prob);
  r["purity_mean"] = opt_json(s.purity_mean);
  r["ks_distance"] = opt_json(s.ks_distance);
  json vals = json::object();
  for (const auto& [k, v] : s.values) vals[k] = std::isnan(v) ? json(nullptr) : json(v);
  r["values"] = vals;
  if (!s.series.empty()) r["series"] = s.series;
  r["pass"] = s.pass ? json(*s.pass) : json(nullptr);
  return r;
}

inline json mc_config_json(const McConfig& c) {
  return {{"d", c.d}, {"n", c.n}, {"samples", c.samples}, {"c_mm", c.c_mm}, {"master_seed", c.master_seed}};
}

inline json moe_config_json(const MoeConfig& c) {
  return {{"starts", c.starts},       {"max_iters", c.max_iters},   {"grad_tol", c.grad_tol},
          {"seeding", c.eigenvector_seeding}, {"max_seeds", c.max_seeds}, {"armijo", c.armijo},
          {"shrink", c.shrink}};
}

/// Writes records as JSON lines plus a manifest at `path + ".manifest.json"`.
inline void write_records(const std::string& path, const std::vector<json>& records, RunManifest manifest) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    for (const auto& r : records) out << r.dump() << '\n';
  }
  manifest.finished_at = utc_timestamp();
  manifest.output_digests[std::filesystem::path(path).filename().string()] = file_digest(path);
  std::ofstream m(path + ".manifest.json", std::ios::binary);
  m << manifest.to_json().dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// gen-channel

struct GenChannelOptions {
  int d = 0;
  int n = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  bool orthogonal = false;
  bool uniform_p = false;
  bool seed_only = false;
  std::string out;
};

inline int cmd_gen_channel(const GenChannelOptions& o, std::ostream& out, std::ostream& err) {
  if (o.d < 1 || o.n < 1) {
    err << "gen-channel: --d and --n must be >= 1\n";
    return kUsage;
  }
  const ChannelSpec ch = make_channel(o.n, o.d, o.seed, o.stream, {o.orthogonal, o.uniform_p});
  try {
    save_channel(ch, o.out, !o.seed_only);
  } catch (const std::exception& e) {
    err << "gen-channel: " << e.what() << '\n';
    return kUsage;
  }
  out << "D = " << ch.d() << ", N = " << ch.n() << (o.orthogonal ? " (orthogonal)" : "") << '\n';
  out << "P =";
  for (Eigen::Index i = 0; i < ch.d(); ++i) out << ' ' << std::setprecision(8) << ch.probabilities()(i);
  out << "\nP_same = " << std::setprecision(8) << p_same(detail::to_std(ch.probabilities())) << '\n';
  out << "wrote " << o.out << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// shared plumbing

struct RecordTarget {
  std::string path;  // empty: no records written
  std::vector<std::string> command_line;
  std::string started_at = utc_timestamp();
};

inline RunManifest make_manifest(const RecordTarget& t, const std::string& sub, std::uint64_t seed, json configs) {
  RunManifest m;
  m.command_line = t.command_line;
  m.subcommand = sub;
  m.master_seed = seed;
  m.configs = std::move(configs);
  m.started_at = t.started_at;
  return m;
}

inline void emit_single(const RecordTarget& t, const RunManifest& m, const std::string& experiment_id, json config,
                        json results) {
  if (t.path.empty()) return;
  write_records(t.path, {make_record(experiment_id, std::move(config), std::move(results), m.digest())}, m);
}

inline std::optional<ChannelSpec> load_for_command(const std::string& cmd, const std::string& path, std::ostream& err,
                                                   int& code) {
  try {
    return load_channel(path);
  } catch (const ValidationError& e) {
    err << cmd << ": validation error: " << e.what() << '\n';
    code = kValidation;
  } catch (const std::exception& e) {
    err << cmd << ": " << e.what() << '\n';
    code = kUsage;
  }
  return std::nullopt;
}

inline const char* pass_word(bool ok) { return ok ? "PASS" : "FAIL"; }

// ---------------------------------------------------------------------------
// me-entropy

struct MeEntropyOptions {
  std::string channel;
  RecordTarget record;
};

inline constexpr double kChainSlack = 1e-9;

inline int cmd_me_entropy(const MeEntropyOptions& o, std::ostream& out, std::ostream& err) {
  int code = kOk;
  const auto ch = load_for_command("me-entropy", o.channel, err, code);
  if (!ch) return code;
  const double h = me_output_entropy(*ch);
  const BoundReport b = me_bound_channel(*ch);
  const bool ok = h <= b.me_bound + kChainSlack && b.me_bound <= b.me_bound_universal + kChainSlack;
  out << "h_me               = " << fmt17(h) << '\n';
  out << "me_bound_channel   = " << fmt17(b.me_bound) << '\n';
  out << "me_bound_universal = " << fmt17(b.me_bound_universal) << '\n';
  out << "chain h_me <= bound <= universal: " << pass_word(ok) << '\n';
  const json config = {{"channel_digest", file_digest(o.channel)}, {"d", b.d}, {"n", b.n}};
  const RunManifest m = make_manifest(o.record, "me-entropy", b.seed, config);
  emit_single(o.record, m, "me-entropy", config,
              {{"h_me", h}, {"me_bound", b.me_bound}, {"me_bound_universal", b.me_bound_universal},
               {"p_same", b.p_same}, {"merged_bound", b.merged_bound}, {"pass", ok}});
  return ok ? kOk : kViolation;
}

// ---------------------------------------------------------------------------
// moe

inline constexpr std::uint64_t kMoeStream = 0x4d4f455354525400ULL;

struct MoeOptions {
  std::string channel;
  MoeConfig moe;
  std::uint64_t seed = 0;
  RecordTarget record;
};

inline json moe_result_json(const MoeResult& r) {
  return {{"entropy_estimate", r.entropy_estimate},
          {"argmin_digest", state_digest(r.argmin_state)},
          {"starts", r.starts},
          {"best_start", r.best_start},
          {"iterations", r.iterations_per_start},
          {"converged", r.converged_flags},
          {"provenance", r.seed_provenance},
          {"final_entropies", r.final_entropies}};
}

inline int cmd_moe(const MoeOptions& o, std::ostream& out, std::ostream& err) {
  int code = kOk;
  const auto ch = load_for_command("moe", o.channel, err, code);
  if (!ch) return code;
  MoeResult r;
  try {
    r = minimize_output_entropy(*ch, o.moe, SeededStream(o.seed, kMoeStream));
  } catch (const PreconditionError& e) {
    err << "moe: " << e.what() << '\n';
    return kUsage;
  }
  out << "entropy_estimate = " << fmt17(r.entropy_estimate) << '\n';
  out << "argmin_digest    = " << state_digest(r.argmin_state) << '\n';
  out << "best_start       = " << r.best_start << " (" << r.seed_provenance[static_cast<std::size_t>(r.best_start)]
      << ")\n";
  out << "start  iters  converged  entropy                 provenance\n";
  for (int k = 0; k < r.starts; ++k) {
    const auto i = static_cast<std::size_t>(k);
    char line[160];
    std::snprintf(line, sizeof line, "%5d  %5d  %-9s  %-22.17g  %s\n", k, r.iterations_per_start[i],
                  r.converged_flags[i] ? "yes" : "no", r.final_entropies[i], r.seed_provenance[i].c_str());
    out << line;
  }
  json config = moe_config_json(o.moe);
  config["channel_digest"] = file_digest(o.channel);
  const RunManifest m = make_manifest(o.record, "moe", o.seed, config);
  emit_single(o.record, m, "moe", config, moe_result_json(r));
  return kOk;
}

// ---------------------------------------------------------------------------
// gap-sweep

inline constexpr std::uint64_t kGapChannelTag = 0x4741504348414e00ULL;
inline constexpr std::uint64_t kGapMoeTag = 0x4741504d4f450000ULL;

inline std::uint64_t row_stream(std::uint64_t tag, int d, int n, int trial) {
  std::uint64_t s = splitmix64(tag ^ static_cast<std::uint64_t>(d));
  s = splitmix64(s ^ static_cast<std::uint64_t>(n));
  return splitmix64(s ^ static_cast<std::uint64_t>(trial));
}

struct GapSweepOptions {
  std::vector<int> d_list;
  std::vector<int> n_list;
  int trials = 1;
  std::uint64_t seed = 0;
  std::string out_dir;
  MoeConfig moe;
  bool gnuplot = false;
  unsigned workers = 1;
  std::vector<std::string> command_line;
};

struct GapRow {
  int d = 0;
  int n = 0;
  int trial = 0;
  double h_me = std::nan("");
  double h_min = std::nan("");
  double gap = std::nan("");
  double me_bound = std::nan("");
  double universal = std::nan("");
  double p_same = std::nan("");
  double merged = std::nan("");
  int converged = 0;
  int starts = 0;
  std::string best_provenance;
  std::string status;
  bool chain_ok = false;
};

inline GapRow gap_row(int d, int n, int trial, const GapSweepOptions& o) {
  GapRow row;
  row.d = d;
  row.n = n;
  row.trial = trial;
  try {
    const ChannelSpec ch = make_channel(n, d, o.seed, row_stream(kGapChannelTag, d, n, trial));
    const GapResult g = entropy_gap_experiment(ch, o.moe, SeededStream(o.seed, row_stream(kGapMoeTag, d, n, trial)));
    const BoundReport b = me_bound_channel(ch);
    row.h_me = g.h_me;
    row.h_min = g.h_min_estimate;
    row.gap = g.gap;
    row.me_bound = b.me_bound;
    row.universal = b.me_bound_universal;
    row.p_same = b.p_same;
    row.merged = b.merged_bound;
    row.starts = g.moe.starts;
    for (bool c : g.moe.converged_flags) row.converged += c ? 1 : 0;
    row.best_provenance = g.moe.seed_provenance[static_cast<std::size_t>(g.moe.best_start)];
    row.chain_ok = g.h_me <= b.me_bound + kChainSlack && b.me_bound <= b.me_bound_universal + kChainSlack &&
                   g.h_me <= b.me_bound_universal + kChainSlack;
    row.status = row.chain_ok ? "PASS" : "FAIL";
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
    for (char& c : row.status)
      if (c == ',' || c == '\n' || c == '"') c = ' ';
  }
  return row;
}

inline std::string csv_line(const GapRow& r) {
  return std::to_string(r.d) + "," + std::to_string(r.n) + "," + std::to_string(r.trial) + "," + fmt17(r.h_me) + "," +
         fmt17(r.h_min) + "," + fmt17(r.gap) + "," + fmt17(r.me_bound) + "," + fmt17(r.universal) + "," + r.status;
}

inline json num_or_null(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

inline const char* kGnuplotScript =
    "set datafile separator ','\n"
    "set key autotitle columnhead\n"
    "set xlabel 'N'\n"
    "set ylabel '2 h_min - h_me'\n"
    "set logscale x 2\n"
    "plot for [D in system(\"tail -n +2 gap.csv | cut -d, -f1 | sort -un | tr '\\n' ' '\")] \\\n"
    "  'gap.csv' using ($1 == D ? $2 : 1/0):6 with points title sprintf('D=%s', D)\n";

inline int cmd_gap_sweep(const GapSweepOptions& o, std::ostream& out, std::ostream& err) {
  if (o.d_list.empty() || o.n_list.empty()) {
    err << "gap-sweep: --d-list and --n-list must be non-empty\n";
    return kUsage;
  }
  if (o.trials < 1) {
    err << "gap-sweep: --trials must be >= 1\n";
    return kUsage;
  }
  for (int d : o.d_list)
    if (d < 1) {
      err << "gap-sweep: every D must be >= 1\n";
      return kUsage;
    }
  for (int n : o.n_list)
    if (n < 1) {
      err << "gap-sweep: every N must be >= 1\n";
      return kUsage;
    }
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec || !std::filesystem::is_directory(o.out_dir)) {
    err << "gap-sweep: cannot create output directory " << o.out_dir << '\n';
    return kUsage;
  }

  struct Cell {
    int d, n, trial;
  };
  std::vector<Cell> cells;
  for (int d : o.d_list)
    for (int n : o.n_list)
      for (int t = 0; t < o.trials; ++t) cells.push_back({d, n, t});

  const std::string started = utc_timestamp();
  std::vector<GapRow> rows(cells.size());
  MoeConfig inner = o.moe;
  inner.workers = 1;
  GapSweepOptions local = o;
  local.moe = inner;
  parallel_for(cells.size(), o.workers, [&](std::size_t i) { rows[i] = gap_row(cells[i].d, cells[i].n, cells[i].trial, local); });

  RunManifest m;
  m.command_line = o.command_line;
  m.subcommand = "gap-sweep";
  m.master_seed = o.seed;
  m.started_at = started;
  m.configs = {{"d_list", o.d_list}, {"n_list", o.n_list}, {"trials", o.trials}, {"moe", moe_config_json(o.moe)}};
  const std::string digest = m.digest();

  const std::filesystem::path dir(o.out_dir);
  const std::string csv_path = (dir / "gap.csv").string();
  const std::string jsonl_path = (dir / "gap.jsonl").string();
  {
    std::ofstream csv(csv_path, std::ios::binary);
    std::ofstream jl(jsonl_path, std::ios::binary);
    if (!csv || !jl) {
      err << "gap-sweep: cannot write into " << o.out_dir << '\n';
      return kUsage;
    }
    csv << "d,n,trial,h_me,h_min,gap,me_bound,universal_bound,status\n";
    for (const GapRow& r : rows) {
      csv << csv_line(r) << '\n';
      const json config = {{"d", r.d},
                           {"n", r.n},
                           {"trial", r.trial},
                           {"master_seed", o.seed},
                           {"channel_stream", row_stream(kGapChannelTag, r.d, r.n, r.trial)},
                           {"moe_stream", row_stream(kGapMoeTag, r.d, r.n, r.trial)},
                           {"moe", moe_config_json(o.moe)}};
      const json results = {{"h_me", num_or_null(r.h_me)},
                            {"h_min", num_or_null(r.h_min)},
                            {"gap", num_or_null(r.gap)},
                            {"me_bound", num_or_null(r.me_bound)},
                            {"universal_bound", num_or_null(r.universal)},
                            {"p_same", num_or_null(r.p_same)},
                            {"merged_bound", num_or_null(r.merged)},
                            {"starts", r.starts},
                            {"converged_starts", r.converged},
                            {"best_provenance", r.best_provenance},
                            {"status", r.status}};
      jl << make_record("gap-sweep", config, results, digest).dump() << '\n';
    }
  }
  if (o.gnuplot) std::ofstream((dir / "gap.gp").string(), std::ios::binary) << kGnuplotScript;

  m.finished_at = utc_timestamp();
  m.output_digests["gap.csv"] = file_digest(csv_path);
  m.output_digests["gap.jsonl"] = file_digest(jsonl_path);
  std::ofstream((dir / "manifest.json").string(), std::ios::binary) << m.to_json().dump(2) << '\n';

  int failed = 0, errors = 0;
  out << "   d     n  trial  h_me                 h_min                gap                  status\n";
  for (const GapRow& r : rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%4d  %4d  %5d  %-19.12g  %-19.12g  %-19.12g  %s\n", r.d, r.n, r.trial, r.h_me,
                  r.h_min, r.gap, r.status.c_str());
    out << line;
    if (r.status.rfind("error", 0) == 0)
      ++errors;
    else if (!r.chain_ok)
      ++failed;
  }
  out << rows.size() << " rows, " << failed << " bound-chain failures, " << errors << " errors\n";
  out << "wrote " << csv_path << ", " << jsonl_path << ", " << (dir / "manifest.json").string() << '\n';
  if (failed > 0) return kViolation;
  if (errors > 0) return kValidation;
  return kOk;
}

// ---------------------------------------------------------------------------
// mc

struct McOptions {
  std::string sub;
  McConfig cfg;
  std::size_t channels = 20;
  std::size_t states = 100;
  std::string channel;
  bool unconditioned = false;
  bool use_argmin = false;
  bool compare_channel = false;
  RecordTarget record;
};

inline void print_summary_line(std::ostream& out, const char* name, double est, double se, double ref, bool ok) {
  out << name << " = " << fmt17(est) << "  stderr = " << fmt17(se) << "  reference = " << fmt17(ref) << "  "
      << pass_word(ok) << " (4 sigma)\n";
}

inline int cmd_mc(const McOptions& o, std::ostream& out, std::ostream& err) {
  std::vector<json> records;
  bool all_pass = true;
  json base_config = mc_config_json(o.cfg);
  try {
    if (o.sub == "spectra") {
      const McSummary s = purity_statistics(o.cfg);
      print_summary_line(out, "mean purity", *s.purity_mean, s.values.at("purity_stderr"),
                         s.values.at("purity_reference"), *s.pass);
      if (s.ks_distance)
        out << "KS distance of largest eigenvalue vs exact law = " << fmt17(*s.ks_distance) << '\n';
      all_pass = all_pass && *s.pass;
      records.push_back({{"experiment_id", s.experiment_id}, {"results", summary_results(s)}});
      if (o.compare_channel) {
        const McSummary e = channel_vs_bipartite_equivalence(o.cfg);
        out << "channel vs bipartite KS = " << fmt17(*e.ks_distance) << "  threshold = "
            << fmt17(e.values.at("ks_threshold")) << "  " << pass_word(*e.pass) << '\n';
        all_pass = all_pass && *e.pass;
        records.push_back({{"experiment_id", e.experiment_id}, {"results", summary_results(e)}});
      }
    } else if (o.sub == "overlap") {
      const McSummary s = overlap_probability(o.cfg.n, o.cfg.samples, o.cfg.master_seed, o.cfg.workers);
      print_summary_line(out, "Pr[x^2 <= 1/2]", *s.x_half_prob, s.values.at("stderr"), s.values.at("reference"),
                         *s.pass);
      all_pass = *s.pass;
      records.push_back({{"experiment_id", s.experiment_id}, {"results", summary_results(s)}});
    } else if (o.sub == "mixed-prob") {
      const McSummary s = mixed_probability(o.cfg, o.channels, o.states);
      out << "q_hat = " << fmt17(*s.q_hat) << "  stderr = " << fmt17(s.values.at("q_hat_stderr"))
          << "  mean p_hat = " << fmt17(*s.p_hat_mm) << "  band = " << fmt17(s.values.at("band")) << '\n';
      base_config["channels"] = o.channels;
      base_config["states_per_channel"] = o.states;
      records.push_back({{"experiment_id", s.experiment_id}, {"results", summary_results(s)}});
    } else if (o.sub == "decomp") {
      std::optional<ChannelSpec> ch;
      if (!o.channel.empty()) {
        int code = kOk;
        ch = load_for_command("mc decomp", o.channel, err, code);
        if (!ch) return code;
        base_config["channel_digest"] = file_digest(o.channel);
      } else {
        ch = make_channel(o.cfg.n, o.cfg.d, o.cfg.master_seed, streams::kDecomp);
      }
      PureState psi0;
      if (o.use_argmin) {
        MoeConfig mc;
        mc.starts = 4;
        mc.max_seeds = 4;
        psi0 = minimize_output_entropy(*ch, mc, SeededStream(o.cfg.master_seed, kMoeStream)).argmin_state;
      } else {
        SeededStream r = SeededStream(o.cfg.master_seed, streams::kDecomp).substream(~std::uint64_t{0});
        psi0 = random_pure_state(ch->n(), r);
      }
      base_config["use_argmin"] = o.use_argmin;
      base_config["conditioned"] = !o.unconditioned;
      const DecompositionResult res =
          decomposition_statistics(*ch, psi0, o.cfg.samples, o.cfg.master_seed, !o.unconditioned, o.cfg.workers);
      for (const auto& [k, v] : res.summary.values) out << k << " = " << fmt17(v) << '\n';
      records.push_back({{"experiment_id", res.summary.experiment_id}, {"results", summary_results(res.summary)}});
    } else {
      err << "mc: unknown experiment '" << o.sub << "'\n";
      return kUsage;
    }
  } catch (const PreconditionError& e) {
    err << "mc " << o.sub << ": " << e.what() << '\n';
    return kUsage;
  }
  if (!o.record.path.empty()) {
    json configs = base_config;
    configs["experiment"] = o.sub;
    configs["compare_channel"] = o.compare_channel;
    const RunManifest m = make_manifest(o.record, "mc", o.cfg.master_seed, configs);
    std::vector<json> lines;
    for (auto& r : records)
      lines.push_back(make_record(r["experiment_id"].get<std::string>(), base_config, r["results"], m.digest()));
    write_records(o.record.path, lines, m);
  }
  return all_pass ? kOk : kViolation;
}

// ---------------------------------------------------------------------------
// verify-bounds

struct VerifyBoundsOptions {
  std::size_t grid_size = 10000;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  bool inject_fault = false;
  unsigned workers = 1;
  RecordTarget record;
};

struct SuiteReport {
  std::string name;
  std::size_t checked = 0;
  std::vector<json> violations;  // every offending input
};

inline constexpr double kBoundSlack = 1e-12;
inline constexpr std::size_t kMaxDumped = 20;
inline constexpr std::uint64_t kVerifyTag = 0x5645524946590000ULL;

inline std::vector<double> dirichlet_point(int d, SeededStream& rng) {
  std::vector<double> p(static_cast<std::size_t>(d));
  double s = 0.0;
  for (double& x : p) s += (x = -std::log(rng.uniform()));
  for (double& x : p) x /= s;
  return p;
}

/// Runs checks 0..count-1 in parallel; each returns nullopt or a violation record.
template <class Fn>
inline SuiteReport run_suite(const std::string& name, std::size_t count, unsigned workers, Fn&& check) {
  std::vector<std::optional<json>> found(count);
  parallel_for(count, workers, [&](std::size_t i) { found[i] = check(i); });
  SuiteReport r;
  r.name = name;
  r.checked = count;
  for (auto& f : found)
    if (f) r.violations.push_back(std::move(*f));
  return r;
}

inline std::vector<SuiteReport> bound_suites(const VerifyBoundsOptions& o) {
  const bool neg = o.inject_fault;
  const auto holds = [neg](bool ok) { return neg ? !ok : ok; };
  std::vector<SuiteReport> suites;

  const std::vector<std::pair<int, int>> f_pairs = {{2, 8}, {4, 32}, {8, 64}};
  for (const auto& [d, n] : f_pairs) {
    const std::size_t g = std::max<std::size_t>(o.grid_size, 1);
    suites.push_back(run_suite("f_le_one(d=" + std::to_string(d) + ",n=" + std::to_string(n) + ")", g, o.workers,
                               [&, d = d, n = n](std::size_t k) -> std::optional<json> {
                                 const double p = g == 1 ? 1.0 / d : static_cast<double>(k) / (g - 1);
                                 const double f = f_of_p(p, d, n);
                                 if (holds(f <= 1.0 + kBoundSlack)) return std::nullopt;
                                 return json{{"p", p}, {"d", d}, {"n", n}, {"f", f}};
                               }));
  }

  const SeededStream root(o.seed, kVerifyTag);
  const std::vector<int> dims = {2, 4, 8};

  suites.push_back(run_suite("quadratic_delta_s", o.samples, o.workers, [&](std::size_t i) -> std::optional<json> {
    SeededStream rng = root.substream(1).substream(i);
    const int d = dims[i % dims.size()];
    const auto p = dirichlet_point(d, rng);
    const DeltaSBound b = quadratic_delta_s_bound(p);
    if (holds(b.delta_s <= b.bound + kBoundSlack)) return std::nullopt;
    return json{{"sample", i}, {"p", p}, {"delta_s", b.delta_s}, {"bound", b.bound}};
  }));

  const std::size_t nprod = std::max<std::size_t>(o.samples / 10, 1);
  suites.push_back(run_suite("product_f", nprod, o.workers, [&](std::size_t i) -> std::optional<json> {
    SeededStream rng = root.substream(2).substream(i);
    const int d = dims[i % dims.size()];
    const int ns[] = {d + 1, 4 * d, 32 * d};
    const int n = ns[(i / dims.size()) % 3];
    const double x = 0.05 + 0.9 * rng.uniform();
    const double y = 1.0 + 2.0 * rng.uniform();
    std::vector<double> delta(static_cast<std::size_t>(d));
    double mean = 0.0;
    for (double& v : delta) mean += (v = rng.normal());
    mean /= d;
    double smax = std::numeric_limits<double>::infinity();
    for (double& v : delta) {
      v -= mean;
      if (v > 0) smax = std::min(smax, (y - 1.0) / (d * v));
      if (v < 0) smax = std::min(smax, (1.0 - x) / (-d * v));
    }
    const double s = 0.999 * rng.uniform() * (std::isfinite(smax) ? smax : 0.0);
    std::vector<double> q(delta.size());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = 1.0 / d + s * delta[k];
    const LogBoundPair b = product_f_bound(q, d, n, x, y);
    if (holds(b.lhs <= b.rhs + kBoundSlack)) return std::nullopt;
    return json{{"sample", i}, {"q", q}, {"d", d}, {"n", n}, {"x", x}, {"y", y}, {"lhs", b.lhs}, {"rhs", b.rhs}};
  }));

  suites.push_back(run_suite("p_same", o.samples, o.workers, [&](std::size_t i) -> std::optional<json> {
    SeededStream rng = root.substream(3).substream(i);
    const int d = 1 + static_cast<int>(i % 8);
    const int ns[] = {1, 2, 16, 64};
    const int n = ns[(i / 8) % 4];
    const RVector l = sample_amplitudes(d, n, rng);
    const RVector pv = l.array().square() / l.squaredNorm();
    const auto p = detail::to_std(pv);
    const double ps = p_same(p);
    const double mb = me_bound(p);
    const double ub = me_bound_universal(d);
    if (holds(ps >= 1.0 / d - kBoundSlack && ps <= 1.0 + kBoundSlack && mb <= ub + kBoundSlack)) return std::nullopt;
    return json{{"sample", i}, {"d", d}, {"n", n}, {"p", p}, {"p_same", ps}, {"me_bound", mb}, {"universal", ub}};
  }));

  suites.push_back(run_suite("merged_bound", o.samples, o.workers, [&](std::size_t i) -> std::optional<json> {
    SeededStream rng = root.substream(4).substream(i);
    const int d = 2 + static_cast<int>(i % 7);
    const auto p = dirichlet_point(d, rng);
    const double m = merged_entropy_bound(p);
    const double s = shannon_entropy(p);
    if (holds(m <= s + kBoundSlack)) return std::nullopt;
    return json{{"sample", i}, {"p", p}, {"merged", m}, {"entropy", s}};
  }));
  return suites;
}

inline int cmd_verify_bounds(const VerifyBoundsOptions& o, std::ostream& out, std::ostream& err) {
  const std::vector<SuiteReport> suites = bound_suites(o);
  std::size_t total = 0;
  json results = json::object();
  for (const auto& s : suites) {
    total += s.violations.size();
    out << s.name << ": " << s.checked << " checked, " << s.violations.size() << " violations  "
        << pass_word(s.violations.empty()) << '\n';
    results[s.name] = {{"checked", s.checked}, {"violations", s.violations.size()}};
    for (std::size_t k = 0; k < std::min<std::size_t>(s.violations.size(), kMaxDumped); ++k)
      err << json{{"suite", s.name}, {"input", s.violations[k]}}.dump() << '\n';
    if (s.violations.size() > kMaxDumped)
      err << s.name << ": " << s.violations.size() - kMaxDumped << " further violations not shown\n";
  }
  out << "total violations: " << total << '\n';
  const json config = {{"grid_size", o.grid_size}, {"samples", o.samples}, {"inject_fault", o.inject_fault}};
  const RunManifest m = make_manifest(o.record, "verify-bounds", o.seed, config);
  results["total_violations"] = total;
  emit_single(o.record, m, "verify-bounds", config, results);
  return total == 0 ? kOk : kViolation;
}

// ---------------------------------------------------------------------------
// entry point and replay

inline void set_flag(std::vector<std::string>& args, const std::string& name, const std::string& value) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == name && i + 1 < args.size()) {
      args[i + 1] = value;
      return;
    }
    if (args[i].rfind(name + "=", 0) == 0) {
      args[i] = name + "=" + value;
      return;
    }
  }
  args.push_back(name);
  args.push_back(value);
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool allow_env = true);

inline int cmd_replay(const std::string& manifest_path, const std::string& out_path, std::ostream& out,
                      std::ostream& err) {
  json j;
  try {
    std::ifstream in(manifest_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + manifest_path);
    in >> j;
  } catch (const std::exception& e) {
    err << "replay: " << e.what() << '\n';
    return kValidation;
  }
  RunManifest old;
  std::map<std::string, std::string> old_digests;
  try {
    old = RunManifest::from_json(j);
    old_digests = j.at("output_digests").get<std::map<std::string, std::string>>();
  } catch (const std::exception& e) {
    err << "replay: malformed manifest: " << e.what() << '\n';
    return kValidation;
  }
  if (old.tool != tool_version()) out << "replay: note: manifest written by " << old.tool << '\n';
  if (old.generator_id != kGeneratorId) {
    err << "replay: generator " << old.generator_id << " is not available in this build\n";
    return kValidation;
  }
  std::vector<std::string> args = old.command_line;
  set_flag(args, "--seed", std::to_string(old.master_seed));
  const bool sweep = old.subcommand == "gap-sweep";
  set_flag(args, sweep ? "--out" : "--record", out_path);
  const int code = run(args, out, err, false);

  const std::string new_manifest =
      sweep ? (std::filesystem::path(out_path) / "manifest.json").string() : out_path + ".manifest.json";
  json fresh;
  try {
    std::ifstream in(new_manifest, std::ios::binary);
    in >> fresh;
  } catch (const std::exception& e) {
    err << "replay: rerun produced no manifest: " << e.what() << '\n';
    return code == kOk ? kValidation : code;
  }
  const auto new_digests = fresh.at("output_digests").get<std::map<std::string, std::string>>();
  std::vector<std::string> a, b;
  for (const auto& [k, v] : old_digests) a.push_back(v);
  for (const auto& [k, v] : new_digests) b.push_back(v);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const bool same_digest = fresh.at("manifest_digest").get<std::string>() == j.at("manifest_digest").get<std::string>();
  const bool same_outputs = a == b;
  out << "replay: manifest digest " << (same_digest ? "matches" : "DIFFERS") << ", outputs "
      << (same_outputs ? "identical" : "DIFFER") << '\n';
  if (!same_digest || !same_outputs) return kValidation;
  return code;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, bool allow_env) {
  CLI::App app{"Random-unitary channel laboratory: output entropies, bounds and Monte Carlo checks", "moelab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());
  unsigned workers = default_workers();
  std::uint64_t seed = 0;
  RecordTarget record;
  record.command_line = args;

  const auto add_workers = [&](CLI::App* s) {
    s->add_option("--workers", workers, "Concurrent trials (results do not depend on it)")->check(CLI::PositiveNumber);
  };
  const auto add_record = [&](CLI::App* s) {
    s->add_option("--record", record.path, "Write JSON-lines records and a manifest");
  };

  GenChannelOptions gen;
  auto* g = app.add_subcommand("gen-channel", "Sample a channel and write it to a file");
  g->add_option("--d", gen.d, "Number of unitaries")->required();
  g->add_option("--n", gen.n, "Input dimension")->required();
  g->add_option("--seed", seed, "Master seed");
  g->add_option("--stream", gen.stream, "Stream id");
  g->add_flag("--orthogonal", gen.orthogonal, "Draw real orthogonal matrices");
  g->add_flag("--uniform-p", gen.uniform_p, "Use equal weights");
  g->add_flag("--seed-only", gen.seed_only, "Omit the matrices; the loader regenerates them");
  g->add_option("--out", gen.out, "Output path")->required();

  MeEntropyOptions mee;
  auto* me = app.add_subcommand("me-entropy", "Entropy of the channel pair on the maximally entangled state");
  me->add_option("--channel", mee.channel, "Channel file")->required();
  add_record(me);

  MoeOptions moe;
  auto* mo = app.add_subcommand("moe", "Estimate the minimum output entropy");
  mo->add_option("--channel", moe.channel, "Channel file")->required();
  mo->add_option("--starts", moe.moe.starts, "Random starts")->check(CLI::PositiveNumber);
  mo->add_option("--grad-tol", moe.moe.grad_tol, "Tangent gradient tolerance");
  mo->add_option("--max-iters", moe.moe.max_iters, "Iterations per start");
  mo->add_option("--max-seeds", moe.moe.max_seeds, "Eigenvector seeds appended to the starts");
  bool no_seeding = false;
  mo->add_flag("--no-seeding", no_seeding, "Disable eigenvector seeds");
  mo->add_option("--seed", seed, "Master seed for random starts");
  add_workers(mo);
  add_record(mo);

  GapSweepOptions gap;
  gap.moe.starts = 8;
  gap.moe.max_seeds = 8;
  gap.moe.max_iters = 500;
  auto* gs = app.add_subcommand("gap-sweep", "Table of 2 h_min - h_me over a (D, N) grid");
  gs->add_option("--d-list", gap.d_list, "Comma-separated D values")->delimiter(',');
  gs->add_option("--n-list", gap.n_list, "Comma-separated N values")->delimiter(',');
  gs->add_option("--trials", gap.trials, "Channels per (D, N)");
  gs->add_option("--seed", seed, "Master seed");
  gs->add_option("--out", gap.out_dir, "Output directory")->required();
  gs->add_option("--starts", gap.moe.starts, "Random starts per channel")->check(CLI::PositiveNumber);
  gs->add_option("--max-iters", gap.moe.max_iters, "Iterations per start");
  gs->add_option("--max-seeds", gap.moe.max_seeds, "Eigenvector seeds per channel");
  gs->add_option("--grad-tol", gap.moe.grad_tol, "Tangent gradient tolerance");
  gs->add_flag("--gnuplot", gap.gnuplot, "Also write gap.gp");
  add_workers(gs);

  McOptions mc;
  auto* m = app.add_subcommand("mc", "Monte Carlo experiments");
  m->require_subcommand(1);
  const auto add_mc_common = [&](CLI::App* s) {
    s->add_option("--d", mc.cfg.d, "Environment dimension D");
    s->add_option("--n", mc.cfg.n, "Input dimension N");
    s->add_option("--samples", mc.cfg.samples, "Samples");
    s->add_option("--seed", seed, "Master seed");
    add_workers(s);
    add_record(s);
  };
  auto* sp = m->add_subcommand("spectra", "Mean purity of reduced spectra");
  add_mc_common(sp);
  sp->add_flag("--compare-channel", mc.compare_channel, "Also compare channel and bipartite eigenvalue laws");
  auto* mp = m->add_subcommand("mixed-prob", "Probability that outputs are close to maximally mixed");
  add_mc_common(mp);
  mp->add_option("--c-mm", mc.cfg.c_mm, "Band constant");
  mp->add_option("--channels", mc.channels, "Channels");
  mp->add_option("--states", mc.states, "States per channel");
  auto* ov = m->add_subcommand("overlap", "Probability that |<psi0|chi>|^2 <= 1/2");
  add_mc_common(ov);
  auto* dc = m->add_subcommand("decomp", "Decomposition around a reference input");
  add_mc_common(dc);
  dc->add_option("--channel", mc.channel, "Channel file (default: sample one)");
  dc->add_flag("--use-argmin", mc.use_argmin, "Use the optimizer's argmin as reference");
  dc->add_flag("--unconditioned", mc.unconditioned, "Sample chi uniformly instead of y >= 1/2");

  VerifyBoundsOptions vb;
  auto* v = app.add_subcommand("verify-bounds", "Deterministic inequality suites");
  v->add_option("--grid-size", vb.grid_size, "Grid points per F(p) suite");
  v->add_option("--samples", vb.samples, "Random samples per suite");
  v->add_option("--seed", seed, "Master seed");
  v->add_flag("--inject-fault", vb.inject_fault, "Negate every inequality (harness self-test)");
  add_workers(v);
  add_record(v);

  std::string manifest_path, replay_out;
  auto* rp = app.add_subcommand("replay", "Rerun a manifest and compare the outputs");
  rp->add_option("--manifest", manifest_path, "Manifest file")->required();
  rp->add_option("--out", replay_out, "Where to write the rerun outputs")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << tool_version() << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "moelab: " << e.what() << '\n';
    return kUsage;
  }

  if (const char* env = std::getenv("MOELAB_SEED"); allow_env && env && *env) {
    try {
      std::size_t used = 0;
      seed = std::stoull(env, &used);
      if (env[used] != '\0') throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      err << "moelab: MOELAB_SEED is not a valid unsigned integer\n";
      return kUsage;
    }
  }

  try {
    if (*g) {
      gen.seed = seed;
      return cmd_gen_channel(gen, out, err);
    }
    if (*me) {
      mee.record = record;
      return cmd_me_entropy(mee, out, err);
    }
    if (*mo) {
      moe.seed = seed;
      moe.moe.eigenvector_seeding = !no_seeding;
      moe.moe.workers = workers;
      moe.record = record;
      return cmd_moe(moe, out, err);
    }
    if (*gs) {
      gap.seed = seed;
      gap.workers = workers;
      gap.command_line = args;
      return cmd_gap_sweep(gap, out, err);
    }
    if (*m) {
      mc.sub = m->get_subcommands().front()->get_name();
      mc.cfg.master_seed = seed;
      mc.cfg.workers = workers;
      mc.record = record;
      return cmd_mc(mc, out, err);
    }
    if (*v) {
      vb.seed = seed;
      vb.workers = workers;
      vb.record = record;
      return cmd_verify_bounds(vb, out, err);
    }
    if (*rp) return cmd_replay(manifest_path, replay_out, out, err);
  } catch (const ValidationError& e) {
    err << "moelab: validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const PreconditionError& e) {
    err << "moelab: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "moelab: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace moelab::cli

#endif  // MOELAB_CLI_HPP
