#ifndef MOELAB_CHANNEL_IO_HPP
#define MOELAB_CHANNEL_IO_HPP

// Channel file format (JSON):
//
//   {
//     "format": "moelab-channel",
//     "version": 1,
//     "seed": <uint64>, "stream_id": <uint64>,
//     "d": D, "n": N,
//     "generator_id": "philox4x32-10/box-muller-v1",
//     "orthogonal": bool, "uniform_p": bool,
//     "amplitudes": [l_1, ..., l_D],                     (optional)
//     "matrices": [[re, im, re, im, ...], ...]           (optional)
//   }
//
// Each entry of "matrices" is one U_i, row-major, as 2 N^2 numbers. When the
// matrices are absent the channel is regenerated from (seed, stream_id).
// The complementary channel uses row/column order (i, j) = (unitary index,
// unitary index), as in E^C(rho) = sum_ij (l_i l_j / L^2) Tr(U_i^dag rho U_j) |i><j|.

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "moelab/channel.hpp"

namespace moelab {

inline constexpr int kChannelFormatVersion = 1;

inline nlohmann::json channel_to_json(const ChannelSpec& ch, bool with_matrices = true) {
  nlohmann::json j;
  j["format"] = "moelab-channel";
  j["version"] = kChannelFormatVersion;
  const ChannelProvenance prov = ch.provenance().value_or(ChannelProvenance{});
  j["seed"] = prov.seed;
  j["stream_id"] = prov.stream_id;
  j["d"] = ch.d();
  j["n"] = ch.n();
  j["generator_id"] = std::string(kGeneratorId);
  j["orthogonal"] = prov.options.orthogonal;
  j["uniform_p"] = prov.options.uniform_p;
  if (with_matrices || !ch.provenance()) {
    j["amplitudes"] = std::vector<double>(ch.amplitudes().data(), ch.amplitudes().data() + ch.d());
    nlohmann::json mats = nlohmann::json::array();
    for (const auto& u : ch.unitaries()) {
      std::vector<double> flat;
      flat.reserve(static_cast<std::size_t>(2 * u.size()));
      for (Eigen::Index r = 0; r < u.rows(); ++r)
        for (Eigen::Index c = 0; c < u.cols(); ++c) {
          flat.push_back(u(r, c).real());
          flat.push_back(u(r, c).imag());
        }
      mats.push_back(std::move(flat));
    }
    j["matrices"] = std::move(mats);
  }
  return j;
}

inline ChannelSpec channel_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != "moelab-channel")
      throw ValidationError("channel file: missing or wrong \"format\" field");
    if (j.at("version").get<int>() != kChannelFormatVersion)
      throw ValidationError("channel file: unsupported version");
    const auto d = j.at("d").get<Eigen::Index>();
    const auto n = j.at("n").get<Eigen::Index>();
    if (d < 1 || n < 1) throw ValidationError("channel file: d and n must be >= 1");
    ChannelProvenance prov;
    prov.seed = j.at("seed").get<std::uint64_t>();
    prov.stream_id = j.value("stream_id", std::uint64_t{0});
    prov.options.orthogonal = j.value("orthogonal", false);
    prov.options.uniform_p = j.value("uniform_p", false);

    if (!j.contains("matrices")) {
      if (j.at("generator_id").get<std::string>() != kGeneratorId)
        throw ValidationError("channel file: generator \"" + j.at("generator_id").get<std::string>() +
                              "\" cannot be regenerated by this build");
      return make_channel(n, d, prov.seed, prov.stream_id, prov.options);
    }

    const auto& mats = j.at("matrices");
    if (!mats.is_array() || static_cast<Eigen::Index>(mats.size()) != d)
      throw ValidationError("channel file: expected " + std::to_string(d) + " matrices");
    const auto amps = j.at("amplitudes").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(amps.size()) != d)
      throw ValidationError("channel file: expected " + std::to_string(d) + " amplitudes");
    std::vector<CMatrix> us;
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto flat = mats[static_cast<std::size_t>(i)].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(flat.size()) != 2 * n * n)
        throw ValidationError("channel file: matrix block " + std::to_string(i) + " has wrong size");
      CMatrix u(n, n);
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c, k += 2) u(r, c) = cplx(flat[k], flat[k + 1]);
      const double res = unitarity_residual(u);
      if (!(res <= 1e-10))
        throw ValidationError("channel file: matrix block " + std::to_string(i) +
                              " is not unitary (residual " + std::to_string(res) + ")");
      if (prov.options.orthogonal && u.imag().cwiseAbs().maxCoeff() != 0.0)
        throw ValidationError("channel file: matrix block " + std::to_string(i) +
                              " has imaginary entries but the channel is marked orthogonal");
      us.push_back(std::move(u));
    }
    RVector l = Eigen::Map<const RVector>(amps.data(), d);
    return ChannelSpec(std::move(us), std::move(l), prov);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("channel file: ") + e.what());
  }
}

inline void save_channel(const ChannelSpec& ch, const std::string& path, bool with_matrices = true) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << channel_to_json(ch, with_matrices).dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

inline ChannelSpec load_channel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open channel file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("channel file " + path + " is not valid JSON: " + e.what());
  }
  return channel_from_json(j);
}

}  // namespace moelab

#endif  // MOELAB_CHANNEL_IO_HPP
