#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "sgswarm/numcore/mlp.hpp"

namespace sgswarm::num {

inline constexpr int kNetFormatVersion = 1;

struct StoredNet {
  NetSpec spec;
  NetWeights weights;
  std::uint64_t seed = 0;
};

/// Writes `<stem>.netjson` (spec, shapes, seed, format version) and
/// `<stem>.netbin` (flat little-endian float64 parameters).
void save_net(const std::filesystem::path& stem, const NetSpec& spec, const NetWeights& weights,
              std::uint64_t seed = 0);

/// Throws IntegrityError on an unknown version, shape/size mismatch, or
/// missing file.
StoredNet load_net(const std::filesystem::path& stem);

/// Little-endian float64 array helpers shared by other binary formats.
void write_f64_le(std::ostream& out, std::span<const double> values);
void read_f64_le(std::istream& in, std::span<double> values);

std::string to_string(OutputActivation act);
OutputActivation output_activation_from_string(const std::string& name);

}  // namespace sgswarm::num
