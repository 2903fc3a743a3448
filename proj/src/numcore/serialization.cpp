#include "sgswarm/numcore/serialization.hpp"

#include <array>
#include <bit>
#include <fstream>

#include <json.hpp>

#include "sgswarm/error.hpp"

namespace sgswarm::num {

using nlohmann::json;

std::string to_string(OutputActivation act) {
  return act == OutputActivation::kTanh ? "tanh" : "none";
}

OutputActivation output_activation_from_string(const std::string& name) {
  if (name == "tanh") return OutputActivation::kTanh;
  if (name == "none") return OutputActivation::kNone;
  throw InvalidInput("unknown output activation '" + name + "'");
}

void write_f64_le(std::ostream& out, std::span<const double> values) {
  std::array<char, 8> buf{};
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
    out.write(buf.data(), buf.size());
  }
}

void read_f64_le(std::istream& in, std::span<double> values) {
  std::array<unsigned char, 8> buf{};
  for (double& v : values) {
    in.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (!in) throw IntegrityError("binary parameter file is truncated");
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[b]) << (8 * b);
    v = std::bit_cast<double>(bits);
  }
}

namespace {

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  return std::filesystem::path(stem.string() + suffix);
}

}  // namespace

void save_net(const std::filesystem::path& stem, const NetSpec& spec, const NetWeights& weights,
              std::uint64_t seed) {
  weights.check_shapes(spec);
  json shapes = json::array();
  for (const auto& l : weights.layers) {
    shapes.push_back({{"weight", {l.weight.rows(), l.weight.cols()}}, {"bias", l.bias.size()}});
  }
  json manifest = {
      {"format_version", kNetFormatVersion},
      {"spec",
       {{"input_dim", spec.input_dim},
        {"hidden_size", spec.hidden_size},
        {"hidden_layers", spec.hidden_layers},
        {"output_dim", spec.output_dim},
        {"hidden_activation", "leaky-relu"},
        {"output_activation", to_string(spec.output_activation)}}},
      {"shapes", shapes},
      {"parameter_count", weights.parameter_count()},
      {"seed", seed},
  };
  {
    std::ofstream out(with_suffix(stem, ".netjson"));
    if (!out) throw std::runtime_error("cannot write " + with_suffix(stem, ".netjson").string());
    out << manifest.dump(2) << '\n';
  }
  std::ofstream bin(with_suffix(stem, ".netbin"), std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + with_suffix(stem, ".netbin").string());
  const auto flat = weights.flatten();
  write_f64_le(bin, flat);
}

StoredNet load_net(const std::filesystem::path& stem) {
  const auto manifest_path = with_suffix(stem, ".netjson");
  std::ifstream in(manifest_path);
  if (!in) throw IntegrityError("missing network manifest " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(in);
  } catch (const json::exception& e) {
    throw IntegrityError(manifest_path.string() + ": " + e.what());
  }
  const int version = manifest.value("format_version", -1);
  if (version != kNetFormatVersion) {
    throw IntegrityError(manifest_path.string() + ": unsupported format version " +
                         std::to_string(version));
  }
  StoredNet stored;
  try {
    const auto& s = manifest.at("spec");
    stored.spec.input_dim = s.at("input_dim").get<int>();
    stored.spec.hidden_size = s.at("hidden_size").get<int>();
    stored.spec.hidden_layers = s.at("hidden_layers").get<int>();
    stored.spec.output_dim = s.at("output_dim").get<int>();
    stored.spec.output_activation =
        output_activation_from_string(s.at("output_activation").get<std::string>());
    stored.seed = manifest.value("seed", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw IntegrityError(manifest_path.string() + ": " + e.what());
  }
  stored.weights = NetWeights::zeros(stored.spec);
  const auto count = stored.weights.parameter_count();
  if (manifest.value("parameter_count", std::size_t{0}) != count) {
    throw IntegrityError(manifest_path.string() + ": parameter count does not match spec");
  }
  const auto bin_path = with_suffix(stem, ".netbin");
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw IntegrityError("missing parameter file " + bin_path.string());
  std::vector<double> flat(count);
  read_f64_le(bin, flat);
  if (bin.peek() != std::char_traits<char>::eof()) {
    throw IntegrityError(bin_path.string() + ": trailing bytes after parameters");
  }
  stored.weights.assign_flat(flat);
  return stored;
}

}  // namespace sgswarm::num
