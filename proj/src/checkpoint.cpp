#include "swinoir/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace swinoir {

namespace {

constexpr char kMagic[8] = {'S', 'O', 'I', 'R', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"blocks", c.blocks},
          {"stls_per_block", c.stls_per_block},
          {"channels", c.channels},
          {"window", c.window},
          {"heads", c.heads},
          {"upscale", c.upscale},
          {"input_channels", c.input_channels},
          {"mlp_ratio", c.mlp_ratio},
          {"connection", to_string(c.connection)}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.blocks = j.at("blocks").get<int>();
  c.stls_per_block = j.at("stls_per_block").get<int>();
  c.channels = j.at("channels").get<int>();
  c.window = j.at("window").get<int>();
  c.heads = j.at("heads").get<int>();
  c.upscale = j.at("upscale").get<int>();
  c.input_channels = j.at("input_channels").get<int>();
  c.mlp_ratio = j.at("mlp_ratio").get<double>();
  c.connection = connection_kind_from_string(j.at("connection").get<std::string>());
  return c;
}

}  // namespace

void save_checkpoint(const SwinOirModel& model, const std::string& path) {
  const NamedTensors params = model.parameters();
  nlohmann::json header;
  header["config"] = config_to_json(model.config());
  nlohmann::json dir = nlohmann::json::array();
  for (const auto& [name, tensor] : params) {
    dir.push_back({{"name", name}, {"shape", tensor.shape()}});
  }
  header["tensors"] = std::move(dir);
  const std::string header_str = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(kMagic, sizeof(kMagic));
  const uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  const uint64_t header_len = header_str.size();
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const auto& [name, tensor] : params) {
    const auto data = tensor.data();
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

SwinOirModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error(path + " is not a swinoir checkpoint");
  }
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || version != kVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version " +
                             std::to_string(version));
  }
  uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in || header_len > (1u << 26)) {
    throw std::runtime_error(path + ": corrupt checkpoint header");
  }
  std::string header_str(static_cast<size_t>(header_len), '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error(path + ": truncated checkpoint header");

  nlohmann::json header = nlohmann::json::parse(header_str);
  SwinOirModel model(config_from_json(header.at("config")), /*seed=*/0);
  NamedTensors params = model.parameters();
  const auto& dir = header.at("tensors");
  if (dir.size() != params.size()) {
    throw std::runtime_error(path + ": checkpoint holds " + std::to_string(dir.size()) +
                             " tensors, model expects " + std::to_string(params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& entry = dir[i];
    auto& [name, tensor] = params[i];
    if (entry.at("name").get<std::string>() != name ||
        entry.at("shape").get<std::vector<int>>() != tensor.shape()) {
      throw std::runtime_error(path + ": tensor " + std::to_string(i) +
                               " does not match parameter '" + name + "'");
    }
    Tensor t = tensor;
    in.read(reinterpret_cast<char*>(t.mutable_data()),
            static_cast<std::streamsize>(t.numel() * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated tensor data for '" + name + "'");
  }
  return model;
}

std::string checkpoint_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(hash));
  return std::string(out);
}

}  // namespace swinoir
