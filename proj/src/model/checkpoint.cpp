#include <cstring>
#include <fstream>

#include "rog/core/error.hpp"
#include "rog/model/network.hpp"

namespace rog::model {

namespace {
constexpr char kMagic[8] = {'R', 'O', 'G', 'C', 'K', 'P', 'T', '1'};
}

void save_checkpoint(const std::filesystem::path& path, const RogNet& net) {
  nlohmann::json header;
  header["config"] = to_json(net.config());
  const ParamSet& ps = net.params();
  for (int i = 0; i < ps.size(); ++i) header["params"].push_back({{"name", ps.name(i)}, {"shape", ps.value(i).shape()}});
  const std::string text = header.dump();

  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::kIo, "cannot write checkpoint " + path.string());
  f.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = text.size();
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (int i = 0; i < ps.size(); ++i)
    f.write(reinterpret_cast<const char*>(ps.value(i).data()),
            static_cast<std::streamsize>(ps.value(i).size() * sizeof(float)));
  require(static_cast<bool>(f), ErrorKind::kIo, "short write to checkpoint " + path.string());
}

RogNet load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::kNotFound, "checkpoint not found: " + path.string());
  char magic[8];
  f.read(magic, sizeof(magic));
  require(f && std::memcmp(magic, kMagic, sizeof(kMagic)) == 0, ErrorKind::kIo, "not a checkpoint: " + path.string());
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  f.read(text.data(), static_cast<std::streamsize>(len));
  require(static_cast<bool>(f), ErrorKind::kIo, "truncated checkpoint header");
  const auto header = nlohmann::json::parse(text);

  RogNet net(config_from_json(header.at("config")));
  ParamSet& ps = net.params();
  const auto& listed = header.at("params");
  require(static_cast<int>(listed.size()) == ps.size(), ErrorKind::kIo, "checkpoint parameter list mismatch");
  for (int i = 0; i < ps.size(); ++i) {
    require(listed[static_cast<std::size_t>(i)].at("shape").get<std::vector<int>>() == ps.value(i).shape(),
            ErrorKind::kIo, "checkpoint shape mismatch for " + ps.name(i));
    f.read(reinterpret_cast<char*>(ps.value(i).data()), static_cast<std::streamsize>(ps.value(i).size() * sizeof(float)));
  }
  require(static_cast<bool>(f), ErrorKind::kIo, "truncated checkpoint payload");
  return net;
}

}  // namespace rog::model
