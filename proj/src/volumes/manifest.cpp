#include "rog/volumes/manifest.hpp"

#include <fstream>

#include "rog/core/error.hpp"
#include "rog/volumes/io.hpp"

namespace rog::volumes {

namespace fs = std::filesystem;
using nlohmann::json;

json task_to_json(const TaskSpec& t) {
  json j;
  j["name"] = t.name;
  j["modality"] = to_string(t.modality);
  std::vector<std::string> roles;
  for (auto r : t.class_roles) roles.emplace_back(to_string(r));
  j["class_roles"] = roles;
  j["clean_mean_dice"] = t.clean_mean_dice ? json(*t.clean_mean_dice) : json(nullptr);
  j["avg_object_voxels"] = t.avg_object_voxels;
  return j;
}

TaskSpec task_from_json(const json& j) {
  TaskSpec t;
  t.name = j.value("name", "task");
  t.modality = modality_from_string(j.value("modality", "CT"));
  for (const auto& r : j.at("class_roles")) t.class_roles.push_back(role_from_string(r.get<std::string>()));
  if (j.contains("clean_mean_dice") && !j["clean_mean_dice"].is_null())
    t.clean_mean_dice = j["clean_mean_dice"].get<double>();
  if (j.contains("avg_object_voxels")) t.avg_object_voxels = j["avg_object_voxels"].get<std::vector<double>>();
  t.validate();
  return t;
}

Manifest load_manifest(const fs::path& path) {
  std::ifstream f(path);
  require(static_cast<bool>(f), ErrorKind::kNotFound, "cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, "malformed manifest " + path.string() + ": " + e.what());
  }
  Manifest m;
  m.base_dir = path.parent_path();
  m.task = task_from_json(j.at("task"));
  for (const auto& c : j.at("cases")) {
    ManifestCase mc;
    mc.id = c.at("id").get<std::string>();
    mc.images = c.at("images").get<std::vector<std::string>>();
    mc.label = c.value("label", "");
    mc.split = c.value("split", "");
    require(!mc.images.empty(), ErrorKind::kInvalidConfig, "case " + mc.id + " lists no images");
    m.cases.push_back(std::move(mc));
  }
  return m;
}

void save_manifest(const fs::path& path, const Manifest& m) {
  json j;
  j["task"] = task_to_json(m.task);
  j["cases"] = json::array();
  for (const auto& c : m.cases)
    j["cases"].push_back({{"id", c.id}, {"images", c.images}, {"label", c.label}, {"split", c.split}});
  std::ofstream f(path);
  require(static_cast<bool>(f), ErrorKind::kIo, "cannot write manifest " + path.string());
  f << j.dump(2) << '\n';
}

Case load_case(const Manifest& m, const ManifestCase& c) {
  auto resolve = [&](const std::string& p) {
    const fs::path fp(p);
    return fp.is_absolute() ? fp : m.base_dir / fp;
  };
  std::vector<Volume> parts;
  for (const auto& img : c.images) parts.push_back(load_volume(resolve(img)));
  Volume image = parts.front();
  if (parts.size() > 1) {
    int channels = 0;
    for (const auto& p : parts) {
      require(p.shape() == parts.front().shape(), ErrorKind::kInvalidArgument, "channel shape mismatch in " + c.id);
      channels += p.channels();
    }
    Tensor t(channels, parts.front().shape());
    std::size_t off = 0;
    for (const auto& p : parts) {
      std::copy(p.data.data(), p.data.data() + p.data.size(), t.data() + off);
      off += p.data.size();
    }
    image.data = std::move(t);
  }
  LabelMask mask;
  if (!c.label.empty()) {
    mask = load_mask(resolve(c.label), m.task.num_classes());
    require(mask.shape == image.shape(), ErrorKind::kInvalidArgument, "mask/image shape mismatch in " + c.id);
  }
  return Case{c.id, std::move(image), std::move(mask)};
}

}  // namespace rog::volumes
