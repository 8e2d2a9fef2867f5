#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rog/volumes/volume.hpp"

namespace rog::volumes {

struct ManifestCase {
  std::string id;
  std::vector<std::string> images;  // one path per channel (or one 4-D file)
  std::string label;
  std::string split;  // "train", "val", or empty before splitting
};

// Dataset manifest. Relative paths resolve against the manifest's directory.
struct Manifest {
  TaskSpec task;
  std::vector<ManifestCase> cases;
  std::filesystem::path base_dir;
};

nlohmann::json task_to_json(const TaskSpec& t);
TaskSpec task_from_json(const nlohmann::json& j);

Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& m);

// Loads every channel of a case and its mask.
Case load_case(const Manifest& m, const ManifestCase& c);

}  // namespace rog::volumes
