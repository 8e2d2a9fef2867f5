#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rog/volumes/manifest.hpp"

namespace rog::bench {

struct Split {
  std::vector<std::string> train;
  std::vector<std::string> val;
};

// Seeded shuffle; val gets n - floor(fraction * n) cases, at least one.
Split split_dataset(const std::vector<std::string>& case_ids, double fraction = 0.8, std::uint64_t seed = 0);

// Same on a manifest; also records the partition in each case's split field.
Split split_dataset(volumes::Manifest& manifest, double fraction = 0.8, std::uint64_t seed = 0);

}  // namespace rog::bench
