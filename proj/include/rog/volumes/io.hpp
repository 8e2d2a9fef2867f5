#pragma once

#include <filesystem>

#include "rog/volumes/volume.hpp"

namespace rog::volumes {

// Raw container: <stem>.raw holds little-endian values in C order
// (channel-major), <stem>.json holds {shape, spacing, dtype[, origin, num_classes]}.
// Either file of the pair may be passed as path.
void save_raw(const std::filesystem::path& path, const Volume& v);
void save_raw(const std::filesystem::path& path, const LabelMask& m);
Volume load_raw_volume(const std::filesystem::path& path);
LabelMask load_raw_mask(const std::filesystem::path& path, int num_classes = 0);

// NIfTI-1 (.nii or .nii.gz). A 4-D image is read as channels along t.
Volume read_nifti(const std::filesystem::path& path);
LabelMask read_nifti_mask(const std::filesystem::path& path, int num_classes = 0);
void write_nifti(const std::filesystem::path& path, const Volume& v);
void write_nifti(const std::filesystem::path& path, const LabelMask& m, const Vec3& spacing);

bool is_nifti(const std::filesystem::path& path);

// Dispatch on extension.
Volume load_volume(const std::filesystem::path& path);
LabelMask load_mask(const std::filesystem::path& path, int num_classes = 0);

}  // namespace rog::volumes
