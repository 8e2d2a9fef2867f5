#include "rog/volumes/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "rog/core/error.hpp"

namespace rog::volumes {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "raw container I/O assumes a little-endian host");

std::pair<fs::path, fs::path> raw_pair(const fs::path& p) {
  fs::path stem = p;
  if (p.extension() == ".raw" || p.extension() == ".json") stem.replace_extension();
  fs::path raw = stem, hdr = stem;
  raw += ".raw";
  hdr += ".json";
  return {raw, hdr};
}

void write_bytes(const fs::path& p, const void* data, std::size_t n) {
  std::ofstream f(p, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::kIo, "cannot open " + p.string() + " for writing");
  f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  require(static_cast<bool>(f), ErrorKind::kIo, "short write to " + p.string());
}

std::vector<char> read_bytes(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::kNotFound, "cannot open " + p.string());
  return std::vector<char>(std::istreambuf_iterator<char>(f), {});
}

json read_json(const fs::path& p) {
  std::ifstream f(p);
  require(static_cast<bool>(f), ErrorKind::kNotFound, "cannot open " + p.string());
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kIo, "malformed header " + p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream f(p);
  require(static_cast<bool>(f), ErrorKind::kIo, "cannot open " + p.string() + " for writing");
  f << j.dump(2) << '\n';
}

}  // namespace

void save_raw(const fs::path& path, const Volume& v) {
  v.validate();
  const auto [raw, hdr] = raw_pair(path);
  json h;
  h["shape"] = v.data.shape();
  h["spacing"] = v.spacing;
  h["dtype"] = "float32";
  if (v.origin) h["origin"] = *v.origin;
  write_json(hdr, h);
  write_bytes(raw, v.data.data(), v.data.size() * sizeof(float));
}

void save_raw(const fs::path& path, const LabelMask& m) {
  const auto [raw, hdr] = raw_pair(path);
  json h;
  h["shape"] = std::vector<int>{1, m.shape[0], m.shape[1], m.shape[2]};
  h["spacing"] = Vec3{1.0, 1.0, 1.0};
  h["dtype"] = "uint8";
  h["num_classes"] = m.num_classes;
  write_json(hdr, h);
  write_bytes(raw, m.labels.data(), m.labels.size());
}

Volume load_raw_volume(const fs::path& path) {
  const auto [raw, hdr] = raw_pair(path);
  const json h = read_json(hdr);
  const auto shape = h.at("shape").get<std::vector<int>>();
  require(shape.size() == 4, ErrorKind::kIo, "raw header shape must have 4 entries");
  Tensor t(shape);
  const auto bytes = read_bytes(raw);
  const std::string dtype = h.value("dtype", "float32");
  if (dtype == "float32") {
    require(bytes.size() == t.size() * sizeof(float), ErrorKind::kIo, "raw payload size mismatch for " + raw.string());
    std::memcpy(t.data(), bytes.data(), bytes.size());
  } else if (dtype == "uint8") {
    require(bytes.size() == t.size(), ErrorKind::kIo, "raw payload size mismatch for " + raw.string());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<unsigned char>(bytes[i]);
  } else {
    throw Error(ErrorKind::kIo, "unsupported raw dtype " + dtype);
  }
  Volume v(std::move(t), h.at("spacing").get<Vec3>());
  if (h.contains("origin")) v.origin = h["origin"].get<Vec3>();
  v.validate();
  return v;
}

LabelMask load_raw_mask(const fs::path& path, int num_classes) {
  const auto [raw, hdr] = raw_pair(path);
  const json h = read_json(hdr);
  const auto shape = h.at("shape").get<std::vector<int>>();
  require(shape.size() == 4 && shape[0] == 1, ErrorKind::kIo, "label container must have one channel");
  require(h.value("dtype", "uint8") == "uint8", ErrorKind::kIo, "label container must be uint8");
  const auto bytes = read_bytes(raw);
  LabelMask m({shape[1], shape[2], shape[3]}, 2);
  require(bytes.size() == m.size(), ErrorKind::kIo, "raw payload size mismatch for " + raw.string());
  std::memcpy(m.labels.data(), bytes.data(), bytes.size());
  const int max_label = m.labels.empty() ? 0 : *std::max_element(m.labels.begin(), m.labels.end());
  m.num_classes = num_classes > 0 ? num_classes : h.value("num_classes", std::max(2, max_label + 1));
  m.validate();
  return m;
}

// --- NIfTI-1 ---------------------------------------------------------------

namespace {

constexpr int kHeaderSize = 348;

template <typename T>
T get(const unsigned char* h, int off, bool swap) {
  T v;
  std::memcpy(&v, h + off, sizeof(T));
  if (swap) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    std::reverse(b, b + sizeof(T));
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <typename T>
void put(unsigned char* h, int off, T v) {
  std::memcpy(h + off, &v, sizeof(T));
}

struct NiftiImage {
  std::vector<int> dims;  // x, y, z, t
  Vec3 pixdim{1, 1, 1};   // x, y, z
  Vec3 offset{0, 0, 0};   // x, y, z
  std::vector<double> values;
};

std::vector<unsigned char> gz_read_all(const fs::path& path) {
  gzFile f = gzopen(path.string().c_str(), "rb");
  require(f != nullptr, ErrorKind::kNotFound, "cannot open " + path.string());
  std::vector<unsigned char> out;
  unsigned char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) out.insert(out.end(), buf, buf + n);
  const bool failed = n < 0;
  gzclose(f);
  require(!failed, ErrorKind::kIo, "decompression failed for " + path.string());
  return out;
}

NiftiImage parse_nifti(const fs::path& path) {
  const auto bytes = gz_read_all(path);
  require(bytes.size() >= kHeaderSize, ErrorKind::kIo, "truncated NIfTI header in " + path.string());
  const unsigned char* h = bytes.data();
  bool swap = false;
  if (get<std::int32_t>(h, 0, false) != kHeaderSize) {
    swap = true;
    require(get<std::int32_t>(h, 0, true) == kHeaderSize, ErrorKind::kIo, "not a NIfTI-1 file: " + path.string());
  }
  NiftiImage img;
  const int ndim = get<std::int16_t>(h, 40, swap);
  require(ndim >= 1 && ndim <= 4, ErrorKind::kIo, "only 1-4 dimensional NIfTI images are supported");
  for (int i = 0; i < 4; ++i) img.dims.push_back(i < ndim ? std::max<int>(1, get<std::int16_t>(h, 42 + 2 * i, swap)) : 1);
  for (int i = 0; i < 3; ++i) {
    const float p = std::abs(get<float>(h, 80 + 4 * i, swap));
    img.pixdim[static_cast<std::size_t>(i)] = p > 0.0f ? p : 1.0;
  }
  img.offset = {get<float>(h, 268, swap), get<float>(h, 272, swap), get<float>(h, 276, swap)};
  const int datatype = get<std::int16_t>(h, 70, swap);
  const auto vox_offset = static_cast<std::size_t>(get<float>(h, 108, swap));
  float slope = get<float>(h, 112, swap);
  const float inter = get<float>(h, 116, swap);
  if (slope == 0.0f || !std::isfinite(slope)) slope = 1.0f;

  std::size_t n = 1;
  for (int d : img.dims) n *= static_cast<std::size_t>(d);
  img.values.resize(n);

  auto decode = [&](auto tag) {
    using T = decltype(tag);
    require(bytes.size() >= vox_offset + n * sizeof(T), ErrorKind::kIo, "truncated NIfTI payload in " + path.string());
    for (std::size_t i = 0; i < n; ++i)
      img.values[i] = static_cast<double>(get<T>(bytes.data(), static_cast<int>(vox_offset + i * sizeof(T)), swap)) * slope + inter;
  };
  switch (datatype) {
    case 2: decode(std::uint8_t{}); break;
    case 4: decode(std::int16_t{}); break;
    case 8: decode(std::int32_t{}); break;
    case 16: decode(float{}); break;
    case 64: decode(double{}); break;
    case 256: decode(std::int8_t{}); break;
    case 512: decode(std::uint16_t{}); break;
    case 768: decode(std::uint32_t{}); break;
    default: throw Error(ErrorKind::kIo, "unsupported NIfTI datatype " + std::to_string(datatype));
  }
  return img;
}

void emit_nifti(const fs::path& path, const std::vector<int>& dims_xyzt, const Vec3& pixdim_xyz,
                const Vec3& offset_xyz, std::int16_t datatype, std::int16_t bitpix, const void* payload,
                std::size_t payload_bytes) {
  std::vector<unsigned char> buf(kHeaderSize + 4, 0);
  unsigned char* h = buf.data();
  put<std::int32_t>(h, 0, kHeaderSize);
  const bool four_d = dims_xyzt[3] > 1;
  put<std::int16_t>(h, 40, four_d ? 4 : 3);
  for (int i = 0; i < 4; ++i) put<std::int16_t>(h, 42 + 2 * i, static_cast<std::int16_t>(dims_xyzt[static_cast<std::size_t>(i)]));
  for (int i = 4; i < 7; ++i) put<std::int16_t>(h, 42 + 2 * i, 1);
  put<std::int16_t>(h, 70, datatype);
  put<std::int16_t>(h, 72, bitpix);
  put<float>(h, 76, 1.0f);
  for (int i = 0; i < 3; ++i) put<float>(h, 80 + 4 * i, static_cast<float>(pixdim_xyz[static_cast<std::size_t>(i)]));
  put<float>(h, 92, 1.0f);
  put<float>(h, 108, 352.0f);
  put<float>(h, 112, 1.0f);
  h[123] = 2;  // mm
  put<std::int16_t>(h, 252, 1);
  for (int i = 0; i < 3; ++i) put<float>(h, 268 + 4 * i, static_cast<float>(offset_xyz[static_cast<std::size_t>(i)]));
  std::memcpy(h + 344, "n+1\0", 4);

  const bool gz = path.extension() == ".gz";
  if (gz) {
    gzFile f = gzopen(path.string().c_str(), "wb");
    require(f != nullptr, ErrorKind::kIo, "cannot open " + path.string() + " for writing");
    bool ok = gzwrite(f, buf.data(), static_cast<unsigned>(buf.size())) == static_cast<int>(buf.size());
    ok = ok && gzwrite(f, payload, static_cast<unsigned>(payload_bytes)) == static_cast<int>(payload_bytes);
    gzclose(f);
    require(ok, ErrorKind::kIo, "short write to " + path.string());
  } else {
    std::ofstream f(path, std::ios::binary);
    require(static_cast<bool>(f), ErrorKind::kIo, "cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    f.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_bytes));
    require(static_cast<bool>(f), ErrorKind::kIo, "short write to " + path.string());
  }
}

}  // namespace

bool is_nifti(const fs::path& path) {
  const std::string s = path.string();
  auto ends = [&](const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
  };
  return ends(".nii") || ends(".nii.gz");
}

Volume read_nifti(const fs::path& path) {
  const NiftiImage img = parse_nifti(path);
  Tensor t(std::vector<int>{img.dims[3], img.dims[2], img.dims[1], img.dims[0]});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(img.values[i]);
  Volume v(std::move(t), {img.pixdim[2], img.pixdim[1], img.pixdim[0]},
           Vec3{img.offset[2], img.offset[1], img.offset[0]});
  v.validate();
  return v;
}

LabelMask read_nifti_mask(const fs::path& path, int num_classes) {
  const NiftiImage img = parse_nifti(path);
  require(img.dims[3] == 1, ErrorKind::kIo, "label images must be 3-D");
  LabelMask m({img.dims[2], img.dims[1], img.dims[0]}, 2);
  int max_label = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const long l = std::lround(img.values[i]);
    require(l >= 0 && l < 256, ErrorKind::kIo, "label value out of range in " + path.string());
    m.labels[i] = static_cast<std::uint8_t>(l);
    max_label = std::max<int>(max_label, static_cast<int>(l));
  }
  m.num_classes = num_classes > 0 ? num_classes : std::max(2, max_label + 1);
  m.validate();
  return m;
}

void write_nifti(const fs::path& path, const Volume& v) {
  v.validate();
  const Index3 s = v.shape();
  const Vec3 o = v.origin.value_or(Vec3{0, 0, 0});
  emit_nifti(path, {s[2], s[1], s[0], v.channels()}, {v.spacing[2], v.spacing[1], v.spacing[0]}, {o[2], o[1], o[0]},
             16, 32, v.data.data(), v.data.size() * sizeof(float));
}

void write_nifti(const fs::path& path, const LabelMask& m, const Vec3& spacing) {
  emit_nifti(path, {m.shape[2], m.shape[1], m.shape[0], 1}, {spacing[2], spacing[1], spacing[0]}, {0, 0, 0}, 2, 8,
             m.labels.data(), m.labels.size());
}

Volume load_volume(const fs::path& path) {
  return is_nifti(path) ? read_nifti(path) : load_raw_volume(path);
}

LabelMask load_mask(const fs::path& path, int num_classes) {
  return is_nifti(path) ? read_nifti_mask(path, num_classes) : load_raw_mask(path, num_classes);
}

}  // namespace rog::volumes
