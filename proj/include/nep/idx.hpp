#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <zlib.h>

#include "nep/errors.hpp"

namespace nep {

struct IdxData {
  int count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<double>> images;  // flattened row-major, intensities in [0,1]
  std::vector<int> labels;
};

namespace detail {

inline std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError("cannot open " + path);
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
}

inline std::vector<unsigned char> gunzip(const std::vector<unsigned char>& in,
                                         const std::string& path) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw IdxError("zlib init failed for " + path);
  std::vector<unsigned char> out;
  std::vector<unsigned char> buf(1 << 16);
  zs.next_in = const_cast<unsigned char*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf.data();
    zs.avail_out = static_cast<uInt>(buf.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw IdxError("gzip decompression failed for " + path);
    }
    out.insert(out.end(), buf.data(), buf.data() + (buf.size() - zs.avail_out));
  }
  inflateEnd(&zs);
  return out;
}

inline std::vector<unsigned char> read_maybe_gz(const std::string& path) {
  std::vector<unsigned char> raw = read_bytes(path);
  if (raw.size() >= 2 && raw[0] == 0x1f && raw[1] == 0x8b) return gunzip(raw, path);
  return raw;
}

inline std::uint32_t read_be_u32(const std::vector<unsigned char>& b, std::size_t off,
                                 const std::string& path) {
  if (off + 4 > b.size()) throw IdxError("truncated header in " + path);
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

}  // namespace detail

// Standard IDX image/label pair (raw or gzip). Pixel bytes are scaled to
// [0,1]; label bytes must be 0-9.
inline IdxData load_idx(const std::string& images_path, const std::string& labels_path) {
  const std::vector<unsigned char> img = detail::read_maybe_gz(images_path);
  const std::vector<unsigned char> lab = detail::read_maybe_gz(labels_path);

  if (detail::read_be_u32(img, 0, images_path) != 0x00000803u)
    throw IdxError("bad magic number in image file " + images_path);
  if (detail::read_be_u32(lab, 0, labels_path) != 0x00000801u)
    throw IdxError("bad magic number in label file " + labels_path);

  IdxData d;
  d.count = static_cast<int>(detail::read_be_u32(img, 4, images_path));
  d.rows = static_cast<int>(detail::read_be_u32(img, 8, images_path));
  d.cols = static_cast<int>(detail::read_be_u32(img, 12, images_path));
  const int label_count = static_cast<int>(detail::read_be_u32(lab, 4, labels_path));
  if (label_count != d.count)
    throw IdxError("image/label count mismatch: " + std::to_string(d.count) + " images vs " +
                   std::to_string(label_count) + " labels");

  const std::size_t pixels = static_cast<std::size_t>(d.rows) * d.cols;
  if (img.size() < 16 + pixels * d.count)
    throw IdxError("truncated image data in " + images_path);
  if (lab.size() < 8 + static_cast<std::size_t>(d.count))
    throw IdxError("truncated label data in " + labels_path);

  d.images.resize(d.count);
  d.labels.resize(d.count);
  for (int i = 0; i < d.count; ++i) {
    d.images[i].resize(pixels);
    const std::size_t base = 16 + pixels * i;
    for (std::size_t p = 0; p < pixels; ++p)
      d.images[i][p] = static_cast<double>(img[base + p]) / 255.0;
    const int l = lab[8 + i];
    if (l > 9) throw IdxError("label out of range in " + labels_path);
    d.labels[i] = l;
  }
  return d;
}

}  // namespace nep
