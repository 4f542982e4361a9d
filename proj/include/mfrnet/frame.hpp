#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mfrnet/common.hpp"

namespace mfrnet {

enum class ChromaFormat { k420, k444 };

inline std::string to_string(ChromaFormat f) {
  return f == ChromaFormat::k420 ? "4:2:0" : "4:4:4";
}

// Planar YCbCr image. Samples are unsigned integers valid for the declared
// bit depth; 10-bit content uses the low 10 bits of each entry.
struct Frame {
  int width = 0;   // luma geometry
  int height = 0;
  int bit_depth = 8;  // 8 or 10
  ChromaFormat chroma = ChromaFormat::k420;
  std::vector<std::uint16_t> y, cb, cr;

  int chroma_width() const {
    return chroma == ChromaFormat::k420 ? (width + 1) / 2 : width;
  }
  int chroma_height() const {
    return chroma == ChromaFormat::k420 ? (height + 1) / 2 : height;
  }
  int max_sample() const { return (1 << bit_depth) - 1; }

  static Frame allocate(int width, int height, int bit_depth,
                        ChromaFormat chroma) {
    Frame f;
    f.width = width;
    f.height = height;
    f.bit_depth = bit_depth;
    f.chroma = chroma;
    f.y.assign(static_cast<std::size_t>(width) * height, 0);
    f.cb.assign(static_cast<std::size_t>(f.chroma_width()) * f.chroma_height(),
                0);
    f.cr = f.cb;
    return f;
  }

  void validate() const {
    check(width > 0 && height > 0, "frame has empty geometry");
    check(bit_depth == 8 || bit_depth == 10,
          "bit depth must be 8 or 10, got " + std::to_string(bit_depth));
    check(y.size() == static_cast<std::size_t>(width) * height,
          "luma plane size mismatch");
    const std::size_t c_size =
        static_cast<std::size_t>(chroma_width()) * chroma_height();
    check(cb.size() == c_size && cr.size() == c_size,
          "chroma plane size mismatch");
  }

  bool operator==(const Frame&) const = default;
};

// Nearest-neighbour chroma upsampling: each chroma sample is replicated to
// its 2x2 luma-aligned sites. Luma is untouched.
inline Frame upsample_420_to_444(const Frame& in) {
  check(in.chroma == ChromaFormat::k420,
        "upsample_420_to_444 requires 4:2:0 input");
  Frame out = in;
  out.chroma = ChromaFormat::k444;
  out.cb.assign(static_cast<std::size_t>(in.width) * in.height, 0);
  out.cr = out.cb;
  const int cw = in.chroma_width();
  for (int y = 0; y < in.height; ++y) {
    const std::uint16_t* cb_row = in.cb.data() +
                                  static_cast<std::size_t>(y / 2) * cw;
    const std::uint16_t* cr_row = in.cr.data() +
                                  static_cast<std::size_t>(y / 2) * cw;
    std::uint16_t* ob = out.cb.data() + static_cast<std::size_t>(y) * in.width;
    std::uint16_t* orr = out.cr.data() + static_cast<std::size_t>(y) * in.width;
    for (int x = 0; x < in.width; ++x) {
      ob[x] = cb_row[x / 2];
      orr[x] = cr_row[x / 2];
    }
  }
  return out;
}

// 2x2 mean chroma downsampling with round-half-away-from-zero; edge blocks
// of odd-sized frames average the available samples.
inline Frame downsample_444_to_420(const Frame& in) {
  check(in.chroma == ChromaFormat::k444,
        "downsample_444_to_420 requires 4:4:4 input");
  Frame out = in;
  out.chroma = ChromaFormat::k420;
  const int cw = (in.width + 1) / 2;
  const int ch = (in.height + 1) / 2;
  out.cb.assign(static_cast<std::size_t>(cw) * ch, 0);
  out.cr = out.cb;
  auto down_plane = [&](const std::vector<std::uint16_t>& src,
                        std::vector<std::uint16_t>& dst) {
    for (int cy = 0; cy < ch; ++cy) {
      for (int cx = 0; cx < cw; ++cx) {
        unsigned sum = 0;
        unsigned count = 0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int x = 2 * cx + dx;
            const int y = 2 * cy + dy;
            if (x < in.width && y < in.height) {
              sum += src[static_cast<std::size_t>(y) * in.width + x];
              ++count;
            }
          }
        }
        dst[static_cast<std::size_t>(cy) * cw + cx] =
            static_cast<std::uint16_t>((2 * sum + count) / (2 * count));
      }
    }
  };
  down_plane(in.cb, out.cb);
  down_plane(in.cr, out.cr);
  return out;
}

// Scales a 4:4:4 frame into a 3-plane float stack (Y, Cb, Cr) in [0, 1].
inline std::vector<float> normalize_frame(const Frame& in) {
  check(in.chroma == ChromaFormat::k444, "normalize expects a 4:4:4 frame");
  const float scale = 1.0f / static_cast<float>(in.max_sample());
  const std::size_t plane = static_cast<std::size_t>(in.width) * in.height;
  std::vector<float> out(3 * plane);
  for (std::size_t i = 0; i < plane; ++i) out[i] = in.y[i] * scale;
  for (std::size_t i = 0; i < plane; ++i) out[plane + i] = in.cb[i] * scale;
  for (std::size_t i = 0; i < plane; ++i) out[2 * plane + i] = in.cr[i] * scale;
  return out;
}

// Inverse of normalize_frame: scales back to integer samples with
// round-half-away-from-zero and clamps to the valid range.
inline std::uint16_t denormalize_sample(float v, int bit_depth) {
  const int peak = (1 << bit_depth) - 1;
  const float scaled = v * static_cast<float>(peak);
  long r = std::lround(scaled);  // rounds halfway cases away from zero
  if (r < 0) r = 0;
  if (r > peak) r = peak;
  return static_cast<std::uint16_t>(r);
}

inline Frame denormalize_frame(const std::vector<float>& planes, int width,
                               int height, int bit_depth) {
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  check(planes.size() == 3 * plane, "denormalize plane size mismatch");
  Frame out = Frame::allocate(width, height, bit_depth, ChromaFormat::k444);
  for (std::size_t i = 0; i < plane; ++i) {
    out.y[i] = denormalize_sample(planes[i], bit_depth);
    out.cb[i] = denormalize_sample(planes[plane + i], bit_depth);
    out.cr[i] = denormalize_sample(planes[2 * plane + i], bit_depth);
  }
  return out;
}

}  // namespace mfrnet
