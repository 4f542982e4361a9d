#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mfrnet/common.hpp"

namespace mfrnet {

// Synthetic codec-style degradation: per channel, per 8x8 tile, an
// orthonormal 2-D DCT-II, uniform quantization of each coefficient with the
// step scaled by a JPEG-style frequency ramp, inverse transform and a clamp
// back to [0, 1]. `strength` is the base quantization step on the 0..255
// coefficient scale, so e.g. 16 roughly matches a mid-quality encode.
struct DegradeSpec {
  double strength = 16.0;
  static constexpr int kDctBlock = 8;

  void validate() const {
    check(strength > 0.0, "degrade strength must be positive");
  }
};

namespace detail {

// Orthonormal DCT-II basis: dct8[u][x] = a(u) cos((2x+1) u pi / 16).
inline const std::array<std::array<double, 8>, 8>& dct8_basis() {
  static const auto basis = [] {
    std::array<std::array<double, 8>, 8> b{};
    const double pi = 3.14159265358979323846;
    for (int u = 0; u < 8; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int x = 0; x < 8; ++x) {
        b[u][x] = a * std::cos((2 * x + 1) * u * pi / 16.0);
      }
    }
    return b;
  }();
  return basis;
}

// The standard JPEG luminance quantization table, normalized by its DC
// entry, used as a relative step size per frequency.
inline const std::array<double, 64>& quant_ramp() {
  static const auto ramp = [] {
    constexpr int jpeg[64] = {
        16, 11, 10, 16, 24,  40,  51,  61,   //
        12, 12, 14, 19, 26,  58,  60,  55,   //
        14, 13, 16, 24, 40,  57,  69,  56,   //
        14, 17, 22, 29, 51,  87,  80,  62,   //
        18, 22, 37, 56, 68,  109, 103, 77,   //
        24, 35, 55, 64, 81,  104, 113, 92,   //
        49, 64, 78, 87, 103, 121, 120, 101,  //
        72, 92, 95, 98, 112, 100, 103, 99};
    std::array<double, 64> r{};
    for (int i = 0; i < 64; ++i) r[i] = jpeg[i] / 16.0;
    return r;
  }();
  return ramp;
}

inline void dct8x8(const double* in, double* out) {
  const auto& b = dct8_basis();
  double tmp[64];
  // rows
  for (int y = 0; y < 8; ++y) {
    for (int u = 0; u < 8; ++u) {
      double acc = 0.0;
      for (int x = 0; x < 8; ++x) acc += b[u][x] * in[y * 8 + x];
      tmp[y * 8 + u] = acc;
    }
  }
  // columns
  for (int u = 0; u < 8; ++u) {
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int y = 0; y < 8; ++y) acc += b[v][y] * tmp[y * 8 + u];
      out[v * 8 + u] = acc;
    }
  }
}

inline void idct8x8(const double* in, double* out) {
  const auto& b = dct8_basis();
  double tmp[64];
  for (int u = 0; u < 8; ++u) {
    for (int y = 0; y < 8; ++y) {
      double acc = 0.0;
      for (int v = 0; v < 8; ++v) acc += b[v][y] * in[v * 8 + u];
      tmp[y * 8 + u] = acc;
    }
  }
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int u = 0; u < 8; ++u) acc += b[u][x] * tmp[y * 8 + u];
      out[y * 8 + x] = acc;
    }
  }
}

}  // namespace detail

// Degrades a (3, H, W) float stack in [0, 1]. Sizes that are not multiples
// of 8 are edge-replicated to the next multiple and cropped back.
inline std::vector<float> degrade_block(const std::vector<float>& planes,
                                        int h, int w,
                                        const DegradeSpec& spec) {
  spec.validate();
  check(planes.size() == static_cast<std::size_t>(3) * h * w,
        "degrade_block plane size mismatch");
  constexpr int kB = DegradeSpec::kDctBlock;
  const int ph = (h + kB - 1) / kB * kB;
  const int pw = (w + kB - 1) / kB * kB;
  const auto& ramp = detail::quant_ramp();

  std::vector<float> out(planes.size());
  std::vector<double> padded(static_cast<std::size_t>(ph) * pw);
  for (int c = 0; c < 3; ++c) {
    const float* src = planes.data() + static_cast<std::size_t>(c) * h * w;
    for (int y = 0; y < ph; ++y) {
      const int sy = std::min(y, h - 1);
      for (int x = 0; x < pw; ++x) {
        const int sx = std::min(x, w - 1);
        // 0..255 coefficient scale
        padded[static_cast<std::size_t>(y) * pw + x] =
            255.0 * src[static_cast<std::size_t>(sy) * w + sx];
      }
    }
    for (int by = 0; by < ph; by += kB) {
      for (int bx = 0; bx < pw; bx += kB) {
        double tile[64], coef[64];
        for (int y = 0; y < kB; ++y) {
          for (int x = 0; x < kB; ++x) {
            tile[y * kB + x] =
                padded[(static_cast<std::size_t>(by) + y) * pw + bx + x];
          }
        }
        detail::dct8x8(tile, coef);
        for (int i = 0; i < 64; ++i) {
          const double q = spec.strength * ramp[i];
          coef[i] = std::round(coef[i] / q) * q;
        }
        detail::idct8x8(coef, tile);
        for (int y = 0; y < kB; ++y) {
          for (int x = 0; x < kB; ++x) {
            padded[(static_cast<std::size_t>(by) + y) * pw + bx + x] =
                tile[y * kB + x];
          }
        }
      }
    }
    float* dst = out.data() + static_cast<std::size_t>(c) * h * w;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double v = padded[static_cast<std::size_t>(y) * pw + x] / 255.0;
        if (v < 0.0) v = 0.0;
        if (v > 1.0) v = 1.0;
        dst[static_cast<std::size_t>(y) * w + x] = static_cast<float>(v);
      }
    }
  }
  return out;
}

}  // namespace mfrnet
