#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>

namespace mfrnet::detail {

// Copies src shifted by (dy, dx) into dst, zero-filling samples that fall
// outside the plane. dst[y*W+x] = src[(y+dy)*W + (x+dx)].
template <typename T>
inline void shifted_plane(T* dst, const T* src, int h, int w, int dy, int dx) {
  const int y0 = std::max(0, -dy);
  const int y1 = std::min(h, h - dy);
  const int x0 = std::max(0, -dx);
  const int x1 = std::min(w, w - dx);
  if (y0 > 0) std::fill(dst, dst + static_cast<std::int64_t>(y0) * w, T(0));
  for (int y = y0; y < y1; ++y) {
    T* row = dst + static_cast<std::int64_t>(y) * w;
    if (x0 > 0) std::fill(row, row + x0, T(0));
    if (x1 > x0) {
      std::memcpy(row + x0, src + static_cast<std::int64_t>(y + dy) * w + x0 + dx,
                  static_cast<std::size_t>(x1 - x0) * sizeof(T));
    }
    if (x1 < w) std::fill(row + x1, row + w, T(0));
  }
  if (y1 < h) {
    std::fill(dst + static_cast<std::int64_t>(std::max(y1, 0)) * w,
              dst + static_cast<std::int64_t>(h) * w, T(0));
  }
}

// Accumulates col back into the source plane: dplane[(y+dy)*W+(x+dx)] +=
// col[y*W+x] over the valid region. Inverse of shifted_plane.
template <typename T>
inline void scatter_shifted(T* dplane, const T* col, int h, int w, int dy,
                            int dx) {
  const int y0 = std::max(0, -dy);
  const int y1 = std::min(h, h - dy);
  const int x0 = std::max(0, -dx);
  const int x1 = std::min(w, w - dx);
  for (int y = y0; y < y1; ++y) {
    T* drow = dplane + static_cast<std::int64_t>(y + dy) * w + dx;
    const T* srow = col + static_cast<std::int64_t>(y) * w;
    for (int x = x0; x < x1; ++x) drow[x] += srow[x];
  }
}

// im2col for one image: fills a column-major (h*w x channels*k*k) buffer.
// plane(c) must return the pointer to channel c's contiguous h*w plane.
// Column c*k*k + (dy+pad)*k + (dx+pad) holds the plane shifted by (dy, dx).
template <typename T, typename PlaneFn>
inline void im2col_image(T* col, int h, int w, int k, int channels,
                         PlaneFn&& plane) {
  const std::int64_t plane_sz = static_cast<std::int64_t>(h) * w;
  const int pad = k / 2;
  std::int64_t column = 0;
  for (int c = 0; c < channels; ++c) {
    const T* src = plane(c);
    for (int dy = -pad; dy <= pad; ++dy) {
      for (int dx = -pad; dx <= pad; ++dx) {
        if (k == 1) {
          std::memcpy(col + column * plane_sz, src,
                      static_cast<std::size_t>(plane_sz) * sizeof(T));
        } else {
          shifted_plane(col + column * plane_sz, src, h, w, dy, dx);
        }
        ++column;
      }
    }
  }
}

// col2im for one image: scatters the (h*w x channels*k*k) gradient buffer
// back into per-channel gradient planes returned by dplane(c). Channels
// whose plane is null (no gradient requested) are skipped.
template <typename T, typename PlaneFn>
inline void col2im_image(const T* dcol, int h, int w, int k, int channels,
                         PlaneFn&& dplane) {
  const std::int64_t plane_sz = static_cast<std::int64_t>(h) * w;
  const int pad = k / 2;
  std::int64_t column = 0;
  for (int c = 0; c < channels; ++c) {
    T* dst = dplane(c);
    if (dst == nullptr) {
      column += static_cast<std::int64_t>(k) * k;
      continue;
    }
    for (int dy = -pad; dy <= pad; ++dy) {
      for (int dx = -pad; dx <= pad; ++dx) {
        if (k == 1) {
          const T* src = dcol + column * plane_sz;
          for (std::int64_t i = 0; i < plane_sz; ++i) dst[i] += src[i];
        } else {
          scatter_shifted(dst, dcol + column * plane_sz, h, w, dy, dx);
        }
        ++column;
      }
    }
  }
}

}  // namespace mfrnet::detail
