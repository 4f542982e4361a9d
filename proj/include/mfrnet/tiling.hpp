#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <vector>

#include "mfrnet/common.hpp"

namespace mfrnet {

// Overlapped 96x96 tiling. Anchors advance by 92 (block minus the 4-pixel
// overlap); the final anchor in each dimension is clamped so the last block
// ends exactly at the frame edge. Frames smaller than a block are
// edge-replicated up to 96 and cropped again after aggregation.
struct TilePlan {
  static constexpr int kBlock = 96;
  static constexpr int kOverlap = 4;
  static constexpr int kStride = kBlock - kOverlap;

  int frame_width = 0;   // geometry the anchors refer to (after padding)
  int frame_height = 0;
  int out_width = 0;     // original geometry, crop target
  int out_height = 0;
  std::vector<int> xs, ys;

  int block_count() const {
    return static_cast<int>(xs.size() * ys.size());
  }
  bool padded() const {
    return frame_width != out_width || frame_height != out_height;
  }
};

namespace detail {

inline std::vector<int> tile_anchors(int dim) {
  std::vector<int> anchors;
  const int last = dim - TilePlan::kBlock;
  int a = 0;
  while (a < last) {
    anchors.push_back(a);
    a += TilePlan::kStride;
  }
  anchors.push_back(last);
  return anchors;
}

}  // namespace detail

inline TilePlan plan_tiles(int width, int height) {
  check(width >= 16 && height >= 16,
        "frames must be at least 16x16, got " + std::to_string(width) + "x" +
            std::to_string(height));
  TilePlan plan;
  plan.out_width = width;
  plan.out_height = height;
  plan.frame_width = std::max(width, TilePlan::kBlock);
  plan.frame_height = std::max(height, TilePlan::kBlock);
  plan.xs = detail::tile_anchors(plan.frame_width);
  plan.ys = detail::tile_anchors(plan.frame_height);
  return plan;
}

// Pads a 3-plane stack to the plan's padded geometry by edge replication.
// Returns the input unchanged when no padding is needed.
inline std::vector<float> pad_planes(const std::vector<float>& planes,
                                     const TilePlan& plan) {
  if (!plan.padded()) return planes;
  const int sw = plan.out_width, sh = plan.out_height;
  const int dw = plan.frame_width, dh = plan.frame_height;
  std::vector<float> out(static_cast<std::size_t>(3) * dw * dh);
  for (int c = 0; c < 3; ++c) {
    const float* src = planes.data() + static_cast<std::size_t>(c) * sw * sh;
    float* dst = out.data() + static_cast<std::size_t>(c) * dw * dh;
    for (int y = 0; y < dh; ++y) {
      const int sy = std::min(y, sh - 1);
      float* row = dst + static_cast<std::size_t>(y) * dw;
      std::memcpy(row, src + static_cast<std::size_t>(sy) * sw,
                  static_cast<std::size_t>(sw) * sizeof(float));
      for (int x = sw; x < dw; ++x) row[x] = row[sw - 1];
    }
  }
  return out;
}

// Cuts the planned blocks out of a (3, H, W) stack. Blocks are returned as
// one contiguous (count, 3, 96, 96) buffer in anchor order (row-major over
// the anchor grid).
inline std::vector<float> extract_blocks(const std::vector<float>& planes,
                                         const TilePlan& plan) {
  const std::vector<float>& padded = plan.padded() ? pad_planes(planes, plan)
                                                   : planes;
  const int w = plan.frame_width, h = plan.frame_height;
  check(padded.size() == static_cast<std::size_t>(3) * w * h,
        "extract_blocks: plane stack does not match plan geometry");
  constexpr int kB = TilePlan::kBlock;
  std::vector<float> blocks(static_cast<std::size_t>(plan.block_count()) * 3 *
                            kB * kB);
  std::size_t offset = 0;
  for (int ay : plan.ys) {
    for (int ax : plan.xs) {
      for (int c = 0; c < 3; ++c) {
        const float* src = padded.data() + (static_cast<std::size_t>(c) * h +
                                            ay) * w + ax;
        for (int y = 0; y < kB; ++y) {
          std::memcpy(blocks.data() + offset,
                      src + static_cast<std::size_t>(y) * w,
                      kB * sizeof(float));
          offset += kB;
        }
      }
    }
  }
  return blocks;
}

// Reassembles a frame from (possibly filtered) blocks: every pixel becomes
// the mean of all block values covering it. Accumulation runs in anchor
// order with double precision sums, so a pixel covered by identical values
// reproduces them exactly for any coverage count.
inline std::vector<float> aggregate_blocks(const TilePlan& plan,
                                           const std::vector<float>& blocks) {
  constexpr int kB = TilePlan::kBlock;
  check(blocks.size() == static_cast<std::size_t>(plan.block_count()) * 3 *
                             kB * kB,
        "aggregate_blocks: block buffer does not match plan");
  const int w = plan.frame_width, h = plan.frame_height;
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  std::vector<double> sum(3 * plane, 0.0);
  std::vector<std::uint16_t> cover(plane, 0);

  std::size_t offset = 0;
  for (int ay : plan.ys) {
    for (int ax : plan.xs) {
      for (int c = 0; c < 3; ++c) {
        double* dst = sum.data() + static_cast<std::size_t>(c) * plane;
        for (int y = 0; y < kB; ++y) {
          const std::size_t row = (static_cast<std::size_t>(ay) + y) * w + ax;
          for (int x = 0; x < kB; ++x) {
            dst[row + x] += blocks[offset + static_cast<std::size_t>(y) * kB +
                                   x];
          }
        }
        offset += static_cast<std::size_t>(kB) * kB;
      }
      for (int y = 0; y < kB; ++y) {
        const std::size_t row = (static_cast<std::size_t>(ay) + y) * w + ax;
        for (int x = 0; x < kB; ++x) cover[row + x] += 1;
      }
    }
  }

  for (std::size_t i = 0; i < plane; ++i) {
    check(cover[i] > 0, "aggregate_blocks: uncovered pixel");
  }
  std::vector<float> out(static_cast<std::size_t>(3) * plan.out_width *
                         plan.out_height);
  for (int c = 0; c < 3; ++c) {
    const double* src = sum.data() + static_cast<std::size_t>(c) * plane;
    float* dst = out.data() +
                 static_cast<std::size_t>(c) * plan.out_width * plan.out_height;
    for (int y = 0; y < plan.out_height; ++y) {
      for (int x = 0; x < plan.out_width; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        dst[static_cast<std::size_t>(y) * plan.out_width + x] =
            static_cast<float>(src[i] / cover[i]);
      }
    }
  }
  return out;
}

}  // namespace mfrnet
