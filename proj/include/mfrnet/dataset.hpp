#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfrnet/common.hpp"
#include "mfrnet/degrade.hpp"
#include "mfrnet/frame.hpp"
#include "mfrnet/rng.hpp"

namespace mfrnet {

constexpr int kTrainBlock = 96;

struct PairProvenance {
  int frame_index = 0;
  int x = 0;
  int y = 0;
  int rotation = 0;  // quarter turns, 0..3
};

struct BlockPair {
  std::vector<float> degraded;  // 3 x 96 x 96, normalized
  std::vector<float> pristine;
};

struct PairSet {
  std::vector<BlockPair> pairs;
  std::vector<PairProvenance> provenance;

  int size() const { return static_cast<int>(pairs.size()); }
};

// Rotates a (3, n, n) square stack by `quarter_turns` 90-degree clockwise
// steps.
inline std::vector<float> rotate_block(const std::vector<float>& block, int n,
                                       int quarter_turns) {
  check(block.size() == static_cast<std::size_t>(3) * n * n,
        "rotate_block size mismatch");
  quarter_turns = ((quarter_turns % 4) + 4) % 4;
  if (quarter_turns == 0) return block;
  std::vector<float> out(block.size());
  const std::size_t plane = static_cast<std::size_t>(n) * n;
  for (int c = 0; c < 3; ++c) {
    const float* src = block.data() + c * plane;
    float* dst = out.data() + c * plane;
    for (int y = 0; y < n; ++y) {
      for (int x = 0; x < n; ++x) {
        int sx = x, sy = y;
        switch (quarter_turns) {
          case 1: sx = y; sy = n - 1 - x; break;
          case 2: sx = n - 1 - x; sy = n - 1 - y; break;
          case 3: sx = n - 1 - y; sy = x; break;
        }
        dst[static_cast<std::size_t>(y) * n + x] =
            src[static_cast<std::size_t>(sy) * n + sx];
      }
    }
  }
  return out;
}

// Samples `count` degraded/pristine block pairs from the given frames:
// seeded random frame/anchor selection, the DCT degradation oracle on the
// crop, and a random quarter-turn rotation applied identically to both
// members. Each pair derives its own RNG stream from (seed, index), so sets
// are reproducible and order-independent.
inline PairSet extract_pairs(const std::vector<Frame>& frames,
                             const DegradeSpec& spec, int count,
                             std::uint64_t seed) {
  check(!frames.empty(), "extract_pairs requires at least one source frame");
  spec.validate();

  struct Source {
    std::vector<float> planes;
    int width = 0, height = 0;
  };
  std::vector<Source> sources;
  sources.reserve(frames.size());
  for (const Frame& f : frames) {
    f.validate();
    const Frame f444 =
        f.chroma == ChromaFormat::k420 ? upsample_420_to_444(f) : f;
    check(f444.width >= kTrainBlock && f444.height >= kTrainBlock,
          "source frames must be at least 96x96");
    sources.push_back({normalize_frame(f444), f444.width, f444.height});
  }

  PairSet set;
  set.pairs.reserve(count);
  set.provenance.reserve(count);
  const std::size_t plane = static_cast<std::size_t>(kTrainBlock) * kTrainBlock;
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, /*stream=*/2, static_cast<std::uint64_t>(i)));
    const int fi = static_cast<int>(rng.uniform_int(sources.size()));
    const Source& src = sources[fi];
    const int x =
        static_cast<int>(rng.uniform_int(src.width - kTrainBlock + 1));
    const int y =
        static_cast<int>(rng.uniform_int(src.height - kTrainBlock + 1));
    const int rot = static_cast<int>(rng.uniform_int(4));

    std::vector<float> crop(3 * plane);
    const std::size_t src_plane =
        static_cast<std::size_t>(src.width) * src.height;
    for (int c = 0; c < 3; ++c) {
      for (int by = 0; by < kTrainBlock; ++by) {
        const float* row = src.planes.data() + c * src_plane +
                           (static_cast<std::size_t>(y) + by) * src.width + x;
        std::copy_n(row, kTrainBlock,
                    crop.data() + c * plane +
                        static_cast<std::size_t>(by) * kTrainBlock);
      }
    }
    std::vector<float> degraded =
        degrade_block(crop, kTrainBlock, kTrainBlock, spec);
    set.pairs.push_back({rotate_block(degraded, kTrainBlock, rot),
                         rotate_block(crop, kTrainBlock, rot)});
    set.provenance.push_back({fi, x, y, rot});
  }
  return set;
}

}  // namespace mfrnet
