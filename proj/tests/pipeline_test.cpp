#include <catch2/catch_amalgamated.hpp>

#include <cstdint>

#include "mfrnet/filter.hpp"
#include "mfrnet/frame.hpp"
#include "mfrnet/rng.hpp"
#include "mfrnet/tiling.hpp"

using namespace mfrnet;

namespace {

Frame random_frame(int w, int h, int bit_depth, ChromaFormat chroma,
                   std::uint64_t seed) {
  Frame f = Frame::allocate(w, h, bit_depth, chroma);
  Rng rng(seed);
  for (auto& s : f.y) s = static_cast<std::uint16_t>(rng.uniform_int(f.max_sample() + 1));
  for (auto& s : f.cb) s = static_cast<std::uint16_t>(rng.uniform_int(f.max_sample() + 1));
  for (auto& s : f.cr) s = static_cast<std::uint16_t>(rng.uniform_int(f.max_sample() + 1));
  return f;
}

}  // namespace

TEST_CASE("select_model follows the QP breakpoints") {
  CHECK(select_model(22) == 1);
  CHECK(select_model(24.5) == 1);
  CHECK(select_model(24.5 + 1e-9) == 2);
  CHECK(select_model(27) == 2);
  CHECK(select_model(29.5) == 2);
  CHECK(select_model(29.5 + 1e-9) == 3);
  CHECK(select_model(32) == 3);
  CHECK(select_model(34.5) == 3);
  CHECK(select_model(34.5 + 1e-9) == 4);
  CHECK(select_model(37) == 4);
  CHECK(select_model(-10) == 1);
  CHECK(select_model(51) == 4);
}

TEST_CASE("select_model is a monotone step function") {
  int prev = 1;
  for (double qp = 0.0; qp <= 51.0; qp += 0.125) {
    const int id = select_model(qp);
    CHECK(id >= prev);
    prev = id;
  }
  CHECK(prev == 4);
}

TEST_CASE("chroma upsampling replicates each sample to its 2x2 sites") {
  Frame f = Frame::allocate(2, 2, 8, ChromaFormat::k420);
  f.cb[0] = 77;
  f.cr[0] = 123;
  Frame up = upsample_420_to_444(f);
  REQUIRE(up.chroma == ChromaFormat::k444);
  for (int i = 0; i < 4; ++i) {
    CHECK(up.cb[i] == 77);
    CHECK(up.cr[i] == 123);
  }
  REQUIRE_THROWS_AS(upsample_420_to_444(up), ShapeError);
}

TEST_CASE("odd-width chroma replication covers the clamped columns") {
  Frame f = Frame::allocate(3, 1, 8, ChromaFormat::k420);
  REQUIRE(f.chroma_width() == 2);
  f.cb[0] = 10;
  f.cb[1] = 20;
  Frame up = upsample_420_to_444(f);
  CHECK(up.cb[0] == 10);
  CHECK(up.cb[1] == 10);
  CHECK(up.cb[2] == 20);
}

TEST_CASE("chroma downsampling averages 2x2 neighbourhoods") {
  Frame f = Frame::allocate(2, 2, 8, ChromaFormat::k444);
  f.cb = {10, 10, 20, 20};
  f.cr = {100, 100, 100, 100};
  Frame down = downsample_444_to_420(f);
  CHECK(down.cb[0] == 15);
  CHECK(down.cr[0] == 100);
  REQUIRE_THROWS_AS(downsample_444_to_420(down), ShapeError);
}

TEST_CASE("chroma round trip is the identity on 2x2-constant frames") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Frame f = random_frame(10, 6, 10, ChromaFormat::k420, seed);
    Frame up = upsample_420_to_444(f);
    Frame down = downsample_444_to_420(up);
    CHECK(down == f);
  }
}

TEST_CASE("downsampled chroma stays within each neighbourhood's range") {
  Frame f = random_frame(9, 7, 8, ChromaFormat::k444, 99);
  Frame down = downsample_444_to_420(f);
  const int cw = down.chroma_width();
  for (int cy = 0; cy < down.chroma_height(); ++cy) {
    for (int cx = 0; cx < cw; ++cx) {
      int lo = 255, hi = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int x = 2 * cx + dx, y = 2 * cy + dy;
          if (x < f.width && y < f.height) {
            const int v = f.cb[static_cast<std::size_t>(y) * f.width + x];
            lo = std::min(lo, v);
            hi = std::max(hi, v);
          }
        }
      }
      const int got = down.cb[static_cast<std::size_t>(cy) * cw + cx];
      CHECK(got >= lo);
      CHECK(got <= hi);
    }
  }
}

TEST_CASE("normalize/denormalize round trip is exact at both depths") {
  for (int depth : {8, 10}) {
    const int peak = (1 << depth) - 1;
    for (int s = 0; s <= peak; ++s) {
      const float v = static_cast<float>(s) / static_cast<float>(peak);
      CHECK(denormalize_sample(v, depth) == s);
    }
  }
  CHECK(denormalize_sample(1.2f, 8) == 255);
  CHECK(denormalize_sample(-0.5f, 10) == 0);
  CHECK(denormalize_sample(1.0f, 10) == 1023);
}

TEST_CASE("tile plans cover the frame with clamped final anchors") {
  SECTION("a single exact block") {
    TilePlan p = plan_tiles(96, 96);
    CHECK(p.xs == std::vector<int>{0});
    CHECK(p.ys == std::vector<int>{0});
    CHECK(p.block_count() == 1);
  }
  SECTION("188 wide splits into two exact blocks") {
    TilePlan p = plan_tiles(188, 96);
    CHECK(p.xs == std::vector<int>{0, 92});
    CHECK(p.block_count() == 2);
  }
  SECTION("1080p plan") {
    TilePlan p = plan_tiles(1920, 1080);
    CHECK(p.block_count() == 252);
    CHECK(p.xs.size() == 21);
    CHECK(p.ys.size() == 12);
    CHECK(p.xs.back() == 1824);
    CHECK(p.ys.back() == 984);
    // anchors advance by the 92-pixel stride until the clamped last one
    for (std::size_t i = 0; i + 1 < p.xs.size(); ++i) {
      CHECK(p.xs[i] == std::min(92 * static_cast<int>(i), 1824));
    }
  }
  SECTION("frames smaller than a block are padded") {
    TilePlan p = plan_tiles(64, 64);
    CHECK(p.frame_width == 96);
    CHECK(p.out_width == 64);
    CHECK(p.block_count() == 1);
  }
}

TEST_CASE("tiling coverage counts are 1, 2 or 4") {
  TilePlan p = plan_tiles(280, 200);
  std::vector<int> cover(static_cast<std::size_t>(p.frame_width) *
                             p.frame_height,
                         0);
  for (int ay : p.ys) {
    for (int ax : p.xs) {
      for (int y = 0; y < 96; ++y) {
        for (int x = 0; x < 96; ++x) {
          cover[(static_cast<std::size_t>(ay) + y) * p.frame_width + ax + x]++;
        }
      }
    }
  }
  for (int c : cover) {
    CHECK(c >= 1);
    CHECK((c == 1 || c == 2 || c == 4));
  }
}

TEST_CASE("tile then aggregate reproduces the frame exactly") {
  for (auto [w, h] : {std::pair{188, 96}, std::pair{64, 64},
                      std::pair{200, 131}}) {
    Rng rng(w * 1000 + h);
    std::vector<float> planes(static_cast<std::size_t>(3) * w * h);
    for (auto& v : planes) v = static_cast<float>(rng.uniform());
    TilePlan plan = plan_tiles(w, h);
    auto blocks = extract_blocks(planes, plan);
    auto merged = aggregate_blocks(plan, blocks);
    REQUIRE(merged.size() == planes.size());
    for (std::size_t i = 0; i < planes.size(); ++i) {
      REQUIRE(merged[i] == planes[i]);
    }
  }
}

TEST_CASE("zero-weight model bank filters to a bit-exact identity") {
  ModelBank bank;
  for (auto& m : bank.models) m = make_model<float>(NetworkConfig::tiny());

  for (auto [w, h, depth, chroma] :
       {std::tuple{64, 64, 10, ChromaFormat::k420},
        std::tuple{128, 96, 8, ChromaFormat::k444},
        std::tuple{100, 68, 8, ChromaFormat::k420}}) {
    Frame f = random_frame(w, h, depth, chroma, w + h);
    Frame out = filter_frame(f, bank, 27.0);
    REQUIRE(out.width == f.width);
    REQUIRE(out.height == f.height);
    REQUIRE(out.bit_depth == f.bit_depth);
    REQUIRE(out.chroma == f.chroma);
    REQUIRE(out == f);
  }
}

TEST_CASE("filter_frame preserves format with trained-like weights") {
  ModelBank bank;
  for (int i = 0; i < 4; ++i) {
    bank.models[i] = init_weights<float>(NetworkConfig::tiny(), 100 + i);
  }
  Frame f = random_frame(70, 50, 10, ChromaFormat::k420, 5);
  Frame out = filter_frame(f, bank, 37.0);
  CHECK(out.width == 70);
  CHECK(out.height == 50);
  CHECK(out.bit_depth == 10);
  CHECK(out.chroma == ChromaFormat::k420);
  CHECK_FALSE(out == f);  // a random network is not the identity
}
