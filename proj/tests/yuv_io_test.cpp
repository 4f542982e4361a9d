#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "mfrnet/rng.hpp"
#include "mfrnet/yuv_io.hpp"

using namespace mfrnet;

namespace {

Frame random_frame(int w, int h, int depth, ChromaFormat chroma,
                   std::uint64_t seed) {
  Frame f = Frame::allocate(w, h, depth, chroma);
  Rng rng(seed);
  for (auto& s : f.y) s = static_cast<std::uint16_t>(rng.uniform_int(f.max_sample() + 1));
  for (auto& s : f.cb) s = static_cast<std::uint16_t>(rng.uniform_int(f.max_sample() + 1));
  for (auto& s : f.cr) s = static_cast<std::uint16_t>(rng.uniform_int(f.max_sample() + 1));
  return f;
}

std::filesystem::path temp_file(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("raw yuv write/read round trip at both depths and formats") {
  for (auto [depth, chroma] : {std::pair{8, ChromaFormat::k420},
                               std::pair{10, ChromaFormat::k420},
                               std::pair{8, ChromaFormat::k444},
                               std::pair{10, ChromaFormat::k444}}) {
    const auto path = temp_file("roundtrip.yuv");
    Frame a = random_frame(33, 17, depth, chroma, depth * 100);
    Frame b = random_frame(33, 17, depth, chroma, depth * 100 + 1);
    {
      YuvWriter w(path.string());
      w.write(a);
      w.write(b);
    }
    CHECK(std::filesystem::file_size(path) ==
          2 * frame_bytes(33, 17, depth, chroma));
    YuvReader r(path.string(), 33, 17, depth, chroma);
    REQUIRE(r.frame_count() == 2);
    CHECK(*r.next() == a);
    CHECK(*r.next() == b);
    CHECK_FALSE(r.next().has_value());
    std::filesystem::remove(path);
  }
}

TEST_CASE("frame byte geometry matches the 4:2:0 layout") {
  CHECK(frame_bytes(64, 64, 10, ChromaFormat::k420) ==
        2 * (64 * 64 + 2 * 32 * 32));
  CHECK(frame_bytes(64, 64, 8, ChromaFormat::k444) == 3 * 64 * 64);
  CHECK(frame_bytes(33, 17, 8, ChromaFormat::k420) ==
        33 * 17 + 2 * 17 * 9);
}

TEST_CASE("truncated raw input is rejected") {
  const auto path = temp_file("truncated.yuv");
  {
    YuvWriter w(path.string());
    w.write(random_frame(16, 16, 8, ChromaFormat::k420, 1));
  }
  std::filesystem::resize_file(path, frame_bytes(16, 16, 8,
                                                 ChromaFormat::k420) - 5);
  REQUIRE_THROWS_AS(YuvReader(path.string(), 16, 16, 8, ChromaFormat::k420),
                    IoError);
  std::filesystem::remove(path);
}

TEST_CASE("y4m write/read round trip preserves header and frames") {
  for (auto chroma : {ChromaFormat::k420, ChromaFormat::k444}) {
    const auto path = temp_file("roundtrip.y4m");
    Frame a = random_frame(24, 18, 8, chroma, 7);
    {
      Y4mWriter w(path.string(), Y4mHeader{24, 18, 30, 1, chroma});
      w.write(a);
      w.write(a);
    }
    Y4mReader r(path.string());
    CHECK(r.header().width == 24);
    CHECK(r.header().height == 18);
    CHECK(r.header().fps_num == 30);
    CHECK(r.header().chroma == chroma);
    CHECK(*r.next() == a);
    CHECK(*r.next() == a);
    CHECK_FALSE(r.next().has_value());
    std::filesystem::remove(path);
  }
}

TEST_CASE("y4m rejects bad signatures and 10-bit output") {
  const auto path = temp_file("bad.y4m");
  {
    std::ofstream out(path);
    out << "NOTY4M W8 H8\nFRAME\n";
  }
  REQUIRE_THROWS_AS(Y4mReader(path.string()), IoError);
  std::filesystem::remove(path);

  Y4mWriter w(temp_file("out.y4m").string(), Y4mHeader{8, 8, 25, 1,
                                                       ChromaFormat::k420});
  REQUIRE_THROWS_AS(w.write(random_frame(8, 8, 10, ChromaFormat::k420, 3)),
                    ShapeError);
}
