#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "mfrnet/weights_io.hpp"

using namespace mfrnet;

namespace {

std::filesystem::path temp_file(const char* name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove(p);
  return p;
}

}  // namespace

TEST_CASE("weight save/load round trip is bit-exact") {
  auto model = init_weights<float>(NetworkConfig::tiny(), 31337);
  const auto path = temp_file("mfrnet_roundtrip.bin");
  save_weights(model, path.string());
  auto loaded = load_weights(path.string());

  REQUIRE(loaded.config == model.config);
  auto pa = named_parameters(model);
  auto pb = named_parameters(loaded);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    REQUIRE(pa[i].name == pb[i].name);
    const auto va = pa[i].tensor->values();
    const auto vb = pb[i].tensor->values();
    REQUIRE(va.size() == vb.size());
    for (std::size_t j = 0; j < va.size(); ++j) REQUIRE(va[j] == vb[j]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("corrupting any single region is detected") {
  auto model = init_weights<float>(NetworkConfig::tiny(), 99);
  std::vector<char> buf = serialize_weights(model);

  SECTION("flip a byte in the manifest") {
    buf[20] = static_cast<char>(buf[20] ^ 0x01);
    REQUIRE_THROWS_AS(deserialize_weights(buf), IoError);
  }
  SECTION("flip a byte in the parameter data") {
    buf[buf.size() / 2] = static_cast<char>(buf[buf.size() / 2] ^ 0x40);
    REQUIRE_THROWS_WITH(deserialize_weights(buf),
                        Catch::Matchers::ContainsSubstring("checksum"));
  }
  SECTION("bad magic") {
    buf[0] = 'X';
    REQUIRE_THROWS_WITH(deserialize_weights(buf),
                        Catch::Matchers::ContainsSubstring("magic"));
  }
  SECTION("truncation") {
    buf.resize(buf.size() - 9);
    REQUIRE_THROWS_AS(deserialize_weights(buf), IoError);
  }
  SECTION("unsupported version") {
    buf[8] = 2;
    // refresh the checksum so the version check itself is what fires
    const std::uint32_t crc = detail::crc32(buf.data(), buf.size() - 4);
    buf[buf.size() - 4] = static_cast<char>(crc & 0xFF);
    buf[buf.size() - 3] = static_cast<char>((crc >> 8) & 0xFF);
    buf[buf.size() - 2] = static_cast<char>((crc >> 16) & 0xFF);
    buf[buf.size() - 1] = static_cast<char>((crc >> 24) & 0xFF);
    REQUIRE_THROWS_WITH(deserialize_weights(buf),
                        Catch::Matchers::ContainsSubstring("version"));
  }
}

TEST_CASE("file size decomposes into header, manifest, payload and crc") {
  for (auto cfg : {NetworkConfig::tiny(), NetworkConfig{6, 2, 4, 0.2f}}) {
    auto model = init_weights<float>(cfg, 17);
    std::vector<char> buf = serialize_weights(model);
    const std::uint32_t json_len = detail::read_u32(buf.data() + 12);
    const std::int64_t expected = 8 + 4 + 4 + json_len +
                                  parameter_count(cfg) * 4 + 4;
    CHECK(static_cast<std::int64_t>(buf.size()) == expected);
    CHECK(weight_payload_bytes(cfg) == parameter_count(cfg) * 4);
  }
}

TEST_CASE("manifest mismatch against the declared config is rejected") {
  auto model = init_weights<float>(NetworkConfig::tiny(), 7);
  std::vector<char> buf = serialize_weights(model);
  // Patch the JSON text: growth 4 -> 2 changes every dense shape.
  const std::uint32_t json_len = detail::read_u32(buf.data() + 12);
  std::string json(buf.begin() + 16, buf.begin() + 16 + json_len);
  const auto pos = json.find("\"growth\":4");
  REQUIRE(pos != std::string::npos);
  json.replace(pos, 10, "\"growth\":2");
  std::copy(json.begin(), json.end(), buf.begin() + 16);
  const std::uint32_t crc = detail::crc32(buf.data(), buf.size() - 4);
  for (int i = 0; i < 4; ++i) {
    buf[buf.size() - 4 + i] = static_cast<char>((crc >> (8 * i)) & 0xFF);
  }
  REQUIRE_THROWS_AS(deserialize_weights(buf), IoError);
}
