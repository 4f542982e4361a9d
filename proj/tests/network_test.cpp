#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <span>

#include "mfrnet/inference.hpp"
#include "mfrnet/network.hpp"
#include "mfrnet/rng.hpp"
#include "straightline_oracle.hpp"

using namespace mfrnet;

namespace {

template <typename T>
TensorPtr<T> random_input(Shape shape, std::uint64_t seed) {
  Rng rng(seed);
  auto t = Tensor<T>::zeros(shape);
  for (auto& v : t->values()) v = static_cast<T>(rng.uniform());
  return t;
}

template <typename T>
void randomize_model(MfrnetModel<T>& model, std::uint64_t seed, T scale) {
  Rng rng(seed);
  for (auto& np : named_parameters(model)) {
    for (auto& v : np.tensor->values()) {
      v = static_cast<T>(rng.normal()) * scale;
    }
  }
}

template <typename T>
straightline::Map to_map(const Tensor<T>& t) {
  straightline::Map m(t.shape().c, t.shape().h, t.shape().w);
  for (std::size_t i = 0; i < m.v.size(); ++i) {
    m.v[i] = static_cast<double>(t.values()[i]);
  }
  return m;
}


// Max deviation normalized by the oracle's scale; the per-element relative
// error is not meaningful where cancellation drives outputs toward zero.
template <typename Span>
void require_close(Span actual, const std::vector<double>& expect,
                   double rel) {
  REQUIRE(actual.size() == expect.size());
  double scale = 1.0;
  for (double e : expect) scale = std::max(scale, std::abs(e));
  double worst = 0.0;
  for (std::size_t i = 0; i < expect.size(); ++i) {
    worst = std::max(worst,
                     std::abs(static_cast<double>(actual[i]) - expect[i]));
  }
  REQUIRE(worst <= rel * scale);
}

}  // namespace

TEST_CASE("frb with zero weights collapses to its skip connection") {
  auto model = make_model<float>(NetworkConfig::tiny());
  auto main_in = random_input<float>(Shape{1, 8, 8, 8}, 7);
  auto out = frb_forward<float>(main_in, nullptr, model.frbs[0], 0.2f);
  REQUIRE(out.side != nullptr);
  for (std::int64_t i = 0; i < main_in->numel(); ++i) {
    REQUIRE(out.main->values()[i] == main_in->values()[i]);
  }
  for (auto v : out.side->values()) REQUIRE(v == 0.0f);
}

TEST_CASE("hdf width follows the config arithmetic") {
  const NetworkConfig cfg = NetworkConfig::tiny();  // F=8, g=4, D=8
  CHECK(cfg.hdf_channels(false) == 16);
  CHECK(cfg.hdf_channels(true) == 16 + 8);

  auto model = make_model<float>(cfg);
  CHECK(model.frbs[0].fusion.in_channels() == 16);
  CHECK(model.frbs[1].fusion.in_channels() == 24);
  CHECK(model.frbs[11].fusion.in_channels() == 24);
}

TEST_CASE("frb matches the straight-line oracle on random weights") {
  const NetworkConfig cfg = NetworkConfig::tiny();
  auto model = init_weights<float>(cfg, 99);
  auto main_in = random_input<float>(Shape{1, 8, 8, 8}, 17);
  auto side_in = random_input<float>(Shape{1, 8, 8, 8}, 18);

  auto out = frb_forward<float>(main_in, side_in, model.frbs[4], 0.2f);
  straightline::Map m, s;
  straightline::Map main_map = to_map(*main_in);
  straightline::Map side_map = to_map(*side_in);
  straightline::frb(main_map, &side_map, model.frbs[4], 0.2, &m, &s);

  require_close(out.main->values(), m.v, 1e-5);
  require_close(out.side->values(), s.v, 1e-5);
}

TEST_CASE("mfrb with zero weights accumulates the multi-level skip") {
  auto model = make_model<float>(NetworkConfig::tiny());
  auto main_in = random_input<float>(Shape{1, 8, 8, 8}, 27);
  auto side_in = random_input<float>(Shape{1, 8, 8, 8}, 28);
  // Second MFRB: side input present, side output present.
  auto out = mfrb_forward<float>(main_in, side_in, &model.frbs[3], 0.2f);
  for (std::int64_t i = 0; i < main_in->numel(); ++i) {
    REQUIRE(out.main->values()[i] == 4.0f * main_in->values()[i]);
  }
  REQUIRE(out.side != nullptr);
  REQUIRE(out.side->shape() == side_in->shape());
}

TEST_CASE("mfrb matches the straight-line oracle") {
  const NetworkConfig cfg = NetworkConfig::tiny();
  auto model = init_weights<float>(cfg, 123);
  auto main_in = random_input<float>(Shape{1, 8, 8, 8}, 37);
  auto side_in = random_input<float>(Shape{1, 8, 8, 8}, 38);

  auto out = mfrb_forward<float>(main_in, side_in, &model.frbs[3], 0.2f);
  straightline::Map g, f;
  straightline::Map main_map = to_map(*main_in);
  straightline::Map side_map = to_map(*side_in);
  straightline::mfrb(main_map, &side_map, &model.frbs[3], 0.2, &g, &f);
  require_close(out.main->values(), g.v, 1e-5);
  require_close(out.side->values(), f.v, 1e-5);
}

TEST_CASE("cascade_fuse identity-selecting 1x1 kernel reduces to LReLU") {
  const int f = 4;
  auto primary = random_input<float>(Shape{1, f, 6, 6}, 47);
  auto source = random_input<float>(Shape{1, f, 6, 6}, 48);
  ConvParams<float> fuser;
  fuser.weight = Tensor<float>::zeros(Shape{f, 2 * f, 1, 1});
  fuser.bias = Tensor<float>::zeros(Shape{f, 1, 1, 1});
  for (int o = 0; o < f; ++o) {
    // select the primary channels, ignore the source
    fuser.weight->values()[o * 2 * f + o] = 1.0f;
  }
  auto out = cascade_fuse<float>(primary, {source}, fuser, 0.2f);
  for (std::int64_t i = 0; i < primary->numel(); ++i) {
    const float x = primary->values()[i];
    REQUIRE(out->values()[i] == (x >= 0 ? x : 0.2f * x));
  }
}

TEST_CASE("cascade_fuse rejects a wrong source count") {
  const NetworkConfig cfg = NetworkConfig::tiny();
  auto model = make_model<float>(cfg);
  auto x = random_input<float>(Shape{1, 8, 6, 6}, 57);
  // model.cascade[3] expects primary + 4 sources
  REQUIRE_THROWS_AS(cascade_fuse<float>(x, {x, x}, model.cascade[3], 0.2f),
                    ShapeError);
  CHECK(model.cascade[3].in_channels() == 5 * 8);
}

TEST_CASE("mfrnet_forward with zero weights is the identity") {
  auto model = make_model<float>(NetworkConfig::tiny());
  for (auto shape : {Shape{1, 3, 96, 96}, Shape{2, 3, 48, 80},
                     Shape{1, 3, 16, 16}}) {
    auto block = random_input<float>(shape, 67);
    auto out = mfrnet_forward(block, model);
    REQUIRE(out->shape() == shape);
    for (std::int64_t i = 0; i < block->numel(); ++i) {
      REQUIRE(out->values()[i] == block->values()[i]);
    }
  }
}

TEST_CASE("mfrnet_forward rejects wrong channel counts and small inputs") {
  auto model = make_model<float>(NetworkConfig::tiny());
  REQUIRE_THROWS_AS(mfrnet_forward(random_input<float>(Shape{1, 4, 32, 32}, 1),
                                   model),
                    ShapeError);
  REQUIRE_THROWS_AS(mfrnet_forward(random_input<float>(Shape{1, 3, 8, 32}, 1),
                                   model),
                    ShapeError);
}

TEST_CASE("mfrnet_forward matches the straight-line oracle") {
  const NetworkConfig cfg = NetworkConfig::tiny();
  auto model = init_weights<float>(cfg, 7);
  auto block = random_input<float>(Shape{1, 3, 16, 16}, 77);
  auto out = mfrnet_forward(block, model);
  straightline::Map in_map = to_map(*block);
  straightline::Map expect = straightline::forward(model, in_map);
  require_close(out->values(), expect.v, 1e-5);
}

TEST_CASE("inference engine agrees with the recorded-graph forward") {
  const NetworkConfig cfg = NetworkConfig::tiny();
  auto model = init_weights<float>(cfg, 1234);
  InferenceEngine<float> engine(model);

  const Shape shape{3, 3, 24, 16};
  auto blocks = random_input<float>(shape, 87);
  std::vector<float> out(blocks->numel());
  engine.run(blocks->values().data(), out.data(), shape.n, shape.h, shape.w);

  auto expect = mfrnet_forward(blocks, model);
  std::vector<double> expect_v(expect->values().begin(),
                               expect->values().end());
  require_close(std::span<const float>(out), expect_v, 1e-5);
}

TEST_CASE("structure audit reports the wiring of Figs. 3-5") {
  for (auto cfg : {NetworkConfig::tiny(), NetworkConfig::paper_scale()}) {
    auto model = make_model<float>(cfg);
    const StructureAudit a = audit_model(model);
    CHECK(a.mfrb_count == 4);
    CHECK(a.frb_count == 12);
    CHECK(a.cascade_edge_count == 10);
    CHECK(a.frbs_with_side_input == 11);
    CHECK(a.frbs_with_side_output == 11);
  }
}

TEST_CASE("parameter count formula matches the allocated model") {
  for (auto cfg : {NetworkConfig::tiny(), NetworkConfig::paper_scale()}) {
    auto model = make_model<float>(cfg);
    std::int64_t actual = 0;
    for (auto& np : named_parameters(model)) actual += np.tensor->numel();
    CHECK(parameter_count(cfg) == actual);
  }
}

TEST_CASE("init_weights is seed-deterministic with zero biases") {
  const NetworkConfig cfg = NetworkConfig::tiny();
  auto a = init_weights<float>(cfg, 42);
  auto b = init_weights<float>(cfg, 42);
  auto pa = named_parameters(a);
  auto pb = named_parameters(b);
  for (std::size_t i = 0; i < pa.size(); ++i) {
    REQUIRE(pa[i].tensor->values().size() == pb[i].tensor->values().size());
    for (std::size_t j = 0; j < pa[i].tensor->values().size(); ++j) {
      REQUIRE(pa[i].tensor->values()[j] == pb[i].tensor->values()[j]);
    }
    if (pa[i].name.ends_with(".bias")) {
      for (auto v : pa[i].tensor->values()) REQUIRE(v == 0.0f);
    }
  }

  auto c = init_weights<float>(cfg, 43);
  CHECK(named_parameters(c)[0].tensor->values()[0] !=
        pa[0].tensor->values()[0]);
}

TEST_CASE("init_weights std matches sqrt(2/fan_in) for a 64-channel layer") {
  NetworkConfig cfg = NetworkConfig::paper_scale();  // F=64: rl1 is 64->64 3x3
  auto model = init_weights<float>(cfg, 4242);
  auto w = model.rl1.weight;  // 64*64*9 = 36864 samples
  REQUIRE(w->numel() >= 10000);
  double sum = 0.0, sum2 = 0.0;
  for (auto v : w->values()) {
    sum += v;
    sum2 += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(w->numel());
  const double mean = sum / n;
  const double stddev = std::sqrt(sum2 / n - mean * mean);
  const double expected = std::sqrt(2.0 / (64.0 * 9.0));
  CHECK_THAT(stddev, Catch::Matchers::WithinRel(expected, 0.1));
}

TEST_CASE("fully convolutional shapes are preserved across sizes") {
  auto model = init_weights<float>(NetworkConfig::tiny(), 5);
  for (int h : {16, 48, 96}) {
    for (int w : {16, 80, 128}) {
      auto block = random_input<float>(Shape{1, 3, h, w}, h * 1000 + w);
      auto out = mfrnet_forward(block, model);
      REQUIRE(out->shape() == (Shape{1, 3, h, w}));
    }
  }
}
