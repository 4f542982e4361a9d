#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mfrnet/adam.hpp"
#include "mfrnet/common.hpp"
#include "mfrnet/rng.hpp"
#include "mfrnet/tensor.hpp"

namespace mfrnet {

// Channel widths and activation slope of the network. The block structure
// itself (four MFRBs of three FRBs, four dense layers per FRB, three input
// channels) is fixed.
struct NetworkConfig {
  int base_channels = 64;  // F: width of the main branch (SF and G_i)
  int growth = 32;         // g: channels emitted by each dense layer
  int side_channels = 64;  // D: width of the side (feature review) branch
  float lrelu_slope = 0.2f;

  static constexpr int kNumMfrb = 4;
  static constexpr int kFrbPerMfrb = 3;
  static constexpr int kNumFrb = kNumMfrb * kFrbPerMfrb;
  static constexpr int kDenseLayers = 4;
  static constexpr int kInputChannels = 3;

  void validate() const {
    check(base_channels >= 4, "base_channels must be >= 4");
    check(growth >= 2, "growth must be >= 2");
    check(side_channels >= 1, "side_channels must be >= 1");
    check(lrelu_slope > 0.0f && lrelu_slope < 1.0f,
          "lrelu_slope must lie in (0, 1)");
  }

  // Width of the concatenated high-dimensional features inside one FRB.
  int hdf_channels(bool has_side_input) const {
    return kDenseLayers * growth + (has_side_input ? side_channels : 0);
  }

  bool operator==(const NetworkConfig&) const = default;

  static NetworkConfig paper_scale() { return NetworkConfig{64, 32, 64, 0.2f}; }
  static NetworkConfig tiny() { return NetworkConfig{8, 4, 8, 0.2f}; }
};

// Weights of one feature review residual dense block. The first FRB of the
// network has no side input; the last one has no side branch at all.
template <typename T>
struct FrbWeights {
  std::array<ConvParams<T>, NetworkConfig::kDenseLayers> dense;  // 3x3, -> g
  ConvParams<T> fusion;                     // 1x1, HDF -> F
  std::array<ConvParams<T>, 4> res_convs;   // two residual blocks, 3x3 at HDF
  ConvParams<T> side;                       // 1x1, HDF -> D
  bool has_side_input = true;
  bool has_side_output = true;
};

template <typename T>
struct MfrnetModel {
  NetworkConfig config;
  ConvParams<T> sf;  // 3x3, 3 -> F
  std::array<FrbWeights<T>, NetworkConfig::kNumFrb> frbs;
  // 1x1 fusers at the entries of B2, B3, B4 and before RL1; the fuser at
  // index i consumes the primary path plus i+1 cascade sources.
  std::array<ConvParams<T>, 4> cascade;
  ConvParams<T> rl1;  // 3x3, F -> F
  ConvParams<T> rl2;  // 3x3, F -> F
  ConvParams<T> out;  // 3x3, F -> 3
};

template <typename T>
struct NamedParam {
  std::string name;
  TensorPtr<T> tensor;
};

namespace detail {

template <typename T>
ConvParams<T> alloc_conv(int out_c, int in_c, int k) {
  ConvParams<T> p;
  p.weight = Tensor<T>::zeros(Shape{out_c, in_c, k, k}, /*requires_grad=*/true);
  p.bias = Tensor<T>::zeros(Shape{out_c, 1, 1, 1}, /*requires_grad=*/true);
  return p;
}

}  // namespace detail

// Allocates a model with all weights and biases zero.
template <typename T>
MfrnetModel<T> make_model(const NetworkConfig& config) {
  config.validate();
  const int f = config.base_channels;
  const int g = config.growth;
  const int d = config.side_channels;

  MfrnetModel<T> model;
  model.config = config;
  model.sf = detail::alloc_conv<T>(f, NetworkConfig::kInputChannels, 3);
  for (int i = 0; i < NetworkConfig::kNumFrb; ++i) {
    FrbWeights<T>& frb = model.frbs[i];
    frb.has_side_input = (i != 0);
    frb.has_side_output = (i != NetworkConfig::kNumFrb - 1);
    for (int l = 0; l < NetworkConfig::kDenseLayers; ++l) {
      frb.dense[l] = detail::alloc_conv<T>(g, f + l * g, 3);
    }
    const int hdf = config.hdf_channels(frb.has_side_input);
    frb.fusion = detail::alloc_conv<T>(f, hdf, 1);
    if (frb.has_side_output) {
      for (auto& rc : frb.res_convs) rc = detail::alloc_conv<T>(hdf, hdf, 3);
      frb.side = detail::alloc_conv<T>(d, hdf, 1);
    }
  }
  for (int i = 0; i < 4; ++i) {
    model.cascade[i] = detail::alloc_conv<T>(f, (i + 2) * f, 1);
  }
  model.rl1 = detail::alloc_conv<T>(f, f, 3);
  model.rl2 = detail::alloc_conv<T>(f, f, 3);
  model.out = detail::alloc_conv<T>(NetworkConfig::kInputChannels, f, 3);
  return model;
}

// Stable enumeration of all parameters; this order defines the weight file
// layout and the optimizer update order.
template <typename T>
std::vector<NamedParam<T>> named_parameters(MfrnetModel<T>& model) {
  std::vector<NamedParam<T>> out;
  auto push = [&out](const std::string& name, const ConvParams<T>& p) {
    out.push_back({name + ".weight", p.weight});
    out.push_back({name + ".bias", p.bias});
  };
  push("sf", model.sf);
  for (int i = 0; i < NetworkConfig::kNumFrb; ++i) {
    const std::string base = "mfrb" + std::to_string(i / 3) + ".frb" +
                             std::to_string(i % 3);
    const FrbWeights<T>& frb = model.frbs[i];
    for (int l = 0; l < NetworkConfig::kDenseLayers; ++l) {
      push(base + ".dense" + std::to_string(l), frb.dense[l]);
    }
    push(base + ".fusion", frb.fusion);
    if (frb.has_side_output) {
      for (int r = 0; r < 4; ++r) {
        push(base + ".res" + std::to_string(r), frb.res_convs[r]);
      }
      push(base + ".side", frb.side);
    }
  }
  static const char* kFuserNames[4] = {"fuse_b2", "fuse_b3", "fuse_b4",
                                       "fuse_rl1"};
  for (int i = 0; i < 4; ++i) push(kFuserNames[i], model.cascade[i]);
  push("rl1", model.rl1);
  push("rl2", model.rl2);
  push("output", model.out);
  return out;
}

// Closed-form parameter count (weights + biases) for a configuration:
//   dense(F,g)    = sum_{l=0..3} [9 (F + l g) g + g]
//   frb(h)        = dense + (h F + F) + 4 (9 h^2 + h) + (h D + D)
//   total = frb(4g) + 10 frb(4g+D) + [dense + ((4g+D) F + F)]
//         + sum_{k=2..5} (k F^2 + F) + (27 F + F) + 2 (9 F^2 + F) + (27 F + 3)
// with h the HDF width of the block. The first term is the side-input-free
// first FRB, the bracket is the last FRB (no side branch).
inline std::int64_t parameter_count(const NetworkConfig& config) {
  const std::int64_t f = config.base_channels;
  const std::int64_t g = config.growth;
  const std::int64_t d = config.side_channels;
  auto dense = [&]() {
    std::int64_t sum = 0;
    for (int l = 0; l < NetworkConfig::kDenseLayers; ++l) {
      sum += 9 * (f + l * g) * g + g;
    }
    return sum;
  }();
  auto frb_full = [&](std::int64_t h) {
    return dense + (h * f + f) + 4 * (9 * h * h + h) + (h * d + d);
  };
  const std::int64_t h0 = NetworkConfig::kDenseLayers * g;
  const std::int64_t h1 = h0 + d;
  std::int64_t total = frb_full(h0) + 10 * frb_full(h1) +
                       (dense + (h1 * f + f));
  for (std::int64_t k = 2; k <= 5; ++k) total += k * f * f + f;
  total += 27 * f + f;            // shallow feature conv
  total += 2 * (9 * f * f + f);   // RL1, RL2
  total += 27 * f + 3;            // output conv
  return total;
}

// He-style initialization: weights drawn from N(0, 2 / fan_in), biases zero.
// Draws happen in double and are cast to T, so float and double models built
// from one seed hold the same values up to rounding.
template <typename T>
MfrnetModel<T> init_weights(const NetworkConfig& config, std::uint64_t seed) {
  MfrnetModel<T> model = make_model<T>(config);
  Rng rng(derive_seed(seed, /*stream=*/1));
  for (auto& [name, tensor] : named_parameters(model)) {
    if (name.ends_with(".bias")) continue;
    const Shape& s = tensor->shape();
    const double fan_in = static_cast<double>(s.c) * s.h * s.w;
    const double stddev = std::sqrt(2.0 / fan_in);
    for (auto& v : tensor->values()) {
      v = static_cast<T>(rng.normal() * stddev);
    }
  }
  return model;
}

template <typename To, typename From>
MfrnetModel<To> model_cast(const MfrnetModel<From>& src) {
  MfrnetModel<To> dst = make_model<To>(src.config);
  auto sp = named_parameters(const_cast<MfrnetModel<From>&>(src));
  auto dp = named_parameters(dst);
  for (std::size_t i = 0; i < sp.size(); ++i) {
    auto in = sp[i].tensor->values();
    auto out = dp[i].tensor->values();
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = static_cast<To>(in[j]);
    }
  }
  return dst;
}

// ---- forward graph ----

template <typename T>
struct FrbOutput {
  TensorPtr<T> main;
  TensorPtr<T> side;  // null when the block has no side branch
};

// One feature review residual dense block (Fig.-5-style wiring): a dense
// chain of four conv+LReLU layers over everything produced so far, channel
// fusion back to the main width with a skip, and a side branch of two
// residual blocks plus a 1x1 projection over the concatenated features.
template <typename T>
FrbOutput<T> frb_forward(const TensorPtr<T>& main_in,
                         const TensorPtr<T>& side_in,
                         const FrbWeights<T>& weights, T slope) {
  check(static_cast<bool>(side_in) == weights.has_side_input,
        weights.has_side_input ? "frb_forward: side input required"
                               : "frb_forward: unexpected side input");
  std::vector<TensorPtr<T>> feats{main_in};
  for (const auto& layer : weights.dense) {
    feats.push_back(leaky_relu(conv2d(feats, layer), slope));
  }
  // High-dimensional features: the four dense outputs plus the reviewed
  // side input.
  std::vector<TensorPtr<T>> hdf_parts(feats.begin() + 1, feats.end());
  if (side_in) hdf_parts.push_back(side_in);

  FrbOutput<T> out;
  out.main = add(conv2d(hdf_parts, weights.fusion), main_in);
  if (weights.has_side_output) {
    auto hdf = concat_channels(hdf_parts);
    auto res_block = [&](const TensorPtr<T>& x, const ConvParams<T>& c1,
                         const ConvParams<T>& c2) {
      return add(conv2d(leaky_relu(conv2d(x, c1), slope), c2), x);
    };
    auto r1 = res_block(hdf, weights.res_convs[0], weights.res_convs[1]);
    auto r2 = res_block(r1, weights.res_convs[2], weights.res_convs[3]);
    out.side = conv2d(r2, weights.side);
  }
  return out;
}

// One MFRB: three chained FRBs with the multi-level residual structure —
// after each FRB its main output is summed with the MFRB input before
// feeding the next FRB.
template <typename T>
FrbOutput<T> mfrb_forward(const TensorPtr<T>& main_in,
                          const TensorPtr<T>& side_in,
                          const FrbWeights<T>* frbs, T slope) {
  TensorPtr<T> x = main_in;
  TensorPtr<T> side = side_in;
  for (int j = 0; j < NetworkConfig::kFrbPerMfrb; ++j) {
    FrbOutput<T> o = frb_forward(x, side, frbs[j], slope);
    x = add(o.main, main_in);
    side = o.side;
  }
  return {x, side};
}

// Cascade fusion point: concatenates the primary path with the cascade
// sources and projects back to the main width through 1x1 conv + LReLU.
template <typename T>
TensorPtr<T> cascade_fuse(const TensorPtr<T>& primary,
                          const std::vector<TensorPtr<T>>& sources,
                          const ConvParams<T>& fuser, T slope) {
  int channels = primary->shape().c;
  for (const auto& s : sources) channels += s->shape().c;
  check(channels == fuser.in_channels(),
        "cascade_fuse: " + std::to_string(sources.size()) +
            " sources give " + std::to_string(channels) +
            " channels, fuser expects " +
            std::to_string(fuser.in_channels()));
  std::vector<TensorPtr<T>> cat{primary};
  cat.insert(cat.end(), sources.begin(), sources.end());
  return leaky_relu(conv2d(cat, fuser), slope);
}

// Full network: shallow features, four MFRBs with cascade fusion at the
// entries of B2..B4, reconstruction with a skip back to the shallow
// features, and a residual added to the input through the long skip.
// Output is intentionally unclamped; range handling is the caller's.
template <typename T>
TensorPtr<T> mfrnet_forward(const TensorPtr<T>& block,
                            const MfrnetModel<T>& model) {
  check(block->shape().c == NetworkConfig::kInputChannels,
        "mfrnet_forward expects 3 input channels, got shape " +
            block->shape().to_string());
  check(block->shape().h >= 16 && block->shape().w >= 16,
        "mfrnet_forward expects spatial size >= 16, got " +
            block->shape().to_string());
  const T slope = static_cast<T>(model.config.lrelu_slope);

  auto sf = leaky_relu(conv2d(block, model.sf), slope);

  // Cascade sources seen by the fuser at the entry of block b: SF plus the
  // outputs of the blocks before b-1; the immediately preceding output is
  // the fuser's primary input and joins the source list afterwards.
  std::vector<TensorPtr<T>> cascade_sources{sf};

  TensorPtr<T> main = sf;
  TensorPtr<T> side;
  for (int b = 0; b < NetworkConfig::kNumMfrb; ++b) {
    if (b > 0) {
      TensorPtr<T> prev_g = main;
      main = cascade_fuse(prev_g, cascade_sources, model.cascade[b - 1],
                          slope);
      cascade_sources.push_back(prev_g);
    }
    FrbOutput<T> o = mfrb_forward(main, side,
                                  &model.frbs[b * NetworkConfig::kFrbPerMfrb],
                                  slope);
    main = o.main;
    side = o.side;
  }

  auto rl1_in = cascade_fuse(main, cascade_sources, model.cascade[3], slope);
  auto r = add(conv2d(rl1_in, model.rl1), sf);
  auto residual = conv2d(conv2d(r, model.rl2), model.out);
  return add(residual, block);
}

// ---- structural audit ----

struct StructureAudit {
  int mfrb_count = 0;
  int frb_count = 0;
  int cascade_edge_count = 0;
  int frbs_with_side_input = 0;
  int frbs_with_side_output = 0;
};

// Derives the wiring facts from the constructed model: cascade edge counts
// come from the fuser input widths, side-branch presence from the block
// weights themselves.
template <typename T>
StructureAudit audit_model(const MfrnetModel<T>& model) {
  StructureAudit a;
  a.mfrb_count = NetworkConfig::kNumMfrb;
  a.frb_count = NetworkConfig::kNumFrb;
  const int f = model.config.base_channels;
  for (const auto& fuser : model.cascade) {
    a.cascade_edge_count += fuser.in_channels() / f - 1;
  }
  for (const auto& frb : model.frbs) {
    if (frb.has_side_input) ++a.frbs_with_side_input;
    if (frb.has_side_output) ++a.frbs_with_side_output;
  }
  return a;
}

// All parameter tensors in enumeration order (for the optimizer).
template <typename T>
std::vector<TensorPtr<T>> parameter_tensors(MfrnetModel<T>& model) {
  std::vector<TensorPtr<T>> out;
  for (auto& np : named_parameters(model)) out.push_back(np.tensor);
  return out;
}

}  // namespace mfrnet
