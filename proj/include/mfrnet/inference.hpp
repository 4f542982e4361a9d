#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <limits>
#include <vector>

#include "mfrnet/common.hpp"
#include "mfrnet/detail/gemm.hpp"
#include "mfrnet/detail/im2col.hpp"
#include "mfrnet/network.hpp"
#include "mfrnet/parallel.hpp"

namespace mfrnet {

namespace detail {

template <typename T>
inline thread_local std::vector<T> engine_scratch;

template <typename T>
std::vector<T>& scratch2(std::int64_t size) {
  auto& buf = engine_scratch<T>;
  if (static_cast<std::int64_t>(buf.size()) < size) buf.resize(size);
  return buf;
}

}  // namespace detail

// Graph-free forward evaluator. The model is compiled once into a linear
// step schedule over channel-planar buffers (each buffer stores its channels
// as contiguous planes across the whole batch), so convolutions over a batch
// of blocks become a single large GEMM regardless of block count.
//
// Besides production filtering this also backs the finite-difference
// machinery in the test suite: with retain_all set, every intermediate stays
// resident, and run_variants() re-evaluates the tail of the schedule for a
// batch of perturbed copies that read untouched buffers from the base pass.
template <typename T>
class InferenceEngine {
 public:
  enum class StepKind { kConv, kConvLrelu, kLrelu, kConcat, kAdd };

  struct Step {
    StepKind kind;
    std::vector<int> src;          // buffer ids; conv/concat concatenate them
    int dst = -1;
    const ConvParams<T>* conv = nullptr;
    // resolved (buffer, channel) pairs for the concatenated conv view
    std::vector<std::pair<int, int>> channel_map;
  };

  struct Options {
    // Emit conv and LReLU as separate steps so a conv output can be patched
    // pre-activation (used by the gradient-check driver).
    bool separate_activations = false;
    // Keep all buffers resident after run(); required for run_variants().
    bool retain_all = false;
  };

  explicit InferenceEngine(const MfrnetModel<T>& model, Options options = {})
      : model_(&model), options_(options) {
    build_schedule();
  }

  // NCHW (count, 3, h, w) in and out. Deterministic for a fixed batch;
  // internal parallelism uses a fixed work split independent of the thread
  // count.
  void run(const T* input, T* output, int count, int h, int w) {
    setup(count, h, w);
    load_input(input, count);
    for (std::size_t s = 0; s < steps_.size(); ++s) {
      execute_base(steps_[s]);
      if (!options_.retain_all) release_dead(static_cast<int>(s));
    }
    store_output(output, count);
  }

  // ---- finite-difference support (base lane = single image) ----

  void run_base(const T* input, int h, int w) {
    check(options_.retain_all, "run_base requires retain_all");
    run(input, nullptr, 1, h, w);
  }

  int step_count() const { return static_cast<int>(steps_.size()); }
  const Step& step(int i) const { return steps_[i]; }
  int buffer_channels(int id) const { return buffers_[id].channels; }
  int output_buffer() const { return output_buffer_; }
  std::int64_t plane_size() const { return plane_; }

  const T* base_plane(int buffer, int c) const {
    return buffers_[buffer].base.data() + c * plane_;
  }

  // Starts a perturbation pass with v variants. Buffers written during the
  // pass hold v images; untouched buffers are read from the base lane.
  void begin_variants(int v) {
    ++pass_;
    variant_count_ = v;
  }

  // Marks `buffer` dirty and fills every variant with the base content;
  // callers then patch individual planes via variant_plane().
  void seed_variants(int buffer) {
    Buffer& b = buffers_[buffer];
    touch_variant(b);
    for (int v = 0; v < variant_count_; ++v) {
      for (int c = 0; c < b.channels; ++c) {
        std::memcpy(b.variant.data() + (static_cast<std::int64_t>(c) *
                                        variant_count_ + v) * plane_,
                    b.base.data() + c * plane_,
                    static_cast<std::size_t>(plane_) * sizeof(T));
      }
    }
  }

  T* variant_plane(int buffer, int v, int c) {
    Buffer& b = buffers_[buffer];
    return b.variant.data() +
           (static_cast<std::int64_t>(c) * variant_count_ + v) * plane_;
  }

  // Executes steps [first, end) on the variant lane.
  void run_variants(int first) {
    for (std::size_t s = static_cast<std::size_t>(first); s < steps_.size();
         ++s) {
      execute_variant(steps_[s]);
    }
  }

 private:
  struct Buffer {
    int channels = 0;
    std::vector<T> base;     // channels x base_count x plane
    std::vector<T> variant;  // channels x variant_count x plane
    std::uint64_t stamp = 0;  // pass id when variant was last written
    int last_use = -1;
  };

  // ---- schedule construction ----

  int new_buffer(int channels) {
    Buffer b;
    b.channels = channels;
    buffers_.push_back(std::move(b));
    return static_cast<int>(buffers_.size()) - 1;
  }

  int push_step(StepKind kind, std::vector<int> src,
                const ConvParams<T>* conv) {
    Step st;
    st.kind = kind;
    st.src = std::move(src);
    st.conv = conv;
    int out_channels = 0;
    switch (kind) {
      case StepKind::kConv:
      case StepKind::kConvLrelu:
        out_channels = conv->out_channels();
        for (int sb : st.src) {
          for (int c = 0; c < buffers_[sb].channels; ++c) {
            st.channel_map.emplace_back(sb, c);
          }
        }
        check(static_cast<int>(st.channel_map.size()) == conv->in_channels(),
              "engine conv channel mismatch");
        break;
      case StepKind::kConcat:
        for (int sb : st.src) out_channels += buffers_[sb].channels;
        break;
      case StepKind::kLrelu:
      case StepKind::kAdd:
        out_channels = buffers_[st.src[0]].channels;
        for (int sb : st.src) {
          check(buffers_[sb].channels == out_channels,
                "engine add width mismatch");
        }
        break;
    }
    st.dst = new_buffer(out_channels);
    steps_.push_back(std::move(st));
    return steps_.back().dst;
  }

  int conv_step(std::vector<int> src, const ConvParams<T>& conv, bool lrelu) {
    if (lrelu && options_.separate_activations) {
      int pre = push_step(StepKind::kConv, std::move(src), &conv);
      return push_step(StepKind::kLrelu, {pre}, nullptr);
    }
    return push_step(lrelu ? StepKind::kConvLrelu : StepKind::kConv,
                     std::move(src), &conv);
  }

  void build_schedule() {
    const MfrnetModel<T>& m = *model_;
    input_buffer_ = new_buffer(NetworkConfig::kInputChannels);

    int sf = conv_step({input_buffer_}, m.sf, /*lrelu=*/true);
    std::vector<int> cascade_sources{sf};

    int main = sf;
    int side = -1;
    for (int b = 0; b < NetworkConfig::kNumMfrb; ++b) {
      if (b > 0) {
        const int prev_g = main;
        std::vector<int> fuse_src{prev_g};
        fuse_src.insert(fuse_src.end(), cascade_sources.begin(),
                        cascade_sources.end());
        main = conv_step(std::move(fuse_src), m.cascade[b - 1], true);
        cascade_sources.push_back(prev_g);
      }
      const int mfrb_in = main;
      for (int j = 0; j < NetworkConfig::kFrbPerMfrb; ++j) {
        const FrbWeights<T>& frb =
            m.frbs[b * NetworkConfig::kFrbPerMfrb + j];
        std::vector<int> feats{main};
        for (const auto& layer : frb.dense) {
          feats.push_back(conv_step(feats, layer, true));
        }
        std::vector<int> hdf_parts(feats.begin() + 1, feats.end());
        if (side >= 0) hdf_parts.push_back(side);

        int fus = conv_step(hdf_parts, frb.fusion, false);
        // FRB skip and the multi-level skip to the MFRB input in one step.
        main = (main == mfrb_in)
                   ? push_step(StepKind::kAdd, {fus, mfrb_in, mfrb_in},
                               nullptr)
                   : push_step(StepKind::kAdd, {fus, main, mfrb_in}, nullptr);
        if (frb.has_side_output) {
          int hdf = push_step(StepKind::kConcat, hdf_parts, nullptr);
          int r = conv_step({hdf}, frb.res_convs[0], true);
          r = conv_step({r}, frb.res_convs[1], false);
          int rb1 = push_step(StepKind::kAdd, {r, hdf}, nullptr);
          r = conv_step({rb1}, frb.res_convs[2], true);
          r = conv_step({r}, frb.res_convs[3], false);
          int rb2 = push_step(StepKind::kAdd, {r, rb1}, nullptr);
          side = conv_step({rb2}, frb.side, false);
        } else {
          side = -1;
        }
      }
    }

    std::vector<int> rl1_src{main};
    rl1_src.insert(rl1_src.end(), cascade_sources.begin(),
                   cascade_sources.end());
    int fused = conv_step(std::move(rl1_src), m.cascade[3], true);
    int r = conv_step({fused}, m.rl1, false);
    r = push_step(StepKind::kAdd, {r, sf}, nullptr);
    r = conv_step({r}, m.rl2, false);
    r = conv_step({r}, m.out, false);
    output_buffer_ =
        push_step(StepKind::kAdd, {r, input_buffer_}, nullptr);

    // Liveness for progressive release in production runs.
    for (std::size_t s = 0; s < steps_.size(); ++s) {
      for (int sb : steps_[s].src) {
        buffers_[sb].last_use =
            std::max(buffers_[sb].last_use, static_cast<int>(s));
      }
    }
    buffers_[output_buffer_].last_use = std::numeric_limits<int>::max();
  }

  // ---- execution ----

  void setup(int count, int h, int w) {
    count_ = count;
    h_ = h;
    w_ = w;
    plane_ = static_cast<std::int64_t>(h) * w;
    for (auto& b : buffers_) {
      // Every step fully overwrites its destination, so no zero fill.
      b.base.resize(static_cast<std::size_t>(b.channels) * count_ * plane_);
      b.variant.clear();
      b.stamp = 0;
    }
    pass_ = 0;
  }

  void load_input(const T* input, int count) {
    Buffer& in = buffers_[input_buffer_];
    for (int b = 0; b < count; ++b) {
      for (int c = 0; c < in.channels; ++c) {
        std::memcpy(in.base.data() + (static_cast<std::int64_t>(c) * count_ +
                                      b) * plane_,
                    input + (static_cast<std::int64_t>(b) * in.channels + c) *
                                plane_,
                    static_cast<std::size_t>(plane_) * sizeof(T));
      }
    }
  }

  void store_output(T* output, int count) {
    if (output == nullptr) return;
    Buffer& out = buffers_[output_buffer_];
    for (int b = 0; b < count; ++b) {
      for (int c = 0; c < out.channels; ++c) {
        std::memcpy(output + (static_cast<std::int64_t>(b) * out.channels +
                              c) * plane_,
                    out.base.data() +
                        (static_cast<std::int64_t>(c) * count_ + b) * plane_,
                    static_cast<std::size_t>(plane_) * sizeof(T));
      }
    }
  }

  void release_dead(int step_index) {
    for (auto& b : buffers_) {
      if (b.last_use == step_index) b.base = std::vector<T>();
    }
  }

  // Fixed work decomposition: image ranges do not depend on the number of
  // worker threads, so results are bit-identical for any thread setting.
  template <typename Fn>
  void for_image_ranges(int images, Fn&& fn) const {
    const int chunks = std::min(images, 4);
    const int per = (images + chunks - 1) / chunks;
    std::vector<std::pair<int, int>> ranges;
    for (int b = 0; b < images; b += per) {
      ranges.emplace_back(b, std::min(images, b + per));
    }
    parallel_for(static_cast<std::int64_t>(ranges.size()),
                 [&](std::int64_t i) { fn(ranges[i].first, ranges[i].second); });
  }

  void apply_lrelu(T* data, std::int64_t n) const {
    const T slope = static_cast<T>(model_->config.lrelu_slope);
    for (std::int64_t i = 0; i < n; ++i) {
      if (data[i] < T(0)) data[i] *= slope;
    }
  }

  // Executes a conv over `lane_count` images, reading channel planes through
  // `src_plane(buffer, image, channel)` and writing to dst_data (channel-
  // planar over lane_count).
  template <typename SrcFn>
  void conv_lane(const Step& st, int lane_count, SrcFn&& src_plane,
                 T* dst_data, bool lrelu_fused) {
    const ConvParams<T>& cp = *st.conv;
    const int k = cp.kernel();
    const int kk = k * k;
    const int in_c = cp.in_channels();
    const int out_c = cp.out_channels();
    const std::int64_t k_dim = static_cast<std::int64_t>(in_c) * kk;
    const T* wdata = cp.weight->values().data();
    const T* bdata = cp.bias->values().data();

    for_image_ranges(lane_count, [&](int b0, int b1) {
      const int span = b1 - b0;
      const std::int64_t sites = span * plane_;
      auto& col = detail::scratch<T>(sites * k_dim);
      // Gather: column (c, dy, dx), rows are images b0..b1 stacked.
      std::int64_t column = 0;
      const int pad = k / 2;
      for (int c = 0; c < in_c; ++c) {
        const auto [sb, sc] = st.channel_map[c];
        for (int dy = -pad; dy <= pad; ++dy) {
          for (int dx = -pad; dx <= pad; ++dx) {
            for (int b = b0; b < b1; ++b) {
              T* dst = col.data() + column * sites +
                       static_cast<std::int64_t>(b - b0) * plane_;
              const T* src = src_plane(sb, b, sc);
              if (k == 1) {
                std::memcpy(dst, src,
                            static_cast<std::size_t>(plane_) * sizeof(T));
              } else {
                detail::shifted_plane(dst, src, h_, w_, dy, dx);
              }
            }
            ++column;
          }
        }
      }
      // Output rows land per-channel at [c * lane_count + b] planes; rows of
      // this GEMM are the b0..b1 section of each channel column.
      auto& out_buf = detail::scratch2<T>(sites * out_c);
      detail::gemm_forward(col.data(), wdata, out_buf.data(), sites,
                           static_cast<int>(k_dim), out_c);
      for (int c = 0; c < out_c; ++c) {
        const T* src = out_buf.data() + c * sites;
        T* dst = dst_data + (static_cast<std::int64_t>(c) * lane_count + b0) *
                                plane_;
        const T bias = bdata[c];
        for (std::int64_t i = 0; i < sites; ++i) dst[i] = src[i] + bias;
        if (lrelu_fused) apply_lrelu(dst, sites);
      }
    });
  }

  void execute_base(const Step& st) {
    Buffer& dst = buffers_[st.dst];
    if (dst.base.empty()) {
      dst.base.resize(static_cast<std::size_t>(dst.channels) * count_ *
                      plane_);
    }
    switch (st.kind) {
      case StepKind::kConv:
      case StepKind::kConvLrelu:
        conv_lane(
            st, count_,
            [&](int sb, int b, int c) {
              return buffers_[sb].base.data() +
                     (static_cast<std::int64_t>(c) * count_ + b) * plane_;
            },
            dst.base.data(), st.kind == StepKind::kConvLrelu);
        break;
      case StepKind::kLrelu: {
        const Buffer& src = buffers_[st.src[0]];
        std::copy(src.base.begin(), src.base.end(), dst.base.begin());
        apply_lrelu(dst.base.data(), static_cast<std::int64_t>(dst.base.size()));
        break;
      }
      case StepKind::kConcat: {
        std::int64_t c_off = 0;
        for (int sb : st.src) {
          const Buffer& src = buffers_[sb];
          std::copy(src.base.begin(), src.base.end(),
                    dst.base.begin() + c_off * count_ * plane_);
          c_off += src.channels;
        }
        break;
      }
      case StepKind::kAdd: {
        const std::int64_t n = static_cast<std::int64_t>(dst.base.size());
        const Buffer& a = buffers_[st.src[0]];
        std::copy(a.base.begin(), a.base.end(), dst.base.begin());
        for (std::size_t s = 1; s < st.src.size(); ++s) {
          const T* b = buffers_[st.src[s]].base.data();
          T* d = dst.base.data();
          for (std::int64_t i = 0; i < n; ++i) d[i] += b[i];
        }
        break;
      }
    }
  }

  void touch_variant(Buffer& b) {
    const std::size_t need =
        static_cast<std::size_t>(b.channels) * variant_count_ * plane_;
    if (b.variant.size() < need) b.variant.resize(need);
    b.stamp = pass_;
  }

  bool dirty(int buffer) const { return buffers_[buffer].stamp == pass_; }

  void execute_variant(const Step& st) {
    // Skip steps whose inputs are all clean; their base result stands.
    bool any_dirty = false;
    for (int sb : st.src) any_dirty = any_dirty || dirty(sb);
    if (!any_dirty) return;

    Buffer& dst = buffers_[st.dst];
    touch_variant(dst);
    const int vc = variant_count_;

    auto vplane = [&](int sb, int v, int c) -> const T* {
      const Buffer& b = buffers_[sb];
      if (b.stamp == pass_) {
        return b.variant.data() +
               (static_cast<std::int64_t>(c) * vc + v) * plane_;
      }
      return b.base.data() + static_cast<std::int64_t>(c) * plane_;
    };

    switch (st.kind) {
      case StepKind::kConv:
      case StepKind::kConvLrelu:
        conv_lane(st, vc, vplane, dst.variant.data(),
                  st.kind == StepKind::kConvLrelu);
        break;
      case StepKind::kLrelu:
        for_image_ranges(vc, [&](int v0, int v1) {
          for (int c = 0; c < dst.channels; ++c) {
            for (int v = v0; v < v1; ++v) {
              const T* src = vplane(st.src[0], v, c);
              T* d = dst.variant.data() +
                     (static_cast<std::int64_t>(c) * vc + v) * plane_;
              std::memcpy(d, src,
                          static_cast<std::size_t>(plane_) * sizeof(T));
              apply_lrelu(d, plane_);
            }
          }
        });
        break;
      case StepKind::kConcat: {
        for_image_ranges(vc, [&](int v0, int v1) {
          int c_off = 0;
          for (int sb : st.src) {
            const Buffer& src = buffers_[sb];
            for (int c = 0; c < src.channels; ++c) {
              for (int v = v0; v < v1; ++v) {
                std::memcpy(dst.variant.data() +
                                (static_cast<std::int64_t>(c_off + c) * vc +
                                 v) * plane_,
                            vplane(sb, v, c),
                            static_cast<std::size_t>(plane_) * sizeof(T));
              }
            }
            c_off += src.channels;
          }
        });
        break;
      }
      case StepKind::kAdd: {
        for_image_ranges(vc, [&](int v0, int v1) {
          for (int c = 0; c < dst.channels; ++c) {
            for (int v = v0; v < v1; ++v) {
              T* d = dst.variant.data() +
                     (static_cast<std::int64_t>(c) * vc + v) * plane_;
              std::memcpy(d, vplane(st.src[0], v, c),
                          static_cast<std::size_t>(plane_) * sizeof(T));
              for (std::size_t s = 1; s < st.src.size(); ++s) {
                const T* b = vplane(st.src[s], v, c);
                for (std::int64_t i = 0; i < plane_; ++i) d[i] += b[i];
              }
            }
          }
        });
        break;
      }
    }
  }

  const MfrnetModel<T>* model_;
  Options options_;
  std::vector<Buffer> buffers_;
  std::vector<Step> steps_;
  int input_buffer_ = -1;
  int output_buffer_ = -1;
  int count_ = 0;
  int h_ = 0, w_ = 0;
  std::int64_t plane_ = 0;
  std::uint64_t pass_ = 0;
  int variant_count_ = 0;
};

}  // namespace mfrnet
