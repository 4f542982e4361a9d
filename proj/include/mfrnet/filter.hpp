#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mfrnet/common.hpp"
#include "mfrnet/frame.hpp"
#include "mfrnet/inference.hpp"
#include "mfrnet/network.hpp"
#include "mfrnet/tiling.hpp"

namespace mfrnet {

// QP-driven model choice: Model 1 for QP <= 24.5, Model 2 up to 29.5,
// Model 3 up to 34.5, Model 4 above. Returns the 1-based model id.
inline int select_model(double qp_base) {
  check(std::isfinite(qp_base), "select_model requires a finite QP");
  if (qp_base <= 24.5) return 1;
  if (qp_base <= 29.5) return 2;
  if (qp_base <= 34.5) return 3;
  return 4;
}

// Four models, one per QP group, sharing a single configuration.
struct ModelBank {
  std::array<MfrnetModel<float>, 4> models;

  void validate() const {
    for (int i = 1; i < 4; ++i) {
      check(models[i].config == models[0].config,
            "model bank entries disagree on network config");
    }
  }

  const MfrnetModel<float>& model(int id) const {
    check(id >= 1 && id <= 4,
          "model id must lie in 1..4, got " + std::to_string(id));
    return models[id - 1];
  }
};

// Frame-level post-processing filter around one model: 4:4:4 conversion,
// normalization, overlapped tiling, batched network inference, aggregation
// and conversion back to the source format. Holds the inference engine, so
// reuse one instance across the frames of a sequence.
class FrameFilter {
 public:
  static constexpr int kBatch = 16;

  explicit FrameFilter(const MfrnetModel<float>& model) : engine_(model) {}

  Frame filter(const Frame& in) {
    in.validate();
    const bool was_420 = in.chroma == ChromaFormat::k420;
    const Frame f444 = was_420 ? upsample_420_to_444(in) : in;
    std::vector<float> planes = normalize_frame(f444);

    const TilePlan plan = plan_tiles(in.width, in.height);
    std::vector<float> blocks = extract_blocks(planes, plan);
    constexpr std::size_t kBlockFloats =
        static_cast<std::size_t>(3) * TilePlan::kBlock * TilePlan::kBlock;

    // Fixed batch grouping in anchor order keeps the output independent of
    // the thread configuration.
    const int count = plan.block_count();
    for (int b0 = 0; b0 < count; b0 += kBatch) {
      const int bn = std::min(kBatch, count - b0);
      float* chunk = blocks.data() + static_cast<std::size_t>(b0) * kBlockFloats;
      engine_.run(chunk, chunk, bn, TilePlan::kBlock, TilePlan::kBlock);
    }

    std::vector<float> merged = aggregate_blocks(plan, blocks);
    Frame out444 = denormalize_frame(merged, in.width, in.height, in.bit_depth);
    return was_420 ? downsample_444_to_420(out444) : out444;
  }

 private:
  InferenceEngine<float> engine_;
};

// One-shot convenience wrapper selecting the model by QP.
inline Frame filter_frame(const Frame& in, const ModelBank& bank,
                          double qp_base) {
  bank.validate();
  FrameFilter filter(bank.model(select_model(qp_base)));
  return filter.filter(in);
}

}  // namespace mfrnet
