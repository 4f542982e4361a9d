#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "mfrnet/adam.hpp"
#include "mfrnet/common.hpp"
#include "mfrnet/dataset.hpp"
#include "mfrnet/filter.hpp"
#include "mfrnet/network.hpp"
#include "mfrnet/rng.hpp"
#include "mfrnet/tensor.hpp"

namespace mfrnet {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainingConfig {
  int batch_size = 16;
  int epochs = 200;
  double learning_rate = 1e-4;
  double lr_decay_factor = 0.1;
  int lr_decay_period = 100;  // epochs
  std::uint64_t seed = 0;
  // Optional cap on optimizer steps for desk-scale runs; 0 means no cap.
  int max_steps = 0;

  void validate() const {
    check(batch_size > 0 && epochs > 0 && learning_rate > 0 &&
              lr_decay_factor > 0 && lr_decay_period > 0,
          "training config fields must be positive");
  }

  double lr_at_epoch(int epoch) const {
    return learning_rate *
           std::pow(lr_decay_factor, epoch / lr_decay_period);
  }
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double mean_l1 = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int steps = 0;
};

namespace detail {

// Seeded Fisher-Yates permutation of 0..n-1.
inline std::vector<int> shuffled_indices(int n, std::uint64_t seed) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_int(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

}  // namespace detail

// l1/Adam training with the stepped learning-rate schedule: seeded shuffle
// per epoch, incomplete final batches dropped, loss history per epoch.
// Fully deterministic for a given config.
inline TrainResult train(MfrnetModel<float>& model, const PairSet& pairs,
                         const TrainingConfig& cfg) {
  cfg.validate();
  check(pairs.size() >= cfg.batch_size,
        "training needs at least one full batch: " +
            std::to_string(pairs.size()) + " pairs, batch " +
            std::to_string(cfg.batch_size));

  AdamOptimizer<float> opt(parameter_tensors(model));
  const Shape batch_shape{cfg.batch_size, 3, kTrainBlock, kTrainBlock};
  const std::size_t block_floats =
      static_cast<std::size_t>(3) * kTrainBlock * kTrainBlock;

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr_at_epoch(epoch);
    const std::vector<int> order = detail::shuffled_indices(
        pairs.size(), derive_seed(cfg.seed, /*stream=*/3,
                                  static_cast<std::uint64_t>(epoch)));
    const int batches = pairs.size() / cfg.batch_size;
    double epoch_loss = 0.0;
    int batches_run = 0;
    for (int b = 0; b < batches; ++b) {
      auto degraded = Tensor<float>::zeros(batch_shape);
      auto pristine = Tensor<float>::zeros(batch_shape);
      for (int i = 0; i < cfg.batch_size; ++i) {
        const BlockPair& pair = pairs.pairs[order[b * cfg.batch_size + i]];
        std::copy_n(pair.degraded.data(), block_floats,
                    degraded->values().data() + i * block_floats);
        std::copy_n(pair.pristine.data(), block_floats,
                    pristine->values().data() + i * block_floats);
      }
      auto loss = l1_loss(mfrnet_forward(degraded, model), pristine);
      const double loss_value = loss->value();
      if (!std::isfinite(loss_value)) {
        throw TrainingError("non-finite loss at epoch " +
                            std::to_string(epoch) + ", batch " +
                            std::to_string(b));
      }
      opt.zero_grad();
      backward(loss, /*release_intermediates=*/true);
      opt.step(static_cast<float>(lr));
      epoch_loss += loss_value;
      ++batches_run;
      ++result.steps;
      if (cfg.max_steps > 0 && result.steps >= cfg.max_steps) break;
    }
    if (batches_run > 0) {
      result.history.push_back({epoch, lr, epoch_loss / batches_run});
    }
    if (cfg.max_steps > 0 && result.steps >= cfg.max_steps) break;
  }
  return result;
}

struct BankTrainResult {
  ModelBank bank;
  std::array<TrainResult, 4> runs;
};

// Trains the four QP-group models on pre-extracted pair sets (one per
// degradation strength, in increasing-strength order). Each model gets its
// own derived init seed, so banks hold distinct weights.
inline BankTrainResult train_model_bank(const std::array<PairSet, 4>& groups,
                                        const NetworkConfig& net_cfg,
                                        const TrainingConfig& cfg) {
  BankTrainResult result;
  for (int m = 0; m < 4; ++m) {
    result.bank.models[m] = init_weights<float>(
        net_cfg, derive_seed(cfg.seed, /*stream=*/5, m));
    TrainingConfig model_cfg = cfg;
    model_cfg.seed = derive_seed(cfg.seed, /*stream=*/6, m);
    result.runs[m] = train(result.bank.models[m], groups[m], model_cfg);
  }
  return result;
}

// Convenience overload extracting `pairs_per_model` pairs per strength
// directly from frames.
inline BankTrainResult train_model_bank(const std::vector<Frame>& frames,
                                        const std::array<double, 4>& strengths,
                                        const NetworkConfig& net_cfg,
                                        const TrainingConfig& cfg,
                                        int pairs_per_model) {
  for (int i = 1; i < 4; ++i) {
    check(strengths[i] > strengths[i - 1],
          "degradation strengths must be strictly increasing");
  }
  std::array<PairSet, 4> groups;
  for (int m = 0; m < 4; ++m) {
    groups[m] = extract_pairs(frames, DegradeSpec{strengths[m]},
                              pairs_per_model,
                              derive_seed(cfg.seed, /*stream=*/4, m));
  }
  return train_model_bank(groups, net_cfg, cfg);
}

inline void write_loss_csv(const std::string& path,
                           const std::vector<EpochStats>& history) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open loss CSV for writing: " + path);
  out << "epoch,lr,mean_l1\n";
  for (const auto& e : history) {
    out << e.epoch << "," << e.lr << "," << e.mean_l1 << "\n";
  }
  if (!out) throw IoError("failed writing loss CSV: " + path);
}

}  // namespace mfrnet
