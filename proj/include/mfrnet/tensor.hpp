#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <unordered_set>
#include <utility>
#include <vector>

#include "mfrnet/common.hpp"
#include "mfrnet/detail/gemm.hpp"
#include "mfrnet/detail/im2col.hpp"
#include "mfrnet/parallel.hpp"

namespace mfrnet {

template <typename T>
class Tensor;
template <typename T>
using TensorPtr = std::shared_ptr<Tensor<T>>;

// Dense N x C x H x W tensor, row-major, with an optional gradient buffer
// and the recording hooks reverse-mode differentiation needs. Tensors are
// immutable once produced by an op; only optimizer steps write parameter
// data in place.
template <typename T>
class Tensor : public std::enable_shared_from_this<Tensor<T>> {
 public:
  using Scalar = T;

  explicit Tensor(Shape shape, bool requires_grad = false)
      : shape_(shape),
        data_(static_cast<std::size_t>(shape.numel()), T(0)),
        requires_grad_(requires_grad) {}

  Tensor(Shape shape, std::vector<T> data, bool requires_grad = false)
      : shape_(shape), data_(std::move(data)), requires_grad_(requires_grad) {
    check(static_cast<std::int64_t>(data_.size()) == shape_.numel(),
          "tensor data length " + std::to_string(data_.size()) +
              " does not match shape " + shape_.to_string());
  }

  static TensorPtr<T> zeros(Shape shape, bool requires_grad = false) {
    return std::make_shared<Tensor<T>>(shape, requires_grad);
  }
  static TensorPtr<T> full(Shape shape, T value, bool requires_grad = false) {
    auto t = std::make_shared<Tensor<T>>(shape, requires_grad);
    std::fill(t->data_.begin(), t->data_.end(), value);
    return t;
  }
  static TensorPtr<T> from_data(Shape shape, std::vector<T> data,
                                bool requires_grad = false) {
    return std::make_shared<Tensor<T>>(shape, std::move(data), requires_grad);
  }
  static TensorPtr<T> scalar(T value) {
    return from_data(Shape{1, 1, 1, 1}, {value});
  }

  const Shape& shape() const { return shape_; }
  std::int64_t numel() const { return shape_.numel(); }
  bool requires_grad() const { return requires_grad_; }
  bool is_leaf() const { return parents_.empty(); }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }
  T value() const {
    check(numel() == 1, "value() requires a scalar tensor, got shape " +
                            shape_.to_string());
    return data_[0];
  }

  // Pointer to the contiguous H*W plane of image n, channel c.
  T* plane(int n, int c) {
    return data_.data() + (static_cast<std::int64_t>(n) * shape_.c + c) *
                              shape_.plane_size();
  }
  const T* plane(int n, int c) const {
    return data_.data() + (static_cast<std::int64_t>(n) * shape_.c + c) *
                              shape_.plane_size();
  }

  bool has_grad() const { return !grad_.empty(); }
  std::span<T> grad() {
    ensure_grad();
    return grad_;
  }
  std::span<const T> grad_view() const { return grad_; }
  T* grad_plane(int n, int c) {
    ensure_grad();
    return grad_.data() + (static_cast<std::int64_t>(n) * shape_.c + c) *
                              shape_.plane_size();
  }

  void zero_grad() {
    if (grad_.empty()) {
      grad_.assign(data_.size(), T(0));
    } else {
      std::fill(grad_.begin(), grad_.end(), T(0));
    }
  }

  // --- recording interface used by the ops below ---

  void record(std::vector<TensorPtr<T>> parents,
              std::function<void(Tensor<T>&)> backward_fn) {
    requires_grad_ = false;
    for (const auto& p : parents) {
      if (p->requires_grad_) requires_grad_ = true;
    }
    if (requires_grad_) {
      parents_ = std::move(parents);
      backward_fn_ = std::move(backward_fn);
    }
  }

  const std::vector<TensorPtr<T>>& parents() const { return parents_; }

  void run_backward() {
    if (backward_fn_) backward_fn_(*this);
  }

  void release_buffers() {
    data_ = std::vector<T>();
    grad_ = std::vector<T>();
  }
  void release_graph() {
    parents_.clear();
    backward_fn_ = nullptr;
  }

 private:
  void ensure_grad() {
    if (grad_.empty()) grad_.assign(data_.size(), T(0));
  }

  Shape shape_;
  std::vector<T> data_;
  std::vector<T> grad_;
  bool requires_grad_ = false;
  std::vector<TensorPtr<T>> parents_;
  std::function<void(Tensor<T>&)> backward_fn_;
};

// Weights of one convolution. Kernel sizes are restricted to 1x1 and 3x3,
// stride is always 1 and padding preserves the spatial size.
template <typename T>
struct ConvParams {
  TensorPtr<T> weight;  // (out_channels, in_channels, k, k)
  TensorPtr<T> bias;    // (out_channels) stored as shape {out,1,1,1}

  int out_channels() const { return weight->shape().n; }
  int in_channels() const { return weight->shape().c; }
  int kernel() const { return weight->shape().h; }

  void validate() const {
    check(weight != nullptr && bias != nullptr, "conv params not initialized");
    const Shape& ws = weight->shape();
    check(ws.h == ws.w && (ws.h == 1 || ws.h == 3),
          "conv kernel must be 1x1 or 3x3, got " + ws.to_string());
    check(bias->shape() == Shape{ws.n, 1, 1, 1},
          "conv bias shape " + bias->shape().to_string() +
              " does not match out_channels " + std::to_string(ws.n));
  }
};

namespace detail {

template <typename T>
inline thread_local std::vector<T> conv_scratch;

template <typename T>
std::vector<T>& scratch(std::int64_t size) {
  auto& buf = conv_scratch<T>;
  if (static_cast<std::int64_t>(buf.size()) < size) buf.resize(size);
  return buf;
}

}  // namespace detail

// Convolution over the channel-concatenation of `inputs` (the dense blocks
// of the network consume several earlier feature maps at once; passing them
// here avoids materializing the concatenated tensor). Cross-correlation with
// zero "same" padding, stride 1, plus bias.
template <typename T>
TensorPtr<T> conv2d(const std::vector<TensorPtr<T>>& inputs,
                    const ConvParams<T>& params) {
  check(!inputs.empty(), "conv2d requires at least one input");
  params.validate();
  const Shape s0 = inputs[0]->shape();
  int total_c = 0;
  for (const auto& in : inputs) {
    const Shape& s = in->shape();
    check(s.n == s0.n && s.h == s0.h && s.w == s0.w,
          "conv2d inputs disagree on geometry: " + s0.to_string() + " vs " +
              s.to_string());
    total_c += s.c;
  }
  check(total_c == params.in_channels(),
        "conv2d input channels " + std::to_string(total_c) +
            " do not match weight " + params.weight->shape().to_string());

  const int n = s0.n, h = s0.h, w = s0.w;
  const int k = params.kernel();
  const int kk = k * k;
  const int m = params.out_channels();
  const std::int64_t plane_sz = static_cast<std::int64_t>(h) * w;
  const std::int64_t k_dim = static_cast<std::int64_t>(total_c) * kk;

  auto out = Tensor<T>::zeros(Shape{n, m, h, w});
  const T* wdata = params.weight->values().data();
  const T* bdata = params.bias->values().data();

  // Per-image channel lookup across the input list.
  auto image_plane = [&](int img, int c) -> const T* {
    for (const auto& in : inputs) {
      if (c < in->shape().c) return in->plane(img, c);
      c -= in->shape().c;
    }
    return nullptr;
  };

  parallel_for(n, [&](std::int64_t img) {
    T* out_img = out->plane(static_cast<int>(img), 0);
    if (k == 1 && inputs.size() == 1) {
      // Planes are already the im2col buffer for 1x1 kernels.
      detail::gemm_forward(inputs[0]->plane(static_cast<int>(img), 0), wdata,
                           out_img, plane_sz, static_cast<int>(k_dim), m);
    } else {
      auto& col = detail::scratch<T>(plane_sz * k_dim);
      detail::im2col_image(col.data(), h, w, k, total_c, [&](int c) {
        return image_plane(static_cast<int>(img), c);
      });
      detail::gemm_forward(col.data(), wdata, out_img, plane_sz,
                           static_cast<int>(k_dim), m);
    }
    for (int c = 0; c < m; ++c) {
      T* p = out_img + c * plane_sz;
      const T b = bdata[c];
      for (std::int64_t i = 0; i < plane_sz; ++i) p[i] += b;
    }
  });

  std::vector<TensorPtr<T>> parents = inputs;
  parents.push_back(params.weight);
  parents.push_back(params.bias);
  TensorPtr<T> weight = params.weight;
  TensorPtr<T> bias = params.bias;
  std::vector<TensorPtr<T>> srcs = inputs;
  out->record(std::move(parents), [srcs, weight, bias, total_c, k,
                                   m](Tensor<T>& node) {
    const Shape s = node.shape();
    const int h = s.h, w = s.w, n = s.n;
    const std::int64_t plane_sz = static_cast<std::int64_t>(h) * w;
    const int kk = k * k;
    const std::int64_t k_dim = static_cast<std::int64_t>(total_c) * kk;
    const T* wdata = weight->values().data();

    const bool need_weight_grad = weight->requires_grad();
    bool need_input_grad = false;
    for (const auto& in : srcs) {
      if (in->requires_grad()) need_input_grad = true;
    }
    for (const auto& in : srcs) {
      if (in->requires_grad()) in->grad();  // allocate before parallel section
    }

    // Per-image weight/bias gradient partials, reduced in image order below
    // so the result is identical for any thread count.
    std::vector<std::vector<T>> wpartial;
    std::vector<std::vector<T>> bpartial;
    if (need_weight_grad) {
      wpartial.assign(n, {});
      bpartial.assign(n, {});
    }

    parallel_for(n, [&](std::int64_t img_i) {
      const int img = static_cast<int>(img_i);
      const T* dout_img = node.grad_plane(img, 0);
      auto& col = detail::scratch<T>(plane_sz * k_dim * 2);
      T* colbuf = col.data();
      T* dcolbuf = col.data() + plane_sz * k_dim;

      if (need_weight_grad) {
        detail::im2col_image(colbuf, h, w, k, total_c,
                             [&](int c) -> const T* {
                               for (const auto& in : srcs) {
                                 if (c < in->shape().c) {
                                   return in->plane(img, c);
                                 }
                                 c -= in->shape().c;
                               }
                               return nullptr;
                             });
        auto& wp = wpartial[img];
        wp.assign(static_cast<std::size_t>(m) * k_dim, T(0));
        detail::gemm_weight_grad(colbuf, dout_img, wp.data(), plane_sz,
                                 static_cast<int>(k_dim), m, false);
        auto& bp = bpartial[img];
        bp.assign(m, T(0));
        for (int c = 0; c < m; ++c) {
          const T* p = dout_img + c * plane_sz;
          T acc = T(0);
          for (std::int64_t i = 0; i < plane_sz; ++i) acc += p[i];
          bp[c] = acc;
        }
      }

      if (need_input_grad) {
        detail::gemm_data_grad(dout_img, wdata, dcolbuf, plane_sz,
                               static_cast<int>(k_dim), m);
        detail::col2im_image(dcolbuf, h, w, k, total_c, [&](int c) -> T* {
          for (const auto& in : srcs) {
            if (c < in->shape().c) {
              return in->requires_grad() ? in->grad_plane(img, c) : nullptr;
            }
            c -= in->shape().c;
          }
          return nullptr;
        });
      }
    });

    if (need_weight_grad) {
      auto wg = weight->grad();
      auto bg = bias->grad();
      for (int img = 0; img < n; ++img) {
        const auto& wp = wpartial[img];
        for (std::size_t i = 0; i < wp.size(); ++i) wg[i] += wp[i];
        const auto& bp = bpartial[img];
        for (int c = 0; c < m; ++c) bg[c] += bp[c];
      }
    }
  });
  return out;
}

template <typename T>
TensorPtr<T> conv2d(const TensorPtr<T>& input, const ConvParams<T>& params) {
  return conv2d(std::vector<TensorPtr<T>>{input}, params);
}

// Elementwise x -> x for x >= 0, slope*x otherwise. slope must lie in (0, 1).
template <typename T>
TensorPtr<T> leaky_relu(const TensorPtr<T>& input, T slope) {
  check(slope > T(0) && slope < T(1),
        "leaky_relu slope must lie in (0, 1), got " + std::to_string(slope));
  auto out = Tensor<T>::zeros(input->shape());
  auto in_v = input->values();
  auto out_v = out->values();
  for (std::int64_t i = 0; i < input->numel(); ++i) {
    const T x = in_v[i];
    out_v[i] = x >= T(0) ? x : slope * x;
  }
  out->record({input}, [input, slope](Tensor<T>& node) {
    if (!input->requires_grad()) return;
    auto g = input->grad();
    auto dout = node.grad_view();
    auto y = node.values();
    for (std::int64_t i = 0; i < node.numel(); ++i) {
      g[i] += y[i] >= T(0) ? dout[i] : slope * dout[i];
    }
  });
  return out;
}

// Concatenates along the channel axis; inputs must agree on N, H, W.
template <typename T>
TensorPtr<T> concat_channels(const std::vector<TensorPtr<T>>& inputs) {
  check(!inputs.empty(), "concat_channels requires at least one input");
  const Shape s0 = inputs[0]->shape();
  int total_c = 0;
  for (const auto& in : inputs) {
    const Shape& s = in->shape();
    check(s.n == s0.n && s.h == s0.h && s.w == s0.w,
          "concat_channels inputs disagree on geometry: " + s0.to_string() +
              " vs " + s.to_string());
    total_c += s.c;
  }
  auto out = Tensor<T>::zeros(Shape{s0.n, total_c, s0.h, s0.w});
  const std::int64_t plane_sz = s0.plane_size();
  for (int img = 0; img < s0.n; ++img) {
    int c_out = 0;
    for (const auto& in : inputs) {
      std::copy_n(in->plane(img, 0),
                  plane_sz * in->shape().c, out->plane(img, c_out));
      c_out += in->shape().c;
    }
  }
  std::vector<TensorPtr<T>> srcs = inputs;
  out->record(std::vector<TensorPtr<T>>(inputs),
              [srcs, plane_sz](Tensor<T>& node) {
                const Shape s = node.shape();
                for (int img = 0; img < s.n; ++img) {
                  int c_off = 0;
                  for (const auto& in : srcs) {
                    const int c_in = in->shape().c;
                    if (in->requires_grad()) {
                      const T* src = node.grad_plane(img, c_off);
                      T* dst = in->grad_plane(img, 0);
                      for (std::int64_t i = 0; i < plane_sz * c_in; ++i) {
                        dst[i] += src[i];
                      }
                    }
                    c_off += c_in;
                  }
                }
              });
  return out;
}

// Elementwise sum of two equally shaped tensors.
template <typename T>
TensorPtr<T> add(const TensorPtr<T>& a, const TensorPtr<T>& b) {
  check(a->shape() == b->shape(),
        "add shape mismatch: " + a->shape().to_string() + " vs " +
            b->shape().to_string());
  auto out = Tensor<T>::zeros(a->shape());
  auto av = a->values();
  auto bv = b->values();
  auto ov = out->values();
  for (std::int64_t i = 0; i < out->numel(); ++i) ov[i] = av[i] + bv[i];
  out->record({a, b}, [a, b](Tensor<T>& node) {
    auto dout = node.grad_view();
    if (a->requires_grad()) {
      auto g = a->grad();
      for (std::int64_t i = 0; i < node.numel(); ++i) g[i] += dout[i];
    }
    if (b->requires_grad()) {
      auto g = b->grad();
      for (std::int64_t i = 0; i < node.numel(); ++i) g[i] += dout[i];
    }
  });
  return out;
}

// Mean absolute difference, reduced to a scalar tensor. The subgradient at
// exact ties is taken as zero.
template <typename T>
TensorPtr<T> l1_loss(const TensorPtr<T>& pred, const TensorPtr<T>& target) {
  check(pred->shape() == target->shape(),
        "l1_loss shape mismatch: " + pred->shape().to_string() + " vs " +
            target->shape().to_string());
  auto pv = pred->values();
  auto tv = target->values();
  double acc = 0.0;  // accumulate in double for a stable mean
  for (std::int64_t i = 0; i < pred->numel(); ++i) {
    acc += std::abs(static_cast<double>(pv[i]) - static_cast<double>(tv[i]));
  }
  auto out = Tensor<T>::scalar(static_cast<T>(acc / pred->numel()));
  out->record({pred, target}, [pred, target](Tensor<T>& node) {
    const T upstream = node.grad_view()[0];
    const T inv_count = T(1) / static_cast<T>(pred->numel());
    auto pv = pred->values();
    auto tv = target->values();
    if (pred->requires_grad()) {
      auto g = pred->grad();
      for (std::int64_t i = 0; i < pred->numel(); ++i) {
        const T d = pv[i] - tv[i];
        const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
        g[i] += upstream * inv_count * s;
      }
    }
    if (target->requires_grad()) {
      auto g = target->grad();
      for (std::int64_t i = 0; i < target->numel(); ++i) {
        const T d = pv[i] - tv[i];
        const T s = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
        g[i] -= upstream * inv_count * s;
      }
    }
  });
  return out;
}

// Reverse-mode differentiation from a scalar loss. Gradients accumulate
// additively across fan-out in the reverse of the recorded topological
// order, which is fixed by graph construction. When release_intermediates
// is set, non-leaf buffers are freed as soon as their backward step ran.
template <typename T>
void backward(const TensorPtr<T>& loss, bool release_intermediates = false) {
  check(loss->numel() == 1, "backward requires a scalar loss, got shape " +
                                loss->shape().to_string());
  if (!loss->requires_grad()) return;

  // Iterative post-order DFS over parents.
  std::vector<Tensor<T>*> order;
  std::unordered_set<Tensor<T>*> visited;
  std::vector<std::pair<Tensor<T>*, std::size_t>> stack;
  stack.emplace_back(loss.get(), 0);
  visited.insert(loss.get());
  while (!stack.empty()) {
    auto [node, idx] = stack.back();
    const auto& parents = node->parents();
    if (idx < parents.size()) {
      stack.back().second = idx + 1;
      Tensor<T>* p = parents[idx].get();
      if (p->requires_grad() && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss->grad()[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Tensor<T>* node = *it;
    node->run_backward();
    if (release_intermediates && !node->is_leaf()) {
      node->release_buffers();
      node->release_graph();
    }
  }
}

}  // namespace mfrnet
