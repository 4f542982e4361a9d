#pragma once

#include <Eigen/Core>
#include <cstdint>

// Thin wrappers around Eigen's matrix product. All convolution math in this
// project reduces to three GEMM forms over im2col buffers; everything else
// is plain loops. Eigen is kept single-threaded (no OpenMP build flags);
// parallelism happens above these calls with fixed work decomposition.

namespace mfrnet::detail {

template <typename T>
using MapCM =
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>>;
template <typename T>
using ConstMapCM = Eigen::Map<
    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>>;
template <typename T>
using ConstMapRM = Eigen::Map<
    const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// out(S x M) = col(S x K) * weight^T, weight stored row-major (M x K).
// Output and col are column-major.
template <typename T>
inline void gemm_forward(const T* col, const T* weight, T* out,
                         std::int64_t sites, int k_dim, int m_dim) {
  ConstMapCM<T> a(col, sites, k_dim);
  ConstMapRM<T> w(weight, m_dim, k_dim);
  MapCM<T> c(out, sites, m_dim);
  c.noalias() = a * w.transpose();
}

// dweight(M x K row-major) += dout(S x M)^T * col(S x K).
template <typename T>
inline void gemm_weight_grad(const T* col, const T* dout, T* dweight,
                             std::int64_t sites, int k_dim, int m_dim,
                             bool accumulate) {
  ConstMapCM<T> a(col, sites, k_dim);
  ConstMapCM<T> g(dout, sites, m_dim);
  // (M x K) row-major viewed as (K x M) column-major, so compute a^T * g.
  MapCM<T> c(dweight, k_dim, m_dim);
  if (accumulate) {
    c.noalias() += a.transpose() * g;
  } else {
    c.noalias() = a.transpose() * g;
  }
}

// dcol(S x K) = dout(S x M) * weight, weight stored row-major (M x K).
template <typename T>
inline void gemm_data_grad(const T* dout, const T* weight, T* dcol,
                           std::int64_t sites, int k_dim, int m_dim) {
  ConstMapCM<T> g(dout, sites, m_dim);
  ConstMapRM<T> w(weight, m_dim, k_dim);
  MapCM<T> c(dcol, sites, k_dim);
  c.noalias() = g * w;
}

}  // namespace mfrnet::detail
