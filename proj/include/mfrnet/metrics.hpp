#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "mfrnet/common.hpp"
#include "mfrnet/frame.hpp"

namespace mfrnet {

// Luma-only PSNR in dB against the full-scale peak of the bit depth.
// Identical planes return +infinity.
inline double psnr_luma(const Frame& reference, const Frame& test) {
  check(reference.width == test.width && reference.height == test.height &&
            reference.bit_depth == test.bit_depth,
        "psnr_luma geometry/bit-depth mismatch: " +
            std::to_string(reference.width) + "x" +
            std::to_string(reference.height) + "/" +
            std::to_string(reference.bit_depth) + "b vs " +
            std::to_string(test.width) + "x" + std::to_string(test.height) +
            "/" + std::to_string(test.bit_depth) + "b");
  double sse = 0.0;
  for (std::size_t i = 0; i < reference.y.size(); ++i) {
    const double d = static_cast<double>(reference.y[i]) -
                     static_cast<double>(test.y[i]);
    sse += d * d;
  }
  if (sse == 0.0) return std::numeric_limits<double>::infinity();
  const double mse = sse / static_cast<double>(reference.y.size());
  const double peak = static_cast<double>(reference.max_sample());
  return 10.0 * std::log10(peak * peak / mse);
}

struct RDPoint {
  double rate = 0.0;     // unit-agnostic, consistent within a curve
  double quality = 0.0;  // dB
};

// A 4-point rate-distortion curve. Valid curves are strictly increasing in
// both rate and quality once sorted by rate; anything else is rejected
// rather than silently reordered into a fit.
struct RDCurve {
  std::array<RDPoint, 4> points;

  RDCurve sorted() const {
    RDCurve c = *this;
    std::sort(c.points.begin(), c.points.end(),
              [](const RDPoint& a, const RDPoint& b) { return a.rate < b.rate; });
    return c;
  }

  void validate() const {
    RDCurve c = sorted();
    for (const auto& p : c.points) {
      check(p.rate > 0.0, "RD curve rate must be positive");
      check(std::isfinite(p.quality), "RD curve quality must be finite");
    }
    for (int i = 1; i < 4; ++i) {
      check(c.points[i].rate > c.points[i - 1].rate,
            "RD curve rates must be strictly increasing");
      check(c.points[i].quality > c.points[i - 1].quality,
            "RD curve must be strictly increasing in quality");
    }
  }
};

namespace detail {

// Cubic through four points by Newton divided differences, returned as
// power-basis coefficients c0 + c1 x + c2 x^2 + c3 x^3.
inline std::array<double, 4> fit_cubic(const std::array<double, 4>& x,
                                       const std::array<double, 4>& y) {
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      check(x[i] != x[j], "cubic fit requires distinct abscissae");
    }
  }
  double d[4] = {y[0], y[1], y[2], y[3]};
  for (int level = 1; level < 4; ++level) {
    for (int i = 3; i >= level; --i) {
      d[i] = (d[i] - d[i - 1]) / (x[i] - x[i - level]);
    }
  }
  // Expand the Newton form to power basis.
  std::array<double, 4> c{d[0], 0.0, 0.0, 0.0};
  std::array<double, 4> basis{1.0, 0.0, 0.0, 0.0};  // prod (x - x_i)
  for (int level = 1; level < 4; ++level) {
    // basis *= (x - x[level-1])
    std::array<double, 4> nb{};
    for (int i = 0; i < 3; ++i) nb[i + 1] += basis[i];
    for (int i = 0; i < 4; ++i) nb[i] -= x[level - 1] * basis[i];
    basis = nb;
    for (int i = 0; i < 4; ++i) c[i] += d[level] * basis[i];
  }
  return c;
}

inline double eval_cubic(const std::array<double, 4>& c, double x) {
  return ((c[3] * x + c[2]) * x + c[1]) * x + c[0];
}

// Definite integral of the cubic via its quartic antiderivative.
inline double integrate_cubic(const std::array<double, 4>& c, double lo,
                              double hi) {
  auto anti = [&](double x) {
    return ((c[3] / 4.0 * x + c[2] / 3.0) * x + c[1] / 2.0) * x * x +
           c[0] * x;
  };
  return anti(hi) - anti(lo);
}

struct BdInput {
  std::array<double, 4> anchor_x, anchor_y, test_x, test_y;
  double lo = 0.0, hi = 0.0;
};

// Shared setup: validates curves, picks the axis (quality or log-rate),
// and computes the overlapping integration range.
inline BdInput bd_setup(const RDCurve& anchor, const RDCurve& test,
                        bool x_is_quality) {
  anchor.validate();
  test.validate();
  RDCurve a = anchor.sorted();
  RDCurve t = test.sorted();
  BdInput in;
  for (int i = 0; i < 4; ++i) {
    const double alr = std::log10(a.points[i].rate);
    const double tlr = std::log10(t.points[i].rate);
    if (x_is_quality) {
      in.anchor_x[i] = a.points[i].quality;
      in.anchor_y[i] = alr;
      in.test_x[i] = t.points[i].quality;
      in.test_y[i] = tlr;
    } else {
      in.anchor_x[i] = alr;
      in.anchor_y[i] = a.points[i].quality;
      in.test_x[i] = tlr;
      in.test_y[i] = t.points[i].quality;
    }
  }
  in.lo = std::max(in.anchor_x.front(), in.test_x.front());
  in.hi = std::min(in.anchor_x.back(), in.test_x.back());
  check(in.hi - in.lo >= (x_is_quality ? 0.01 : 1e-6),
        "BD curves have a degenerate overlap range");
  return in;
}

}  // namespace detail

// Bjontegaard delta rate in percent: fits log10(rate) as a cubic in quality
// for both curves (exact interpolation through the 4 points), integrates
// over the overlapping quality range and maps the mean log-rate difference
// back to a relative rate change. Negative values mean bitrate savings.
inline double bd_rate(const RDCurve& anchor, const RDCurve& test) {
  detail::BdInput in = detail::bd_setup(anchor, test, /*x_is_quality=*/true);
  const auto fa = detail::fit_cubic(in.anchor_x, in.anchor_y);
  const auto ft = detail::fit_cubic(in.test_x, in.test_y);
  const double span = in.hi - in.lo;
  const double avg_diff = (detail::integrate_cubic(ft, in.lo, in.hi) -
                           detail::integrate_cubic(fa, in.lo, in.hi)) /
                          span;
  return (std::pow(10.0, avg_diff) - 1.0) * 100.0;
}

// Bjontegaard delta quality in dB: the dual fit, quality as a cubic in
// log10(rate), averaged over the overlapping log-rate range. Positive values
// mean the test curve is better at equal rate.
inline double bd_quality(const RDCurve& anchor, const RDCurve& test) {
  detail::BdInput in = detail::bd_setup(anchor, test, /*x_is_quality=*/false);
  const auto fa = detail::fit_cubic(in.anchor_x, in.anchor_y);
  const auto ft = detail::fit_cubic(in.test_x, in.test_y);
  const double span = in.hi - in.lo;
  return (detail::integrate_cubic(ft, in.lo, in.hi) -
          detail::integrate_cubic(fa, in.lo, in.hi)) /
         span;
}

}  // namespace mfrnet
