// Copyright 2026 The PDSM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Small convolutional spectrogram classifier with hand-written forward and
// backward passes:
//
//   X (1 x F x T)
//   -> conv3x3 (1 -> 8, pad 1) -> relu -> avgpool 2x2
//   -> conv3x3 (8 -> 16, pad 1) -> relu -> avgpool 2x2
//   -> mean over the remaining grid -> affine (16 -> 2) -> softmax
//
// Average pooling floors odd sizes, dropping the last row/column. All
// arithmetic is double precision.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pdsm/error.hpp"
#include "pdsm/matrix.hpp"
#include "pdsm/rng.hpp"

namespace pdsm {

inline constexpr std::size_t kNumClasses = 2;

/// Channel-major activation volume.
struct Volume {
  std::size_t channels = 0, height = 0, width = 0;
  std::vector<double> v;

  Volume() = default;
  Volume(std::size_t c, std::size_t h, std::size_t w) : channels(c), height(h), width(w), v(c * h * w, 0.0) {}

  std::size_t plane() const noexcept { return height * width; }
  double* channel(std::size_t c) noexcept { return v.data() + c * plane(); }
  const double* channel(std::size_t c) const noexcept { return v.data() + c * plane(); }
};

class ToyClassifier {
 public:
  static constexpr std::size_t kIn = 1, kC1 = 8, kC2 = 16, kK = 9;

  // Offsets into the flat parameter vector.
  static constexpr std::size_t kConv1W = 0;
  static constexpr std::size_t kConv1B = kConv1W + kC1 * kIn * kK;
  static constexpr std::size_t kConv2W = kConv1B + kC1;
  static constexpr std::size_t kConv2B = kConv2W + kC2 * kC1 * kK;
  static constexpr std::size_t kHeadW = kConv2B + kC2;
  static constexpr std::size_t kHeadB = kHeadW + kNumClasses * kC2;
  static constexpr std::size_t kNumParams = kHeadB + kNumClasses;

  static constexpr std::size_t kMinSide = 4;

  ToyClassifier() : params_(kNumParams, 0.0) {}

  /// He-normal conv/head weights, zero biases.
  static ToyClassifier initialize(std::uint64_t seed) {
    ToyClassifier m;
    Rng rng = Rng(seed).split("init");
    auto fill = [&](std::span<double> w, double fan_in, double gain) {
      const double sd = std::sqrt(gain / fan_in);
      for (double& x : w) x = sd * rng.normal();
    };
    fill(m.conv1_w(), kIn * kK, 2.0);
    fill(m.conv2_w(), kC1 * kK, 2.0);
    fill(m.head_w(), kC2, 1.0);
    return m;
  }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  std::span<double> conv1_w() noexcept { return slice(kConv1W, kConv1B); }
  std::span<double> conv1_b() noexcept { return slice(kConv1B, kConv2W); }
  std::span<double> conv2_w() noexcept { return slice(kConv2W, kConv2B); }
  std::span<double> conv2_b() noexcept { return slice(kConv2B, kHeadW); }
  std::span<double> head_w() noexcept { return slice(kHeadW, kHeadB); }
  std::span<double> head_b() noexcept { return slice(kHeadB, kNumParams); }
  std::span<const double> conv1_w() const noexcept { return slice(kConv1W, kConv1B); }
  std::span<const double> conv1_b() const noexcept { return slice(kConv1B, kConv2W); }
  std::span<const double> conv2_w() const noexcept { return slice(kConv2W, kConv2B); }
  std::span<const double> conv2_b() const noexcept { return slice(kConv2B, kHeadW); }
  std::span<const double> head_w() const noexcept { return slice(kHeadW, kHeadB); }
  std::span<const double> head_b() const noexcept { return slice(kHeadB, kNumParams); }

  /// FNV-1a over the little-endian bytes of every parameter, as 16 hex digits.
  std::string hash() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (double p : params_) {
      h = fnv1a(std::string_view(reinterpret_cast<const char*>(&p), sizeof p), h);
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) s[static_cast<std::size_t>(i)] = kHex[h & 0xF];
    return s;
  }

  friend bool operator==(const ToyClassifier&, const ToyClassifier&) = default;

 private:
  std::span<double> slice(std::size_t a, std::size_t b) noexcept { return {params_.data() + a, b - a}; }
  std::span<const double> slice(std::size_t a, std::size_t b) const noexcept {
    return {params_.data() + a, b - a};
  }

  std::vector<double> params_;
};

/// Everything the backward passes need from a forward pass.
struct Activations {
  Volume z1, p1, z2, p2;  // pre-activations and pooled outputs
  std::array<double, ToyClassifier::kC2> pooled{};
  std::array<double, kNumClasses> logits{};
  std::array<double, kNumClasses> probs{};
};

/// Rectifier backward rule. `gradient` is the ordinary derivative,
/// `guided` additionally zeroes negative incoming signal, `rescale` uses
/// DeepLift's finite-difference ratio against a reference forward pass.
enum class ReluRule { gradient, guided, rescale };

namespace model_detail {

inline constexpr double kRescaleEps = 1e-10;

// out[oc] += sum_ic w[oc, ic] (*) in[ic]  (3x3 cross-correlation, zero pad 1)
inline void conv3x3_forward(const double* in, std::size_t cin, double* out, std::size_t cout,
                            std::size_t h, std::size_t w, const double* weights) {
  const std::size_t plane = h * w;
  for (std::size_t oc = 0; oc < cout; ++oc) {
    double* o = out + oc * plane;
    for (std::size_t ic = 0; ic < cin; ++ic) {
      const double* src = in + ic * plane;
      const double* k = weights + (oc * cin + ic) * 9;
      for (std::size_t y = 0; y < h; ++y) {
        double* __restrict d = o + y * w;
        for (int dy = -1; dy <= 1; ++dy) {
          const long yy = static_cast<long>(y) + dy;
          if (yy < 0 || yy >= static_cast<long>(h)) continue;
          const double* s = src + static_cast<std::size_t>(yy) * w;
          const double k0 = k[(dy + 1) * 3 + 0], k1 = k[(dy + 1) * 3 + 1], k2 = k[(dy + 1) * 3 + 2];
          d[0] += k1 * s[0] + (w > 1 ? k2 * s[1] : 0.0);
          for (std::size_t x = 1; x + 1 < w; ++x) d[x] += k0 * s[x - 1] + k1 * s[x] + k2 * s[x + 1];
          if (w > 1) d[w - 1] += k0 * s[w - 2] + k1 * s[w - 1];
        }
      }
    }
  }
}

// din[ic] += sum_oc w[oc, ic] (*)^T dout[oc]
inline void conv3x3_backward_input(const double* dout, std::size_t cout, double* din,
                                   std::size_t cin, std::size_t h, std::size_t w,
                                   const double* weights) {
  const std::size_t plane = h * w;
  for (std::size_t ic = 0; ic < cin; ++ic) {
    double* di = din + ic * plane;
    for (std::size_t oc = 0; oc < cout; ++oc) {
      const double* g = dout + oc * plane;
      const double* k = weights + (oc * cin + ic) * 9;
      for (std::size_t yi = 0; yi < h; ++yi) {
        double* __restrict d = di + yi * w;
        // input row yi receives from output rows y = yi - dy
        for (int dy = -1; dy <= 1; ++dy) {
          const long y = static_cast<long>(yi) - dy;
          if (y < 0 || y >= static_cast<long>(h)) continue;
          const double* s = g + static_cast<std::size_t>(y) * w;
          const double k0 = k[(dy + 1) * 3 + 0], k1 = k[(dy + 1) * 3 + 1], k2 = k[(dy + 1) * 3 + 2];
          // input column xi receives k_dx * g[xi - dx]
          d[0] += k1 * s[0] + (w > 1 ? k0 * s[1] : 0.0);
          for (std::size_t x = 1; x + 1 < w; ++x) d[x] += k2 * s[x - 1] + k1 * s[x] + k0 * s[x + 1];
          if (w > 1) d[w - 1] += k2 * s[w - 2] + k1 * s[w - 1];
        }
      }
    }
  }
}

// dw[oc, ic, ky, kx] += sum_{y,x} dout[oc][y][x] * in[ic][y+dy][x+dx]
inline void conv3x3_backward_weights(const double* dout, std::size_t cout, const double* in,
                                     std::size_t cin, std::size_t h, std::size_t w, double* dw,
                                     double* db) {
  const std::size_t plane = h * w;
  for (std::size_t oc = 0; oc < cout; ++oc) {
    const double* g = dout + oc * plane;
    double bsum = 0.0;
    for (std::size_t i = 0; i < plane; ++i) bsum += g[i];
    db[oc] += bsum;
    for (std::size_t ic = 0; ic < cin; ++ic) {
      const double* src = in + ic * plane;
      double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
      for (std::size_t y = 0; y < h; ++y) {
        const double* gr = g + y * w;
        for (int dy = -1; dy <= 1; ++dy) {
          const long yy = static_cast<long>(y) + dy;
          if (yy < 0 || yy >= static_cast<long>(h)) continue;
          const double* s = src + static_cast<std::size_t>(yy) * w;
          double a0 = 0.0, a1 = 0.0, a2 = 0.0;
          for (std::size_t x = 0; x < w; ++x) {
            a1 += gr[x] * s[x];
            if (x >= 1) a0 += gr[x] * s[x - 1];
            if (x + 1 < w) a2 += gr[x] * s[x + 1];
          }
          acc[(dy + 1) * 3 + 0] += a0;
          acc[(dy + 1) * 3 + 1] += a1;
          acc[(dy + 1) * 3 + 2] += a2;
        }
      }
      double* k = dw + (oc * cin + ic) * 9;
      for (int i = 0; i < 9; ++i) k[i] += acc[i];
    }
  }
}

inline Volume avgpool2(const Volume& in, bool relu) {
  Volume out(in.channels, in.height / 2, in.width / 2);
  for (std::size_t c = 0; c < in.channels; ++c) {
    const double* s = in.channel(c);
    double* d = out.channel(c);
    for (std::size_t i = 0; i < out.height; ++i) {
      const double* r0 = s + (2 * i) * in.width;
      const double* r1 = r0 + in.width;
      for (std::size_t j = 0; j < out.width; ++j) {
        double a = r0[2 * j], b = r0[2 * j + 1], e = r1[2 * j], f = r1[2 * j + 1];
        if (relu) {
          a = a > 0 ? a : 0;
          b = b > 0 ? b : 0;
          e = e > 0 ? e : 0;
          f = f > 0 ? f : 0;
        }
        d[i * out.width + j] = 0.25 * (a + b + e + f);
      }
    }
  }
  return out;
}

inline Volume avgpool2_backward(const Volume& dout, std::size_t h, std::size_t w) {
  Volume din(dout.channels, h, w);
  for (std::size_t c = 0; c < dout.channels; ++c) {
    const double* g = dout.channel(c);
    double* d = din.channel(c);
    for (std::size_t i = 0; i < dout.height; ++i)
      for (std::size_t j = 0; j < dout.width; ++j) {
        const double v = 0.25 * g[i * dout.width + j];
        d[(2 * i) * w + 2 * j] = v;
        d[(2 * i) * w + 2 * j + 1] = v;
        d[(2 * i + 1) * w + 2 * j] = v;
        d[(2 * i + 1) * w + 2 * j + 1] = v;
      }
  }
  return din;
}

inline void relu_backward(Volume& grad, const Volume& z, ReluRule rule, const Volume* ref) {
  for (std::size_t i = 0; i < grad.v.size(); ++i) {
    const double zi = z.v[i];
    double& g = grad.v[i];
    switch (rule) {
      case ReluRule::gradient:
        if (zi <= 0) g = 0.0;
        break;
      case ReluRule::guided:
        if (zi <= 0 || g <= 0) g = 0.0;
        break;
      case ReluRule::rescale: {
        const double zr = ref->v[i];
        const double dz = zi - zr;
        double m;
        if (std::fabs(dz) > kRescaleEps) {
          m = ((zi > 0 ? zi : 0.0) - (zr > 0 ? zr : 0.0)) / dz;
        } else {
          m = zi > 0 ? 1.0 : 0.0;
        }
        g *= m;
        break;
      }
    }
  }
}

}  // namespace model_detail

inline void check_input(const Matrix& x) {
  require(x.rows() >= ToyClassifier::kMinSide && x.cols() >= ToyClassifier::kMinSide,
          "classifier input must be at least 4 x 4, got " + std::to_string(x.rows()) + " x " +
              std::to_string(x.cols()));
  require(all_finite(x), "classifier input has non-finite entries");
}

inline Activations forward_cached(const ToyClassifier& m, const Matrix& x) {
  using namespace model_detail;
  check_input(x);
  const std::size_t h = x.rows(), w = x.cols();
  Activations a;
  a.z1 = Volume(ToyClassifier::kC1, h, w);
  for (std::size_t c = 0; c < ToyClassifier::kC1; ++c) std::fill_n(a.z1.channel(c), a.z1.plane(), m.conv1_b()[c]);
  conv3x3_forward(x.values().data(), 1, a.z1.v.data(), ToyClassifier::kC1, h, w, m.conv1_w().data());
  a.p1 = avgpool2(a.z1, true);

  const std::size_t h2 = a.p1.height, w2 = a.p1.width;
  a.z2 = Volume(ToyClassifier::kC2, h2, w2);
  for (std::size_t c = 0; c < ToyClassifier::kC2; ++c) std::fill_n(a.z2.channel(c), a.z2.plane(), m.conv2_b()[c]);
  conv3x3_forward(a.p1.v.data(), ToyClassifier::kC1, a.z2.v.data(), ToyClassifier::kC2, h2, w2,
                  m.conv2_w().data());
  a.p2 = avgpool2(a.z2, true);

  const double inv = 1.0 / static_cast<double>(a.p2.plane());
  for (std::size_t c = 0; c < ToyClassifier::kC2; ++c) {
    double s = 0.0;
    const double* p = a.p2.channel(c);
    for (std::size_t i = 0; i < a.p2.plane(); ++i) s += p[i];
    a.pooled[c] = s * inv;
  }
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    double z = m.head_b()[k];
    for (std::size_t c = 0; c < ToyClassifier::kC2; ++c) z += m.head_w()[k * ToyClassifier::kC2 + c] * a.pooled[c];
    a.logits[k] = z;
  }
  // two-class softmax written as a logistic of the logit difference so the
  // pair sums to one up to a single rounding
  const double d = a.logits[1] - a.logits[0];
  a.probs[1] = 1.0 / (1.0 + std::exp(-d));
  a.probs[0] = 1.0 / (1.0 + std::exp(d));
  return a;
}

inline std::array<double, kNumClasses> forward(const ToyClassifier& m, const Matrix& x) {
  return forward_cached(m, x).probs;
}

/// Backpropagate `dlogits` (gradient of some scalar w.r.t. the logits).
/// Writes the input gradient into `dx` when non-null and accumulates
/// parameter gradients into `dparams` when non-empty.
inline void backward(const ToyClassifier& m, const Matrix& x, const Activations& a,
                     const std::array<double, kNumClasses>& dlogits, ReluRule rule,
                     const Activations* reference, Matrix* dx, std::span<double> dparams) {
  using namespace model_detail;
  const bool want_params = !dparams.empty();
  const std::size_t C2 = ToyClassifier::kC2, C1 = ToyClassifier::kC1;

  std::array<double, ToyClassifier::kC2> dpooled{};
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    for (std::size_t c = 0; c < C2; ++c) {
      dpooled[c] += dlogits[k] * m.head_w()[k * C2 + c];
      if (want_params) dparams[ToyClassifier::kHeadW + k * C2 + c] += dlogits[k] * a.pooled[c];
    }
    if (want_params) dparams[ToyClassifier::kHeadB + k] += dlogits[k];
  }

  Volume dp2(C2, a.p2.height, a.p2.width);
  const double inv = 1.0 / static_cast<double>(a.p2.plane());
  for (std::size_t c = 0; c < C2; ++c) std::fill_n(dp2.channel(c), dp2.plane(), dpooled[c] * inv);

  Volume dz2 = avgpool2_backward(dp2, a.z2.height, a.z2.width);
  relu_backward(dz2, a.z2, rule, reference ? &reference->z2 : nullptr);

  const std::size_t h2 = a.z2.height, w2 = a.z2.width;
  if (want_params)
    conv3x3_backward_weights(dz2.v.data(), C2, a.p1.v.data(), C1, h2, w2,
                             dparams.data() + ToyClassifier::kConv2W,
                             dparams.data() + ToyClassifier::kConv2B);
  Volume dp1(C1, h2, w2);
  conv3x3_backward_input(dz2.v.data(), C2, dp1.v.data(), C1, h2, w2, m.conv2_w().data());

  Volume dz1 = avgpool2_backward(dp1, a.z1.height, a.z1.width);
  relu_backward(dz1, a.z1, rule, reference ? &reference->z1 : nullptr);

  const std::size_t h = a.z1.height, w = a.z1.width;
  if (want_params)
    conv3x3_backward_weights(dz1.v.data(), C1, x.values().data(), 1, h, w,
                             dparams.data() + ToyClassifier::kConv1W,
                             dparams.data() + ToyClassifier::kConv1B);
  if (dx) {
    *dx = Matrix(h, w, 0.0);
    conv3x3_backward_input(dz1.v.data(), C1, dx->values().data(), 1, h, w, m.conv1_w().data());
  }
}

/// d p_c / d logits for the softmax output.
inline std::array<double, kNumClasses> probability_logit_grad(const Activations& a, std::size_t c) {
  std::array<double, kNumClasses> g{};
  for (std::size_t j = 0; j < kNumClasses; ++j) g[j] = a.probs[c] * ((j == c ? 1.0 : 0.0) - a.probs[j]);
  return g;
}

/// Exact gradient of the class-c probability with respect to every input cell.
inline Matrix input_gradient(const ToyClassifier& m, const Matrix& x, std::size_t c,
                             ReluRule rule = ReluRule::gradient) {
  require(c < kNumClasses, "class index out of range");
  const Activations a = forward_cached(m, x);
  Matrix dx;
  backward(m, x, a, probability_logit_grad(a, c), rule, nullptr, &dx, {});
  return dx;
}

}  // namespace pdsm
