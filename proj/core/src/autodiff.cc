/*
 * Copyright 2026 The msa-lab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "msa/autodiff.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "msa/error.h"

#include <cblas.h>

namespace msa {
namespace {

// Row-major C[m, n] = alpha * op(A) * op(B) + beta * C with dense operands:
// op(A) is [m, k], op(B) is [k, n].
void Gemm(bool ta, bool tb, size_t m, size_t n, size_t k, float alpha,
          const float* a, const float* b, float beta, float* c) {
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans,
              tb ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(ta ? m : k), b, static_cast<int>(tb ? k : n),
              beta, c, static_cast<int>(n));
}

void Gemm(bool ta, bool tb, size_t m, size_t n, size_t k, double alpha,
          const double* a, const double* b, double beta, double* c) {
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans,
              tb ? CblasTrans : CblasNoTrans, static_cast<int>(m),
              static_cast<int>(n), static_cast<int>(k), alpha, a,
              static_cast<int>(ta ? m : k), b, static_cast<int>(tb ? k : n),
              beta, c, static_cast<int>(n));
}

void Require(bool ok, const char* what) {
  if (!ok) throw Error("shape_mismatch", what);
}

}  // namespace

template <typename T>
typename Tape<T>::Var Tape<T>::Push(Tensor<T> value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return nodes_.size() - 1;
}

template <typename T>
typename Tape<T>::Var Tape<T>::Leaf(Tensor<T> value, bool requires_grad) {
  return Push(std::move(value), requires_grad);
}

template <typename T>
typename Tape<T>::Var Tape<T>::MatMulTransB(Var a, Var b) {
  const Tensor<T>& A = V(a);
  const Tensor<T>& B = V(b);
  Require(A.rank() == 2 && B.rank() == 2 && A.dim(1) == B.dim(1),
          "MatMulTransB: expected [N,K] x [M,K]");
  const size_t n = A.dim(0), k = A.dim(1), m = B.dim(0);
  Tensor<T> out({n, m});
  for (size_t i = 0; i < n; ++i) {
    const T* ar = &A.data[i * k];
    for (size_t j = 0; j < m; ++j) {
      const T* br = &B.data[j * k];
      T s = 0;
      for (size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      out.data[i * m + j] = s;
    }
  }
  const Var o = Push(std::move(out), R(a) || R(b));
  if (R(o)) {
    nodes_[o].backward = [this, a, b, o, n, k, m] {
      const Tensor<T>& g = G(o);
      const Tensor<T>& A = V(a);
      const Tensor<T>& B = V(b);
      if (R(a)) {
        Tensor<T>& ga = G(a);
        for (size_t i = 0; i < n; ++i) {
          for (size_t j = 0; j < m; ++j) {
            const T gij = g.data[i * m + j];
            if (gij == T{0}) continue;
            const T* br = &B.data[j * k];
            T* gr = &ga.data[i * k];
            for (size_t p = 0; p < k; ++p) gr[p] += gij * br[p];
          }
        }
      }
      if (R(b)) {
        Tensor<T>& gb = G(b);
        for (size_t i = 0; i < n; ++i) {
          const T* ar = &A.data[i * k];
          for (size_t j = 0; j < m; ++j) {
            const T gij = g.data[i * m + j];
            if (gij == T{0}) continue;
            T* gr = &gb.data[j * k];
            for (size_t p = 0; p < k; ++p) gr[p] += gij * ar[p];
          }
        }
      }
    };
  }
  return o;
}

template <typename T>
typename Tape<T>::Var Tape<T>::AddRowBias(Var x, Var bias) {
  const Tensor<T>& X = V(x);
  const Tensor<T>& Bv = V(bias);
  Require(X.rank() == 2 && Bv.size() == X.dim(1), "AddRowBias: bias size");
  Tensor<T> out = X;
  const size_t n = X.dim(0), m = X.dim(1);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < m; ++j) out.data[i * m + j] += Bv.data[j];
  }
  const Var o = Push(std::move(out), R(x) || R(bias));
  if (R(o)) {
    nodes_[o].backward = [this, x, bias, o, n, m] {
      const Tensor<T>& g = G(o);
      if (R(x)) {
        Tensor<T>& gx = G(x);
        for (size_t i = 0; i < g.size(); ++i) gx.data[i] += g.data[i];
      }
      if (R(bias)) {
        Tensor<T>& gb = G(bias);
        for (size_t i = 0; i < n; ++i) {
          for (size_t j = 0; j < m; ++j) gb.data[j] += g.data[i * m + j];
        }
      }
    };
  }
  return o;
}

template <typename T>
typename Tape<T>::Var Tape<T>::Conv2d(Var x, Var w, Var b, int stride_h,
                                      int stride_w) {
  const Tensor<T>& X = V(x);
  const Tensor<T>& W = V(w);
  const Tensor<T>& Bv = V(b);
  Require(X.rank() == 4 && W.rank() == 4 && X.dim(1) == W.dim(1) &&
              Bv.size() == W.dim(0),
          "Conv2d: expected x [N,Ci,H,W], w [Co,Ci,KH,KW], b [Co]");
  const size_t n = X.dim(0), ci = X.dim(1), h = X.dim(2), wd = X.dim(3);
  const size_t co = W.dim(0), kh = W.dim(2), kw = W.dim(3);
  Require(h >= kh && wd >= kw && stride_h > 0 && stride_w > 0,
          "Conv2d: kernel larger than input");
  const size_t sh = stride_h, sw = stride_w;
  const size_t oh = (h - kh) / sh + 1, ow = (wd - kw) / sw + 1;
  // Unrolled patches, one [ci*kh*kw, oh*ow] block per image, so both passes
  // run over contiguous rows.
  const size_t rows = ci * kh * kw, cols = oh * ow;
  // Every entry is written below, so skip zero-initialisation.
  std::shared_ptr<T[]> patches(new T[n * rows * cols]);
  for (size_t in = 0; in < n; ++in) {
    T* pp = patches.get() + in * rows * cols;
    for (size_t ic = 0; ic < ci; ++ic) {
      const T* xp = &X.data[((in * ci) + ic) * h * wd];
      for (size_t ky = 0; ky < kh; ++ky) {
        for (size_t kx = 0; kx < kw; ++kx) {
          T* dst = pp + ((ic * kh + ky) * kw + kx) * cols;
          for (size_t oy = 0; oy < oh; ++oy) {
            const T* xr = xp + (oy * sh + ky) * wd + kx;
            for (size_t ox = 0; ox < ow; ++ox) dst[oy * ow + ox] = xr[ox * sw];
          }
        }
      }
    }
  }
  Tensor<T> out({n, co, oh, ow});
  for (size_t in = 0; in < n; ++in) {
    T* op = &out.data[in * co * cols];
    for (size_t oc = 0; oc < co; ++oc) {
      std::fill(op + oc * cols, op + (oc + 1) * cols, Bv.data[oc]);
    }
    Gemm(false, false, co, cols, rows, T{1}, W.data.data(),
         patches.get() + in * rows * cols, T{1}, op);
  }

  const Var o = Push(std::move(out), R(x) || R(w) || R(b));
  if (R(o)) {
    nodes_[o].backward = [=, this] {
      const Tensor<T>& g = G(o);
      const Tensor<T>& W = V(w);
      std::vector<T> gpatch(R(x) ? rows * cols : 0);
      for (size_t in = 0; in < n; ++in) {
        const T* pp = patches.get() + in * rows * cols;
        const T* gp = &g.data[in * co * cols];
        if (R(b)) {
          for (size_t oc = 0; oc < co; ++oc) {
            T s = 0;
            for (size_t p = 0; p < cols; ++p) s += gp[oc * cols + p];
            G(b).data[oc] += s;
          }
        }
        // dW += g * patches^T, dpatches = W^T * g.
        if (R(w)) {
          Gemm(false, true, co, rows, cols, T{1}, gp, pp, T{1},
               G(w).data.data());
        }
        if (R(x)) {
          Gemm(true, false, rows, cols, co, T{1}, W.data.data(), gp, T{0},
               gpatch.data());
        }
        if (!R(x)) continue;
        // Fold the patch gradients back onto the input grid.
        for (size_t ic = 0; ic < ci; ++ic) {
          T* gx = &G(x).data[((in * ci) + ic) * h * wd];
          for (size_t ky = 0; ky < kh; ++ky) {
            for (size_t kx = 0; kx < kw; ++kx) {
              const T* src = &gpatch[((ic * kh + ky) * kw + kx) * cols];
              for (size_t oy = 0; oy < oh; ++oy) {
                T* gxr = gx + (oy * sh + ky) * wd + kx;
                for (size_t ox = 0; ox < ow; ++ox) {
                  gxr[ox * sw] += src[oy * ow + ox];
                }
              }
            }
          }
        }
      }
    };
  }
  return o;
}

template <typename T>
typename Tape<T>::Var Tape<T>::Relu(Var x) {
  Tensor<T> out = V(x);
  for (T& v : out.data) v = v > T{0} ? v : T{0};
  const Var o = Push(std::move(out), R(x));
  if (R(o)) {
    nodes_[o].backward = [this, x, o] {
      const Tensor<T>& g = G(o);
      const Tensor<T>& y = V(o);
      Tensor<T>& gx = G(x);
      for (size_t i = 0; i < g.size(); ++i) {
        if (y.data[i] > T{0}) gx.data[i] += g.data[i];
      }
    };
  }
  return o;
}

template <typename T>
typename Tape<T>::Var Tape<T>::Tanh(Var x) {
  Tensor<T> out = V(x);
  for (T& v : out.data) v = std::tanh(v);
  const Var o = Push(std::move(out), R(x));
  if (R(o)) {
    nodes_[o].backward = [this, x, o] {
      const Tensor<T>& g = G(o);
      const Tensor<T>& y = V(o);
      Tensor<T>& gx = G(x);
      for (size_t i = 0; i < g.size(); ++i) {
        gx.data[i] += g.data[i] * (T{1} - y.data[i] * y.data[i]);
      }
    };
  }
  return o;
}

template <typename T>
typename Tape<T>::Var Tape<T>::LayerNorm(Var x, Var gain, Var offset, T eps) {
  const Tensor<T>& X = V(x);
  Require(X.rank() == 2 && V(gain).size() == X.dim(1) &&
              V(offset).size() == X.dim(1),
          "LayerNorm: gain/offset size");
  const size_t n = X.dim(0), d = X.dim(1);
  Tensor<T> out({n, d});
  // Normalized rows and inverse deviations are kept for the backward pass.
  auto xhat = std::make_shared<std::vector<T>>(n * d);
  auto inv_std = std::make_shared<std::vector<T>>(n);
  for (size_t i = 0; i < n; ++i) {
    const T* xr = &X.data[i * d];
    T mean = 0;
    for (size_t j = 0; j < d; ++j) mean += xr[j];
    mean /= static_cast<T>(d);
    T var = 0;
    for (size_t j = 0; j < d; ++j) var += (xr[j] - mean) * (xr[j] - mean);
    var /= static_cast<T>(d);
    const T is = T{1} / std::sqrt(var + eps);
    (*inv_std)[i] = is;
    for (size_t j = 0; j < d; ++j) {
      const T xh = (xr[j] - mean) * is;
      (*xhat)[i * d + j] = xh;
      out.data[i * d + j] = xh * V(gain).data[j] + V(offset).data[j];
    }
  }
  const Var o = Push(std::move(out), R(x) || R(gain) || R(offset));
  if (R(o)) {
    nodes_[o].backward = [this, x, gain, offset, o, n, d, xhat, inv_std] {
      const Tensor<T>& g = G(o);
      const Tensor<T>& gn = V(gain);
      for (size_t i = 0; i < n; ++i) {
        const T* gr = &g.data[i * d];
        const T* xh = &(*xhat)[i * d];
        if (R(gain) || R(offset)) {
          for (size_t j = 0; j < d; ++j) {
            if (R(gain)) G(gain).data[j] += gr[j] * xh[j];
            if (R(offset)) G(offset).data[j] += gr[j];
          }
        }
        if (R(x)) {
          T mean_dxh = 0, mean_dxh_xh = 0;
          for (size_t j = 0; j < d; ++j) {
            const T dxh = gr[j] * gn.data[j];
            mean_dxh += dxh;
            mean_dxh_xh += dxh * xh[j];
          }
          mean_dxh /= static_cast<T>(d);
          mean_dxh_xh /= static_cast<T>(d);
          T* gx = &G(x).data[i * d];
          for (size_t j = 0; j < d; ++j) {
            const T dxh = gr[j] * gn.data[j];
            gx[j] += (*inv_std)[i] * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
          }
        }
      }
    };
  }
  return o;
}

template <typename T>
typename Tape<T>::Var Tape<T>::GlobalMaxPool(Var x) {
  const Tensor<T>& X = V(x);
  Require(X.rank() == 4, "GlobalMaxPool: expected [N,C,H,W]");
  const size_t n = X.dim(0), c = X.dim(1), plane = X.dim(2) * X.dim(3);
  Tensor<T> out({n, c});
  auto argmax = std::make_shared<std::vector<size_t>>(n * c);
  for (size_t i = 0; i < n * c; ++i) {
    const T* p = &X.data[i * plane];
    // First maximum wins ties.
    size_t best = 0;
    for (size_t k = 1; k < plane; ++k) {
      if (p[k] > p[best]) best = k;
    }
    (*argmax)[i] = i * plane + best;
    out.data[i] = p[best];
  }
  const Var o = Push(std::move(out), R(x));
  if (R(o)) {
    nodes_[o].backward = [this, x, o, argmax] {
      const Tensor<T>& g = G(o);
      Tensor<T>& gx = G(x);
      for (size_t i = 0; i < g.size(); ++i) gx.data[(*argmax)[i]] += g.data[i];
    };
  }
  return o;
}

template <typename T>
typename Tape<T>::Var Tape<T>::GroupMean(
    Var x, const std::vector<std::vector<size_t>>& groups) {
  const Tensor<T>& X = V(x);
  Require(X.rank() == 2, "GroupMean: expected [N,D]");
  const size_t d = X.dim(1);
  Tensor<T> out({groups.size(), d});
  for (size_t g = 0; g < groups.size(); ++g) {
    Require(!groups[g].empty(), "GroupMean: empty group");
    T* orow = &out.data[g * d];
    for (size_t r : groups[g]) {
      Require(r < X.dim(0), "GroupMean: row index out of range");
      for (size_t j = 0; j < d; ++j) orow[j] += X.data[r * d + j];
    }
    const T inv = T{1} / static_cast<T>(groups[g].size());
    for (size_t j = 0; j < d; ++j) orow[j] *= inv;
  }
  const Var o = Push(std::move(out), R(x));
  if (R(o)) {
    nodes_[o].backward = [this, x, o, groups, d] {
      const Tensor<T>& g = G(o);
      Tensor<T>& gx = G(x);
      for (size_t k = 0; k < groups.size(); ++k) {
        const T inv = T{1} / static_cast<T>(groups[k].size());
        for (size_t r : groups[k]) {
          for (size_t j = 0; j < d; ++j) gx.data[r * d + j] += inv * g.data[k * d + j];
        }
      }
    };
  }
  return o;
}

template <typename T>
typename Tape<T>::Var Tape<T>::SoftmaxCrossEntropy(
    Var logits, const std::vector<size_t>& targets, T scale) {
  const Tensor<T>& Z = V(logits);
  Require(Z.rank() == 2 && targets.size() == Z.dim(0),
          "SoftmaxCrossEntropy: one target per row");
  const size_t b = Z.dim(0), k = Z.dim(1);
  auto probs = std::make_shared<std::vector<T>>(b * k);
  T total = 0;
  for (size_t i = 0; i < b; ++i) {
    Require(targets[i] < k, "SoftmaxCrossEntropy: target out of range");
    const T* z = &Z.data[i * k];
    T mx = -std::numeric_limits<T>::infinity();
    for (size_t j = 0; j < k; ++j) mx = std::max(mx, scale * z[j]);
    T sum = 0;
    for (size_t j = 0; j < k; ++j) {
      const T e = std::exp(scale * z[j] - mx);
      (*probs)[i * k + j] = e;
      sum += e;
    }
    for (size_t j = 0; j < k; ++j) (*probs)[i * k + j] /= sum;
    total += -(scale * z[targets[i]] - mx - std::log(sum));
  }
  Tensor<T> out({1});
  out.data[0] = total / static_cast<T>(b);
  const Var o = Push(std::move(out), R(logits));
  if (R(o)) {
    nodes_[o].backward = [this, logits, o, targets, scale, probs, b, k] {
      const T g = G(o).data[0] * scale / static_cast<T>(b);
      Tensor<T>& gz = G(logits);
      for (size_t i = 0; i < b; ++i) {
        for (size_t j = 0; j < k; ++j) {
          const T onehot = j == targets[i] ? T{1} : T{0};
          gz.data[i * k + j] += g * ((*probs)[i * k + j] - onehot);
        }
      }
    };
  }
  return o;
}

template <typename T>
typename Tape<T>::Var Tape<T>::SigmoidCrossEntropy(Var logits,
                                                   const Tensor<T>& targets) {
  const Tensor<T>& Z = V(logits);
  Require(Z.shape == targets.shape, "SigmoidCrossEntropy: target shape");
  T total = 0;
  for (size_t i = 0; i < Z.size(); ++i) {
    const T z = Z.data[i];
    // log(1 + exp(-|z|)) + max(z, 0) - z * y
    total += std::log1p(std::exp(-std::fabs(z))) + std::max(z, T{0}) -
             z * targets.data[i];
  }
  Tensor<T> out({1});
  out.data[0] = total / static_cast<T>(Z.size());
  const Var o = Push(std::move(out), R(logits));
  if (R(o)) {
    nodes_[o].backward = [this, logits, o, targets] {
      const Tensor<T>& Z = V(logits);
      const T g = G(o).data[0] / static_cast<T>(Z.size());
      Tensor<T>& gz = G(logits);
      for (size_t i = 0; i < Z.size(); ++i) {
        const T p = T{1} / (T{1} + std::exp(-Z.data[i]));
        gz.data[i] += g * (p - targets.data[i]);
      }
    };
  }
  return o;
}

template <typename T>
void Tape<T>::Backward(Var root) {
  Require(V(root).size() == 1, "Backward: root must be a scalar");
  for (Node& n : nodes_) {
    n.grad = Tensor<T>(n.value.shape, T{0});
  }
  nodes_[root].grad.data[0] = T{1};
  for (size_t i = root + 1; i-- > 0;) {
    if (nodes_[i].requires_grad && nodes_[i].backward) nodes_[i].backward();
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace msa
