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

#ifndef MSA_AUTODIFF_H_
#define MSA_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <vector>

#include "msa/tensor.h"

namespace msa {

// Minimal reverse-mode differentiation over the operations the encoder,
// projection head, similarity and losses need. Values are recorded in
// forward order; Backward() walks the tape in reverse and accumulates
// gradients into every node that (transitively) depends on a leaf created
// with requires_grad.
//
// Instantiated for float (training) and double (gradient verification).
template <typename T>
class Tape {
 public:
  using Var = size_t;

  Var Leaf(Tensor<T> value, bool requires_grad);
  Var Constant(Tensor<T> value) { return Leaf(std::move(value), false); }

  // a [N, K], b [M, K] -> a * b^T [N, M].
  Var MatMulTransB(Var a, Var b);
  // x [N, M] + bias [M] broadcast over rows.
  Var AddRowBias(Var x, Var bias);
  // x [N, Ci, H, W], w [Co, Ci, KH, KW], b [Co]; no padding.
  Var Conv2d(Var x, Var w, Var b, int stride_h, int stride_w);
  Var Relu(Var x);
  Var Tanh(Var x);
  // Row-wise over the last axis of x [N, D].
  Var LayerNorm(Var x, Var gain, Var offset, T eps);
  // x [N, C, H, W] -> [N, C], maximum over the spatial axes.
  Var GlobalMaxPool(Var x);
  // x [N, D] -> [G, D]; row g is the mean of rows groups[g].
  Var GroupMean(Var x, const std::vector<std::vector<size_t>>& groups);
  // Mean over rows of -log softmax(scale * logits)[row, targets[row]].
  Var SoftmaxCrossEntropy(Var logits, const std::vector<size_t>& targets,
                          T scale);
  // Mean over all entries of the binary cross-entropy of sigmoid(logits)
  // against targets in {0, 1} (same shape as logits).
  Var SigmoidCrossEntropy(Var logits, const Tensor<T>& targets);

  const Tensor<T>& value(Var v) const { return nodes_[v].value; }
  // Gradient of the last Backward() root; zeros for nodes without one.
  const Tensor<T>& grad(Var v) const { return nodes_[v].grad; }
  bool requires_grad(Var v) const { return nodes_[v].requires_grad; }
  size_t size() const { return nodes_.size(); }

  // root must hold a single element.
  void Backward(Var root);

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  Var Push(Tensor<T> value, bool requires_grad);
  Tensor<T>& G(Var v) { return nodes_[v].grad; }
  const Tensor<T>& V(Var v) const { return nodes_[v].value; }
  bool R(Var v) const { return nodes_[v].requires_grad; }

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace msa

#endif  // MSA_AUTODIFF_H_
