#ifndef GLOBUG_DOC2VEC_KERNELS_HPP
#define GLOBUG_DOC2VEC_KERNELS_HPP

// Output-layer kernels shared by training, inference and the gradient
// diagnostics. The hidden vector h feeds logits y = b + U h.
//
// Each kernel returns the example loss, accumulates dL/dh into `grad_h`, and
// writes one coefficient per output row such that
//   dL/dU.row(r) = coefficient_r * h^T,   dL/db_r = coefficient_r.

#include "globug/types.hpp"

#include <cmath>
#include <span>
#include <type_traits>
#include <vector>

namespace globug {

template <typename Scalar>
using ConstVectorRef = std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>;

template <typename Scalar>
using VectorRef = std::type_identity_t<Eigen::Ref<Vector<Scalar>>>;

/// One output unit to score: label 1 for the observed word, 0 for noise.
template <typename Scalar>
struct OutputTarget {
  Index row = 0;
  Scalar label = 0;
};

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

/// log(sigmoid(x)) without overflow.
template <typename Scalar>
Scalar log_sigmoid(Scalar x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

/// Negative-sampling loss: -log s(y_pos) - sum log s(-y_neg).
template <typename Scalar>
Scalar negative_sampling_gradient(ConstVectorRef<Scalar> h, const RowMatrix<Scalar>& output,
                                  const Vector<Scalar>& bias,
                                  std::type_identity_t<std::span<const OutputTarget<Scalar>>> targets,
                                  VectorRef<Scalar> grad_h, std::vector<Scalar>& coefficients) {
  coefficients.resize(targets.size());
  Scalar loss = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& t = targets[i];
    const Scalar y = bias(t.row) + output.row(t.row).dot(h);
    loss -= t.label > Scalar(0.5) ? log_sigmoid(y) : log_sigmoid(-y);
    const Scalar g = sigmoid(y) - t.label;
    coefficients[i] = g;
    grad_h.noalias() += g * output.row(t.row).transpose();
  }
  return loss;
}

/// Softmax over every output row, computed stably.
template <typename Scalar>
Vector<Scalar> softmax_probabilities(ConstVectorRef<Scalar> h, const RowMatrix<Scalar>& output,
                                     const Vector<Scalar>& bias) {
  Vector<Scalar> logits = bias + output * h;
  logits.array() -= logits.maxCoeff();
  Vector<Scalar> p = logits.array().exp().matrix();
  p /= p.sum();
  return p;
}

/// Full-softmax loss -log p(target); coefficients has one entry per output
/// row (p_r - [r == target]).
template <typename Scalar>
Scalar softmax_gradient(ConstVectorRef<Scalar> h, const RowMatrix<Scalar>& output,
                        const Vector<Scalar>& bias, Index target, VectorRef<Scalar> grad_h,
                        std::vector<Scalar>& coefficients) {
  Vector<Scalar> logits = bias + output * h;
  const Scalar max_logit = logits.maxCoeff();
  const Scalar log_norm =
      max_logit + std::log((logits.array() - max_logit).exp().sum());
  Vector<Scalar> g = (logits.array() - log_norm).exp().matrix();
  g(target) -= Scalar(1);
  coefficients.assign(g.data(), g.data() + g.size());
  grad_h.noalias() += output.transpose() * g;
  return log_norm - logits(target);
}

}  // namespace globug

#endif  // GLOBUG_DOC2VEC_KERNELS_HPP
