#pragma once

// Parameter-set plumbing shared by the VAE and the intent detector. A
// parameter struct exposes visit_trainable(f), calling f(name, tensor) for
// every learned tensor in a fixed order; everything here is generic over that.

#include <cmath>
#include <string_view>
#include <type_traits>
#include <vector>

#include "apd/numkit.hpp"

namespace apd::nn {

template <typename Scalar>
using Tensor = MatrixX<Scalar>;

/// Xavier/Glorot normal initialization.
template <typename Scalar>
Tensor<Scalar> xavier(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng, double gain = 1.0) {
  Tensor<Scalar> w(fan_in, fan_out);
  rng.fill_normal(w, gain * std::sqrt(2.0 / static_cast<double>(fan_in + fan_out)));
  return w;
}

template <typename Params>
Eigen::Index parameter_count(const Params& p) {
  Eigen::Index n = 0;
  p.visit_trainable([&](std::string_view, const auto& t) { n += t.size(); });
  return n;
}

template <typename Params>
auto flatten(const Params& p) {
  using Scalar = typename Params::Scalar;
  VectorX<Scalar> out(parameter_count(p));
  Eigen::Index at = 0;
  p.visit_trainable([&](std::string_view, const auto& t) {
    out.segment(at, t.size()) = Eigen::Map<const VectorX<Scalar>>(t.data(), t.size());
    at += t.size();
  });
  return out;
}

template <typename Params, typename Derived>
void unflatten(Params& p, const Eigen::MatrixBase<Derived>& flat) {
  using Scalar = typename Params::Scalar;
  Eigen::Index at = 0;
  p.visit_trainable([&](std::string_view, auto& t) {
    Eigen::Map<VectorX<Scalar>>(t.data(), t.size()) = flat.segment(at, t.size());
    at += t.size();
  });
}

/// Collects pointers to every trainable tensor, in visit order.
template <typename Params>
auto tensors(Params& p) {
  using T = std::conditional_t<std::is_const_v<Params>, const Tensor<typename Params::Scalar>,
                               Tensor<typename Params::Scalar>>;
  std::vector<T*> out;
  p.visit_trainable([&](std::string_view, auto& t) { out.push_back(&t); });
  return out;
}

template <typename Params>
void sgd_step(Params& params, Params& grads, double lr) {
  auto ps = tensors(params);
  auto gs = tensors(grads);
  using Scalar = typename Params::Scalar;
  for (std::size_t i = 0; i < ps.size(); ++i) *ps[i] -= static_cast<Scalar>(lr) * *gs[i];
}

/// Adam with bias correction.
template <typename Params>
class Adam {
 public:
  using Scalar = typename Params::Scalar;

  Adam(const Params& like, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    auto ts = tensors(like);
    for (const auto* t : ts) {
      m_.push_back(Tensor<Scalar>::Zero(t->rows(), t->cols()));
      v_.push_back(Tensor<Scalar>::Zero(t->rows(), t->cols()));
    }
  }

  void step(Params& params, Params& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    const auto step = static_cast<Scalar>(lr_ / c1);
    const auto b1 = static_cast<Scalar>(beta1_), b2 = static_cast<Scalar>(beta2_);
    const auto sc2 = static_cast<Scalar>(std::sqrt(c2));
    const auto eps = static_cast<Scalar>(eps_);
    auto ps = tensors(params);
    auto gs = tensors(grads);
    for (std::size_t i = 0; i < ps.size(); ++i) {
      m_[i] = b1 * m_[i] + (Scalar(1) - b1) * *gs[i];
      v_[i] = b2 * v_[i] + (Scalar(1) - b2) * gs[i]->cwiseAbs2();
      ps[i]->array() -= step * m_[i].array() / (v_[i].array().sqrt() / sc2 + eps);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Tensor<Scalar>> m_, v_;
};

/// Row-wise stack of selected rows.
template <typename Scalar>
MatrixX<Scalar> gather_rows(const MatrixX<Scalar>& m, const std::vector<std::size_t>& idx,
                            std::size_t begin, std::size_t end) {
  MatrixX<Scalar> out(static_cast<Eigen::Index>(end - begin), m.cols());
  for (std::size_t i = begin; i < end; ++i)
    out.row(static_cast<Eigen::Index>(i - begin)) = m.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

}  // namespace apd::nn
