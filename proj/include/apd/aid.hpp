#pragma once

// Adversarial intent detector: a pre-norm transformer encoder over a
// two-token sequence (projected VAE latent, projected spectral features),
// mean-pooled into a logistic output.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "apd/error.hpp"
#include "apd/nn.hpp"
#include "apd/numkit.hpp"

namespace apd {

struct AidConfig {
  int layers = 4;
  int heads = 8;
  int hidden = 256;
  int latent_dim = 128;
  int spectral_dim = 16;
  double threshold = 0.5;

  int ffn_dim() const { return 4 * hidden; }
  void validate() const;
};

struct AidHyper {
  double lr = 1e-3;
  int epochs = 10;
  int batch = 32;
  std::uint64_t seed = 0;
};

template <typename Scalar>
struct AidLayer {
  using T = nn::Tensor<Scalar>;
  T ln1_g, ln1_b;
  // Keys carry no bias: softmax over keys ignores a per-query shift, so its
  // gradient is identically zero.
  T wq, bq, wk, wv, bv, wo, bo;
  T ln2_g, ln2_b;
  T ff1_w, ff1_b, ff2_w, ff2_b;
};

template <typename ScalarT>
struct AidParams {
  using Scalar = ScalarT;
  using T = nn::Tensor<Scalar>;

  T lat_w, lat_b;    // latent_dim x hidden, 1 x hidden
  T spec_w, spec_b;  // spectral_dim x hidden, 1 x hidden
  T segment;         // 2 x hidden, row 0 latent token, row 1 spectral token
  std::vector<AidLayer<Scalar>> blocks;
  T lnf_g, lnf_b;
  T out_w, out_b;  // hidden x 1, 1 x 1

  template <typename F> void visit_trainable(F&& f) { visit_impl(*this, f); }
  template <typename F> void visit_trainable(F&& f) const { visit_impl(*this, f); }
  template <typename F> void visit(F&& f) { visit_impl(*this, f); }
  template <typename F> void visit(F&& f) const { visit_impl(*this, f); }

  static AidParams zeros(const AidConfig& c) {
    const int h = c.hidden, f = c.ffn_dim();
    AidParams p;
    p.lat_w = T::Zero(c.latent_dim, h);
    p.lat_b = T::Zero(1, h);
    p.spec_w = T::Zero(c.spectral_dim, h);
    p.spec_b = T::Zero(1, h);
    p.segment = T::Zero(2, h);
    p.blocks.resize(static_cast<std::size_t>(c.layers));
    for (auto& b : p.blocks) {
      b.ln1_g = T::Zero(1, h);
      b.ln1_b = T::Zero(1, h);
      b.wq = T::Zero(h, h); b.bq = T::Zero(1, h);
      b.wk = T::Zero(h, h);
      b.wv = T::Zero(h, h); b.bv = T::Zero(1, h);
      b.wo = T::Zero(h, h); b.bo = T::Zero(1, h);
      b.ln2_g = T::Zero(1, h);
      b.ln2_b = T::Zero(1, h);
      b.ff1_w = T::Zero(h, f); b.ff1_b = T::Zero(1, f);
      b.ff2_w = T::Zero(f, h); b.ff2_b = T::Zero(1, h);
    }
    p.lnf_g = T::Zero(1, h);
    p.lnf_b = T::Zero(1, h);
    p.out_w = T::Zero(h, 1);
    p.out_b = T::Zero(1, 1);
    return p;
  }

  static AidParams init(const AidConfig& c, Rng& rng) {
    const int h = c.hidden, f = c.ffn_dim();
    auto p = zeros(c);
    p.lat_w = nn::xavier<Scalar>(c.latent_dim, h, rng);
    p.spec_w = nn::xavier<Scalar>(c.spectral_dim, h, rng);
    rng.fill_normal(p.segment, 0.02);
    // Residual branches are scaled down with depth.
    const double branch = 1.0 / std::sqrt(2.0 * c.layers);
    for (auto& b : p.blocks) {
      b.ln1_g.setOnes();
      b.ln2_g.setOnes();
      b.wq = nn::xavier<Scalar>(h, h, rng);
      b.wk = nn::xavier<Scalar>(h, h, rng);
      b.wv = nn::xavier<Scalar>(h, h, rng);
      b.wo = nn::xavier<Scalar>(h, h, rng, branch);
      b.ff1_w = nn::xavier<Scalar>(h, f, rng);
      b.ff2_w = nn::xavier<Scalar>(f, h, rng, branch);
    }
    p.lnf_g.setOnes();
    p.out_w = nn::xavier<Scalar>(h, 1, rng, 0.1);
    return p;
  }

  template <typename To>
  AidParams<To> cast() const {
    AidParams<To> out;
    out.blocks.resize(blocks.size());
    std::vector<nn::Tensor<To>*> dst;
    out.visit([&](std::string_view, nn::Tensor<To>& t) { dst.push_back(&t); });
    std::size_t i = 0;
    visit([&](std::string_view, const T& t) { *dst[i++] = t.template cast<To>(); });
    return out;
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    f("aid.lat_w", s.lat_w);
    f("aid.lat_b", s.lat_b);
    f("aid.spec_w", s.spec_w);
    f("aid.spec_b", s.spec_b);
    f("aid.segment", s.segment);
    for (std::size_t l = 0; l < s.blocks.size(); ++l) {
      auto& b = s.blocks[l];
      const std::string pre = "aid.block" + std::to_string(l) + ".";
      f(pre + "ln1_g", b.ln1_g);
      f(pre + "ln1_b", b.ln1_b);
      f(pre + "wq", b.wq);
      f(pre + "bq", b.bq);
      f(pre + "wk", b.wk);
      f(pre + "wv", b.wv);
      f(pre + "bv", b.bv);
      f(pre + "wo", b.wo);
      f(pre + "bo", b.bo);
      f(pre + "ln2_g", b.ln2_g);
      f(pre + "ln2_b", b.ln2_b);
      f(pre + "ff1_w", b.ff1_w);
      f(pre + "ff1_b", b.ff1_b);
      f(pre + "ff2_w", b.ff2_w);
      f(pre + "ff2_b", b.ff2_b);
    }
    f("aid.lnf_g", s.lnf_g);
    f("aid.lnf_b", s.lnf_b);
    f("aid.out_w", s.out_w);
    f("aid.out_b", s.out_b);
  }
};

/// Detector input: the VAE posterior mean and the spectral feature vector.
struct FeatureVector {
  Vector latent;
  Vector spectral;
};

FeatureVector featurize(const Vector& latent, const Vector& spectral, const AidConfig& config);

namespace detail {

inline constexpr double kLayerNormEps = 1e-5;

template <typename Scalar>
struct LayerNormCache {
  MatrixX<Scalar> xhat;
  VectorX<Scalar> rstd;
};

template <typename Scalar>
MatrixX<Scalar> layer_norm(const MatrixX<Scalar>& x, const MatrixX<Scalar>& g, const MatrixX<Scalar>& b,
                           LayerNormCache<Scalar>& cache) {
  const auto width = static_cast<Scalar>(x.cols());
  const VectorX<Scalar> mean = x.rowwise().mean();
  MatrixX<Scalar> centered = x.colwise() - mean;
  const VectorX<Scalar> var = centered.rowwise().squaredNorm() / width;
  cache.rstd = (var.array() + Scalar(kLayerNormEps)).rsqrt();
  cache.xhat = centered.array().colwise() * cache.rstd.array();
  return (cache.xhat.array().rowwise() * g.row(0).array()).rowwise() + b.row(0).array();
}

template <typename Scalar>
MatrixX<Scalar> layer_norm_backward(const MatrixX<Scalar>& dy, const MatrixX<Scalar>& g,
                                    const LayerNormCache<Scalar>& cache, MatrixX<Scalar>& dg,
                                    MatrixX<Scalar>& db) {
  dg = (dy.array() * cache.xhat.array()).colwise().sum();
  db = dy.colwise().sum();
  const MatrixX<Scalar> dxhat = dy.array().rowwise() * g.row(0).array();
  const VectorX<Scalar> m1 = dxhat.rowwise().mean();
  const VectorX<Scalar> m2 = (dxhat.array() * cache.xhat.array()).rowwise().mean();
  return ((dxhat.colwise() - m1).array() - cache.xhat.array().colwise() * m2.array()).colwise() *
         cache.rstd.array();
}

template <typename Scalar>
Scalar gelu(Scalar u) {
  constexpr double c = 0.7978845608028654;  // sqrt(2 / pi)
  return Scalar(0.5) * u * (Scalar(1) + std::tanh(Scalar(c) * (u + Scalar(0.044715) * u * u * u)));
}

template <typename Scalar>
Scalar gelu_grad(Scalar u) {
  constexpr double c = 0.7978845608028654;
  const Scalar t = std::tanh(Scalar(c) * (u + Scalar(0.044715) * u * u * u));
  return Scalar(0.5) * (Scalar(1) + t) +
         Scalar(0.5) * u * (Scalar(1) - t * t) * Scalar(c) * (Scalar(1) + Scalar(3 * 0.044715) * u * u);
}

template <typename Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
struct BlockCache {
  MatrixX<Scalar> x_in, a, q, k, v, ctx, x_mid, b, ff_pre, ff_act;
  LayerNormCache<Scalar> ln1, ln2;
};

template <typename Scalar>
struct ForwardCache {
  Eigen::Index batch = 0;
  MatrixX<Scalar> latent, spectral;
  std::vector<BlockCache<Scalar>> blocks;
  MatrixX<Scalar> x_final;
  LayerNormCache<Scalar> lnf;
  MatrixX<Scalar> pooled;
};

// Two-token attention, vectorized over the batch. Token 0 of example e is row
// e, token 1 is row batch + e.
template <typename Scalar>
MatrixX<Scalar> attention(const MatrixX<Scalar>& q, const MatrixX<Scalar>& k, const MatrixX<Scalar>& v,
                          Eigen::Index batch, int heads) {
  const Eigen::Index dh = q.cols() / heads;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  MatrixX<Scalar> ctx(q.rows(), q.cols());
  for (int h = 0; h < heads; ++h) {
    const Eigen::Index c0 = h * dh;
    for (int t = 0; t < 2; ++t) {
      const auto qt = q.block(t * batch, c0, batch, dh);
      const VectorX<Scalar> s0 = (qt.array() * k.block(0, c0, batch, dh).array()).rowwise().sum() * scale;
      const VectorX<Scalar> s1 = (qt.array() * k.block(batch, c0, batch, dh).array()).rowwise().sum() * scale;
      const VectorX<Scalar> mx = s0.cwiseMax(s1);
      const VectorX<Scalar> e0 = (s0 - mx).array().exp();
      const VectorX<Scalar> e1 = (s1 - mx).array().exp();
      const VectorX<Scalar> z = e0 + e1;
      const VectorX<Scalar> p0 = e0.cwiseQuotient(z), p1 = e1.cwiseQuotient(z);
      ctx.block(t * batch, c0, batch, dh) =
          v.block(0, c0, batch, dh).array().colwise() * p0.array() +
          v.block(batch, c0, batch, dh).array().colwise() * p1.array();
    }
  }
  return ctx;
}

template <typename Scalar>
void attention_backward(const MatrixX<Scalar>& q, const MatrixX<Scalar>& k, const MatrixX<Scalar>& v,
                        const MatrixX<Scalar>& dctx, Eigen::Index batch, int heads, MatrixX<Scalar>& dq,
                        MatrixX<Scalar>& dk, MatrixX<Scalar>& dv) {
  const Eigen::Index dh = q.cols() / heads;
  const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
  dq = MatrixX<Scalar>::Zero(q.rows(), q.cols());
  dk = MatrixX<Scalar>::Zero(k.rows(), k.cols());
  dv = MatrixX<Scalar>::Zero(v.rows(), v.cols());
  for (int h = 0; h < heads; ++h) {
    const Eigen::Index c0 = h * dh;
    for (int t = 0; t < 2; ++t) {
      const auto qt = q.block(t * batch, c0, batch, dh);
      const auto k0 = k.block(0, c0, batch, dh);
      const auto k1 = k.block(batch, c0, batch, dh);
      const auto v0 = v.block(0, c0, batch, dh);
      const auto v1 = v.block(batch, c0, batch, dh);
      const auto dc = dctx.block(t * batch, c0, batch, dh);
      const VectorX<Scalar> s0 = (qt.array() * k0.array()).rowwise().sum() * scale;
      const VectorX<Scalar> s1 = (qt.array() * k1.array()).rowwise().sum() * scale;
      const VectorX<Scalar> mx = s0.cwiseMax(s1);
      const VectorX<Scalar> e0 = (s0 - mx).array().exp();
      const VectorX<Scalar> e1 = (s1 - mx).array().exp();
      const VectorX<Scalar> z = e0 + e1;
      const VectorX<Scalar> p0 = e0.cwiseQuotient(z), p1 = e1.cwiseQuotient(z);

      const VectorX<Scalar> dp0 = (dc.array() * v0.array()).rowwise().sum();
      const VectorX<Scalar> dp1 = (dc.array() * v1.array()).rowwise().sum();
      dv.block(0, c0, batch, dh).array() += dc.array().colwise() * p0.array();
      dv.block(batch, c0, batch, dh).array() += dc.array().colwise() * p1.array();
      const VectorX<Scalar> avg = p0.cwiseProduct(dp0) + p1.cwiseProduct(dp1);
      const VectorX<Scalar> ds0 = p0.cwiseProduct(dp0 - avg) * scale;
      const VectorX<Scalar> ds1 = p1.cwiseProduct(dp1 - avg) * scale;
      dq.block(t * batch, c0, batch, dh).array() +=
          k0.array().colwise() * ds0.array() + k1.array().colwise() * ds1.array();
      dk.block(0, c0, batch, dh).array() += qt.array().colwise() * ds0.array();
      dk.block(batch, c0, batch, dh).array() += qt.array().colwise() * ds1.array();
    }
  }
}

}  // namespace detail

/// Batched forward pass; returns logits (batch x 1). Rows of latent and
/// spectral are examples. Fills cache when non-null.
template <typename Scalar>
MatrixX<Scalar> aid_logits(const MatrixX<Scalar>& latent, const MatrixX<Scalar>& spectral,
                           const AidParams<Scalar>& p, const AidConfig& c,
                           detail::ForwardCache<Scalar>* cache = nullptr) {
  using M = MatrixX<Scalar>;
  if (latent.cols() != c.latent_dim || spectral.cols() != c.spectral_dim ||
      latent.rows() != spectral.rows() || latent.rows() == 0)
    throw InvalidArgument("aid_forward: input shape mismatch");
  const Eigen::Index batch = latent.rows();

  M x(2 * batch, c.hidden);
  x.topRows(batch) = ((latent * p.lat_w).rowwise() + (p.lat_b.row(0) + p.segment.row(0)));
  x.bottomRows(batch) = ((spectral * p.spec_w).rowwise() + (p.spec_b.row(0) + p.segment.row(1)));

  detail::ForwardCache<Scalar> local;
  auto& fc = cache ? *cache : local;
  fc.batch = batch;
  fc.blocks.resize(p.blocks.size());
  if (cache) {
    fc.latent = latent;
    fc.spectral = spectral;
  }

  for (std::size_t l = 0; l < p.blocks.size(); ++l) {
    const auto& b = p.blocks[l];
    auto& bc = fc.blocks[l];
    bc.x_in = x;
    bc.a = detail::layer_norm<Scalar>(x, b.ln1_g, b.ln1_b, bc.ln1);
    bc.q = (bc.a * b.wq).rowwise() + b.bq.row(0);
    bc.k = bc.a * b.wk;
    bc.v = (bc.a * b.wv).rowwise() + b.bv.row(0);
    bc.ctx = detail::attention<Scalar>(bc.q, bc.k, bc.v, batch, c.heads);
    x.noalias() += bc.ctx * b.wo;
    x.rowwise() += b.bo.row(0);
    bc.x_mid = x;
    bc.b = detail::layer_norm<Scalar>(x, b.ln2_g, b.ln2_b, bc.ln2);
    bc.ff_pre = (bc.b * b.ff1_w).rowwise() + b.ff1_b.row(0);
    bc.ff_act = bc.ff_pre.unaryExpr([](Scalar u) { return detail::gelu(u); });
    x.noalias() += bc.ff_act * b.ff2_w;
    x.rowwise() += b.ff2_b.row(0);
  }
  fc.x_final = x;
  const M y = detail::layer_norm<Scalar>(x, p.lnf_g, p.lnf_b, fc.lnf);
  fc.pooled = (y.topRows(batch) + y.bottomRows(batch)) * Scalar(0.5);
  M logits = (fc.pooled * p.out_w).array() + p.out_b(0, 0);
  if (!logits.allFinite()) throw NumericalError("aid_forward: non-finite activation");
  return logits;
}

/// Gradients of a scalar loss given d(loss)/d(logits) (batch x 1).
template <typename Scalar>
void aid_backward(const detail::ForwardCache<Scalar>& fc, const MatrixX<Scalar>& dlogits,
                  const AidParams<Scalar>& p, const AidConfig& c, AidParams<Scalar>& g) {
  using M = MatrixX<Scalar>;
  const Eigen::Index batch = fc.batch;
  g.blocks.resize(p.blocks.size());

  g.out_w = fc.pooled.transpose() * dlogits;
  g.out_b = M::Constant(1, 1, dlogits.sum());
  const M dpool = dlogits * p.out_w.transpose();
  M dy(2 * batch, c.hidden);
  dy.topRows(batch) = dpool * Scalar(0.5);
  dy.bottomRows(batch) = dpool * Scalar(0.5);
  M dx = detail::layer_norm_backward<Scalar>(dy, p.lnf_g, fc.lnf, g.lnf_g, g.lnf_b);

  for (std::size_t li = p.blocks.size(); li-- > 0;) {
    const auto& b = p.blocks[li];
    const auto& bc = fc.blocks[li];
    auto& gb = g.blocks[li];

    gb.ff2_w = bc.ff_act.transpose() * dx;
    gb.ff2_b = dx.colwise().sum();
    M dpre = dx * b.ff2_w.transpose();
    dpre.array() *= bc.ff_pre.unaryExpr([](Scalar u) { return detail::gelu_grad(u); }).array();
    gb.ff1_w = bc.b.transpose() * dpre;
    gb.ff1_b = dpre.colwise().sum();
    const M db = dpre * b.ff1_w.transpose();
    dx += detail::layer_norm_backward<Scalar>(db, b.ln2_g, bc.ln2, gb.ln2_g, gb.ln2_b);

    gb.wo = bc.ctx.transpose() * dx;
    gb.bo = dx.colwise().sum();
    const M dctx = dx * b.wo.transpose();
    M dq, dk, dv;
    detail::attention_backward<Scalar>(bc.q, bc.k, bc.v, dctx, batch, c.heads, dq, dk, dv);
    gb.wq = bc.a.transpose() * dq;
    gb.bq = dq.colwise().sum();
    gb.wk = bc.a.transpose() * dk;
    gb.wv = bc.a.transpose() * dv;
    gb.bv = dv.colwise().sum();
    const M da = dq * b.wq.transpose() + dk * b.wk.transpose() + dv * b.wv.transpose();
    dx += detail::layer_norm_backward<Scalar>(da, b.ln1_g, bc.ln1, gb.ln1_g, gb.ln1_b);
  }

  const auto d_top = dx.topRows(batch);
  const auto d_bottom = dx.bottomRows(batch);
  g.lat_w = fc.latent.transpose() * d_top;
  g.lat_b = d_top.colwise().sum();
  g.spec_w = fc.spectral.transpose() * d_bottom;
  g.spec_b = d_bottom.colwise().sum();
  g.segment.resize(2, c.hidden);
  g.segment.row(0) = g.lat_b.row(0);
  g.segment.row(1) = g.spec_b.row(0);
}

/// Probability of the adversarial class for one feature vector.
double aid_forward(const FeatureVector& x, const AidParams<double>& params, const AidConfig& config);

/// Probabilities for each row.
Vector aid_predict(const Matrix& latent, const Matrix& spectral, const AidParams<double>& params,
                   const AidConfig& config);

inline constexpr double kProbClamp = 1e-7;

/// Mean binary cross-entropy, predictions clamped to [1e-7, 1 - 1e-7].
double bce_loss(const Vector& yhat, const Vector& y);

/// KL(Bernoulli(p) || Bernoulli(q)), q clamped to [1e-7, 1 - 1e-7].
double bernoulli_kl(double p, double q);

/// Loss and d(loss)/d(logit) for a batch under the blended objective
/// alpha * BCE(sigmoid(l), y) + (1 - alpha) * T^2 * KL(soft_t || sigmoid(l / T)).
/// Without teacher probabilities the objective is plain BCE.
double detector_objective(const Vector& logits, const Vector& y, const Vector* teacher_soft,
                          double temperature, double alpha, Vector& dlogits);

struct AidTrainResult {
  AidParams<double> params;
  std::vector<double> epoch_losses;
};

/// Adam on mean BCE. Rows of latent/spectral are examples; labels in {0,1}.
AidTrainResult train_aid(const Matrix& latent, const Matrix& spectral, const Vector& labels,
                         const AidConfig& config, const AidHyper& hyper);

struct DistillOptions {
  double temperature = 2.0;
  double alpha = 0.5;
};

/// Trains a student against labels and the teacher's temperature-softened
/// predictions. With alpha = 1 this follows train_aid exactly.
AidTrainResult distill_aid(const AidParams<double>& teacher, const AidConfig& teacher_config,
                           const AidConfig& student_config, const Matrix& latent, const Matrix& spectral,
                           const Vector& labels, const AidHyper& hyper, const DistillOptions& options);

struct PacBound {
  double hoeffding = 0;  // emp + sqrt((ln_H + ln(1/delta)) / (2m))
  double occam = 0;      // (ln_H + ln(1/delta)) / m
};

PacBound pac_bound(double m, double ln_h, double delta, double emp_err);

}  // namespace apd
