#pragma once

// beta-VAE over pooled prompt embeddings.
//
// Encoder: h = tanh(x W_enc + b_enc), mu = h W_mu + b_mu,
//          logvar = clamp(h W_lv + b_lv, -10, 10).
// Decoder: g = tanh(z W_dec + b_dec), x_hat = g W_out + b_out.
// Inputs are standardized per dimension with statistics frozen at training
// time; reconstruction error is measured in the standardized space.

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "apd/error.hpp"
#include "apd/nn.hpp"
#include "apd/numkit.hpp"

namespace apd {

inline constexpr double kLogvarMin = -10.0;
inline constexpr double kLogvarMax = 10.0;

struct VaeConfig {
  int d_in = 64;
  int hidden = 128;
  int k = 128;
  int split = 64;  // z_a = z[0, split), z_b = z[split, k)
  double beta = 0.5;
  // Inputs are standardized per dimension to this spread before encoding.
  double input_std = 10.0;

  void validate() const;
};

struct VaeHyper {
  double lr = 0.01;
  int epochs = 50;
  int batch = 32;
  std::uint64_t seed = 0;
};

template <typename ScalarT>
struct VaeParams {
  using Scalar = ScalarT;
  using T = nn::Tensor<Scalar>;

  // Frozen standardization; not trained.
  T input_mean, input_scale;  // 1 x d_in

  T enc_w, enc_b;        // d_in x hidden, 1 x hidden
  T mu_w, mu_b;          // hidden x k, 1 x k
  T logvar_w, logvar_b;  // hidden x k, 1 x k
  T dec_w, dec_b;        // k x hidden, 1 x hidden
  T out_w, out_b;        // hidden x d_in, 1 x d_in

  template <typename F> void visit_trainable(F&& f) { visit_trainable_impl(*this, f); }
  template <typename F> void visit_trainable(F&& f) const { visit_trainable_impl(*this, f); }

  /// All tensors, standardization first, as persisted.
  template <typename F> void visit(F&& f) { visit_impl(*this, f); }
  template <typename F> void visit(F&& f) const { visit_impl(*this, f); }

  static VaeParams zeros(const VaeConfig& c) {
    VaeParams p;
    p.input_mean = T::Zero(1, c.d_in);
    p.input_scale = T::Ones(1, c.d_in);
    p.enc_w = T::Zero(c.d_in, c.hidden);
    p.enc_b = T::Zero(1, c.hidden);
    p.mu_w = T::Zero(c.hidden, c.k);
    p.mu_b = T::Zero(1, c.k);
    p.logvar_w = T::Zero(c.hidden, c.k);
    p.logvar_b = T::Zero(1, c.k);
    p.dec_w = T::Zero(c.k, c.hidden);
    p.dec_b = T::Zero(1, c.hidden);
    p.out_w = T::Zero(c.hidden, c.d_in);
    p.out_b = T::Zero(1, c.d_in);
    return p;
  }

  static VaeParams init(const VaeConfig& c, Rng& rng) {
    auto p = zeros(c);
    p.enc_w = nn::xavier<Scalar>(c.d_in, c.hidden, rng);
    p.mu_w = nn::xavier<Scalar>(c.hidden, c.k, rng);
    p.logvar_w = nn::xavier<Scalar>(c.hidden, c.k, rng, 0.1);
    p.dec_w = nn::xavier<Scalar>(c.k, c.hidden, rng);
    p.out_w = nn::xavier<Scalar>(c.hidden, c.d_in, rng);
    return p;
  }

  template <typename To>
  VaeParams<To> cast() const {
    VaeParams<To> out;
    auto dst = out.all_tensors();
    std::size_t i = 0;
    visit([&](std::string_view, const T& t) { *dst[i++] = t.template cast<To>(); });
    return out;
  }

  std::vector<T*> all_tensors() {
    std::vector<T*> out;
    visit([&](std::string_view, T& t) { out.push_back(&t); });
    return out;
  }

 private:
  template <typename Self, typename F>
  static void visit_trainable_impl(Self& s, F& f) {
    f("vae.enc_w", s.enc_w);
    f("vae.enc_b", s.enc_b);
    f("vae.mu_w", s.mu_w);
    f("vae.mu_b", s.mu_b);
    f("vae.logvar_w", s.logvar_w);
    f("vae.logvar_b", s.logvar_b);
    f("vae.dec_w", s.dec_w);
    f("vae.dec_b", s.dec_b);
    f("vae.out_w", s.out_w);
    f("vae.out_b", s.out_b);
  }
  template <typename Self, typename F>
  static void visit_impl(Self& s, F& f) {
    f("vae.input_mean", s.input_mean);
    f("vae.input_scale", s.input_scale);
    visit_trainable_impl(s, f);
  }
};

/// Posterior of one input: mu, clamped logvar, and the reparameterized
/// sample z = mu + exp(logvar / 2) * eps for the recorded eps.
struct LatentCode {
  Vector mu;
  Vector logvar;
  Vector z;
  int split = 0;

  auto z_a() const { return z.head(split); }
  auto z_b() const { return z.tail(z.size() - split); }
};

/// KL(N(mu, diag(exp(logvar))) || N(0, I)) = 1/2 sum(mu^2 + e^lv - lv - 1),
/// logvar clamped to [-10, 10] first.
template <typename DerivedM, typename DerivedL>
typename DerivedM::Scalar kl_diag_gauss(const Eigen::MatrixBase<DerivedM>& mu,
                                        const Eigen::MatrixBase<DerivedL>& logvar) {
  using S = typename DerivedM::Scalar;
  if (mu.size() != logvar.size()) throw InvalidArgument("kl_diag_gauss: dimension mismatch");
  const auto lv = logvar.array().cwiseMax(S(kLogvarMin)).cwiseMin(S(kLogvarMax));
  return S(0.5) * (mu.array().square() + lv.exp() - lv - S(1)).sum();
}

/// z = mu + exp(logvar / 2) * eps, logvar clamped to [-10, 10].
template <typename DerivedM, typename DerivedL, typename DerivedE>
VectorX<typename DerivedM::Scalar> reparameterize(const Eigen::MatrixBase<DerivedM>& mu,
                                                  const Eigen::MatrixBase<DerivedL>& logvar,
                                                  const Eigen::MatrixBase<DerivedE>& eps) {
  using S = typename DerivedM::Scalar;
  if (mu.size() != logvar.size() || mu.size() != eps.size())
    throw InvalidArgument("reparameterize: dimension mismatch");
  const auto lv = logvar.array().cwiseMax(S(kLogvarMin)).cwiseMin(S(kLogvarMax));
  return (mu.array() + (lv * S(0.5)).exp() * eps.array()).matrix();
}

struct VaeLoss {
  double loss = 0;
  double recon = 0;
  double kl = 0;
};

namespace detail {

template <typename Scalar>
MatrixX<Scalar> standardize(const VaeParams<Scalar>& p, const MatrixX<Scalar>& x) {
  return ((x.rowwise() - p.input_mean.row(0)).array().rowwise() / p.input_scale.row(0).array())
      .matrix();
}

template <typename Scalar>
MatrixX<Scalar> clamp_logvar(const MatrixX<Scalar>& raw) {
  return raw.array().cwiseMax(Scalar(kLogvarMin)).cwiseMin(Scalar(kLogvarMax)).matrix();
}

}  // namespace detail

/// Mean loss over a batch (rows of x, rows of eps). When grads is non-null it
/// receives d(mean loss)/d(param) for every trainable tensor.
template <typename Scalar>
VaeLoss vae_batch_loss(const MatrixX<Scalar>& x, const VaeParams<Scalar>& p, const VaeConfig& c,
                       const MatrixX<Scalar>& eps, VaeParams<Scalar>* grads = nullptr) {
  if (x.cols() != c.d_in || eps.cols() != c.k || eps.rows() != x.rows() || x.rows() == 0)
    throw InvalidArgument("vae_loss: shape mismatch");
  using M = MatrixX<Scalar>;
  const auto batch = static_cast<Scalar>(x.rows());
  const auto beta = static_cast<Scalar>(c.beta);

  const M xs = detail::standardize(p, x);
  const M h = ((xs * p.enc_w).rowwise() + p.enc_b.row(0)).array().tanh().matrix();
  const M mu = (h * p.mu_w).rowwise() + p.mu_b.row(0);
  const M lv_raw = (h * p.logvar_w).rowwise() + p.logvar_b.row(0);
  const M lv = detail::clamp_logvar(lv_raw);
  const M sigma = (lv.array() * Scalar(0.5)).exp().matrix();
  const M z = mu + (sigma.array() * eps.array()).matrix();
  const M g = ((z * p.dec_w).rowwise() + p.dec_b.row(0)).array().tanh().matrix();
  const M xhat = (g * p.out_w).rowwise() + p.out_b.row(0);

  const M diff = xhat - xs;
  const Scalar recon = diff.squaredNorm() / (batch * static_cast<Scalar>(c.d_in));
  const Scalar kl = Scalar(0.5) * (mu.array().square() + lv.array().exp() - lv.array() - Scalar(1)).sum() / batch;
  VaeLoss out{static_cast<double>(recon + beta * kl), static_cast<double>(recon), static_cast<double>(kl)};
  if (!std::isfinite(out.loss)) throw NumericalError("vae_loss: non-finite value");
  if (!grads) return out;

  const M d_xhat = diff * (Scalar(2) / (batch * static_cast<Scalar>(c.d_in)));
  grads->out_w = g.transpose() * d_xhat;
  grads->out_b = d_xhat.colwise().sum();
  const M d_gpre = ((d_xhat * p.out_w.transpose()).array() * (Scalar(1) - g.array().square())).matrix();
  grads->dec_w = z.transpose() * d_gpre;
  grads->dec_b = d_gpre.colwise().sum();
  const M d_z = d_gpre * p.dec_w.transpose();

  const M d_mu = d_z + mu * (beta / batch);
  const auto in_range = (lv_raw.array() >= Scalar(kLogvarMin) && lv_raw.array() <= Scalar(kLogvarMax))
                            .template cast<Scalar>();
  const M d_lv = ((d_z.array() * eps.array() * sigma.array() * Scalar(0.5) +
                   (lv.array().exp() - Scalar(1)) * (Scalar(0.5) * beta / batch)) *
                  in_range)
                     .matrix();
  grads->mu_w = h.transpose() * d_mu;
  grads->mu_b = d_mu.colwise().sum();
  grads->logvar_w = h.transpose() * d_lv;
  grads->logvar_b = d_lv.colwise().sum();
  const M d_hpre = ((d_mu * p.mu_w.transpose() + d_lv * p.logvar_w.transpose()).array() *
                    (Scalar(1) - h.array().square()))
                       .matrix();
  grads->enc_w = xs.transpose() * d_hpre;
  grads->enc_b = d_hpre.colwise().sum();
  grads->input_mean = M::Zero(1, c.d_in);
  grads->input_scale = M::Zero(1, c.d_in);
  return out;
}

/// Loss of a single pooled vector x under noise eps:
/// recon = |x - x_hat|^2 / d_in, kl = kl_diag_gauss(mu, logvar),
/// loss = recon + beta * kl.
template <typename Scalar>
VaeLoss vae_loss(const VectorX<Scalar>& x, const VaeParams<Scalar>& p, const VaeConfig& c,
                 const VectorX<Scalar>& eps, VaeParams<Scalar>* grads = nullptr) {
  return vae_batch_loss<Scalar>(x.transpose(), p, c, eps.transpose(), grads);
}

/// Posterior means and clamped log-variances for each row of x.
template <typename Scalar>
std::pair<MatrixX<Scalar>, MatrixX<Scalar>> vae_encode_batch(const MatrixX<Scalar>& x,
                                                             const VaeParams<Scalar>& p) {
  using M = MatrixX<Scalar>;
  if (x.cols() != p.enc_w.rows()) throw InvalidArgument("vae_encode: input dimension mismatch");
  const M xs = detail::standardize(p, x);
  const M h = ((xs * p.enc_w).rowwise() + p.enc_b.row(0)).array().tanh().matrix();
  M mu = (h * p.mu_w).rowwise() + p.mu_b.row(0);
  M lv = detail::clamp_logvar<Scalar>((h * p.logvar_w).rowwise() + p.logvar_b.row(0));
  return {std::move(mu), std::move(lv)};
}

/// Encodes one pooled vector; z is set to mu (zero noise).
LatentCode vae_encode(const Vector& x, const VaeParams<double>& p, const VaeConfig& c);

/// Draws `draws` reparameterized samples per row of x; result rows are
/// grouped by input row.
Matrix sample_latents(const Matrix& x, const VaeParams<double>& p, int draws, Rng& rng);

struct VaeTrainResult {
  VaeParams<double> params;
  std::vector<double> epoch_losses;
  double final_loss = 0;
};

/// Mini-batch SGD on the mean loss. Standardization statistics come from the
/// data; noise is drawn fresh per example per step from the seeded stream.
VaeTrainResult train_vae(const Matrix& data, const VaeConfig& config, const VaeHyper& hyper);

/// Gaussian plug-in mutual information (nats) between row-aligned samples:
/// 1/2 (ln det S_a + ln det S_b - ln det S_ab), each covariance regularized
/// by 1e-6 I. Requires m >= 10 (k + 1) rows; result clamped at 0.
double estimate_mi(const Matrix& za, const Matrix& zb);

}  // namespace apd
