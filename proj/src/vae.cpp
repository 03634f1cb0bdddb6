#include "apd/vae.hpp"

#include <numeric>

#include "apd/log.hpp"

namespace apd {

void VaeConfig::validate() const {
  if (d_in < 1 || hidden < 1 || k < 2) throw InvalidArgument("vae: dimensions must be positive");
  if (split <= 0 || split >= k) throw InvalidArgument("vae: split must satisfy 0 < split < k");
  if (!(beta >= 0.0)) throw InvalidArgument("vae: beta must be nonnegative");
  if (!(input_std > 0.0)) throw InvalidArgument("vae: input_std must be positive");
}

LatentCode vae_encode(const Vector& x, const VaeParams<double>& p, const VaeConfig& c) {
  auto [mu, lv] = vae_encode_batch<double>(x.transpose(), p);
  LatentCode code;
  code.mu = mu.row(0).transpose();
  code.logvar = lv.row(0).transpose();
  code.z = code.mu;
  code.split = c.split;
  return code;
}

Matrix sample_latents(const Matrix& x, const VaeParams<double>& p, int draws, Rng& rng) {
  if (draws < 1) throw InvalidArgument("sample_latents: draws must be positive");
  auto [mu, lv] = vae_encode_batch<double>(x, p);
  const Eigen::Index k = mu.cols();
  Matrix out(mu.rows() * draws, k);
  Vector eps(k);
  for (Eigen::Index i = 0; i < mu.rows(); ++i) {
    for (int r = 0; r < draws; ++r) {
      rng.fill_normal(eps);
      out.row(i * draws + r) =
          reparameterize(mu.row(i).transpose(), lv.row(i).transpose(), eps).transpose();
    }
  }
  return out;
}

VaeTrainResult train_vae(const Matrix& data, const VaeConfig& config, const VaeHyper& hyper) {
  config.validate();
  if (data.rows() == 0) throw InvalidArgument("train_vae: empty dataset");
  if (data.cols() != config.d_in) throw InvalidArgument("train_vae: input dimension mismatch");
  if (hyper.epochs < 0 || hyper.batch < 1) throw InvalidArgument("train_vae: bad hyperparameters");

  Rng rng(hyper.seed);
  VaeTrainResult result{VaeParams<double>::init(config, rng), {}, 0.0};
  auto& params = result.params;

  params.input_mean = data.colwise().mean();
  const Matrix centered = data.rowwise() - params.input_mean.row(0);
  const auto n = static_cast<double>(data.rows());
  params.input_scale = (centered.colwise().squaredNorm() / n).cwiseSqrt();
  for (Eigen::Index j = 0; j < params.input_scale.cols(); ++j)
    if (!(params.input_scale(0, j) > 1e-8)) params.input_scale(0, j) = 1.0;
  params.input_scale /= config.input_std;

  std::vector<std::size_t> order(static_cast<std::size_t>(data.rows()));
  std::iota(order.begin(), order.end(), 0);
  auto grads = VaeParams<double>::zeros(config);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(hyper.batch)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(hyper.batch));
      const Matrix x = nn::gather_rows(data, order, begin, end);
      Matrix eps(x.rows(), config.k);
      for (Eigen::Index i = 0; i < eps.rows(); ++i)
        for (Eigen::Index j = 0; j < eps.cols(); ++j) eps(i, j) = rng.normal();
      VaeLoss loss;
      try {
        loss = vae_batch_loss<double>(x, params, config, eps, &grads);
      } catch (const NumericalError&) {
        throw NumericalError("VAE training diverged at epoch " + std::to_string(epoch + 1));
      }
      total += loss.loss * static_cast<double>(end - begin);
      nn::sgd_step(params, grads, hyper.lr);
    }
    const double mean = total / n;
    if (!std::isfinite(mean))
      throw NumericalError("VAE training diverged at epoch " + std::to_string(epoch + 1));
    result.epoch_losses.push_back(mean);
    log::debug("vae epoch {} loss {:.6f}", epoch + 1, mean);
  }
  if (!params.enc_w.allFinite() || !params.out_w.allFinite())
    throw NumericalError("VAE training produced non-finite weights");
  result.final_loss = result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back();
  return result;
}

namespace {

double log_det_spd(const Matrix& s) {
  Eigen::LLT<Matrix> llt(s);
  if (llt.info() != Eigen::Success) throw NumericalError("estimate_mi: covariance not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Matrix covariance(const Matrix& x) {
  const Matrix c = x.rowwise() - x.colwise().mean();
  Matrix cov = (c.transpose() * c) / static_cast<double>(x.rows() - 1);
  cov.diagonal().array() += 1e-6;
  return cov;
}

}  // namespace

double estimate_mi(const Matrix& za, const Matrix& zb) {
  if (za.rows() != zb.rows()) throw InvalidArgument("estimate_mi: sample counts differ");
  if (za.cols() < 1 || zb.cols() < 1) throw InvalidArgument("estimate_mi: empty block");
  const Eigen::Index k = za.cols() + zb.cols();
  if (za.rows() < 10 * (k + 1))
    throw InvalidArgument("estimate_mi: need at least 10(k+1) = " + std::to_string(10 * (k + 1)) +
                          " samples");
  Matrix joint(za.rows(), k);
  joint << za, zb;
  const double mi = 0.5 * (log_det_spd(covariance(za)) + log_det_spd(covariance(zb)) -
                           log_det_spd(covariance(joint)));
  return std::max(0.0, mi);
}

}  // namespace apd
