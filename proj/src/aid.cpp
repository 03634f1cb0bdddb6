#include "apd/aid.hpp"

#include <algorithm>
#include <numeric>

#include "apd/log.hpp"

namespace apd {

void AidConfig::validate() const {
  if (layers < 1) throw InvalidArgument("aid: layers must be at least 1");
  if (heads < 1 || hidden < 1 || hidden % heads != 0)
    throw InvalidArgument("aid: hidden must be a positive multiple of heads");
  if (latent_dim < 1 || spectral_dim < 1) throw InvalidArgument("aid: input dimensions must be positive");
  if (!(threshold > 0.0 && threshold < 1.0)) throw InvalidArgument("aid: threshold must lie in (0,1)");
}

FeatureVector featurize(const Vector& latent, const Vector& spectral, const AidConfig& config) {
  if (latent.size() != config.latent_dim)
    throw InvalidArgument("featurize: latent has " + std::to_string(latent.size()) + " entries, expected " +
                          std::to_string(config.latent_dim));
  if (spectral.size() != config.spectral_dim)
    throw InvalidArgument("featurize: spectral has " + std::to_string(spectral.size()) +
                          " entries, expected " + std::to_string(config.spectral_dim));
  if (!latent.allFinite() || !spectral.allFinite()) throw InvalidArgument("featurize: non-finite feature");
  return {latent, spectral};
}

double aid_forward(const FeatureVector& x, const AidParams<double>& params, const AidConfig& config) {
  const Matrix logit = aid_logits<double>(x.latent.transpose(), x.spectral.transpose(), params, config);
  return detail::sigmoid(logit(0, 0));
}

Vector aid_predict(const Matrix& latent, const Matrix& spectral, const AidParams<double>& params,
                   const AidConfig& config) {
  const Matrix logits = aid_logits<double>(latent, spectral, params, config);
  return logits.col(0).unaryExpr([](double l) { return detail::sigmoid(l); });
}

namespace {
double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }
}  // namespace

double bce_loss(const Vector& yhat, const Vector& y) {
  if (yhat.size() == 0) throw InvalidArgument("bce_loss: empty batch");
  if (yhat.size() != y.size()) throw InvalidArgument("bce_loss: length mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double p = clamp_prob(yhat(i));
    total -= y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p);
  }
  return total / static_cast<double>(y.size());
}

double bernoulli_kl(double p, double q) {
  q = clamp_prob(q);
  double kl = 0.0;
  if (p > 0.0) kl += p * std::log(p / q);
  if (p < 1.0) kl += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
  return kl;
}

double detector_objective(const Vector& logits, const Vector& y, const Vector* teacher_soft,
                          double temperature, double alpha, Vector& dlogits) {
  const Eigen::Index n = logits.size();
  if (n == 0 || y.size() != n) throw InvalidArgument("detector_objective: bad batch");
  const double inv_n = 1.0 / static_cast<double>(n);
  dlogits.resize(n);
  double hard = 0.0, soft = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = detail::sigmoid(logits(i));
    const double pc = clamp_prob(p);
    hard -= y(i) * std::log(pc) + (1.0 - y(i)) * std::log(1.0 - pc);
    const double d_hard = (p == pc) ? (p - y(i)) * inv_n : 0.0;
    if (!teacher_soft) {
      dlogits(i) = d_hard;
      continue;
    }
    const double q = detail::sigmoid(logits(i) / temperature);
    const double pt = (*teacher_soft)(i);
    soft += bernoulli_kl(pt, q);
    const double d_soft = (q == clamp_prob(q)) ? temperature * (q - pt) * inv_n : 0.0;
    dlogits(i) = alpha * d_hard + (1.0 - alpha) * d_soft;
  }
  if (!teacher_soft) return hard * inv_n;
  return alpha * hard * inv_n + (1.0 - alpha) * temperature * temperature * soft * inv_n;
}

namespace {

void check_labels(const Matrix& latent, const Matrix& spectral, const Vector& labels) {
  if (latent.rows() != spectral.rows() || latent.rows() != labels.size())
    throw InvalidArgument("train_aid: feature and label counts differ");
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels(i) == 0.0) has0 = true;
    else if (labels(i) == 1.0) has1 = true;
    else throw InvalidArgument("train_aid: labels must be 0 or 1");
  }
  if (!has0 || !has1) throw InvalidArgument("train_aid: dataset needs both classes");
}

AidTrainResult train_impl(const Matrix& latent, const Matrix& spectral, const Vector& labels,
                          const AidConfig& config, const AidHyper& hyper, const Vector* teacher_soft,
                          double temperature, double alpha) {
  config.validate();
  check_labels(latent, spectral, labels);
  if (hyper.epochs < 0 || hyper.batch < 1) throw InvalidArgument("train_aid: bad hyperparameters");

  Rng rng(hyper.seed);
  AidTrainResult result{AidParams<double>::init(config, rng), {}};
  auto& params = result.params;
  auto grads = AidParams<double>::zeros(config);
  nn::Adam<AidParams<double>> opt(params, hyper.lr);

  std::vector<std::size_t> order(static_cast<std::size_t>(labels.size()));
  std::iota(order.begin(), order.end(), 0);
  detail::ForwardCache<double> cache;
  Vector dlogits;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(hyper.batch)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(hyper.batch));
      const Matrix lat = nn::gather_rows(latent, order, begin, end);
      const Matrix spec = nn::gather_rows(spectral, order, begin, end);
      Vector y(static_cast<Eigen::Index>(end - begin));
      Vector soft(y.size());
      for (std::size_t i = begin; i < end; ++i) {
        y(static_cast<Eigen::Index>(i - begin)) = labels(static_cast<Eigen::Index>(order[i]));
        if (teacher_soft) soft(static_cast<Eigen::Index>(i - begin)) = (*teacher_soft)(static_cast<Eigen::Index>(order[i]));
      }
      Matrix logits;
      try {
        logits = aid_logits<double>(lat, spec, params, config, &cache);
      } catch (const NumericalError&) {
        throw NumericalError("detector training diverged at epoch " + std::to_string(epoch + 1));
      }
      const double loss = detector_objective(logits.col(0), y, teacher_soft ? &soft : nullptr,
                                             temperature, alpha, dlogits);
      total += loss * static_cast<double>(end - begin);
      aid_backward<double>(cache, dlogits, params, config, grads);
      opt.step(params, grads);
    }
    const double mean = total / static_cast<double>(order.size());
    if (!std::isfinite(mean))
      throw NumericalError("detector training diverged at epoch " + std::to_string(epoch + 1));
    result.epoch_losses.push_back(mean);
    log::debug("aid epoch {} loss {:.6f}", epoch + 1, mean);
  }
  return result;
}

}  // namespace

AidTrainResult train_aid(const Matrix& latent, const Matrix& spectral, const Vector& labels,
                         const AidConfig& config, const AidHyper& hyper) {
  return train_impl(latent, spectral, labels, config, hyper, nullptr, 1.0, 1.0);
}

AidTrainResult distill_aid(const AidParams<double>& teacher, const AidConfig& teacher_config,
                           const AidConfig& student_config, const Matrix& latent, const Matrix& spectral,
                           const Vector& labels, const AidHyper& hyper, const DistillOptions& options) {
  if (!(options.temperature > 0.0)) throw InvalidArgument("distill: temperature must be positive");
  if (!(options.alpha >= 0.0 && options.alpha <= 1.0)) throw InvalidArgument("distill: alpha must lie in [0,1]");
  if (teacher_config.latent_dim != student_config.latent_dim ||
      teacher_config.spectral_dim != student_config.spectral_dim)
    throw InvalidArgument("distill: teacher and student inputs differ");
  const Matrix teacher_logits = aid_logits<double>(latent, spectral, teacher, teacher_config);
  const Vector soft = teacher_logits.col(0).unaryExpr(
      [t = options.temperature](double l) { return detail::sigmoid(l / t); });
  return train_impl(latent, spectral, labels, student_config, hyper, &soft, options.temperature,
                    options.alpha);
}

PacBound pac_bound(double m, double ln_h, double delta, double emp_err) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("pac_bound: delta must lie in (0,1)");
  if (!(m >= 1.0)) throw InvalidArgument("pac_bound: m must be at least 1");
  if (!(ln_h >= 0.0)) throw InvalidArgument("pac_bound: ln_H must be nonnegative");
  if (!(emp_err >= 0.0 && emp_err <= 1.0)) throw InvalidArgument("pac_bound: empirical error must lie in [0,1]");
  const double complexity = ln_h + std::log(1.0 / delta);
  return {emp_err + std::sqrt(complexity / (2.0 * m)), complexity / m};
}

}  // namespace apd
