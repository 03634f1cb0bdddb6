#include "apd/numkit.hpp"

#include <algorithm>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace apd {

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw InvalidArgument("uniform_int: empty range");
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(engine_());
  // Rejection sampling against the largest multiple of span.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double inf_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

void normalize_signs(Matrix& vectors) {
  for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
    for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
      const double v = vectors(i, j);
      if (std::abs(v) > 1e-10) {
        if (v < 0) vectors.col(j) = -vectors.col(j);
        break;
      }
    }
  }
}

SymEigen sym_eigen(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) throw InvalidArgument("sym_eigen: matrix is not square");
  if (!a.allFinite()) throw InvalidArgument("sym_eigen: non-finite entry");
  const double scale = std::max(1.0, inf_norm(a));
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidArgument("sym_eigen: matrix is not symmetric");
  if (a.rows() == 0) return {};

  Eigen::SelfAdjointEigenSolver<Matrix> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericalError("sym_eigen: no convergence");

  SymEigen out{solver.eigenvalues(), solver.eigenvectors()};
  normalize_signs(out.vectors);

  const Matrix residual = a * out.vectors - out.vectors * out.values.asDiagonal();
  if (residual.cwiseAbs().maxCoeff() > tol * scale)
    throw NumericalError("sym_eigen: residual above tolerance");
  return out;
}

double grad_check(const std::function<double(const Vector&)>& f, const Vector& analytic,
                  const Vector& params, double eps) {
  if (analytic.size() != params.size())
    throw InvalidArgument("grad_check: gradient and parameter sizes differ");
  Vector p = params;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double orig = p(i);
    p(i) = orig + eps;
    const double fp = f(p);
    p(i) = orig - eps;
    const double fm = f(p);
    p(i) = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericalError("grad_check: non-finite function value");
    const double numeric = (fp - fm) / (2.0 * eps);
    const double err = std::abs(analytic(i) - numeric) /
                       std::max(1e-12, std::abs(analytic(i)) + std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace apd
