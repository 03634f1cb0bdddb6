#pragma once

// Dense numeric kernel shared by every learning and spectral module.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

#include "apd/error.hpp"

namespace apd {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

/// Seeded random stream. Uniform and Gaussian draws are derived from the raw
/// 64-bit engine output by fixed formulas, so a seed reproduces the same
/// stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal();

  template <typename Derived>
  void fill_normal(Eigen::MatrixBase<Derived>& out, double stddev = 1.0) {
    for (Eigen::Index j = 0; j < out.cols(); ++j)
      for (Eigen::Index i = 0; i < out.rows(); ++i)
        out(i, j) = static_cast<typename Derived::Scalar>(stddev * normal());
  }

  /// Fisher-Yates shuffle driven by uniform_int.
  template <typename Container>
  void shuffle(Container& c) {
    for (std::int64_t i = static_cast<std::int64_t>(c.size()) - 1; i > 0; --i) {
      auto j = uniform_int(0, i);
      std::swap(c[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(j)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Cosine similarity of two equal-length vectors. Throws on zero norm.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar cosine_sim(const Eigen::MatrixBase<DerivedA>& u,
                                     const Eigen::MatrixBase<DerivedB>& v) {
  if (u.size() != v.size()) throw InvalidArgument("cosine_sim: dimension mismatch");
  const auto nu = u.norm();
  const auto nv = v.norm();
  if (!(nu > 0) || !(nv > 0)) throw InvalidArgument("cosine_sim: zero-norm vector");
  auto c = u.dot(v) / (nu * nv);
  using S = typename DerivedA::Scalar;
  return std::clamp(c, S(-1), S(1));
}

struct SymEigen {
  Vector values;   // ascending
  Matrix vectors;  // column i pairs with values(i)
};

/// Eigendecomposition of a real symmetric matrix. Eigenvalues ascend; each
/// eigenvector's first component with |v| > 1e-10 is made positive. The
/// residual |Av - lambda v|_inf of every pair is verified against
/// tol * max(1, |A|_inf).
SymEigen sym_eigen(const Matrix& a, double tol = 1e-10);

/// Flips eigenvector columns so the first component above 1e-10 in
/// magnitude is positive.
void normalize_signs(Matrix& vectors);

/// Infinity norm (max absolute row sum).
double inf_norm(const Matrix& a);

/// Compares an analytic gradient against central differences of f at
/// params. Returns max_i |g_i - n_i| / max(1e-12, |g_i| + |n_i|).
double grad_check(const std::function<double(const Vector&)>& f,
                  const Vector& analytic, const Vector& params, double eps = 1e-5);

}  // namespace apd
