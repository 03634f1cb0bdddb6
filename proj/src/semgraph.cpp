#include "apd/semgraph.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>

namespace apd {

namespace {
constexpr double kZeroEntry = 1e-10;
}

SemanticGraph SemanticGraph::from_adjacency(Matrix adjacency) {
  if (adjacency.rows() != adjacency.cols()) throw InvalidArgument("graph: adjacency not square");
  if (!adjacency.allFinite()) throw InvalidArgument("graph: non-finite weight");
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    if (adjacency(i, i) != 0.0) throw InvalidArgument("graph: nonzero diagonal");
    for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
      const double w = adjacency(i, j);
      if (w < 0.0 || w > 1.0) throw InvalidArgument("graph: weight outside [0,1]");
      if (w != adjacency(j, i)) throw InvalidArgument("graph: adjacency not symmetric");
    }
  }
  SemanticGraph g;
  g.token_index.resize(static_cast<std::size_t>(adjacency.rows()));
  std::iota(g.token_index.begin(), g.token_index.end(), 0);
  g.adjacency = std::move(adjacency);
  return g;
}

SemanticGraph build_graph(const EmbeddingMatrix& e, double tau) {
  if (e.n() < 1) throw InvalidArgument("build_graph: no vertices");
  if (!(tau >= 0.0 && tau < 1.0)) throw InvalidArgument("build_graph: tau must lie in [0,1)");
  const Eigen::Index n = e.n();
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(e.rows.row(i).norm() > 0)) throw InvalidArgument("build_graph: zero-norm embedding row");

  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double w = std::max(0.0, cosine_sim(e.rows.row(i), e.rows.row(j)));
      if (w < tau) w = 0.0;
      a(i, j) = a(j, i) = w;
    }
  }
  return SemanticGraph::from_adjacency(std::move(a));
}

Matrix laplacian(const SemanticGraph& g) {
  Matrix l = -g.adjacency;
  l.diagonal() = g.adjacency.rowwise().sum();
  return l;
}

std::vector<std::size_t> connected_components(const SemanticGraph& g) {
  const auto n = static_cast<std::size_t>(g.n());
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (g.adjacency(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) > 0.0) {
        const auto ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
  std::vector<std::size_t> label(n);
  std::vector<std::size_t> id_of_root(n, std::numeric_limits<std::size_t>::max());
  std::size_t next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = find(i);
    if (id_of_root[r] == std::numeric_limits<std::size_t>::max()) id_of_root[r] = next++;
    label[i] = id_of_root[r];
  }
  return label;
}

CheegerBounds cheeger_bounds(double lambda2) {
  const double l = std::max(0.0, lambda2);
  return {l / 2.0, std::sqrt(2.0 * l)};
}

namespace {

Vector component_fiedler(const std::vector<std::size_t>& comp) {
  const std::size_t count = *std::max_element(comp.begin(), comp.end()) + 1;
  std::vector<std::size_t> sizes(count, 0);
  for (auto c : comp) ++sizes[c];
  // Component ids follow lowest-vertex order, so max_element breaks ties
  // towards the component holding the lowest vertex.
  const auto largest = static_cast<std::size_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
  const double inside = static_cast<double>(sizes[largest]);
  const double outside = static_cast<double>(comp.size()) - inside;
  Vector f(static_cast<Eigen::Index>(comp.size()));
  for (std::size_t i = 0; i < comp.size(); ++i)
    f(static_cast<Eigen::Index>(i)) = comp[i] == largest ? 1.0 / inside : -1.0 / outside;
  f.normalize();
  return f;
}

}  // namespace

SpectralFeatures spectral_features(const SemanticGraph& g, int k_eigs) {
  const Eigen::Index n = g.n();
  if (n < 1) throw InvalidArgument("spectral_features: empty graph");
  if (k_eigs < 2) throw InvalidArgument("spectral_features: need at least two eigenvalues");

  const SymEigen eig = sym_eigen(laplacian(g), 1e-9);
  SpectralFeatures out;
  out.eigenvalues = Vector::Zero(k_eigs);
  const Eigen::Index keep = std::min<Eigen::Index>(k_eigs, n);
  out.eigenvalues.head(keep) = eig.values.head(keep);

  const auto comp = connected_components(g);
  const bool disconnected = n > 1 && *std::max_element(comp.begin(), comp.end()) > 0;
  if (n == 1) {
    out.lambda2 = 0.0;
    out.fiedler = Vector::Zero(1);
  } else if (disconnected) {
    out.lambda2 = 0.0;  // exact: one zero eigenvalue per component
    out.fiedler = component_fiedler(comp);
  } else {
    out.lambda2 = std::max(0.0, eig.values(1));
    out.fiedler = eig.vectors.col(1);
  }
  Matrix f = out.fiedler;
  normalize_signs(f);
  out.fiedler = f.col(0);
  out.cheeger = cheeger_bounds(out.lambda2);

  out.partition.resize(static_cast<std::size_t>(n));
  std::size_t positive = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool neg = out.fiedler(i) < -kZeroEntry;
    out.partition[static_cast<std::size_t>(i)] = neg ? Side::kNegative : Side::kPositive;
    if (!neg) ++positive;
  }

  auto& s = out.stats;
  const double dn = static_cast<double>(n);
  s.fiedler_mean = out.fiedler.mean();
  s.fiedler_std = std::sqrt((out.fiedler.array() - s.fiedler_mean).square().sum() / dn);
  s.positive_fraction = static_cast<double>(positive) / dn;
  std::size_t edges = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (g.adjacency(i, j) > 0.0) ++edges;
  s.edge_density = n > 1 ? static_cast<double>(edges) / (dn * (dn - 1.0) / 2.0) : 0.0;
  s.mean_degree = g.adjacency.sum() / dn;
  s.n = dn;
  return out;
}

Vector SpectralFeatures::to_vector() const {
  const Eigen::Index k = eigenvalues.size();
  Vector v(k + 8);
  v.head(k) = eigenvalues;
  v.tail(8) << cheeger.lower, cheeger.upper, stats.fiedler_mean, stats.fiedler_std,
      stats.positive_fraction, stats.edge_density, stats.mean_degree, stats.n / 64.0;
  return v;
}

double cheeger_bruteforce(const SemanticGraph& g) {
  const Eigen::Index n = g.n();
  if (n < 2 || n > 20) throw InvalidArgument("cheeger_bruteforce: n must lie in [2, 20]");
  const std::uint32_t full = 1u << n;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < full; ++mask) {
    const int size = std::popcount(mask);
    if (2 * size > n) continue;
    double cut = 0.0;
    for (std::uint32_t in = mask; in; in &= in - 1) {
      const int i = std::countr_zero(in);
      for (std::uint32_t out = ~mask & (full - 1); out; out &= out - 1)
        cut += g.adjacency(i, std::countr_zero(out));
    }
    best = std::min(best, cut / static_cast<double>(size));
  }
  return best;
}

}  // namespace apd
