#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "apd/semgraph.hpp"

using namespace apd;
using Catch::Matchers::WithinAbs;

namespace {

EmbeddingMatrix rows(std::initializer_list<std::initializer_list<double>> r) {
  Matrix m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return {m, "test"};
}

SemanticGraph path3() {
  Matrix a(3, 3);
  a << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  return SemanticGraph::from_adjacency(a);
}

SemanticGraph unit_k2() {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  return SemanticGraph::from_adjacency(a);
}

// Random weighted graph; each pair gets an edge with probability p. When
// connected is set a random spanning path is added.
SemanticGraph random_graph(Rng& rng, Eigen::Index n, double p, bool connected) {
  Matrix a = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (rng.uniform() < p) a(i, j) = a(j, i) = 0.05 + 0.95 * rng.uniform();
  if (connected) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    for (std::size_t i = 1; i < order.size(); ++i) {
      const double w = 0.05 + 0.95 * rng.uniform();
      a(order[i - 1], order[i]) = a(order[i], order[i - 1]) = w;
    }
  }
  return SemanticGraph::from_adjacency(a);
}

// Union-find component count, independent of connected_components.
std::size_t component_count(const SemanticGraph& g) {
  std::vector<std::size_t> parent(static_cast<std::size_t>(g.n()));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (Eigen::Index i = 0; i < g.n(); ++i)
    for (Eigen::Index j = i + 1; j < g.n(); ++j)
      if (g.adjacency(i, j) > 0) parent[find(static_cast<std::size_t>(i))] = find(static_cast<std::size_t>(j));
  std::size_t roots = 0;
  for (std::size_t i = 0; i < parent.size(); ++i) roots += find(i) == i;
  return roots;
}

}  // namespace

TEST_CASE("build_graph: identical rows give one unit edge", "[semgraph]") {
  const auto g = build_graph(rows({{1, 2, 0}, {1, 2, 0}}), 0.3);
  CHECK_THAT(g.adjacency(0, 1), WithinAbs(1.0, 1e-12));
  CHECK(g.adjacency(0, 0) == 0.0);
  CHECK(g.token_index == std::vector<std::size_t>{0, 1});
}

TEST_CASE("build_graph: orthogonal rows give no edges", "[semgraph]") {
  const auto g = build_graph(rows({{1, 0}, {0, 1}}), 0.3);
  CHECK(g.adjacency.isZero());
}

TEST_CASE("build_graph: only the parallel pair is joined", "[semgraph]") {
  const auto g = build_graph(rows({{1, 0, 0}, {2, 0, 0}, {0, 0, 3}}), 0.3);
  CHECK_THAT(g.adjacency(0, 1), WithinAbs(1.0, 1e-12));
  CHECK(g.adjacency(0, 2) == 0.0);
  CHECK(g.adjacency(1, 2) == 0.0);
}

TEST_CASE("build_graph clips negatives and thresholds at tau", "[semgraph]") {
  // cos(a, b) = -1, cos(a, c) = 0.6, cos(b, c) = -0.6.
  const auto e = rows({{1, 0}, {-1, 0}, {0.6, 0.8}});
  const auto g = build_graph(e, 0.0);
  CHECK(g.adjacency(0, 1) == 0.0);
  CHECK_THAT(g.adjacency(0, 2), WithinAbs(0.6, 1e-12));
  CHECK(g.adjacency(1, 2) == 0.0);
  CHECK(build_graph(e, 0.7).adjacency.isZero());
}

TEST_CASE("build_graph rejects zero rows and bad tau", "[semgraph]") {
  CHECK_THROWS_AS(build_graph(rows({{1, 0}, {0, 0}}), 0.3), InvalidArgument);
  CHECK_THROWS_AS(build_graph(rows({{1, 0}}), 1.0), InvalidArgument);
  CHECK_THROWS_AS(build_graph(rows({{1, 0}}), -0.1), InvalidArgument);
}

TEST_CASE("build_graph yields a valid adjacency on random embeddings", "[semgraph]") {
  Rng rng(21);
  for (double tau : {0.0, 0.1, 0.3, 0.6, 0.9}) {
    Matrix m(12, 6);
    rng.fill_normal(m);
    const auto g = build_graph({m, "test"}, tau);
    CHECK(g.adjacency.isApprox(g.adjacency.transpose(), 0.0));
    CHECK(g.adjacency.diagonal().isZero());
    CHECK(g.adjacency.minCoeff() >= 0.0);
    CHECK(g.adjacency.maxCoeff() <= 1.0);
    for (Eigen::Index i = 0; i < 12; ++i)
      for (Eigen::Index j = 0; j < 12; ++j)
        if (g.adjacency(i, j) > 0) CHECK(g.adjacency(i, j) >= tau);
  }
}

TEST_CASE("from_adjacency enforces the invariants", "[semgraph]") {
  Matrix asym(2, 2);
  asym << 0, 1, 0.5, 0;
  CHECK_THROWS_AS(SemanticGraph::from_adjacency(asym), InvalidArgument);
  Matrix diag(2, 2);
  diag << 1, 0, 0, 0;
  CHECK_THROWS_AS(SemanticGraph::from_adjacency(diag), InvalidArgument);
  Matrix big(2, 2);
  big << 0, 2, 2, 0;
  CHECK_THROWS_AS(SemanticGraph::from_adjacency(big), InvalidArgument);
}

TEST_CASE("laplacian closed forms", "[semgraph]") {
  Matrix k2(2, 2);
  k2 << 1, -1, -1, 1;
  CHECK(laplacian(unit_k2()) == k2);
  CHECK(laplacian(SemanticGraph::from_adjacency(Matrix::Zero(3, 3))).isZero());
  Matrix p3(3, 3);
  p3 << 1, -1, 0, -1, 2, -1, 0, -1, 1;
  CHECK(laplacian(path3()) == p3);
}

TEST_CASE("laplacian rows sum to zero and it is PSD", "[semgraph]") {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto g = random_graph(rng, 2 + t % 15, 0.4, false);
    const Matrix l = laplacian(g);
    CHECK((l * Vector::Ones(g.n())).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(sym_eigen(l).values.minCoeff() >= -1e-9);
  }
}

TEST_CASE("cheeger_bounds closed forms", "[semgraph]") {
  CHECK(cheeger_bounds(1.0).lower == 0.5);
  CHECK_THAT(cheeger_bounds(1.0).upper, WithinAbs(1.4142135623730951, 1e-15));
  CHECK(cheeger_bounds(0.0).lower == 0.0);
  CHECK(cheeger_bounds(0.0).upper == 0.0);
  CHECK(cheeger_bounds(2.0).lower == 1.0);
  CHECK(cheeger_bounds(2.0).upper == 2.0);
  CHECK(cheeger_bounds(-1e-12).upper == 0.0);
}

TEST_CASE("cheeger_bruteforce hand-enumerated cases", "[semgraph]") {
  CHECK(cheeger_bruteforce(unit_k2()) == 1.0);
  CHECK(cheeger_bruteforce(path3()) == 1.0);
  Matrix k3 = Matrix::Ones(3, 3) - Matrix::Identity(3, 3);
  CHECK(cheeger_bruteforce(SemanticGraph::from_adjacency(k3)) == 2.0);
  Matrix two_k2 = Matrix::Zero(4, 4);
  two_k2(0, 1) = two_k2(1, 0) = two_k2(2, 3) = two_k2(3, 2) = 1;
  CHECK(cheeger_bruteforce(SemanticGraph::from_adjacency(two_k2)) == 0.0);
  CHECK_THROWS_AS(cheeger_bruteforce(SemanticGraph::from_adjacency(Matrix::Zero(1, 1))), InvalidArgument);
  CHECK_THROWS_AS(cheeger_bruteforce(SemanticGraph::from_adjacency(Matrix::Zero(21, 21))), InvalidArgument);
}

TEST_CASE("spectral features of K2", "[semgraph]") {
  const auto f = spectral_features(unit_k2());
  CHECK_THAT(f.lambda2, WithinAbs(2.0, 1e-12));
  CHECK_THAT(f.cheeger.lower, WithinAbs(1.0, 1e-12));
  CHECK_THAT(f.cheeger.upper, WithinAbs(2.0, 1e-12));
  CHECK(f.partition[0] != f.partition[1]);
  CHECK(f.eigenvalues.size() == kDefaultEigenCount);
  CHECK(f.eigenvalues.tail(6).isZero());
}

TEST_CASE("spectral features of two disjoint edges", "[semgraph]") {
  Matrix a = Matrix::Zero(4, 4);
  a(0, 1) = a(1, 0) = a(2, 3) = a(3, 2) = 1;
  const auto f = spectral_features(SemanticGraph::from_adjacency(a));
  CHECK(f.lambda2 <= 1e-8);
  CHECK(f.cheeger.lower == 0.0);
  CHECK(f.cheeger.upper == 0.0);
  // Components against each other, the first (lowest vertex) positive.
  CHECK(f.partition == std::vector<Side>{Side::kPositive, Side::kPositive, Side::kNegative, Side::kNegative});
}

TEST_CASE("spectral features of P3", "[semgraph]") {
  const auto f = spectral_features(path3());
  CHECK_THAT(f.lambda2, WithinAbs(1.0, 1e-10));
  CHECK_THAT(f.fiedler(0), WithinAbs(1.0 / std::sqrt(2.0), 1e-10));
  CHECK_THAT(f.fiedler(1), WithinAbs(0.0, 1e-10));
  CHECK_THAT(f.fiedler(2), WithinAbs(-1.0 / std::sqrt(2.0), 1e-10));
  CHECK(f.partition == std::vector<Side>{Side::kPositive, Side::kPositive, Side::kNegative});
}

TEST_CASE("spectral features of a single vertex", "[semgraph]") {
  const auto f = spectral_features(SemanticGraph::from_adjacency(Matrix::Zero(1, 1)));
  CHECK(f.lambda2 == 0.0);
  CHECK(f.partition == std::vector<Side>{Side::kPositive});
  CHECK(f.to_vector().size() == spectral_dim());
  CHECK(f.to_vector().allFinite());
}

TEST_CASE("feature vector layout", "[semgraph]") {
  const auto f = spectral_features(path3());
  const Vector v = f.to_vector();
  REQUIRE(v.size() == 16);
  CHECK_THAT(v(0), WithinAbs(0.0, 1e-10));
  CHECK_THAT(v(1), WithinAbs(1.0, 1e-10));
  CHECK_THAT(v(2), WithinAbs(3.0, 1e-10));
  CHECK(v.segment(3, 5).isZero());
  CHECK_THAT(v(8), WithinAbs(0.5, 1e-10));
  CHECK_THAT(v(9), WithinAbs(std::sqrt(2.0), 1e-10));
  CHECK_THAT(v(10), WithinAbs(0.0, 1e-10));                      // fiedler mean
  CHECK_THAT(v(11), WithinAbs(std::sqrt(1.0 / 3.0), 1e-10));     // fiedler std
  CHECK_THAT(v(12), WithinAbs(2.0 / 3.0, 1e-12));                // positive fraction
  CHECK_THAT(v(13), WithinAbs(2.0 / 3.0, 1e-12));                // edge density
  CHECK_THAT(v(14), WithinAbs(4.0 / 3.0, 1e-12));                // mean degree
  CHECK_THAT(v(15), WithinAbs(3.0 / 64.0, 1e-15));
}

TEST_CASE("lower Cheeger bound holds on random connected graphs", "[semgraph]") {
  Rng rng(1234);
  for (int t = 0; t < 500; ++t) {
    const auto g = random_graph(rng, 3 + t % 6, 0.5, true);
    const auto f = spectral_features(g);
    CHECK(f.lambda2 / 2.0 <= cheeger_bruteforce(g) + 1e-9);
  }
}

TEST_CASE("zero eigenvalue multiplicity equals component count", "[semgraph]") {
  Rng rng(77);
  for (int t = 0; t < 100; ++t) {
    const auto g = random_graph(rng, 1 + t % 20, 0.15, false);
    const auto eig = sym_eigen(laplacian(g));
    const auto zeros = static_cast<std::size_t>((eig.values.array() <= 1e-8).count());
    const auto comps = component_count(g);
    CHECK(zeros == comps);
    const auto ids = connected_components(g);
    CHECK(*std::max_element(ids.begin(), ids.end()) + 1 == comps);
  }
}

TEST_CASE("spectral invariants on random graphs", "[semgraph]") {
  Rng rng(99);
  for (int t = 0; t < 100; ++t) {
    const bool connected = t % 2 == 0;
    const auto g = random_graph(rng, 2 + t % 24, 0.3, connected);
    const auto f = spectral_features(g);
    CHECK(f.eigenvalues(0) <= 1e-8);
    for (Eigen::Index i = 1; i < f.eigenvalues.size(); ++i)
      if (i < g.n()) CHECK(f.eigenvalues(i) >= f.eigenvalues(i - 1));
    CHECK_THAT(f.fiedler.norm(), WithinAbs(1.0, 1e-9));
    const auto pos = std::count(f.partition.begin(), f.partition.end(), Side::kPositive);
    CHECK(pos >= 1);
    if (connected) CHECK(pos < g.n());
    CHECK(f.to_vector().allFinite());
  }
}
