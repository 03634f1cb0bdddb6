#pragma once

#include <cstdint>
#include <vector>

#include "apd/embed.hpp"
#include "apd/numkit.hpp"

namespace apd {

/// Undirected weighted graph over prompt tokens. Adjacency is symmetric,
/// nonnegative, zero on the diagonal, entries in [0, 1].
struct SemanticGraph {
  Matrix adjacency;
  std::vector<std::size_t> token_index;  // vertex -> token position

  Eigen::Index n() const { return adjacency.rows(); }

  /// Validates and wraps an adjacency matrix; token_index is the identity.
  static SemanticGraph from_adjacency(Matrix adjacency);
};

/// w_ij = max(0, cos(e_i, e_j)) for i != j, zeroed below tau.
SemanticGraph build_graph(const EmbeddingMatrix& e, double tau);

/// L = D - A.
Matrix laplacian(const SemanticGraph& g);

/// Component id per vertex; ids are assigned in order of each component's
/// smallest vertex. Edges are entries > 0.
std::vector<std::size_t> connected_components(const SemanticGraph& g);

struct CheegerBounds {
  double lower = 0;  // lambda2 / 2
  double upper = 0;  // sqrt(2 lambda2)
};

CheegerBounds cheeger_bounds(double lambda2);

enum class Side : std::uint8_t { kPositive, kNegative };

struct SpectralStats {
  double fiedler_mean = 0;
  double fiedler_std = 0;
  double positive_fraction = 0;
  double edge_density = 0;
  double mean_degree = 0;
  double n = 0;
};

struct SpectralFeatures {
  Vector eigenvalues;  // first K, ascending, zero-padded
  Vector fiedler;
  double lambda2 = 0;
  CheegerBounds cheeger;
  std::vector<Side> partition;
  SpectralStats stats;

  /// Fixed layout: K eigenvalues, cheeger lower, cheeger upper, fiedler
  /// mean, fiedler std, positive fraction, edge density, mean degree, n/64.
  Vector to_vector() const;
};

inline constexpr int kDefaultEigenCount = 8;

/// Length of SpectralFeatures::to_vector() for k_eigs eigenvalues.
constexpr int spectral_dim(int k_eigs = kDefaultEigenCount) { return k_eigs + 8; }

/// Spectrum of the Laplacian and the derived partition. For a disconnected
/// graph lambda2 = 0 and the Fiedler vector is taken from the null space:
/// the largest component (ties to the lowest vertex) against the rest,
/// orthogonal to the constant vector. Entries with |f| <= 1e-10 count as zero
/// and land on the positive side.
SpectralFeatures spectral_features(const SemanticGraph& g, int k_eigs = kDefaultEigenCount);

/// Exact Cheeger constant by enumerating every S with 1 <= |S| <= n/2:
/// min cut_weight(S) / |S|. Requires 2 <= n <= 20.
double cheeger_bruteforce(const SemanticGraph& g);

}  // namespace apd
