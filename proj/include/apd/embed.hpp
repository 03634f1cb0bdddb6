#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "apd/error.hpp"
#include "apd/numkit.hpp"

namespace apd {

/// Token embeddings, one row per token.
struct EmbeddingMatrix {
  Matrix rows;
  std::string provider_id;

  Eigen::Index n() const { return rows.rows(); }
  Eigen::Index d() const { return rows.cols(); }
};

enum class EmbedderKind { kHash, kRemote };

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::kHash;
  int dim = 64;
  std::uint64_t seed = 0;
  std::string endpoint;  // http://host:port/path
  int timeout_ms = 2000;
  bool fallback_to_hash = false;

  void validate() const;
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

/// Character-trigram feature hashing over "^token$". Every trigram hashes to
/// h = fnv1a64(bytes) ^ seed; it adds sign(h) to bucket h % dim, where the
/// sign is +1 when bit 63 is clear. Rows are L2-normalized.
EmbeddingMatrix embed_hash(const std::vector<std::string>& tokens, int dim, std::uint64_t seed);

class EmbeddingServiceError : public Error {
 public:
  enum class Kind { kUnreachable, kTimeout, kHttpStatus, kMalformed, kDimMismatch, kCountMismatch };

  EmbeddingServiceError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Fetches embeddings from an HTTP service:
/// POST {"tokens":[...]} -> {"dim":D,"vectors":[[...],...]}.
EmbeddingMatrix embed_remote(const std::vector<std::string>& tokens, const EmbedderConfig& config);

/// Dispatches on config.kind; remote failures fall back to the hash provider
/// when config.fallback_to_hash is set.
EmbeddingMatrix embed(const std::vector<std::string>& tokens, const EmbedderConfig& config);

/// Mean over rows.
Vector pool(const EmbeddingMatrix& e);

}  // namespace apd
