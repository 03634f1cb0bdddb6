#include "apd/embed.hpp"

#include "httplib.h"
#include "json.hpp"

#include "apd/log.hpp"
#include "apd/utf8.hpp"

namespace apd {

void EmbedderConfig::validate() const {
  if (dim < 8) throw InvalidArgument("embedder dim must be at least 8");
  if (kind == EmbedderKind::kRemote && endpoint.empty())
    throw InvalidArgument("remote embedder requires an endpoint");
  if (timeout_ms <= 0) throw InvalidArgument("embedder timeout_ms must be positive");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

EmbeddingMatrix embed_hash(const std::vector<std::string>& tokens, int dim, std::uint64_t seed) {
  if (tokens.empty()) throw InvalidArgument("embed_hash: empty token list");
  if (dim < 1) throw InvalidArgument("embed_hash: dim must be positive");
  EmbeddingMatrix out{Matrix::Zero(static_cast<Eigen::Index>(tokens.size()), dim), "hash"};
  const auto udim = static_cast<std::uint64_t>(dim);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    std::u32string padded = U"^" + utf8::decode(tokens[t]) + U"$";
    auto row = out.rows.row(static_cast<Eigen::Index>(t));
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      const std::uint64_t h = fnv1a64(utf8::encode(std::u32string_view(padded).substr(i, 3))) ^ seed;
      row(static_cast<Eigen::Index>(h % udim)) += (h >> 63) ? -1.0 : 1.0;
    }
    const double norm = row.norm();
    // Colliding trigrams can cancel exactly; fall back to the first trigram's bucket.
    if (norm > 0) {
      row /= norm;
    } else {
      const std::uint64_t h = fnv1a64(utf8::encode(std::u32string_view(padded).substr(0, 3))) ^ seed;
      row(static_cast<Eigen::Index>(h % udim)) = (h >> 63) ? -1.0 : 1.0;
    }
  }
  return out;
}

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

EmbeddingMatrix embed_remote(const std::vector<std::string>& tokens, const EmbedderConfig& config) {
  using Kind = EmbeddingServiceError::Kind;
  if (tokens.empty()) throw InvalidArgument("embed_remote: empty token list");
  const auto ep = split_endpoint(config.endpoint);

  httplib::Client client(ep.origin);
  const auto timeout = std::chrono::milliseconds(config.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  const nlohmann::json request = {{"tokens", tokens}};
  auto res = client.Post(ep.path, request.dump(), "application/json");
  if (!res) {
    switch (res.error()) {
      case httplib::Error::ConnectionTimeout:
      case httplib::Error::Read:
      case httplib::Error::Write:
        throw EmbeddingServiceError(Kind::kTimeout, "embedding service timeout");
      default:
        throw EmbeddingServiceError(Kind::kUnreachable, "embedding service unreachable");
    }
  }
  if (res->status != 200)
    throw EmbeddingServiceError(Kind::kHttpStatus,
                                "embedding service returned status " + std::to_string(res->status));

  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception&) {
    throw EmbeddingServiceError(Kind::kMalformed, "embedding service returned malformed JSON");
  }
  if (!body.is_object() || !body.contains("dim") || !body["dim"].is_number_integer() ||
      !body.contains("vectors") || !body["vectors"].is_array())
    throw EmbeddingServiceError(Kind::kMalformed, "embedding response lacks dim/vectors");

  const auto dim = body["dim"].get<long long>();
  if (dim != config.dim) throw EmbeddingServiceError(Kind::kDimMismatch, "dimension mismatch");
  const auto& vectors = body["vectors"];
  if (vectors.size() != tokens.size())
    throw EmbeddingServiceError(Kind::kCountMismatch, "vector count mismatch");

  EmbeddingMatrix out{Matrix(static_cast<Eigen::Index>(tokens.size()), dim), "remote"};
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const auto& v = vectors[i];
    if (!v.is_array() || static_cast<long long>(v.size()) != dim)
      throw EmbeddingServiceError(Kind::kDimMismatch, "dimension mismatch");
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (!v[j].is_number())
        throw EmbeddingServiceError(Kind::kMalformed, "non-numeric embedding entry");
      const double x = v[j].get<double>();
      if (!std::isfinite(x))
        throw EmbeddingServiceError(Kind::kMalformed, "non-finite embedding entry");
      out.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x;
    }
  }
  return out;
}

EmbeddingMatrix embed(const std::vector<std::string>& tokens, const EmbedderConfig& config) {
  if (config.kind == EmbedderKind::kHash) return embed_hash(tokens, config.dim, config.seed);
  try {
    return embed_remote(tokens, config);
  } catch (const EmbeddingServiceError& e) {
    if (!config.fallback_to_hash) throw;
    log::warn("embedding service failed ({}); using hash embedder", e.what());
    return embed_hash(tokens, config.dim, config.seed);
  }
}

Vector pool(const EmbeddingMatrix& e) {
  if (e.n() == 0) throw InvalidArgument("pool: no rows");
  return e.rows.colwise().mean().transpose();
}

}  // namespace apd
