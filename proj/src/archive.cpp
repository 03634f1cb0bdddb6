#include "apd/archive.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace apd {

namespace fs = std::filesystem;

namespace {

static_assert(sizeof(float) == 4);

template <typename Bundle>
auto collect(Bundle& b) {
  std::vector<std::pair<std::string, decltype(&b.vae.enc_w)>> out;
  auto add = [&](std::string_view name, auto& t) { out.emplace_back(std::string(name), &t); };
  b.vae.visit(add);
  b.aid.visit(add);
  return out;
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap32(v);
  return v;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void save_archive(const fs::path& dir, const AppConfig& config, const ModelBundle& bundle) {
  bundle.validate();
  fs::create_directories(dir);

  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  std::string weights;
  for (const auto& [name, t] : collect(bundle)) {
    const auto rows = t->rows(), cols = t->cols();
    const std::size_t offset = weights.size();
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) {
        const float f = static_cast<float>((*t)(r, c));
        const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(f));
        char buf[4];
        std::memcpy(buf, &bits, 4);
        weights.append(buf, 4);
      }
    tensors.push_back({{"name", name},
                       {"shape", {rows, cols}},
                       {"dtype", "f32"},
                       {"byte_offset", offset},
                       {"byte_len", weights.size() - offset}});
  }

  nlohmann::ordered_json manifest;
  manifest["format_version"] = kArchiveFormatVersion;
  manifest["config"] = to_json(config);
  manifest["tensors"] = std::move(tensors);

  std::ofstream m(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  m << manifest.dump(2) << '\n';
  std::ofstream w(dir / "weights.bin", std::ios::binary | std::ios::trunc);
  w.write(weights.data(), static_cast<std::streamsize>(weights.size()));
  if (!m || !w) throw ArchiveError("failed to write archive to " + dir.string());
}

ModelArchive load_archive(const fs::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw ArchiveError("manifest.json: " + std::string(e.what()));
  }
  if (!manifest.is_object() || !manifest.contains("format_version") || !manifest.contains("config") ||
      !manifest.contains("tensors") || !manifest["tensors"].is_array())
    throw ArchiveError("manifest.json: missing format_version, config or tensors");
  if (manifest["format_version"] != kArchiveFormatVersion)
    throw ArchiveError("manifest.json: unsupported format_version " + manifest["format_version"].dump());

  ModelArchive out;
  out.config = parse_config(manifest["config"]);
  out.bundle = bundle_shell(out.config);
  const auto expected = collect(out.bundle);
  const auto& index = manifest["tensors"];
  if (index.size() != expected.size())
    throw ArchiveError("manifest.json: expected " + std::to_string(expected.size()) + " tensors, found " +
                       std::to_string(index.size()));

  const std::string weights = read_file(dir / "weights.bin");
  std::size_t cursor = 0;
  try {
    for (std::size_t i = 0; i < expected.size(); ++i) {
      const auto& e = index[i];
      auto* t = expected[i].second;
      const std::string name = e.at("name").get<std::string>();
      if (name != expected[i].first)
        throw ArchiveError("tensor " + std::to_string(i) + ": expected " + expected[i].first + ", found " + name);
      if (e.at("dtype").get<std::string>() != "f32") throw ArchiveError(name + ": dtype must be f32");
      const auto shape = e.at("shape").get<std::vector<std::int64_t>>();
      if (shape.size() != 2 || shape[0] != t->rows() || shape[1] != t->cols())
        throw ArchiveError(name + ": shape does not match config");
      const auto offset = e.at("byte_offset").get<std::size_t>();
      const auto len = e.at("byte_len").get<std::size_t>();
      if (offset != cursor) throw ArchiveError(name + ": byte_offset is not contiguous");
      if (len != static_cast<std::size_t>(t->size()) * 4) throw ArchiveError(name + ": byte_len does not match shape");
      if (offset + len > weights.size()) throw ArchiveError(name + ": extends past end of weights.bin");
      const char* p = weights.data() + offset;
      for (Eigen::Index r = 0; r < t->rows(); ++r)
        for (Eigen::Index c = 0; c < t->cols(); ++c, p += 4) {
          std::uint32_t bits;
          std::memcpy(&bits, p, 4);
          const float f = std::bit_cast<float>(to_le(bits));
          if (!std::isfinite(f)) throw ArchiveError(name + ": non-finite weight");
          (*t)(r, c) = f;
        }
      cursor = offset + len;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArchiveError("manifest.json: " + std::string(e.what()));
  }
  if (cursor != weights.size())
    throw ArchiveError("weights.bin has " + std::to_string(weights.size()) + " bytes, index covers " +
                       std::to_string(cursor));
  out.bundle.validate();
  return out;
}

}  // namespace apd
