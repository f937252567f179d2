#include "carloam/io/manifest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace carloam {

DatasetManifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  const auto base = std::filesystem::path(path).parent_path();

  std::string line;
  if (!std::getline(in, line) || line.rfind("kind,timestamp_ns,path", 0) != 0)
    throw std::runtime_error("manifest missing `kind,timestamp_ns,path` header: " + path);

  DatasetManifest m;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kind, ts, file;
    if (!std::getline(ls, kind, ',') || !std::getline(ls, ts, ',') || !std::getline(ls, file))
      throw std::runtime_error("manifest row " + std::to_string(row) + " malformed: " + line);

    ManifestEntry e;
    try {
      e.timestamp_ns = std::stoll(ts);
    } catch (const std::exception&) {
      throw std::runtime_error("manifest row " + std::to_string(row) + " bad timestamp: " + ts);
    }
    std::filesystem::path p(file);
    e.path = p.is_absolute() ? p.string() : (base / p).lexically_normal().string();

    if (kind == "lidar") {
      e.kind = ManifestEntry::Kind::kLidar;
      if (!m.lidar.empty() && e.timestamp_ns < m.lidar.back().timestamp_ns)
        throw std::runtime_error("manifest lidar timestamps not monotone at row " +
                                 std::to_string(row));
      m.lidar.push_back(std::move(e));
    } else if (kind == "image") {
      e.kind = ManifestEntry::Kind::kImage;
      if (!m.images.empty() && e.timestamp_ns < m.images.back().timestamp_ns)
        throw std::runtime_error("manifest image timestamps not monotone at row " +
                                 std::to_string(row));
      m.images.push_back(std::move(e));
    } else {
      throw std::runtime_error("manifest row " + std::to_string(row) + " unknown kind: " + kind);
    }
  }
  return m;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << "kind,timestamp_ns,path\n";
  for (const auto& e : entries) {
    out << (e.kind == ManifestEntry::Kind::kLidar ? "lidar" : "image") << ","
        << e.timestamp_ns << "," << e.path << "\n";
  }
}

}  // namespace carloam
