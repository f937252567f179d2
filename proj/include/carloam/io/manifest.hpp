// Dataset manifest: CSV with header `kind,timestamp_ns,path` listing lidar
// scans and camera images. Relative paths resolve against the manifest file.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace carloam {

struct ManifestEntry {
  enum class Kind { kLidar, kImage };
  Kind kind = Kind::kLidar;
  std::int64_t timestamp_ns = 0;
  std::string path;  // absolute after loading
};

struct DatasetManifest {
  std::vector<ManifestEntry> lidar;   // timestamp order
  std::vector<ManifestEntry> images;  // timestamp order
};

/// Throws std::runtime_error on open failure, unknown kind, non-monotone
/// timestamps within a kind, or a bad header.
DatasetManifest read_manifest(const std::string& path);

/// Entries written as given; callers pass paths relative to the manifest.
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

}  // namespace carloam
