#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

// Dataset manifest (JSON Lines, one record per video) and landmark files.
namespace sfe {

struct ManifestRecord {
  std::string video_id;
  int label = 0;  // 0 = Real, 1 = Fake
  std::optional<std::string> family;
  std::vector<std::string> frame_paths;          // relative to the manifest directory
  std::optional<std::string> landmarks_path;     // relative to the manifest directory
  bool operator==(const ManifestRecord&) const = default;
};

std::string ManifestLine(const ManifestRecord& record);
ManifestRecord ParseManifestLine(const std::string& line);

std::vector<ManifestRecord> ReadManifest(const std::filesystem::path& path);
void WriteManifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path);

// One line per frame: 2K whitespace-separated coordinates.
std::vector<std::vector<double>> ReadLandmarks(const std::filesystem::path& path);
void WriteLandmarks(const std::vector<std::vector<double>>& landmarks,
                    const std::filesystem::path& path);

}  // namespace sfe
