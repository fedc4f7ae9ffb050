#include "sfe/dataset.h"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sfe/features.h"
#include "sfe/image.h"

namespace sfe {

using nlohmann::json;

std::string ManifestLine(const ManifestRecord& record) {
  json j;
  j["video_id"] = record.video_id;
  j["label"] = record.label;
  j["family"] = record.family ? json(*record.family) : json(nullptr);
  j["frame_paths"] = record.frame_paths;
  j["landmarks_path"] = record.landmarks_path ? json(*record.landmarks_path) : json(nullptr);
  return j.dump();
}

ManifestRecord ParseManifestLine(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("manifest record is not valid JSON: ") + e.what());
  }
  try {
    ManifestRecord r;
    r.video_id = j.at("video_id").get<std::string>();
    r.label = j.at("label").get<int>();
    if (r.label != 0 && r.label != 1) throw FormatError("manifest label must be 0 or 1");
    if (j.contains("family") && !j["family"].is_null()) r.family = j["family"].get<std::string>();
    r.frame_paths = j.at("frame_paths").get<std::vector<std::string>>();
    if (j.contains("landmarks_path") && !j["landmarks_path"].is_null()) {
      r.landmarks_path = j["landmarks_path"].get<std::string>();
    }
    if (r.video_id.empty()) throw FormatError("manifest record has an empty video_id");
    if (r.frame_paths.empty()) {
      throw FormatError("manifest record " + r.video_id + " has no frames");
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest record: ") + e.what());
  }
}

std::vector<ManifestRecord> ReadManifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<ManifestRecord> records;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(ParseManifestLine(line));
      if (!seen.insert(records.back().video_id).second) {
        throw FormatError("duplicate video_id " + records.back().video_id);
      }
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

void WriteManifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  for (const ManifestRecord& r : records) out << ManifestLine(r) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::vector<double>> ReadLandmarks(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open landmarks " + path.string());
  std::vector<std::vector<double>> frames;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<double> v;
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      const double x = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') {
        throw FormatError(path.string() + ": bad landmark value '" + tok + "'");
      }
      v.push_back(x);
    }
    if (v.size() % 2 != 0) throw FormatError(path.string() + ": odd landmark coordinate count");
    if (!frames.empty() && frames.front().size() != v.size()) {
      throw FormatError(path.string() + ": landmark rows differ in length");
    }
    frames.push_back(std::move(v));
  }
  return frames;
}

void WriteLandmarks(const std::vector<std::vector<double>>& landmarks,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& frame : landmarks) {
    for (std::size_t i = 0; i < frame.size(); ++i) {
      out << (i ? " " : "") << FormatDouble(frame[i]);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace sfe
