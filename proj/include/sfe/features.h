#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sfe/compression.h"
#include "sfe/image.h"
#include "sfe/spectral.h"

// Pooling of every extractor's output into fixed-length per-stream vectors.
namespace sfe {

enum class Stream { kText = 0, kComr = 1, kHifr = 2, kLico = 3, kMoop = 4 };
inline constexpr int kNumStreams = 5;
// Fixed emission order for CSV columns and checkpoints.
inline constexpr std::array<Stream, kNumStreams> kAllStreams = {
    Stream::kText, Stream::kComr, Stream::kHifr, Stream::kLico, Stream::kMoop};

std::string_view StreamName(Stream s);
std::optional<Stream> ParseStream(std::string_view name);
inline int StreamIndex(Stream s) { return static_cast<int>(s); }

struct FeatureConfig {
  int grid = 4;
  int quality = 90;
  // Unset means floor(min(H,W)/8) for each frame.
  std::optional<int> hp_radius;

  compression::QuantSpec quant() const { return compression::QuantSpec::FromQuality(quality); }
  spectral::HighPassSpec high_pass(int height, int width) const;
};

// Per-stream vector lengths implied by a configuration and channel count.
std::array<int, kNumStreams> StreamDims(const FeatureConfig& cfg, int channels);

// Fingerprint of a per-stream layout; bundles with equal fingerprints can be
// mixed in one sequence.
std::uint64_t LayoutFingerprint(const std::array<int, kNumStreams>& dims);

struct FeatureBundle {
  std::array<std::vector<double>, kNumStreams> streams;
  std::uint64_t config_hash = 0;

  const std::vector<double>& operator[](Stream s) const { return streams[StreamIndex(s)]; }
  std::vector<double>& operator[](Stream s) { return streams[StreamIndex(s)]; }
  bool operator==(const FeatureBundle&) const = default;
};

namespace pooling {

// Per-cell (mean, population std) over a G x G floor-based grid, row-major
// over cells; length 2*G*G.
std::vector<double> PoolMap(const ImageTensor& map, int grid);

}  // namespace pooling

// Full-resolution maps behind the pooled streams; written by --dump-maps.
struct FeatureMaps {
  ImageTensor moop_gradient;
  ImageTensor moop_residual;
  ImageTensor hifr;
  ImageTensor comr;
};

FeatureMaps ExtractMaps(const ImageTensor& img, const FeatureConfig& cfg);
FeatureBundle ExtractBundle(const ImageTensor& img, const FeatureConfig& cfg);

// One row of the feature CSV.
struct FeatureRow {
  std::string video_id;
  int frame_index = 0;
  int label = 0;
  FeatureBundle bundle;
};

// Header: video_id,frame_index,label,Text_0..,Comr_0..,Hifr_0..,Lico_0..,Moop_0..
// Values printed with 17 significant digits.
void WriteFeatureCsv(const std::vector<FeatureRow>& rows, const std::filesystem::path& path);
std::vector<FeatureRow> ReadFeatureCsv(const std::filesystem::path& path);
std::string FormatDouble(double v);

}  // namespace sfe
