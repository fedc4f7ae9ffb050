#include "sfe/features.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sfe/morphology.h"
#include "sfe/photometry.h"
#include "sfe/texture.h"

namespace sfe {

std::string_view StreamName(Stream s) {
  switch (s) {
    case Stream::kText: return "Text";
    case Stream::kComr: return "Comr";
    case Stream::kHifr: return "Hifr";
    case Stream::kLico: return "Lico";
    case Stream::kMoop: return "Moop";
  }
  return "?";
}

std::optional<Stream> ParseStream(std::string_view name) {
  for (Stream s : kAllStreams) {
    if (StreamName(s) == name) return s;
  }
  return std::nullopt;
}

spectral::HighPassSpec FeatureConfig::high_pass(int height, int width) const {
  if (hp_radius) return {*hp_radius};
  return spectral::HighPassSpec::Default(height, width);
}

std::array<int, kNumStreams> StreamDims(const FeatureConfig& cfg, int channels) {
  const int cells = cfg.grid * cfg.grid;
  std::array<int, kNumStreams> dims{};
  dims[StreamIndex(Stream::kText)] =
      texture::kLbpBins + 4 * static_cast<int>(texture::kGlcmOffsets.size());
  dims[StreamIndex(Stream::kComr)] = 2 * cells;
  dims[StreamIndex(Stream::kHifr)] = 2 * cells;
  dims[StreamIndex(Stream::kLico)] = channels + cells * channels;
  dims[StreamIndex(Stream::kMoop)] = 4 * cells;
  return dims;
}

std::uint64_t LayoutFingerprint(const std::array<int, kNumStreams>& dims) {
  // FNV-1a over the dimension list.
  std::uint64_t h = 14695981039346656037ull;
  for (int d : dims) {
    for (int b = 0; b < 4; ++b) {
      h ^= static_cast<std::uint64_t>((static_cast<unsigned>(d) >> (8 * b)) & 0xffu);
      h *= 1099511628211ull;
    }
  }
  return h;
}

namespace pooling {

std::vector<double> PoolMap(const ImageTensor& map, int grid) {
  if (map.channels() != 1) throw std::invalid_argument("PoolMap expects one channel");
  if (grid < 1 || grid > std::min(map.height(), map.width())) {
    throw std::invalid_argument("pooling grid " + std::to_string(grid) +
                                " out of range for map size");
  }
  std::vector<double> out;
  out.reserve(2 * static_cast<std::size_t>(grid) * grid);
  for (int i = 0; i < grid; ++i) {
    const CellSpan rows = GridCell(map.height(), grid, i);
    for (int j = 0; j < grid; ++j) {
      const CellSpan cols = GridCell(map.width(), grid, j);
      const double n = static_cast<double>(rows.end - rows.begin) * (cols.end - cols.begin);
      double sum = 0.0;
      for (int y = rows.begin; y < rows.end; ++y) {
        for (int x = cols.begin; x < cols.end; ++x) sum += map.at(y, x);
      }
      const double mean = sum / n;
      double ss = 0.0;
      for (int y = rows.begin; y < rows.end; ++y) {
        for (int x = cols.begin; x < cols.end; ++x) {
          const double d = map.at(y, x) - mean;
          ss += d * d;
        }
      }
      out.push_back(mean);
      out.push_back(std::sqrt(ss / n));
    }
  }
  return out;
}

}  // namespace pooling

FeatureMaps ExtractMaps(const ImageTensor& img, const FeatureConfig& cfg) {
  morphology::MorphFeatureMap moop = morphology::MoopFeatures(img);
  return FeatureMaps{
      std::move(moop.gradient), std::move(moop.opening_residual),
      spectral::PhaseReconstruct(ToGrayscale(img), cfg.high_pass(img.height(), img.width())),
      compression::ComrFeatures(img, cfg.quant())};
}

FeatureBundle ExtractBundle(const ImageTensor& img, const FeatureConfig& cfg) {
  if (cfg.grid < 1 || cfg.grid > std::min(img.height(), img.width())) {
    throw std::invalid_argument("feature grid " + std::to_string(cfg.grid) +
                                " out of range for frame size");
  }
  const FeatureMaps maps = ExtractMaps(img, cfg);
  FeatureBundle bundle;

  std::vector<double>& moop = bundle[Stream::kMoop];
  moop = pooling::PoolMap(maps.moop_gradient, cfg.grid);
  const std::vector<double> residual = pooling::PoolMap(maps.moop_residual, cfg.grid);
  moop.insert(moop.end(), residual.begin(), residual.end());

  bundle[Stream::kHifr] = pooling::PoolMap(maps.hifr, cfg.grid);
  bundle[Stream::kComr] = pooling::PoolMap(maps.comr, cfg.grid);

  const photometry::LightingFeature lico = photometry::LicoFeatures(img, cfg.grid);
  std::vector<double>& lv = bundle[Stream::kLico];
  lv = lico.global_variance;
  lv.insert(lv.end(), lico.block_variances.begin(), lico.block_variances.end());

  const texture::TextureFeature text = texture::TextFeatures(img);
  std::vector<double>& tv = bundle[Stream::kText];
  tv = text.lbp_histogram;
  for (const texture::GlcmStats& s : text.glcm_stats) {
    tv.insert(tv.end(), {s.contrast, s.energy, s.homogeneity, s.correlation});
  }

  bundle.config_hash = LayoutFingerprint(StreamDims(cfg, img.channels()));
  return bundle;
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteFeatureCsv(const std::vector<FeatureRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "video_id,frame_index,label";
  if (!rows.empty()) {
    for (Stream s : kAllStreams) {
      for (std::size_t i = 0; i < rows.front().bundle[s].size(); ++i) {
        out << ',' << StreamName(s) << '_' << i;
      }
    }
  }
  out << '\n';
  for (const FeatureRow& row : rows) {
    out << row.video_id << ',' << row.frame_index << ',' << row.label;
    for (Stream s : kAllStreams) {
      for (double v : row.bundle[s]) out << ',' << FormatDouble(v);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<FeatureRow> ReadFeatureCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };

  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty feature CSV");
  const std::vector<std::string> header = split(line);
  if (header.size() < 3 || header[0] != "video_id" || header[1] != "frame_index" ||
      header[2] != "label") {
    throw FormatError(path.string() + ": unexpected feature CSV header");
  }
  // Column -> stream, validated to appear in the fixed stream order.
  std::vector<int> column_stream;
  std::array<int, kNumStreams> dims{};
  int last = 0;
  for (std::size_t c = 3; c < header.size(); ++c) {
    const std::string& name = header[c];
    const std::size_t us = name.rfind('_');
    const std::optional<Stream> s =
        us == std::string::npos ? std::nullopt : ParseStream(name.substr(0, us));
    if (!s || StreamIndex(*s) < last ||
        name.substr(us + 1) != std::to_string(dims[StreamIndex(*s)])) {
      throw FormatError(path.string() + ": bad feature column '" + name + "'");
    }
    last = StreamIndex(*s);
    column_stream.push_back(last);
    ++dims[last];
  }
  const std::uint64_t fingerprint = LayoutFingerprint(dims);

  std::vector<FeatureRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
    }
    FeatureRow row;
    row.video_id = cells[0];
    try {
      row.frame_index = std::stoi(cells[1]);
      row.label = std::stoi(cells[2]);
      for (std::size_t c = 3; c < cells.size(); ++c) {
        row.bundle.streams[column_stream[c - 3]].push_back(std::stod(cells[c]));
      }
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad number");
    }
    row.bundle.config_hash = fingerprint;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace sfe
