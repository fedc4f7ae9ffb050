#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfe {

// Thrown when reading or writing files fails (missing path, permissions).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a file exists but its content does not follow the expected
// format (PNM header, manifest record, checkpoint, CSV).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// H x W x C raster of doubles in [0,1], row-major with interleaved channels.
class ImageTensor {
 public:
  ImageTensor(int height, int width, int channels, double fill = 0.0);
  // Validates shape, finiteness and range.
  ImageTensor(int height, int width, int channels, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }
  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  // Clamps every element into [0,1]. Used by operators whose arithmetic can
  // leave the range by rounding.
  void Clamp01();

  bool operator==(const ImageTensor&) const = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int height_;
  int width_;
  int channels_;
  std::vector<double> data_;
};

// Foreground/background raster; the foreground pixels form the set A of
// the morphological operators.
class BinaryImage {
 public:
  BinaryImage(int height, int width, bool fill = false);

  int height() const { return height_; }
  int width() const { return width_; }

  bool at(int y, int x) const { return data_[Index(y, x)] != 0; }
  void set(int y, int x, bool v) { data_[Index(y, x)] = v ? 1 : 0; }
  bool in_bounds(int y, int x) const {
    return y >= 0 && y < height_ && x >= 0 && x < width_;
  }
  std::size_t count() const;

  bool operator==(const BinaryImage&) const = default;

 private:
  std::size_t Index(int y, int x) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int height_;
  int width_;
  std::vector<std::uint8_t> data_;
};

struct Offset {
  int dy;
  int dx;
  bool operator==(const Offset&) const = default;
};

// Flat structuring element given as offsets relative to its origin.
class StructuringElement {
 public:
  explicit StructuringElement(std::vector<Offset> offsets);

  // Full 3x3 square with centered origin.
  static StructuringElement Square3();
  // 4-connected cross with centered origin.
  static StructuringElement Cross();
  // Single origin pixel (identity element).
  static StructuringElement Origin();

  std::span<const Offset> offsets() const { return offsets_; }
  StructuringElement Reflected() const;

 private:
  std::vector<Offset> offsets_;
};

// Half-open [begin, end) span of cell `i` when `extent` pixels are split
// into `grid` floor-based cells: begin = floor(i * extent / grid).
struct CellSpan {
  int begin;
  int end;
};
inline CellSpan GridCell(int extent, int grid, int i) {
  return {static_cast<int>(static_cast<long long>(i) * extent / grid),
          static_cast<int>(static_cast<long long>(i + 1) * extent / grid)};
}

// BT.601 luma for 3-channel input; identity copy for single channel.
ImageTensor ToGrayscale(const ImageTensor& img);

// Foreground iff pixel >= t.
BinaryImage Threshold(const ImageTensor& img, double t);

// Maps a binary image onto {0,1} intensities.
ImageTensor ToIntensity(const BinaryImage& img);

// Binary PGM (P5) / PPM (P6), maxval 255. Values are byte / 255.
ImageTensor ReadPnm(const std::filesystem::path& path);
ImageTensor DecodePnm(std::span<const std::uint8_t> bytes);
// Quantizes each value to round(v * 255).
void WritePnm(const ImageTensor& img, const std::filesystem::path& path);
std::vector<std::uint8_t> EncodePnm(const ImageTensor& img);

}  // namespace sfe
