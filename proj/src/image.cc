#include "sfe/image.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <utility>

namespace sfe {
namespace {

void CheckShape(int height, int width, int channels) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  if (channels != 1 && channels != 3) {
    throw std::invalid_argument("unsupported channel count " +
                                std::to_string(channels));
  }
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string NextToken(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    if (bytes[pos] == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(bytes[pos])) {
      ++pos;
    } else {
      break;
    }
  }
  std::string token;
  while (pos < bytes.size() && !std::isspace(bytes[pos]) && bytes[pos] != '#') {
    token.push_back(static_cast<char>(bytes[pos++]));
  }
  if (token.empty()) throw FormatError("PNM header truncated");
  return token;
}

int ParseHeaderInt(const std::string& token, const char* what) {
  if (token.empty() ||
      !std::all_of(token.begin(), token.end(),
                   [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) ||
      token.size() > 9) {
    throw FormatError(std::string("PNM header: bad ") + what + " '" + token + "'");
  }
  return std::stoi(token);
}

}  // namespace

ImageTensor::ImageTensor(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  CheckShape(height, width, channels);
  if (!(fill >= 0.0 && fill <= 1.0)) {
    throw std::invalid_argument("fill value outside [0,1]");
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

ImageTensor::ImageTensor(int height, int width, int channels,
                         std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  CheckShape(height, width, channels);
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw std::invalid_argument("image data length does not match H*W*C");
  }
  for (double v : data_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw std::invalid_argument("image value outside [0,1]");
    }
  }
}

void ImageTensor::Clamp01() {
  for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

BinaryImage::BinaryImage(int height, int width, bool fill)
    : height_(height), width_(width) {
  if (height < 1 || width < 1) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(height) * width, fill ? 1 : 0);
}

std::size_t BinaryImage::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), 1));
}

StructuringElement::StructuringElement(std::vector<Offset> offsets)
    : offsets_(std::move(offsets)) {
  if (offsets_.empty()) {
    throw std::invalid_argument("structuring element must be non-empty");
  }
  std::set<std::pair<int, int>> seen;
  for (const Offset& o : offsets_) {
    if (!seen.insert({o.dy, o.dx}).second) {
      throw std::invalid_argument("structuring element offsets must be unique");
    }
  }
}

StructuringElement StructuringElement::Square3() {
  std::vector<Offset> offsets;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) offsets.push_back({dy, dx});
  }
  return StructuringElement(std::move(offsets));
}

StructuringElement StructuringElement::Cross() {
  return StructuringElement({{0, 0}, {-1, 0}, {1, 0}, {0, -1}, {0, 1}});
}

StructuringElement StructuringElement::Origin() {
  return StructuringElement({{0, 0}});
}

StructuringElement StructuringElement::Reflected() const {
  std::vector<Offset> reflected;
  reflected.reserve(offsets_.size());
  for (const Offset& o : offsets_) reflected.push_back({-o.dy, -o.dx});
  return StructuringElement(std::move(reflected));
}

ImageTensor ToGrayscale(const ImageTensor& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) {
    throw std::invalid_argument("unsupported channel count");
  }
  ImageTensor out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double r = img.at(y, x, 0);
      const double g = img.at(y, x, 1);
      const double b = img.at(y, x, 2);
      // Convex combination, so the result stays inside [min, max] of RGB.
      out.at(y, x) = std::clamp(0.299 * r + 0.587 * g + 0.114 * b,
                                std::min({r, g, b}), std::max({r, g, b}));
    }
  }
  return out;
}

BinaryImage Threshold(const ImageTensor& img, double t) {
  if (img.channels() != 1) {
    throw std::invalid_argument("threshold expects a single-channel image");
  }
  if (!(t >= 0.0 && t <= 1.0)) {
    throw std::invalid_argument("threshold outside [0,1]");
  }
  BinaryImage out(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.set(y, x, img.at(y, x) >= t);
  }
  return out;
}

ImageTensor ToIntensity(const BinaryImage& img) {
  ImageTensor out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out.at(y, x) = img.at(y, x) ? 1.0 : 0.0;
  }
  return out;
}

ImageTensor DecodePnm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  const std::string magic = NextToken(bytes, pos);
  int channels = 0;
  if (magic == "P5") {
    channels = 1;
  } else if (magic == "P6") {
    channels = 3;
  } else {
    throw FormatError("unsupported PNM magic '" + magic + "'");
  }
  const int width = ParseHeaderInt(NextToken(bytes, pos), "width");
  const int height = ParseHeaderInt(NextToken(bytes, pos), "height");
  const int maxval = ParseHeaderInt(NextToken(bytes, pos), "maxval");
  if (width < 1 || height < 1) throw FormatError("PNM header: empty image");
  if (maxval != 255) {
    throw FormatError("PNM maxval must be 255, got " + std::to_string(maxval));
  }
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw FormatError("PNM header: missing separator before payload");
  }
  ++pos;
  const std::size_t n = static_cast<std::size_t>(width) * height * channels;
  if (bytes.size() - pos < n) throw FormatError("PNM payload truncated");
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = bytes[pos + i] / 255.0;
  return ImageTensor(height, width, channels, std::move(data));
}

ImageTensor ReadPnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return DecodePnm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> EncodePnm(const ImageTensor& img) {
  const std::string header = (img.channels() == 1 ? "P5\n" : "P6\n") +
                             std::to_string(img.width()) + " " +
                             std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.reserve(header.size() + img.size());
  for (double v : img.data()) {
    bytes.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return bytes;
}

void WritePnm(const ImageTensor& img, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = EncodePnm(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace sfe
