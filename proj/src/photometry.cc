#include "sfe/photometry.h"

#include <stdexcept>
#include <string>

namespace sfe::photometry {
namespace {

void CheckChannel(const ImageTensor& img, int channel) {
  if (channel < 0 || channel >= img.channels()) {
    throw std::out_of_range("channel " + std::to_string(channel) + " out of range");
  }
}

// Population variance of channel c over rows [y0,y1) x cols [x0,x1).
double RegionVariance(const ImageTensor& img, int c, int y0, int y1, int x0, int x1) {
  const double n = static_cast<double>(y1 - y0) * (x1 - x0);
  // Shifted by the first pixel so constant regions give exactly zero.
  const double shift = img.at(y0, x0, c);
  double sum = 0.0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) sum += img.at(y, x, c) - shift;
  }
  const double mean = sum / n;
  double ss = 0.0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const double d = img.at(y, x, c) - shift - mean;
      ss += d * d;
    }
  }
  return ss / n;
}

}  // namespace

double ChannelMean(const ImageTensor& img, int channel) {
  CheckChannel(img, channel);
  double sum = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) sum += img.at(y, x, channel);
  }
  return sum / (static_cast<double>(img.height()) * img.width());
}

double LightingScore(const ImageTensor& img, int channel) {
  CheckChannel(img, channel);
  return RegionVariance(img, channel, 0, img.height(), 0, img.width());
}

LightingFeature LicoFeatures(const ImageTensor& img, int grid) {
  if (grid < 1 || grid > std::min(img.height(), img.width())) {
    throw std::invalid_argument("lighting grid " + std::to_string(grid) +
                                " out of range for image size");
  }
  LightingFeature f;
  f.grid = grid;
  f.channels = img.channels();
  for (int c = 0; c < img.channels(); ++c) f.global_variance.push_back(LightingScore(img, c));
  f.block_variances.reserve(static_cast<std::size_t>(grid) * grid * img.channels());
  for (int i = 0; i < grid; ++i) {
    const CellSpan rows = GridCell(img.height(), grid, i);
    for (int j = 0; j < grid; ++j) {
      const CellSpan cols = GridCell(img.width(), grid, j);
      for (int c = 0; c < img.channels(); ++c) {
        f.block_variances.push_back(
            RegionVariance(img, c, rows.begin, rows.end, cols.begin, cols.end));
      }
    }
  }
  return f;
}

}  // namespace sfe::photometry
