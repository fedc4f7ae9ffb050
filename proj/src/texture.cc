#include "sfe/texture.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace sfe::texture {
namespace {

constexpr std::array<Offset, 8> kNeighbors = {
    Offset{-1, -1}, Offset{-1, 0}, Offset{-1, 1}, Offset{0, 1},
    Offset{1, 1},   Offset{1, 0},  Offset{1, -1}, Offset{0, -1}};

}  // namespace

LbpMap Lbp(const ImageTensor& img) {
  if (img.channels() != 1) throw std::invalid_argument("LBP expects one channel");
  if (img.height() < 3 || img.width() < 3) {
    throw std::invalid_argument("LBP needs an image of at least 3x3");
  }
  LbpMap map;
  map.height = img.height() - 2;
  map.width = img.width() - 2;
  map.codes.resize(static_cast<std::size_t>(map.height) * map.width);
  for (int y = 1; y + 1 < img.height(); ++y) {
    for (int x = 1; x + 1 < img.width(); ++x) {
      const double center = img.at(y, x);
      unsigned code = 0;
      for (int p = 0; p < 8; ++p) {
        if (img.at(y + kNeighbors[p].dy, x + kNeighbors[p].dx) >= center) code |= 1u << p;
      }
      map.codes[static_cast<std::size_t>(y - 1) * map.width + (x - 1)] =
          static_cast<std::uint8_t>(code);
    }
  }
  return map;
}

Glcm ComputeGlcm(const ImageTensor& img, int levels, Offset offset, bool symmetric) {
  if (img.channels() != 1) throw std::invalid_argument("GLCM expects one channel");
  if (levels < 2) throw std::invalid_argument("GLCM needs at least 2 levels");
  if (offset.dy == 0 && offset.dx == 0) {
    throw std::invalid_argument("GLCM offset must be non-zero");
  }
  auto level = [levels](double v) {
    return std::min(static_cast<int>(std::floor(v * levels)), levels - 1);
  };

  Glcm m;
  m.levels = levels;
  m.offset = offset;
  m.probs.assign(static_cast<std::size_t>(levels) * levels, 0.0);
  double total = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    const int yy = y + offset.dy;
    if (yy < 0 || yy >= img.height()) continue;
    for (int x = 0; x < img.width(); ++x) {
      const int xx = x + offset.dx;
      if (xx < 0 || xx >= img.width()) continue;
      const int a = level(img.at(y, x));
      const int b = level(img.at(yy, xx));
      m.probs[static_cast<std::size_t>(a) * levels + b] += 1.0;
      total += 1.0;
      if (symmetric) {
        m.probs[static_cast<std::size_t>(b) * levels + a] += 1.0;
        total += 1.0;
      }
    }
  }
  if (total == 0.0) throw std::invalid_argument("GLCM offset leaves no valid pixel pairs");
  for (double& p : m.probs) p /= total;
  return m;
}

GlcmStats ComputeGlcmStats(const Glcm& m) {
  const int n = m.levels;
  GlcmStats s;
  double mu_i = 0.0;
  double mu_j = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double p = m.at(i, j);
      const double d = i - j;
      s.contrast += p * d * d;
      s.energy += p * p;
      s.homogeneity += p / (1.0 + std::abs(d));
      mu_i += i * p;
      mu_j += j * p;
    }
  }
  double var_i = 0.0;
  double var_j = 0.0;
  double cov = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double p = m.at(i, j);
      var_i += (i - mu_i) * (i - mu_i) * p;
      var_j += (j - mu_j) * (j - mu_j) * p;
      cov += (i - mu_i) * (j - mu_j) * p;
    }
  }
  const double denom = std::sqrt(var_i) * std::sqrt(var_j);
  s.correlation = denom > 0.0 ? cov / denom : 0.0;
  return s;
}

TextureFeature TextFeatures(const ImageTensor& img) {
  const ImageTensor gray = ToGrayscale(img);
  const LbpMap map = Lbp(gray);
  TextureFeature f;
  f.lbp_histogram.assign(kLbpBins, 0.0);
  for (std::uint8_t code : map.codes) f.lbp_histogram[code] += 1.0;
  const double n = static_cast<double>(map.codes.size());
  for (double& b : f.lbp_histogram) b /= n;
  for (std::size_t k = 0; k < kGlcmOffsets.size(); ++k) {
    f.glcm_stats[k] =
        ComputeGlcmStats(ComputeGlcm(gray, kGlcmLevels, kGlcmOffsets[k], /*symmetric=*/true));
  }
  return f;
}

}  // namespace sfe::texture
