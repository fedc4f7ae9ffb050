#include "sfe/compression.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sfe::compression {
namespace {

constexpr std::array<int, 64> kLuminanceTable = {
    16, 11, 10, 16, 24,  40,  51,  61,   //
    12, 12, 14, 19, 26,  58,  60,  55,   //
    14, 13, 16, 24, 40,  57,  69,  56,   //
    14, 17, 22, 29, 51,  87,  80,  62,   //
    18, 22, 37, 56, 68,  109, 103, 77,   //
    24, 35, 55, 64, 81,  104, 113, 92,   //
    49, 64, 78, 87, 103, 121, 120, 101,  //
    72, 92, 95, 98, 112, 100, 103, 99};

// basis[k][n] = c(k) cos((2n+1) k pi / 16)
const std::array<std::array<double, 8>, 8>& Basis() {
  static const auto basis = [] {
    std::array<std::array<double, 8>, 8> b{};
    for (int k = 0; k < 8; ++k) {
      const double ck = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int n = 0; n < 8; ++n) {
        b[k][n] = ck * std::cos((2 * n + 1) * k * std::numbers::pi / 16.0);
      }
    }
    return b;
  }();
  return basis;
}

void CheckBlock(std::span<const double> block) {
  if (block.size() != 64) {
    throw std::invalid_argument("DCT block must hold 64 values, got " +
                                std::to_string(block.size()));
  }
}

}  // namespace

QuantSpec QuantSpec::FromQuality(int quality) {
  if (quality < 1 || quality > 100) {
    throw std::invalid_argument("quality must be in [1,100], got " + std::to_string(quality));
  }
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  QuantSpec q;
  q.quality = quality;
  for (int i = 0; i < 64; ++i) {
    q.table[i] = std::clamp((kLuminanceTable[i] * scale + 50) / 100, 1, 255);
  }
  return q;
}

QuantSpec QuantSpec::FromTable(const std::array<int, 64>& table) {
  for (int v : table) {
    if (v < 1) throw std::invalid_argument("quantization entries must be >= 1");
  }
  QuantSpec q;
  q.quality = 0;
  q.table = table;
  return q;
}

Block8 Dct8(std::span<const double> block) {
  CheckBlock(block);
  const auto& b = Basis();
  Block8 rows{};
  for (int y = 0; y < 8; ++y) {
    for (int k = 0; k < 8; ++k) {
      double acc = 0.0;
      for (int n = 0; n < 8; ++n) acc += b[k][n] * block[y * 8 + n];
      rows[y * 8 + k] = acc;
    }
  }
  Block8 out{};
  for (int k = 0; k < 8; ++k) {
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int n = 0; n < 8; ++n) acc += b[k][n] * rows[n * 8 + v];
      out[k * 8 + v] = acc;
    }
  }
  return out;
}

Block8 Idct8(std::span<const double> coeffs) {
  CheckBlock(coeffs);
  const auto& b = Basis();
  Block8 cols{};
  for (int n = 0; n < 8; ++n) {
    for (int v = 0; v < 8; ++v) {
      double acc = 0.0;
      for (int k = 0; k < 8; ++k) acc += b[k][n] * coeffs[k * 8 + v];
      cols[n * 8 + v] = acc;
    }
  }
  Block8 out{};
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double acc = 0.0;
      for (int k = 0; k < 8; ++k) acc += b[k][x] * cols[y * 8 + k];
      out[y * 8 + x] = acc;
    }
  }
  return out;
}

ImageTensor Roundtrip(const ImageTensor& img, const QuantSpec& q) {
  if (img.channels() != 1) throw std::invalid_argument("Roundtrip expects one channel");
  const int h = img.height();
  const int w = img.width();
  ImageTensor out(h, w, 1);
  Block8 block{};
  for (int by = 0; by < h; by += 8) {
    for (int bx = 0; bx < w; bx += 8) {
      for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) {
          const int sy = std::min(by + y, h - 1);
          const int sx = std::min(bx + x, w - 1);
          block[y * 8 + x] = img.at(sy, sx) * 255.0 - 128.0;
        }
      }
      Block8 coeffs = Dct8(block);
      for (int i = 0; i < 64; ++i) {
        coeffs[i] = std::round(coeffs[i] / q.table[i]) * q.table[i];
      }
      const Block8 recon = Idct8(coeffs);
      for (int y = 0; y < 8 && by + y < h; ++y) {
        for (int x = 0; x < 8 && bx + x < w; ++x) {
          out.at(by + y, bx + x) = std::clamp((recon[y * 8 + x] + 128.0) / 255.0, 0.0, 1.0);
        }
      }
    }
  }
  return out;
}

ImageTensor ComrFeatures(const ImageTensor& img, const QuantSpec& q) {
  const ImageTensor gray = ToGrayscale(img);
  const ImageTensor recon = Roundtrip(gray, q);
  ImageTensor residual(gray.height(), gray.width(), 1);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    residual.data()[i] = std::clamp(std::abs(gray.data()[i] - recon.data()[i]), 0.0, 1.0);
  }
  return residual;
}

}  // namespace sfe::compression
