#pragma once

#include <array>
#include <span>

#include "sfe/image.h"

// JPEG-style luminance compress/reconstruct round trip and its residual
// (Comr). No entropy coding; only the lossy quantization step matters.
namespace sfe::compression {

using Block8 = std::array<double, 64>;  // row-major 8x8

struct QuantSpec {
  int quality = 50;
  std::array<int, 64> table{};

  // Annex-K luminance table scaled by quality in [1,100].
  static QuantSpec FromQuality(int quality);
  // Explicit table; every entry must be >= 1.
  static QuantSpec FromTable(const std::array<int, 64>& table);
};

// Orthonormal type-II DCT and its inverse. Inputs must hold exactly 64 values.
Block8 Dct8(std::span<const double> block);
Block8 Idct8(std::span<const double> coeffs);

// Grayscale round trip on the 0..255 scale with edge-replicated padding.
ImageTensor Roundtrip(const ImageTensor& img, const QuantSpec& q);

// |gray(img) - Roundtrip(gray(img))|.
ImageTensor ComrFeatures(const ImageTensor& img, const QuantSpec& q);

}  // namespace sfe::compression
