#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sfe/image.h"

// Texture statistics (Text): radius-1 LBP codes and GLCM Haralick subset.
namespace sfe::texture {

// Codes for the (H-2) x (W-2) interior, row-major.
struct LbpMap {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> codes;

  std::uint8_t at(int y, int x) const { return codes[static_cast<std::size_t>(y) * width + x]; }
};

struct Glcm {
  int levels = 0;
  Offset offset{0, 1};
  std::vector<double> probs;  // levels x levels, row-major

  double at(int i, int j) const { return probs[static_cast<std::size_t>(i) * levels + j]; }
};

struct GlcmStats {
  double contrast = 0.0;
  double energy = 0.0;
  double homogeneity = 0.0;
  double correlation = 0.0;
};

// The four offsets used for texture features, in emission order.
inline constexpr std::array<Offset, 4> kGlcmOffsets = {
    Offset{0, 1}, Offset{1, 0}, Offset{1, 1}, Offset{1, -1}};
inline constexpr int kGlcmLevels = 8;
inline constexpr int kLbpBins = 256;

struct TextureFeature {
  std::vector<double> lbp_histogram;       // 256 bins, sums to 1
  std::array<GlcmStats, 4> glcm_stats{};   // one per kGlcmOffsets entry
};

// Bit p is set iff neighbor p >= center; neighbors run clockwise from the
// top-left: (-1,-1), (-1,0), (-1,1), (0,1), (1,1), (1,0), (1,-1), (0,-1).
LbpMap Lbp(const ImageTensor& img);

// Quantizes to floor(v*L) (clamped to L-1) and counts pairs (p, p+offset).
Glcm ComputeGlcm(const ImageTensor& img, int levels, Offset offset, bool symmetric);

// Correlation is 0 when either marginal has zero variance.
GlcmStats ComputeGlcmStats(const Glcm& m);

TextureFeature TextFeatures(const ImageTensor& img);

}  // namespace sfe::texture
