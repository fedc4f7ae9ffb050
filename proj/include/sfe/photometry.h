#pragma once

#include <vector>

#include "sfe/image.h"

// Lighting consistency: per-channel population variance of intensities,
// globally and over a G x G grid of regions.
namespace sfe::photometry {

struct LightingFeature {
  int grid = 0;
  int channels = 0;
  std::vector<double> global_variance;  // one per channel
  // Cell-major (row-major over cells), channel-minor: index (i*G + j)*C + c.
  std::vector<double> block_variances;

  double block(int i, int j, int c) const {
    return block_variances[(static_cast<std::size_t>(i) * grid + j) * channels + c];
  }
};

double ChannelMean(const ImageTensor& img, int channel);

// (1/HW) * sum (I_c - mean_c)^2.
double LightingScore(const ImageTensor& img, int channel);

LightingFeature LicoFeatures(const ImageTensor& img, int grid = 4);

}  // namespace sfe::photometry
