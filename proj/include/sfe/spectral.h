#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "sfe/image.h"

// 2D DFT, central high-pass masking and phase-only reconstruction (Hifr).
//
// Conventions: the forward transform is unnormalized,
//   F(u,v) = sum_x sum_y f(x,y) exp(-2 pi i (u x / H + v y / W)),
// and the inverse carries the 1/(HW) factor so Idft2(Dft2(f)) = f.
namespace sfe::spectral {

// Row-major H x W complex grid; used for spectra and complex images.
struct ComplexGrid {
  int height = 0;
  int width = 0;
  std::vector<std::complex<double>> data;

  ComplexGrid(int h, int w);
  std::complex<double>& at(int u, int v) { return data[static_cast<std::size_t>(u) * width + v]; }
  const std::complex<double>& at(int u, int v) const {
    return data[static_cast<std::size_t>(u) * width + v];
  }
};
using Spectrum = ComplexGrid;

// Bins whose centered distance from DC is <= radius are "central" and get
// zeroed. An empty radius disables the filter.
struct HighPassSpec {
  std::optional<int> radius;

  static HighPassSpec PassThrough() { return {std::nullopt}; }
  // floor(min(H,W)/8).
  static HighPassSpec Default(int height, int width);
};

Spectrum Dft2(const ImageTensor& img);
Spectrum Dft2(const ComplexGrid& grid);
ComplexGrid Idft2(const Spectrum& spec);

// Euclidean distance of bin (u,v) from the zero-frequency bin after
// centering, i.e. sqrt(min(u,H-u)^2 + min(v,W-v)^2).
double CenteredDistance(int u, int v, int height, int width);

// Throws std::invalid_argument when 2*radius > min(H,W) or radius < 0.
Spectrum HighPass(const Spectrum& spec, const HighPassSpec& hp);

// G(u,v) = exp(i arg F'(u,v)), with G = 0 wherever F' vanishes.
Spectrum PhaseOnlySpectrum(const ImageTensor& img, const HighPassSpec& hp);

// Re(Idft2(G)) before normalization, row-major.
std::vector<double> PhaseReconstructRaw(const ImageTensor& img, const HighPassSpec& hp);

// Phase-only reconstruction min-max normalized to [0,1]; constant
// reconstructions map to a constant 0 image.
ImageTensor PhaseReconstruct(const ImageTensor& img, const HighPassSpec& hp);

}  // namespace sfe::spectral
