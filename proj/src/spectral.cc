#include "sfe/spectral.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sfe::spectral {
namespace {

using cd = std::complex<double>;

bool IsPowerOfTwo(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place 1D transform of `n` samples spaced `stride` apart. sign = -1 for
// forward, +1 for inverse (unnormalized).
void Transform1D(cd* base, int n, int stride, int sign, std::vector<cd>& scratch) {
  if (n == 1) return;
  scratch.resize(n);
  for (int k = 0; k < n; ++k) scratch[k] = base[static_cast<std::ptrdiff_t>(k) * stride];

  if (IsPowerOfTwo(n)) {
    // Iterative radix-2 Cooley-Tukey with bit-reversal permutation.
    for (int i = 1, j = 0; i < n; ++i) {
      int bit = n >> 1;
      for (; j & bit; bit >>= 1) j ^= bit;
      j ^= bit;
      if (i < j) std::swap(scratch[i], scratch[j]);
    }
    for (int len = 2; len <= n; len <<= 1) {
      const double ang = sign * 2.0 * std::numbers::pi / len;
      for (int i = 0; i < n; i += len) {
        for (int k = 0; k < len / 2; ++k) {
          const cd w(std::cos(ang * k), std::sin(ang * k));
          const cd a = scratch[i + k];
          const cd b = scratch[i + k + len / 2] * w;
          scratch[i + k] = a + b;
          scratch[i + k + len / 2] = a - b;
        }
      }
    }
    for (int k = 0; k < n; ++k) base[static_cast<std::ptrdiff_t>(k) * stride] = scratch[k];
    return;
  }

  // Direct O(n^2) sum; twiddles indexed by (k*m mod n) to keep angles exact.
  std::vector<cd> twiddle(n);
  for (int k = 0; k < n; ++k) {
    const double ang = sign * 2.0 * std::numbers::pi * k / n;
    twiddle[k] = cd(std::cos(ang), std::sin(ang));
  }
  for (int k = 0; k < n; ++k) {
    cd acc = 0.0;
    for (int m = 0; m < n; ++m) {
      acc += scratch[m] * twiddle[static_cast<std::size_t>(
                              (static_cast<long long>(k) * m) % n)];
    }
    base[static_cast<std::ptrdiff_t>(k) * stride] = acc;
  }
}

void Transform2D(ComplexGrid& grid, int sign) {
  std::vector<cd> scratch;
  for (int u = 0; u < grid.height; ++u) {
    Transform1D(&grid.at(u, 0), grid.width, 1, sign, scratch);
  }
  for (int v = 0; v < grid.width; ++v) {
    Transform1D(&grid.at(0, v), grid.height, grid.width, sign, scratch);
  }
}

}  // namespace

ComplexGrid::ComplexGrid(int h, int w) : height(h), width(w) {
  if (h < 1 || w < 1) throw std::invalid_argument("grid dimensions must be positive");
  data.assign(static_cast<std::size_t>(h) * w, cd(0.0, 0.0));
}

HighPassSpec HighPassSpec::Default(int height, int width) {
  return {std::min(height, width) / 8};
}

Spectrum Dft2(const ImageTensor& img) {
  if (img.channels() != 1) throw std::invalid_argument("Dft2 expects one channel");
  ComplexGrid grid(img.height(), img.width());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) grid.at(y, x) = img.at(y, x);
  }
  Transform2D(grid, -1);
  return grid;
}

Spectrum Dft2(const ComplexGrid& grid) {
  ComplexGrid out = grid;
  Transform2D(out, -1);
  return out;
}

ComplexGrid Idft2(const Spectrum& spec) {
  ComplexGrid out = spec;
  Transform2D(out, +1);
  const double scale = 1.0 / (static_cast<double>(spec.height) * spec.width);
  for (cd& z : out.data) z *= scale;
  return out;
}

double CenteredDistance(int u, int v, int height, int width) {
  const double du = std::min(u, height - u);
  const double dv = std::min(v, width - v);
  return std::sqrt(du * du + dv * dv);
}

Spectrum HighPass(const Spectrum& spec, const HighPassSpec& hp) {
  if (!hp.radius) return spec;
  const int r = *hp.radius;
  if (r < 0 || 2 * r > std::min(spec.height, spec.width)) {
    throw std::invalid_argument("high-pass radius " + std::to_string(r) +
                                " out of range");
  }
  Spectrum out = spec;
  for (int u = 0; u < spec.height; ++u) {
    for (int v = 0; v < spec.width; ++v) {
      if (CenteredDistance(u, v, spec.height, spec.width) <= r) out.at(u, v) = 0.0;
    }
  }
  return out;
}

Spectrum PhaseOnlySpectrum(const ImageTensor& img, const HighPassSpec& hp) {
  Spectrum filtered = HighPass(Dft2(ToGrayscale(img)), hp);
  // Bins at rounding level relative to the largest attainable magnitude (HW
  // for data in [0,1]) have no meaningful phase and are treated as zero.
  const double zero_tol = 1e-12 * filtered.height * filtered.width;
  for (cd& z : filtered.data) {
    const double mag = std::abs(z);
    z = mag <= zero_tol ? cd(0.0, 0.0) : std::polar(1.0, std::arg(z));
  }
  return filtered;
}

std::vector<double> PhaseReconstructRaw(const ImageTensor& img, const HighPassSpec& hp) {
  const ComplexGrid g = Idft2(PhaseOnlySpectrum(img, hp));
  std::vector<double> real(g.data.size());
  std::transform(g.data.begin(), g.data.end(), real.begin(),
                 [](const cd& z) { return z.real(); });
  return real;
}

ImageTensor PhaseReconstruct(const ImageTensor& img, const HighPassSpec& hp) {
  const std::vector<double> raw = PhaseReconstructRaw(img, hp);
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double range = *hi - *lo;
  ImageTensor out(img.height(), img.width(), 1);
  std::span<double> dst = out.data();
  if (range > 0.0) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
      dst[i] = std::clamp((raw[i] - *lo) / range, 0.0, 1.0);
    }
  }
  return out;
}

}  // namespace sfe::spectral
