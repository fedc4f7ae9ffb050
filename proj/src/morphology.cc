#include "sfe/morphology.h"

#include <algorithm>
#include <stdexcept>

namespace sfe::morphology {
namespace {

void RequireGray(const ImageTensor& img) {
  if (img.channels() != 1) {
    throw std::invalid_argument("grayscale morphology expects one channel");
  }
}

double Sample(const ImageTensor& img, int y, int x) {
  if (y < 0 || y >= img.height() || x < 0 || x >= img.width()) return 0.0;
  return img.at(y, x);
}

}  // namespace

BinaryImage Erode(const BinaryImage& a, const StructuringElement& b) {
  BinaryImage out(a.height(), a.width());
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      bool inside = true;
      for (const Offset& o : b.offsets()) {
        const int yy = y + o.dy;
        const int xx = x + o.dx;
        if (!a.in_bounds(yy, xx) || !a.at(yy, xx)) {
          inside = false;
          break;
        }
      }
      out.set(y, x, inside);
    }
  }
  return out;
}

BinaryImage Dilate(const BinaryImage& a, const StructuringElement& b) {
  BinaryImage out(a.height(), a.width());
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      bool hit = false;
      for (const Offset& o : b.offsets()) {
        const int yy = y - o.dy;
        const int xx = x - o.dx;
        if (a.in_bounds(yy, xx) && a.at(yy, xx)) {
          hit = true;
          break;
        }
      }
      out.set(y, x, hit);
    }
  }
  return out;
}

BinaryImage Open(const BinaryImage& a, const StructuringElement& b) {
  return Dilate(Erode(a, b), b);
}

BinaryImage Close(const BinaryImage& a, const StructuringElement& b) {
  return Erode(Dilate(a, b), b);
}

BinaryImage Complement(const BinaryImage& a) {
  BinaryImage out(a.height(), a.width());
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) out.set(y, x, !a.at(y, x));
  }
  return out;
}

ImageTensor GrayErode(const ImageTensor& img, const StructuringElement& b) {
  RequireGray(img);
  ImageTensor out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double v = 1.0;
      for (const Offset& o : b.offsets()) v = std::min(v, Sample(img, y + o.dy, x + o.dx));
      out.at(y, x) = v;
    }
  }
  return out;
}

ImageTensor GrayDilate(const ImageTensor& img, const StructuringElement& b) {
  RequireGray(img);
  ImageTensor out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double v = 0.0;
      for (const Offset& o : b.offsets()) v = std::max(v, Sample(img, y - o.dy, x - o.dx));
      out.at(y, x) = v;
    }
  }
  return out;
}

ImageTensor GrayOpen(const ImageTensor& img, const StructuringElement& b) {
  return GrayDilate(GrayErode(img, b), b);
}

ImageTensor GrayClose(const ImageTensor& img, const StructuringElement& b) {
  return GrayErode(GrayDilate(img, b), b);
}

MorphFeatureMap MoopFeatures(const ImageTensor& img, const StructuringElement& b) {
  const ImageTensor gray = ToGrayscale(img);
  const ImageTensor eroded = GrayErode(gray, b);
  const ImageTensor dilated = GrayDilate(gray, b);
  const ImageTensor opened = GrayDilate(eroded, b);

  MorphFeatureMap maps{ImageTensor(gray.height(), gray.width(), 1),
                       ImageTensor(gray.height(), gray.width(), 1)};
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      maps.gradient.at(y, x) = std::clamp(dilated.at(y, x) - eroded.at(y, x), 0.0, 1.0);
      maps.opening_residual.at(y, x) =
          std::clamp(gray.at(y, x) - opened.at(y, x), 0.0, 1.0);
    }
  }
  return maps;
}

}  // namespace sfe::morphology
