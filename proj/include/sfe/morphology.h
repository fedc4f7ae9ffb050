#pragma once

#include "sfe/image.h"

// Flat binary and grayscale morphology. Pixels outside the image are
// background for every operator: erosion fails containment at the border and
// dilation finds nothing there.
namespace sfe::morphology {

// A (-) B = { z | B_z subset of A }.
BinaryImage Erode(const BinaryImage& a, const StructuringElement& b);
// A (+) B = { z | (reflect B)_z intersects A }.
BinaryImage Dilate(const BinaryImage& a, const StructuringElement& b);
BinaryImage Open(const BinaryImage& a, const StructuringElement& b);
BinaryImage Close(const BinaryImage& a, const StructuringElement& b);
BinaryImage Complement(const BinaryImage& a);

// Min / max over the element support; out-of-bounds samples read as 0.
ImageTensor GrayErode(const ImageTensor& img, const StructuringElement& b);
ImageTensor GrayDilate(const ImageTensor& img, const StructuringElement& b);
ImageTensor GrayOpen(const ImageTensor& img, const StructuringElement& b);
ImageTensor GrayClose(const ImageTensor& img, const StructuringElement& b);

struct MorphFeatureMap {
  ImageTensor gradient;          // dilation - erosion
  ImageTensor opening_residual;  // img - open(img)
};

// Moop stream maps on the grayscale version of `img`.
MorphFeatureMap MoopFeatures(
    const ImageTensor& img,
    const StructuringElement& b = StructuringElement::Square3());

}  // namespace sfe::morphology
