#include "sfe/morphology.h"

#include <gtest/gtest.h>

#include "oracles.h"

namespace sfe::morphology {
namespace {

BinaryImage RandomBinary(int h, int w, Xoshiro256& rng, double p = 0.5) {
  BinaryImage b(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) b.set(y, x, rng.Uniform() < p);
  }
  return b;
}

bool Subset(const BinaryImage& a, const BinaryImage& b) {
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (a.at(y, x) && !b.at(y, x)) return false;
    }
  }
  return true;
}

TEST(ErodeTest, FullSquareKeepsOnlyCenter) {
  const BinaryImage a(3, 3, true);
  const BinaryImage e = Erode(a, StructuringElement::Square3());
  EXPECT_EQ(e.count(), 1u);
  EXPECT_TRUE(e.at(1, 1));
}

TEST(ErodeTest, OriginIsIdentity) {
  Xoshiro256 rng(1);
  const BinaryImage a = RandomBinary(6, 9, rng);
  EXPECT_EQ(Erode(a, StructuringElement::Origin()), a);
  EXPECT_EQ(Dilate(a, StructuringElement::Origin()), a);
}

TEST(ErodeTest, MatchesSetOracleWithCross) {
  Xoshiro256 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const BinaryImage a = RandomBinary(8, 8, rng, 0.7);
    EXPECT_EQ(Erode(a, StructuringElement::Cross()), oracle::Erode(a, StructuringElement::Cross()));
  }
}

TEST(ErodeTest, AsymmetricElementMatchesOracle) {
  Xoshiro256 rng(12);
  const StructuringElement b({{0, 0}, {0, 1}, {1, 2}, {-2, 0}});
  for (int trial = 0; trial < 50; ++trial) {
    const BinaryImage a = RandomBinary(7, 9, rng, 0.6);
    EXPECT_EQ(Erode(a, b), oracle::Erode(a, b));
    EXPECT_EQ(Dilate(a, b), oracle::Dilate(a, b));
  }
}

TEST(DilateTest, SinglePixelGrowsToBlock) {
  BinaryImage a(5, 5);
  a.set(2, 2, true);
  const BinaryImage d = Dilate(a, StructuringElement::Square3());
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) {
      EXPECT_EQ(d.at(y, x), y >= 1 && y <= 3 && x >= 1 && x <= 3);
    }
  }
}

TEST(DilateTest, EmptyStaysEmpty) {
  EXPECT_EQ(Dilate(BinaryImage(4, 4), StructuringElement::Square3()).count(), 0u);
}

TEST(DilateTest, MatchesReflectedOracle) {
  Xoshiro256 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const BinaryImage a = RandomBinary(8, 8, rng, 0.2);
    EXPECT_EQ(Dilate(a, StructuringElement::Cross()),
              oracle::Dilate(a, StructuringElement::Cross()));
  }
}

TEST(OpenCloseTest, IsolatedPixelIsRemoved) {
  BinaryImage a(5, 5);
  a.set(2, 2, true);
  EXPECT_EQ(Open(a, StructuringElement::Square3()).count(), 0u);
}

TEST(OpenCloseTest, CompositionAndOrdering) {
  Xoshiro256 rng(4);
  const StructuringElement b = StructuringElement::Square3();
  for (int trial = 0; trial < 30; ++trial) {
    const BinaryImage a = RandomBinary(10, 10, rng, 0.6);
    const BinaryImage opened = Open(a, b);
    const BinaryImage closed = Close(a, b);
    EXPECT_EQ(opened, Dilate(Erode(a, b), b));
    EXPECT_EQ(closed, Erode(Dilate(a, b), b));
    EXPECT_EQ(Open(opened, b), opened);
    EXPECT_TRUE(Subset(opened, a));
    EXPECT_TRUE(Subset(Erode(a, b), a));
    EXPECT_TRUE(Subset(a, Dilate(a, b)));
  }
}

TEST(OpenCloseTest, ClosingContainsInteriorOfSource) {
  // With out-of-bounds background, closing can only shrink the set along
  // the border, so containment is checked on interior pixels.
  Xoshiro256 rng(14);
  const StructuringElement b = StructuringElement::Square3();
  for (int trial = 0; trial < 30; ++trial) {
    const BinaryImage a = RandomBinary(10, 10, rng, 0.6);
    const BinaryImage closed = Close(a, b);
    for (int y = 1; y < 9; ++y) {
      for (int x = 1; x < 9; ++x) {
        if (a.at(y, x)) EXPECT_TRUE(closed.at(y, x));
      }
    }
  }
}

TEST(DualityTest, ComplementOfErosionOnInterior) {
  Xoshiro256 rng(5);
  const StructuringElement b = StructuringElement::Square3();
  for (int trial = 0; trial < 30; ++trial) {
    const BinaryImage a = RandomBinary(9, 9, rng);
    const BinaryImage lhs = Complement(Erode(a, b));
    const BinaryImage rhs = Dilate(Complement(a), b);
    for (int y = 1; y < 8; ++y) {
      for (int x = 1; x < 8; ++x) EXPECT_EQ(lhs.at(y, x), rhs.at(y, x));
    }
  }
}

TEST(GrayTest, BinaryConsistency) {
  Xoshiro256 rng(6);
  for (const StructuringElement& b : {StructuringElement::Square3(), StructuringElement::Cross()}) {
    const BinaryImage a = RandomBinary(8, 8, rng);
    const ImageTensor img = ToIntensity(a);
    EXPECT_EQ(Threshold(GrayErode(img, b), 0.5), Erode(a, b));
    EXPECT_EQ(Threshold(GrayDilate(img, b), 0.5), Dilate(a, b));
    EXPECT_EQ(Threshold(GrayOpen(img, b), 0.5), Open(a, b));
    EXPECT_EQ(Threshold(GrayClose(img, b), 0.5), Close(a, b));
  }
}

TEST(GrayTest, IdentityAndZero) {
  Xoshiro256 rng(7);
  const ImageTensor img = oracle::RandomImage(5, 6, 1, rng);
  EXPECT_EQ(GrayErode(img, StructuringElement::Origin()), img);
  EXPECT_EQ(GrayDilate(img, StructuringElement::Origin()), img);
  const ImageTensor zero(5, 6, 1, 0.0);
  EXPECT_EQ(GrayErode(zero, StructuringElement::Square3()), zero);
  EXPECT_EQ(GrayDilate(zero, StructuringElement::Square3()), zero);
}

TEST(MoopTest, ConstantImageIsZeroInInterior) {
  const MorphFeatureMap m = MoopFeatures(ImageTensor(8, 8, 3, 0.4));
  for (int y = 1; y < 7; ++y) {
    for (int x = 1; x < 7; ++x) {
      EXPECT_EQ(m.gradient.at(y, x), 0.0);
      EXPECT_EQ(m.opening_residual.at(y, x), 0.0);
    }
  }
}

TEST(MoopTest, VerticalStepEdge) {
  ImageTensor img(8, 8, 1);
  for (int y = 0; y < 8; ++y) {
    for (int x = 4; x < 8; ++x) img.at(y, x) = 1.0;
  }
  const MorphFeatureMap m = MoopFeatures(img);
  for (int y = 1; y < 7; ++y) {
    for (int x = 1; x < 7; ++x) {
      const double expected = (x == 3 || x == 4) ? 1.0 : 0.0;
      EXPECT_EQ(m.gradient.at(y, x), expected) << y << "," << x;
    }
  }
}

TEST(MoopTest, SingleBrightPixelResidual) {
  ImageTensor img(7, 7, 1);
  img.at(3, 3) = 0.8;
  const MorphFeatureMap m = MoopFeatures(img);
  EXPECT_DOUBLE_EQ(m.opening_residual.at(3, 3), 0.8);
  for (double v : m.gradient.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

}  // namespace
}  // namespace sfe::morphology
