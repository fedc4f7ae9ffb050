#include "sfe/features.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.h"
#include "sfe/synthgen.h"
#include "sfe/texture.h"

namespace sfe {
namespace {

TEST(PoolMapTest, ConstantMap) {
  const std::vector<double> v = pooling::PoolMap(ImageTensor(6, 6, 1, 0.3), 2);
  EXPECT_EQ(v, (std::vector<double>{0.3, 0, 0.3, 0, 0.3, 0, 0.3, 0}));
}

TEST(PoolMapTest, MatchesPerCellTwoPass) {
  Xoshiro256 rng(1);
  const ImageTensor map = oracle::RandomImage(11, 9, 1, rng);
  for (int g : {1, 2, 3, 4}) {
    const std::vector<double> v = pooling::PoolMap(map, g);
    ASSERT_EQ(v.size(), static_cast<std::size_t>(2 * g * g));
    for (int i = 0; i < g; ++i) {
      for (int j = 0; j < g; ++j) {
        std::vector<double> cell;
        for (int y = i * 11 / g; y < (i + 1) * 11 / g; ++y) {
          for (int x = j * 9 / g; x < (j + 1) * 9 / g; ++x) cell.push_back(map.at(y, x));
        }
        const std::size_t k = 2 * (i * g + j);
        EXPECT_NEAR(v[k], oracle::TwoPassMean(cell), 1e-12);
        EXPECT_NEAR(v[k + 1], std::sqrt(oracle::TwoPassVariance(cell)), 1e-12);
      }
    }
  }
}

TEST(PoolMapTest, RejectsBadGrid) {
  EXPECT_THROW(pooling::PoolMap(ImageTensor(4, 4, 1), 0), std::invalid_argument);
  EXPECT_THROW(pooling::PoolMap(ImageTensor(4, 4, 1), 5), std::invalid_argument);
}

TEST(StreamDimsTest, DerivedFromConfig) {
  FeatureConfig cfg;
  const int g2 = cfg.grid * cfg.grid;
  const auto dims = StreamDims(cfg, 3);
  EXPECT_EQ(dims[StreamIndex(Stream::kText)], texture::kLbpBins + 4 * 4);
  EXPECT_EQ(dims[StreamIndex(Stream::kComr)], 2 * g2);
  EXPECT_EQ(dims[StreamIndex(Stream::kHifr)], 2 * g2);
  EXPECT_EQ(dims[StreamIndex(Stream::kLico)], 3 + 3 * g2);
  EXPECT_EQ(dims[StreamIndex(Stream::kMoop)], 4 * g2);
  EXPECT_EQ(dims, (std::array<int, kNumStreams>{272, 32, 32, 51, 64}));
}

TEST(ExtractBundleTest, ConstantGrayFrame) {
  // Mid gray sits on the codec's level shift, so the round trip is exact.
  const FeatureBundle b = ExtractBundle(ImageTensor(16, 16, 3, 128.0 / 255.0), FeatureConfig{});
  for (double v : b[Stream::kComr]) EXPECT_EQ(v, 0.0);
  for (double v : b[Stream::kLico]) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(b[Stream::kText][255], 1.0);
  // Moop is zero except for the border darkening of erosion.
  const std::vector<double>& moop = b[Stream::kMoop];
  for (double v : moop) EXPECT_LE(v, 0.5);
  const auto dims = StreamDims(FeatureConfig{}, 3);
  for (Stream s : kAllStreams) EXPECT_EQ(static_cast<int>(b[s].size()), dims[StreamIndex(s)]);
  EXPECT_EQ(b.config_hash, LayoutFingerprint(dims));
}

TEST(ExtractBundleTest, DeterministicAndFinite) {
  Xoshiro256 rng(2);
  const ImageTensor img = oracle::RandomImage(24, 20, 3, rng);
  const FeatureBundle a = ExtractBundle(img, FeatureConfig{});
  EXPECT_EQ(a, ExtractBundle(img, FeatureConfig{}));
  for (Stream s : kAllStreams) {
    for (double v : a[s]) EXPECT_TRUE(std::isfinite(v));
  }
}

TEST(ExtractBundleTest, SplicedRegionUnbalancesLico) {
  synth::GenConfig cfg;
  cfg.severity = 1.0;
  Xoshiro256 rng(3);
  const synth::Clip clip = synth::GenFake(cfg, rng, synth::Family::kSplice);
  const FeatureBundle b = ExtractBundle(clip.frames[0], FeatureConfig{});
  const std::vector<double>& lico = b[Stream::kLico];
  double lo = INFINITY, hi = 0.0;
  for (std::size_t i = 3; i < lico.size(); ++i) {
    lo = std::min(lo, lico[i]);
    hi = std::max(hi, lico[i]);
  }
  EXPECT_GT(hi, 2.0 * lo);
  const FeatureBundle flat = ExtractBundle(ImageTensor(64, 64, 3, 0.5), FeatureConfig{});
  for (std::size_t i = 3; i < lico.size(); ++i) EXPECT_EQ(flat[Stream::kLico][i], 0.0);
}

TEST(FeatureCsvTest, RoundTripIsExact) {
  Xoshiro256 rng(4);
  std::vector<FeatureRow> rows;
  for (int t = 0; t < 3; ++t) {
    rows.push_back({"v0001", t, 1, ExtractBundle(oracle::RandomImage(16, 16, 3, rng), {})});
  }
  const auto path = std::filesystem::temp_directory_path() / "sfe_features_test.csv";
  WriteFeatureCsv(rows, path);
  const std::vector<FeatureRow> back = ReadFeatureCsv(path);
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].video_id, rows[i].video_id);
    EXPECT_EQ(back[i].frame_index, rows[i].frame_index);
    EXPECT_EQ(back[i].label, rows[i].label);
    EXPECT_EQ(back[i].bundle, rows[i].bundle);
  }
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("video_id,frame_index,label,Text_0,", 0), 0u);
  EXPECT_NE(header.find(",Moop_63"), std::string::npos);
  std::filesystem::remove(path);
}

TEST(FeatureCsvTest, RejectsBadFiles) {
  const auto path = std::filesystem::temp_directory_path() / "sfe_features_bad.csv";
  {
    std::ofstream out(path);
    out << "video_id,label\nv,1\n";
  }
  EXPECT_THROW(ReadFeatureCsv(path), FormatError);
  EXPECT_THROW(ReadFeatureCsv(path.string() + ".missing"), IoError);
  std::filesystem::remove(path);
}

TEST(FormatDoubleTest, SeventeenDigits) {
  EXPECT_EQ(FormatDouble(0.1), "0.10000000000000001");
  EXPECT_EQ(std::stod(FormatDouble(1.0 / 3.0)), 1.0 / 3.0);
}

}  // namespace
}  // namespace sfe
