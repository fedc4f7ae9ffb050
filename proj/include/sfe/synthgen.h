#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sfe/dataset.h"
#include "sfe/image.h"
#include "sfe/random.h"

// Deterministic synthetic tampered-video generator. Pristine clips are a
// smooth lit background plus a band-limited noise texture drifting slowly
// over time; each forgery family tampers a rectangular region that jitters
// from frame to frame.
namespace sfe::synth {

enum class Family { kSplice = 0, kSmooth = 1, kRecompress = 2, kTextureSwap = 3 };
inline constexpr int kNumFamilies = 4;
inline constexpr std::array<Family, kNumFamilies> kAllFamilies = {
    Family::kSplice, Family::kSmooth, Family::kRecompress, Family::kTextureSwap};

std::string_view FamilyName(Family f);
std::optional<Family> ParseFamily(std::string_view name);

struct GenConfig {
  std::uint64_t seed = 0;
  int n_videos = 10;
  int frames = 4;
  int height = 64;
  int width = 64;
  // Proportions over kAllFamilies; must sum to 1.
  std::array<double, kNumFamilies> forgery_mix{0.25, 0.25, 0.25, 0.25};
  double severity = 0.8;
  int landmark_points = 0;  // K dummy points per frame; 0 writes no files
  int jobs = 1;

  // Throws std::invalid_argument on any violated constraint.
  void Validate() const;
};

struct Region {
  int y0 = 0;
  int x0 = 0;
  int height = 0;
  int width = 0;
  bool contains(int y, int x) const {
    return y >= y0 && y < y0 + height && x >= x0 && x < x0 + width;
  }
};

struct Clip {
  std::vector<ImageTensor> frames;
  std::vector<ImageTensor> pristine;  // sources of `frames`; equal for real clips
  std::vector<Region> regions;        // tampered region per frame; empty for real clips
};

// Pristine clip of cfg.frames RGB frames drawn from `rng`.
Clip GenReal(const GenConfig& cfg, Xoshiro256& rng);
// Pristine clip from `rng`, then tampered by `family` at cfg.severity.
Clip GenFake(const GenConfig& cfg, Xoshiro256& rng, Family family);

struct GeneratedVideo {
  std::string video_id;
  int label = 0;
  std::optional<Family> family;
  Clip clip;
  std::vector<std::vector<double>> landmarks;
};

// Family assigned to each video index (nullopt for real videos).
std::vector<std::optional<Family>> AssignFamilies(const GenConfig& cfg);

// Video `index` of the dataset, independent of every other video.
GeneratedVideo GenerateVideo(const GenConfig& cfg, int index);

inline constexpr char kManifestName[] = "manifest.jsonl";

// Writes frames, landmarks and manifest.jsonl under `out_dir`. On failure
// everything written by this call is removed before rethrowing.
std::vector<ManifestRecord> GenDataset(const GenConfig& cfg, const std::filesystem::path& out_dir);

// Separable Gaussian blur with edge clamping, per channel.
ImageTensor GaussianBlur(const ImageTensor& img, double sigma);

}  // namespace sfe::synth
