#include "sfe/synthgen.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <system_error>

#include "sfe/compression.h"
#include "sfe/parallel.h"

namespace sfe::synth {
namespace {

// Quality used by the recompress family.
constexpr int kRecompressQuality = 10;
constexpr int kRecompressPhase = 4;
constexpr double kSmoothSigma = 1.5;
constexpr double kMaxDriftPx = 0.5;
constexpr int kMaxJitter = 2;

struct Wave {
  double amp, fy, fx, phase, drift;
};

// Parameters of one pristine scene.
struct Scene {
  std::array<double, 3> base{};
  double grad_amp = 0.0;
  double grad_cos = 1.0;
  double grad_sin = 0.0;
  std::array<Wave, 2> waves{};
  double noise_amp = 0.0;
  std::array<double, 3> noise_tint{};
  double vy = 0.0, vx = 0.0;
  double flicker_amp = 0.0, flicker_freq = 0.0;
};

enum class NoiseKind { kIsotropic, kStreaky };

// Zero-mean unit-variance correlated noise, sampled bilinearly.
class NoiseField {
 public:
  NoiseField(int h, int w, NoiseKind kind, Xoshiro256& rng) : h_(h), w_(w), v_(h * w) {
    for (double& x : v_) x = rng.Normal();
    const double sy = kind == NoiseKind::kIsotropic ? 1.0 : 0.0;
    const double sx = kind == NoiseKind::kIsotropic ? 1.0 : 2.5;
    Blur(sy, sx);
    const double mean = std::accumulate(v_.begin(), v_.end(), 0.0) / v_.size();
    double ss = 0.0;
    for (double x : v_) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / v_.size());
    for (double& x : v_) x = (x - mean) / sd;
  }

  double Sample(double y, double x) const {
    y = std::clamp(y, 0.0, h_ - 1.0);
    x = std::clamp(x, 0.0, w_ - 1.0);
    const int y0 = std::min(static_cast<int>(y), h_ - 2);
    const int x0 = std::min(static_cast<int>(x), w_ - 2);
    const double fy = y - y0;
    const double fx = x - x0;
    auto at = [this](int yy, int xx) { return v_[static_cast<std::size_t>(yy) * w_ + xx]; };
    return (1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
           fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1));
  }

 private:
  void Blur(double sy, double sx) {
    auto pass = [this](double sigma, bool horizontal) {
      if (sigma <= 0.0) return;
      const int r = static_cast<int>(std::ceil(3.0 * sigma));
      std::vector<double> k(2 * r + 1);
      for (int i = -r; i <= r; ++i) k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
      const double norm = std::accumulate(k.begin(), k.end(), 0.0);
      for (double& x : k) x /= norm;
      std::vector<double> out(v_.size());
      for (int y = 0; y < h_; ++y) {
        for (int x = 0; x < w_; ++x) {
          double acc = 0.0;
          for (int i = -r; i <= r; ++i) {
            const int yy = horizontal ? y : std::clamp(y + i, 0, h_ - 1);
            const int xx = horizontal ? std::clamp(x + i, 0, w_ - 1) : x;
            acc += k[i + r] * v_[static_cast<std::size_t>(yy) * w_ + xx];
          }
          out[static_cast<std::size_t>(y) * w_ + x] = acc;
        }
      }
      v_.swap(out);
    };
    pass(sy, false);
    pass(sx, true);
  }

  int h_;
  int w_;
  std::vector<double> v_;
};

Scene DrawScene(Xoshiro256& rng) {
  Scene s;
  const double base = rng.Uniform(0.35, 0.65);
  for (double& b : s.base) b = std::clamp(base + rng.Uniform(-0.08, 0.08), 0.0, 1.0);
  s.grad_amp = rng.Uniform(0.05, 0.15);
  const double theta = rng.Uniform(0.0, 2.0 * std::numbers::pi);
  s.grad_cos = std::cos(theta);
  s.grad_sin = std::sin(theta);
  for (Wave& w : s.waves) {
    w.amp = rng.Uniform(0.02, 0.06);
    w.fy = rng.Uniform(-2.0, 2.0);
    w.fx = rng.Uniform(-2.0, 2.0);
    w.phase = rng.Uniform(0.0, 2.0 * std::numbers::pi);
    w.drift = rng.Uniform(-0.1, 0.1);
  }
  s.noise_amp = rng.Uniform(0.03, 0.05);
  for (double& t : s.noise_tint) t = 1.0 + rng.Uniform(-0.1, 0.1);
  s.vy = rng.Uniform(-kMaxDriftPx, kMaxDriftPx);
  s.vx = rng.Uniform(-kMaxDriftPx, kMaxDriftPx);
  s.flicker_amp = rng.Uniform(0.0, 0.01);
  s.flicker_freq = rng.Uniform(0.1, 0.5);
  return s;
}

int NoisePad(int frames) {
  return 4 + static_cast<int>(std::ceil(kMaxDriftPx * frames));
}

ImageTensor Render(const Scene& s, const NoiseField& noise, int t, int h, int w, int pad) {
  ImageTensor img(h, w, 3);
  const double gain = 1.0 + s.flicker_amp * std::sin(s.flicker_freq * t);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double ny = static_cast<double>(y) / h - 0.5;
      const double nx = static_cast<double>(x) / w - 0.5;
      double shade = s.grad_amp * (nx * s.grad_cos + ny * s.grad_sin);
      for (const Wave& wave : s.waves) {
        shade += wave.amp * std::sin(2.0 * std::numbers::pi * (wave.fy * ny + wave.fx * nx) +
                                     wave.phase + wave.drift * t);
      }
      const double n = noise.Sample(y + pad + s.vy * t, x + pad + s.vx * t);
      for (int c = 0; c < 3; ++c) {
        img.at(y, x, c) =
            std::clamp(gain * (s.base[c] + shade) + s.noise_amp * s.noise_tint[c] * n, 0.0, 1.0);
      }
    }
  }
  return img;
}

struct PristineClip {
  Scene scene;
  std::vector<ImageTensor> frames;
};

PristineClip MakePristine(const GenConfig& cfg, Xoshiro256& rng) {
  PristineClip p{DrawScene(rng), {}};
  const int pad = NoisePad(cfg.frames);
  const NoiseField noise(cfg.height + 2 * pad, cfg.width + 2 * pad, NoiseKind::kIsotropic, rng);
  for (int t = 0; t < cfg.frames; ++t) {
    p.frames.push_back(Render(p.scene, noise, t, cfg.height, cfg.width, pad));
  }
  return p;
}

std::vector<Region> DrawRegions(const GenConfig& cfg, Xoshiro256& rng) {
  Region base;
  base.height = std::max(1, static_cast<int>(std::lround(rng.Uniform(0.35, 0.55) * cfg.height)));
  base.width = std::max(1, static_cast<int>(std::lround(rng.Uniform(0.35, 0.55) * cfg.width)));
  const int margin_y = std::min(kMaxJitter + 1, (cfg.height - base.height) / 2);
  const int margin_x = std::min(kMaxJitter + 1, (cfg.width - base.width) / 2);
  const int span_y = cfg.height - base.height - 2 * margin_y;
  const int span_x = cfg.width - base.width - 2 * margin_x;
  base.y0 = margin_y + static_cast<int>(rng.Below(static_cast<std::uint32_t>(span_y + 1)));
  base.x0 = margin_x + static_cast<int>(rng.Below(static_cast<std::uint32_t>(span_x + 1)));

  std::vector<Region> regions;
  int jy = 0;
  int jx = 0;
  for (int t = 0; t < cfg.frames; ++t) {
    if (t > 0) {
      jy = std::clamp(jy + static_cast<int>(rng.Below(3)) - 1, -kMaxJitter, kMaxJitter);
      jx = std::clamp(jx + static_cast<int>(rng.Below(3)) - 1, -kMaxJitter, kMaxJitter);
    }
    Region r = base;
    r.y0 = std::clamp(base.y0 + jy, 0, cfg.height - base.height);
    r.x0 = std::clamp(base.x0 + jx, 0, cfg.width - base.width);
    regions.push_back(r);
  }
  return regions;
}

int PositiveMod(int a, int m) { return ((a % m) + m) % m; }

ImageTensor RecompressRegion(const ImageTensor& frame, const Region& r) {
  const compression::QuantSpec q = compression::QuantSpec::FromQuality(kRecompressQuality);
  // Block grid anchored half a block off the frame grid, so its edges fall mid-block.
  const int y0 = r.y0 - PositiveMod(r.y0 - kRecompressPhase, 8);
  const int x0 = r.x0 - PositiveMod(r.x0 - kRecompressPhase, 8);
  const int h = r.y0 + r.height - y0;
  const int w = r.x0 + r.width - x0;
  ImageTensor out = frame;
  for (int c = 0; c < frame.channels(); ++c) {
    ImageTensor crop(h, w, 1);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        crop.at(y, x) = frame.at(std::max(0, y0 + y), std::max(0, x0 + x), c);
      }
    }
    const ImageTensor recon = compression::Roundtrip(crop, q);
    for (int y = r.y0; y < r.y0 + r.height; ++y) {
      for (int x = r.x0; x < r.x0 + r.width; ++x) out.at(y, x, c) = recon.at(y - y0, x - x0);
    }
  }
  return out;
}

ImageTensor BlendRegion(const ImageTensor& pristine, const ImageTensor& manipulated,
                        const Region& r, double alpha) {
  ImageTensor out = pristine;
  for (int y = r.y0; y < r.y0 + r.height; ++y) {
    for (int x = r.x0; x < r.x0 + r.width; ++x) {
      for (int c = 0; c < out.channels(); ++c) {
        out.at(y, x, c) = std::clamp(
            (1.0 - alpha) * pristine.at(y, x, c) + alpha * manipulated.at(y, x, c), 0.0, 1.0);
      }
    }
  }
  return out;
}

std::string VideoId(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "v%04d", index);
  return buf;
}

}  // namespace

std::string_view FamilyName(Family f) {
  switch (f) {
    case Family::kSplice: return "splice";
    case Family::kSmooth: return "smooth";
    case Family::kRecompress: return "recompress";
    case Family::kTextureSwap: return "texture_swap";
  }
  return "?";
}

std::optional<Family> ParseFamily(std::string_view name) {
  for (Family f : kAllFamilies) {
    if (FamilyName(f) == name) return f;
  }
  return std::nullopt;
}

void GenConfig::Validate() const {
  if (n_videos < 1) throw std::invalid_argument("n_videos must be >= 1");
  if (frames < 2) throw std::invalid_argument("frames per video must be >= 2");
  if (height < 8 || width < 8) throw std::invalid_argument("frame size must be at least 8x8");
  if (!(severity > 0.0 && severity <= 1.0)) {
    throw std::invalid_argument("severity must be in (0,1]");
  }
  double total = 0.0;
  for (double p : forgery_mix) {
    if (!(p >= 0.0)) throw std::invalid_argument("forgery proportions must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("forgery proportions must sum to 1");
  }
  if (landmark_points < 0) throw std::invalid_argument("landmark_points must be >= 0");
}

Clip GenReal(const GenConfig& cfg, Xoshiro256& rng) {
  PristineClip p = MakePristine(cfg, rng);
  return Clip{p.frames, p.frames, {}};
}

Clip GenFake(const GenConfig& cfg, Xoshiro256& rng, Family family) {
  const PristineClip p = MakePristine(cfg, rng);
  Clip clip;
  clip.pristine = p.frames;
  clip.regions = DrawRegions(cfg, rng);
  const int pad = NoisePad(cfg.frames);

  std::vector<ImageTensor> manipulated;
  switch (family) {
    case Family::kSplice: {
      // Differently lit donor scene.
      Scene donor = DrawScene(rng);
      const double shift = (rng.Uniform() < 0.5 ? -1.0 : 1.0) * rng.Uniform(0.15, 0.3);
      for (int c = 0; c < 3; ++c) {
        donor.base[c] = std::clamp(p.scene.base[c] + shift, 0.1, 0.9);
      }
      donor.grad_cos = -p.scene.grad_cos;
      donor.grad_sin = -p.scene.grad_sin;
      const NoiseField noise(cfg.height + 2 * pad, cfg.width + 2 * pad, NoiseKind::kIsotropic, rng);
      for (int t = 0; t < cfg.frames; ++t) {
        manipulated.push_back(Render(donor, noise, t, cfg.height, cfg.width, pad));
      }
      break;
    }
    case Family::kSmooth:
      for (const ImageTensor& f : p.frames) manipulated.push_back(GaussianBlur(f, kSmoothSigma));
      break;
    case Family::kRecompress:
      for (int t = 0; t < cfg.frames; ++t) {
        manipulated.push_back(RecompressRegion(p.frames[t], clip.regions[t]));
      }
      break;
    case Family::kTextureSwap: {
      const NoiseField noise(cfg.height + 2 * pad, cfg.width + 2 * pad, NoiseKind::kStreaky, rng);
      for (int t = 0; t < cfg.frames; ++t) {
        manipulated.push_back(Render(p.scene, noise, t, cfg.height, cfg.width, pad));
      }
      break;
    }
    default:
      throw std::invalid_argument("unknown forgery family");
  }
  for (int t = 0; t < cfg.frames; ++t) {
    clip.frames.push_back(
        BlendRegion(p.frames[t], manipulated[t], clip.regions[t], cfg.severity));
  }
  return clip;
}

ImageTensor GaussianBlur(const ImageTensor& img, double sigma) {
  if (!(sigma > 0.0)) return img;
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * r + 1);
  for (int i = -r; i <= r; ++i) k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
  const double norm = std::accumulate(k.begin(), k.end(), 0.0);
  for (double& x : k) x /= norm;

  ImageTensor tmp(img.height(), img.width(), img.channels());
  ImageTensor out(img.height(), img.width(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) {
          acc += k[i + r] * img.at(y, std::clamp(x + i, 0, img.width() - 1), c);
        }
        tmp.at(y, x, c) = acc;
      }
    }
  }
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) {
          acc += k[i + r] * tmp.at(std::clamp(y + i, 0, img.height() - 1), x, c);
        }
        out.at(y, x, c) = std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<std::optional<Family>> AssignFamilies(const GenConfig& cfg) {
  cfg.Validate();
  const int n_fake = cfg.n_videos / 2;
  // Largest-remainder apportionment of the fakes over the families.
  std::array<int, kNumFamilies> counts{};
  std::array<double, kNumFamilies> remainder{};
  int assigned = 0;
  for (int f = 0; f < kNumFamilies; ++f) {
    const double quota = cfg.forgery_mix[f] * n_fake;
    counts[f] = static_cast<int>(std::floor(quota));
    remainder[f] = quota - counts[f];
    assigned += counts[f];
  }
  while (assigned < n_fake) {
    int best = 0;
    for (int f = 1; f < kNumFamilies; ++f) {
      if (remainder[f] > remainder[best]) best = f;
    }
    ++counts[best];
    remainder[best] = -1.0;
    ++assigned;
  }
  std::vector<Family> pool;
  for (int f = 0; f < kNumFamilies; ++f) pool.insert(pool.end(), counts[f], kAllFamilies[f]);
  Xoshiro256 rng(DeriveSeed(cfg.seed, 0xFA3117E5ull));
  for (std::size_t i = pool.size(); i > 1; --i) {
    std::swap(pool[i - 1], pool[rng.Below(static_cast<std::uint32_t>(i))]);
  }

  std::vector<std::optional<Family>> families(cfg.n_videos);
  std::size_t next = 0;
  for (int i = 0; i < cfg.n_videos; ++i) {
    if (i % 2 == 1) families[i] = pool[next++];
  }
  return families;
}

GeneratedVideo GenerateVideo(const GenConfig& cfg, int index) {
  cfg.Validate();
  if (index < 0 || index >= cfg.n_videos) throw std::out_of_range("video index out of range");
  GeneratedVideo v;
  v.video_id = VideoId(index);
  v.family = AssignFamilies(cfg)[index];
  v.label = v.family ? 1 : 0;
  Xoshiro256 rng(DeriveSeed(cfg.seed, static_cast<std::uint64_t>(index)));
  v.clip = v.family ? GenFake(cfg, rng, *v.family) : GenReal(cfg, rng);

  if (cfg.landmark_points > 0) {
    // Label-independent stream so landmarks carry no class information.
    Xoshiro256 lm_rng(
        DeriveSeed(cfg.seed ^ 0x4C414E444D41524Bull, static_cast<std::uint64_t>(index)));
    std::vector<double> anchor(2 * cfg.landmark_points);
    for (double& a : anchor) a = lm_rng.Uniform(0.2, 0.8);
    for (int t = 0; t < cfg.frames; ++t) {
      std::vector<double> frame(anchor.size());
      for (std::size_t j = 0; j < anchor.size(); ++j) {
        frame[j] = std::clamp(anchor[j] + 0.005 * lm_rng.Normal(), 0.0, 1.0);
      }
      v.landmarks.push_back(std::move(frame));
    }
  }
  return v;
}

std::vector<ManifestRecord> GenDataset(const GenConfig& cfg, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  cfg.Validate();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError("cannot create output directory " + out_dir.string());
  }

  std::vector<ManifestRecord> records(cfg.n_videos);
  std::vector<fs::path> created;
  std::mutex created_mu;
  const fs::path manifest = out_dir / kManifestName;
  const fs::path staging = out_dir / (std::string(kManifestName) + ".tmp");
  try {
    ParallelFor(static_cast<std::size_t>(cfg.n_videos), cfg.jobs, [&](std::size_t i) {
      const GeneratedVideo v = GenerateVideo(cfg, static_cast<int>(i));
      const fs::path dir = out_dir / v.video_id;
      if (!fs::exists(dir)) {
        std::lock_guard<std::mutex> lock(created_mu);
        created.push_back(dir);
      }
      std::error_code dir_ec;
      fs::create_directories(dir, dir_ec);
      if (dir_ec) throw IoError("cannot create " + dir.string());
      ManifestRecord& r = records[i];
      r.video_id = v.video_id;
      r.label = v.label;
      if (v.family) r.family = std::string(FamilyName(*v.family));
      for (int t = 0; t < cfg.frames; ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "f%03d.ppm", t);
        WritePnm(v.clip.frames[t], dir / name);
        r.frame_paths.push_back(v.video_id + "/" + name);
      }
      if (!v.landmarks.empty()) {
        WriteLandmarks(v.landmarks, dir / "landmarks.txt");
        r.landmarks_path = v.video_id + "/landmarks.txt";
      }
    });
    WriteManifest(records, staging);
    fs::rename(staging, manifest);
  } catch (...) {
    std::error_code ignore;
    for (const fs::path& p : created) fs::remove_all(p, ignore);
    fs::remove(staging, ignore);
    try {
      throw;
    } catch (const fs::filesystem_error& e) {
      throw IoError(e.what());
    }
  }
  return records;
}

}  // namespace sfe::synth
