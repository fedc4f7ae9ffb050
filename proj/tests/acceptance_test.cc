// End-to-end acceptance run: prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.h"
#include "sfe/cli.h"
#include "sfe/features.h"
#include "sfe/metrics.h"
#include "sfe/morphology.h"
#include "sfe/random.h"
#include "sfe/sfenet.h"
#include "sfe/spectral.h"

namespace sfe {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void MustRun(const std::vector<std::string>& args) {
  const int code = cli::Run(args);
  if (code != cli::kExitOk) {
    std::string joined;
    for (const auto& a : args) joined += a + " ";
    throw std::runtime_error("command failed (" + std::to_string(code) + "): " + joined);
  }
}

Outcome MorphologyOracle() {
  const auto start = std::chrono::steady_clock::now();
  const StructuringElement cross = StructuringElement::Cross();
  long mismatches = 0;
  for (int bits = 0; bits < (1 << 16); ++bits) {
    BinaryImage a(4, 4);
    for (int i = 0; i < 16; ++i) a.set(i / 4, i % 4, (bits >> i) & 1);
    const BinaryImage e = oracle::Erode(a, cross);
    if (morphology::Erode(a, cross) != e) ++mismatches;
    if (morphology::Dilate(a, cross) != oracle::Dilate(a, cross)) ++mismatches;
    if (morphology::Open(a, cross) != oracle::Dilate(e, cross)) ++mismatches;
  }
  const double secs = Seconds(start);
  return {mismatches == 0 && secs < 60.0,
          Fmt("65536 images, %ld mismatches, %.2f s", mismatches, secs)};
}

Outcome SpectralOracle() {
  Xoshiro256 rng(2024);
  double worst = 0.0;
  bool unit = true;
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 1 + static_cast<int>(rng.Below(8));
    const int w = 1 + static_cast<int>(rng.Below(8));
    const ImageTensor img = oracle::RandomImage(h, w, 1, rng);
    std::vector<std::complex<double>> f(img.data().begin(), img.data().end());
    const auto ref = oracle::NaiveDft2(f, h, w, false);
    const spectral::Spectrum F = spectral::Dft2(img);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      worst = std::max(worst, std::abs(F.data[i] - ref[i]));
    }
    const auto ref_inv = oracle::NaiveDft2(ref, h, w, true);
    const spectral::ComplexGrid back = spectral::Idft2(F);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      worst = std::max(worst, std::abs(back.data[i] - ref_inv[i]));
    }
    const spectral::Spectrum G =
        spectral::PhaseOnlySpectrum(img, spectral::HighPassSpec::Default(h, w));
    for (const auto& z : G.data) {
      const double m = std::abs(z);
      if (m != 0.0 && std::abs(m - 1.0) > 1e-12) unit = false;
    }
  }
  return {worst < 1e-9 && unit,
          Fmt("max error %.3g, phase bins unit-or-zero: %s", worst, unit ? "yes" : "no")};
}

Outcome MetricsOracle() {
  Xoshiro256 rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.Below(49));
    std::vector<metrics::ScoredSample> s;
    for (int i = 0; i < n; ++i) {
      // Coarse scores so ties are common.
      s.push_back({"s" + std::to_string(i), std::floor(rng.Uniform() * 10) / 10, i % 2, ""});
    }
    worst = std::max(worst, std::abs(metrics::Auc(s) - oracle::PairwiseAuc(s)));
  }
  const double example = metrics::Auc({{"p0", 0.9, 1, ""}, {"p1", 0.4, 1, ""},
                                       {"n0", 0.5, 0, ""}, {"n1", 0.1, 0, ""}});
  return {worst < 1e-12 && example == 0.75,
          Fmt("max deviation %.3g over 200 instances, worked example %.17g", worst, example)};
}

Outcome GradientIntegrity() {
  const auto start = std::chrono::steady_clock::now();
  const std::array<int, kNumStreams> dims = StreamDims(FeatureConfig{}, 3);
  double worst = 0.0;
  std::string where;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    net::ModelSpec spec;
    spec.stream_dims = dims;
    spec.hidden = 8;
    spec.landmark_dim = 4;
    net::SfeModel model = net::InitModel(spec, seed, 0.5);
    Xoshiro256 rng(seed * 7919);
    net::FrameSequence seq;
    seq.video_id = "g";
    seq.label = static_cast<int>(seed % 2);
    for (int t = 0; t < 4; ++t) {
      FeatureBundle b;
      for (int k = 0; k < kNumStreams; ++k) {
        for (int d = 0; d < dims[k]; ++d) b.streams[k].push_back(rng.Uniform(-1.0, 1.0));
      }
      b.config_hash = LayoutFingerprint(dims);
      seq.bundles.push_back(b);
      seq.landmarks.push_back({rng.Uniform(), rng.Uniform(), rng.Uniform(), rng.Uniform()});
    }
    const net::GradientCheckResult r =
        net::GradientCheck(model, seq, net::Objective::kAllPrefixes);
    if (r.max_relative_error > worst) {
      worst = r.max_relative_error;
      where = r.worst_tensor;
    }
  }
  const double secs = Seconds(start);
  return {worst < 1e-4 && secs < 120.0,
          Fmt("max relative error %.3g (%s), %.1f s", worst, where.c_str(), secs)};
}

Outcome Determinism(const fs::path& work) {
  auto pipeline = [&](const std::string& tag) {
    const fs::path dir = work / ("det_" + tag);
    MustRun({"gen", "--seed", "7", "--videos", "24", "--frames", "8", "--out",
             (dir / "data").string()});
    MustRun({"extract", "--manifest", (dir / "data/manifest.jsonl").string(), "--out",
             (dir / "features.csv").string()});
    MustRun({"train", "--manifest", (dir / "data/manifest.jsonl").string(), "--features",
             (dir / "features.csv").string(), "--seed", "7", "--epochs", "40", "--out",
             (dir / "model").string()});
    return dir;
  };
  const fs::path a = pipeline("a");
  const fs::path b = pipeline("b");
  const bool manifest = Slurp(a / "data/manifest.jsonl") == Slurp(b / "data/manifest.jsonl");
  const bool csv = Slurp(a / "features.csv") == Slurp(b / "features.csv");
  const bool ckpt = Slurp(a / "model/model.ckpt") == Slurp(b / "model/model.ckpt");
  return {manifest && csv && ckpt, Fmt("manifest %s, features %s, checkpoint %s",
                                       manifest ? "identical" : "DIFFER",
                                       csv ? "identical" : "DIFFER",
                                       ckpt ? "identical" : "DIFFER")};
}

constexpr std::uint64_t kSeed = 7;
constexpr double kTrainFrac = 0.7;

// A generated and extracted dataset with its held-out sequences.
struct Prepared {
  fs::path manifest;
  fs::path features;
  std::vector<net::FrameSequence> test;
};

Prepared Prepare(const fs::path& dir, const std::string& mix) {
  Prepared p;
  p.manifest = dir / "data/manifest.jsonl";
  p.features = dir / "features.csv";
  MustRun({"gen", "--seed", std::to_string(kSeed), "--videos", "200", "--frames", "8",
           "--height", "64", "--width", "64", "--severity", "0.8", "--mix", mix, "--out",
           (dir / "data").string()});
  MustRun({"extract", "--manifest", p.manifest.string(), "--out", p.features.string()});
  const auto seqs = cli::SequencesFromRows(p.manifest, ReadFeatureCsv(p.features), false);
  std::vector<int> labels;
  for (const auto& s : seqs) labels.push_back(s.label);
  const std::vector<bool> mask = cli::SplitMask(labels, kTrainFrac, kSeed);
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (!mask[i]) p.test.push_back(seqs[i]);
  }
  return p;
}

net::SfeModel TrainModel(const Prepared& p, const fs::path& out,
                         const std::vector<std::string>& extra = {}) {
  std::vector<std::string> args = {"train", "--manifest", p.manifest.string(), "--features",
                                   p.features.string(), "--seed", std::to_string(kSeed),
                                   "--train-frac", "0.7", "--out", out.string()};
  args.insert(args.end(), extra.begin(), extra.end());
  MustRun(args);
  return net::LoadCheckpoint(out / "model.ckpt");
}

metrics::MetricReport Score(const net::SfeModel& model, const Prepared& p) {
  return metrics::Evaluate(cli::ScoreSequences(model, p.test));
}

std::array<double, kNumStreams> MeanGates(const net::SfeModel& model, const Prepared& p) {
  std::array<double, kNumStreams> g{};
  for (const auto& seq : p.test) {
    const net::ForwardResult r = net::Forward(seq, model);
    for (int k = 0; k < kNumStreams; ++k) g[k] += r.gates[k] / p.test.size();
  }
  return g;
}

struct Criterion {
  int number;
  std::string title;
  std::function<Outcome()> run;
};

int Main() {
  const fs::path work = fs::temp_directory_path() / "sfe_acceptance";
  fs::remove_all(work);
  fs::create_directories(work);

  // Criteria 6 and 7 share one dataset and the full model.
  Prepared main_data;
  std::optional<net::SfeModel> full;
  metrics::MetricReport full_report;
  double main_secs = 0.0;

  std::vector<Criterion> criteria = {
      {1, "morphology oracle equivalence", MorphologyOracle},
      {2, "spectral oracle equivalence", SpectralOracle},
      {3, "metrics oracle equivalence", MetricsOracle},
      {4, "gradient integrity", GradientIntegrity},
      {5, "determinism", [&] { return Determinism(work); }},
      {6, "end-to-end synthetic detection",
       [&] {
         const auto start = std::chrono::steady_clock::now();
         main_data = Prepare(work / "main", "0.25,0.25,0.25,0.25");
         full = TrainModel(main_data, work / "main/full");
         full_report = Score(*full, main_data);
         main_secs = Seconds(start);
         return Outcome{full_report.frame_auc >= 0.90 && full_report.eer <= 0.15 &&
                            main_secs < 300.0,
                        Fmt("held-out AUC %.4f, EER %.4f, %zu test videos, %.1f s",
                            full_report.frame_auc, full_report.eer, main_data.test.size(),
                            main_secs)};
       }},
      {7, "ablation direction",
       [&] {
         if (!full) return Outcome{false, "criterion 6 produced no model"};
         const double gated = full_report.frame_auc;
         const double uniform =
             Score(TrainModel(main_data, work / "main/uniform", {"--gating", "uniform"}),
                   main_data)
                 .frame_auc;
         bool singles_ok = true;
         std::string singles;
         for (Stream s : kAllStreams) {
           const std::string name(StreamName(s));
           const double auc =
               Score(TrainModel(main_data, work / ("main/" + name), {"--streams", name}),
                     main_data)
                   .frame_auc;
           singles_ok = singles_ok && auc <= gated + 0.02;
           singles += Fmt(" %s %.4f", name.c_str(), auc);
         }
         return Outcome{gated >= uniform && singles_ok,
                        Fmt("gated %.4f, uniform %.4f; single:", gated, uniform) + singles};
       }},
      {8, "feature-family specificity",
       [&] {
         struct Family {
           const char* name;
           const char* mix;
           std::vector<Stream> streams;
         };
         const std::vector<Family> families = {
             {"splice", "1,0,0,0", {Stream::kLico, Stream::kMoop}},
             {"smooth", "0,1,0,0", {Stream::kHifr}},
             {"recompress", "0,0,1,0", {Stream::kComr}},
             {"texture_swap", "0,0,0,1", {Stream::kText}}};
         int hits = 0;
         std::string detail;
         for (const Family& f : families) {
           const Prepared p = Prepare(work / f.name, f.mix);
           const auto gates = MeanGates(TrainModel(p, work / f.name / "model"), p);
           double w = 0.0;
           for (Stream s : f.streams) w += gates[StreamIndex(s)];
           if (w > 0.2) ++hits;
           detail += Fmt("%s%s %.3f", detail.empty() ? "" : ", ", f.name, w);
         }
         return Outcome{hits >= 3, Fmt("%d/4 above 0.2: ", hits) + detail};
       }},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.number,
                c.title.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(work);
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace sfe

int main() { return sfe::Main(); }
