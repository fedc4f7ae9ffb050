#include "sfe/cli.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "sfe/dataset.h"
#include "sfe/parallel.h"
#include "sfe/random.h"
#include "sfe/synthgen.h"

namespace sfe::cli {
namespace fs = std::filesystem;

std::vector<FeatureRow> ExtractRows(const fs::path& manifest, const FeatureConfig& cfg, int jobs,
                                    const fs::path& dump_dir) {
  const std::vector<ManifestRecord> records = ReadManifest(manifest);
  const fs::path base = manifest.parent_path();

  struct Job {
    std::size_t record;
    int frame;
  };
  std::vector<Job> work;
  std::string missing;
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (std::size_t t = 0; t < records[r].frame_paths.size(); ++t) {
      const fs::path p = base / records[r].frame_paths[t];
      if (!fs::is_regular_file(p)) {
        missing += "\n  " + records[r].video_id + " frame " + std::to_string(t) + ": " + p.string();
      }
      work.push_back({r, static_cast<int>(t)});
    }
  }
  if (!missing.empty()) throw IoError("missing frames:" + missing);
  if (!dump_dir.empty()) {
    std::error_code ec;
    fs::create_directories(dump_dir, ec);
    if (ec) throw IoError("cannot create " + dump_dir.string());
  }

  std::vector<FeatureRow> rows(work.size());
  ParallelFor(work.size(), jobs, [&](std::size_t i) {
    const ManifestRecord& rec = records[work[i].record];
    const ImageTensor frame = ReadPnm(base / rec.frame_paths[work[i].frame]);
    FeatureRow& row = rows[i];
    row.video_id = rec.video_id;
    row.frame_index = work[i].frame;
    row.label = rec.label;
    row.bundle = ExtractBundle(frame, cfg);
    if (!dump_dir.empty()) {
      const FeatureMaps maps = ExtractMaps(frame, cfg);
      char stem[96];
      std::snprintf(stem, sizeof(stem), "%s_f%03d_", rec.video_id.c_str(), work[i].frame);
      WritePnm(maps.moop_gradient, dump_dir / (std::string(stem) + "moop_gradient.pgm"));
      WritePnm(maps.moop_residual, dump_dir / (std::string(stem) + "moop_residual.pgm"));
      WritePnm(maps.hifr, dump_dir / (std::string(stem) + "hifr.pgm"));
      WritePnm(maps.comr, dump_dir / (std::string(stem) + "comr.pgm"));
    }
  });
  return rows;
}

std::vector<net::FrameSequence> SequencesFromRows(const fs::path& manifest,
                                                  const std::vector<FeatureRow>& rows,
                                                  bool with_landmarks) {
  const std::vector<ManifestRecord> records = ReadManifest(manifest);
  std::map<std::string, std::vector<const FeatureRow*>> by_video;
  for (const FeatureRow& row : rows) by_video[row.video_id].push_back(&row);

  std::vector<net::FrameSequence> seqs;
  for (const ManifestRecord& rec : records) {
    auto it = by_video.find(rec.video_id);
    if (it == by_video.end()) throw FormatError("no feature rows for video " + rec.video_id);
    std::vector<const FeatureRow*> frames = it->second;
    std::sort(frames.begin(), frames.end(), [](const FeatureRow* a, const FeatureRow* b) {
      return a->frame_index < b->frame_index;
    });
    if (frames.size() != rec.frame_paths.size()) {
      throw FormatError("video " + rec.video_id + ": feature rows do not match the manifest");
    }
    net::FrameSequence seq;
    seq.video_id = rec.video_id;
    seq.label = rec.label;
    for (std::size_t t = 0; t < frames.size(); ++t) {
      if (frames[t]->frame_index != static_cast<int>(t) || frames[t]->label != rec.label) {
        throw FormatError("video " + rec.video_id + ": inconsistent feature rows");
      }
      seq.bundles.push_back(frames[t]->bundle);
    }
    if (with_landmarks && rec.landmarks_path) {
      seq.landmarks = ReadLandmarks(manifest.parent_path() / *rec.landmarks_path);
      if (seq.landmarks.size() != seq.bundles.size()) {
        throw FormatError("video " + rec.video_id + ": landmark rows do not match frame count");
      }
    }
    seqs.push_back(std::move(seq));
  }
  return seqs;
}

std::vector<bool> SplitMask(const std::vector<int>& labels, double train_fraction,
                            std::uint64_t seed) {
  if (!(train_fraction >= 0.0 && train_fraction <= 1.0)) {
    throw std::invalid_argument("train fraction must be in [0,1]");
  }
  std::vector<bool> train(labels.size(), false);
  for (int label : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == label) idx.push_back(i);
    }
    Xoshiro256 rng(DeriveSeed(seed, 0x5B117000ull + static_cast<std::uint64_t>(label)));
    for (std::size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[rng.Below(static_cast<std::uint32_t>(i))]);
    }
    const auto n_train = static_cast<std::size_t>(std::lround(train_fraction * idx.size()));
    for (std::size_t i = 0; i < n_train; ++i) train[idx[i]] = true;
  }
  return train;
}

std::vector<metrics::ScoredSample> ScoreSequences(const net::SfeModel& model,
                                                  const std::vector<net::FrameSequence>& seqs) {
  std::vector<metrics::ScoredSample> samples;
  for (const net::FrameSequence& seq : seqs) {
    const net::ForwardResult r = net::Forward(seq, model);
    for (std::size_t t = 0; t < r.frame_scores.size(); ++t) {
      char id[128];
      std::snprintf(id, sizeof(id), "%s#%03zu", seq.video_id.c_str(), t);
      samples.push_back({id, r.frame_scores[t], seq.label, seq.video_id});
    }
  }
  return samples;
}

void WriteScoresCsv(const std::vector<metrics::ScoredSample>& samples, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "id,video_id,label,score\n";
  for (const auto& s : samples) {
    out << s.id << ',' << s.video_id << ',' << s.label << ',' << FormatDouble(s.score) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<metrics::ScoredSample> ReadScoresCsv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "id,video_id,label,score") {
    throw FormatError(path.string() + ": expected header id,video_id,label,score");
  }
  std::vector<metrics::ScoredSample> samples;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, video, label, score;
    if (!std::getline(ss, id, ',') || !std::getline(ss, video, ',') ||
        !std::getline(ss, label, ',') || !std::getline(ss, score)) {
      throw FormatError(path.string() + ": malformed row '" + line + "'");
    }
    try {
      samples.push_back({id, std::stod(score), std::stoi(label), video});
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ": malformed row '" + line + "'");
    }
  }
  return samples;
}

namespace {

struct FeatureFlags {
  int grid = 4;
  int quality = 90;
  int hp_radius = -1;

  FeatureConfig config() const {
    FeatureConfig cfg;
    cfg.grid = grid;
    cfg.quality = quality;
    if (hp_radius >= 0) cfg.hp_radius = hp_radius;
    return cfg;
  }
};

void AddFeatureFlags(CLI::App* cmd, FeatureFlags& f) {
  cmd->add_option("--grid", f.grid, "Pooling / lighting grid size G")->check(CLI::PositiveNumber);
  cmd->add_option("--quality", f.quality, "Quality of the compression round trip")
      ->check(CLI::Range(1, 100));
  cmd->add_option("--hp-radius", f.hp_radius,
                  "High-pass radius in bins; -1 uses floor(min(H,W)/8)");
}

struct SequenceSource {
  std::string manifest;
  std::string features;
  FeatureFlags feature_flags;
  std::string split = "all";
  double train_frac = 0.7;
  std::uint64_t seed = 0;
  int jobs = 1;
};

void AddSourceFlags(CLI::App* cmd, SequenceSource& s, const std::string& default_split) {
  s.split = default_split;
  cmd->add_option("--manifest", s.manifest, "Dataset manifest (JSON Lines)")->required();
  cmd->add_option("--features", s.features,
                  "Feature CSV from `extract`; features are recomputed when omitted");
  AddFeatureFlags(cmd, s.feature_flags);
  cmd->add_option("--split", s.split, "Videos to use: all, train or test")
      ->check(CLI::IsMember({"all", "train", "test"}));
  cmd->add_option("--train-frac", s.train_frac, "Training fraction of the stratified split")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", s.seed, "Seed for the split and every random draw");
  cmd->add_option("--jobs", s.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

std::vector<net::FrameSequence> LoadSequences(const SequenceSource& s, bool with_landmarks) {
  const std::vector<FeatureRow> rows =
      s.features.empty() ? ExtractRows(s.manifest, s.feature_flags.config(), s.jobs)
                         : ReadFeatureCsv(s.features);
  std::vector<net::FrameSequence> seqs = SequencesFromRows(s.manifest, rows, with_landmarks);
  if (s.split == "all") return seqs;
  std::vector<int> labels;
  for (const auto& seq : seqs) labels.push_back(seq.label);
  const std::vector<bool> mask = SplitMask(labels, s.train_frac, s.seed);
  std::vector<net::FrameSequence> picked;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    if (mask[i] == (s.split == "train")) picked.push_back(std::move(seqs[i]));
  }
  return picked;
}

std::array<double, synth::kNumFamilies> ParseMix(const std::string& text) {
  std::array<double, synth::kNumFamilies> mix{};
  std::stringstream ss(text);
  std::string tok;
  int n = 0;
  while (std::getline(ss, tok, ',')) {
    if (n >= synth::kNumFamilies) throw std::invalid_argument("--mix takes four proportions");
    try {
      mix[n++] = std::stod(tok);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("--mix: bad proportion '" + tok + "'");
    }
  }
  if (n != synth::kNumFamilies) throw std::invalid_argument("--mix takes four proportions");
  return mix;
}

std::array<bool, kNumStreams> ParseStreams(const std::vector<std::string>& names) {
  std::array<bool, kNumStreams> active{};
  for (const std::string& name : names) {
    const std::optional<Stream> s = ParseStream(name);
    if (!s) throw std::invalid_argument("unknown stream '" + name + "'");
    active[StreamIndex(*s)] = true;
  }
  return active;
}

template <typename Fn>
int Guarded(Fn&& fn) {
  try {
    fn();
    return kExitOk;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace

int Run(int argc, const char* const* argv) {
  CLI::App app{"Selective feature expression deepfake detection: gen, extract, train, eval",
               "sfe_cli"};
  app.set_config("--config", "", "INI/TOML file with flag values; explicit flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);

  // gen
  synth::GenConfig gen;
  std::string gen_out;
  std::string gen_mix = "0.25,0.25,0.25,0.25";
  CLI::App* gen_cmd = app.add_subcommand("gen", "Generate a synthetic tampered-video dataset");
  gen_cmd->add_option("--seed", gen.seed, "Dataset seed");
  gen_cmd->add_option("--videos", gen.n_videos, "Number of videos (half fake, rounded down)");
  gen_cmd->add_option("--frames", gen.frames, "Frames per video (>= 2)");
  gen_cmd->add_option("--height", gen.height, "Frame height");
  gen_cmd->add_option("--width", gen.width, "Frame width");
  gen_cmd->add_option("--severity", gen.severity, "Tampering strength in (0,1]");
  gen_cmd->add_option("--mix", gen_mix,
                      "Proportions of splice,smooth,recompress,texture_swap among fakes");
  gen_cmd->add_option("--landmarks", gen.landmark_points,
                      "Dummy landmark points per frame (0 writes no landmark files)");
  gen_cmd->add_option("--jobs", gen.jobs, "Worker threads")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen_out, "Output directory")->required();

  // extract
  std::string ex_manifest;
  std::string ex_out;
  FeatureFlags ex_flags;
  bool ex_dump = false;
  int ex_jobs = 1;
  CLI::App* ex_cmd = app.add_subcommand("extract", "Write the per-frame feature CSV");
  ex_cmd->add_option("--manifest", ex_manifest, "Dataset manifest (JSON Lines)")->required();
  ex_cmd->add_option("--out", ex_out, "Feature CSV path")->required();
  AddFeatureFlags(ex_cmd, ex_flags);
  ex_cmd->add_flag("--dump-maps", ex_dump, "Also write every feature map as PGM under maps/");
  ex_cmd->add_option("--jobs", ex_jobs, "Worker threads")->check(CLI::PositiveNumber);

  // train
  SequenceSource tr_src;
  net::TrainConfig tr;
  std::string tr_out;
  bool tr_landmarks = false;
  std::string tr_gating = "learned";
  std::string tr_objective = "prefixes";
  std::vector<std::string> tr_streams = {"Text", "Comr", "Hifr", "Lico", "Moop"};
  CLI::App* tr_cmd = app.add_subcommand("train", "Train the gated multi-stream model");
  AddSourceFlags(tr_cmd, tr_src, "train");
  tr_cmd->add_option("--out", tr_out, "Output directory for model.ckpt and loss.csv")->required();
  tr_cmd->add_option("--hidden", tr.hidden, "LSTM hidden size D")->check(CLI::PositiveNumber);
  tr_cmd->add_option("--lr", tr.learning_rate, "Learning rate")->check(CLI::NonNegativeNumber);
  tr_cmd->add_option("--momentum", tr.momentum, "Momentum")->check(CLI::Range(0.0, 1.0));
  tr_cmd->add_option("--epochs", tr.epochs, "Full-batch epochs")->check(CLI::NonNegativeNumber);
  tr_cmd->add_option("--init-scale", tr.init_scale, "Uniform init half-width");
  tr_cmd->add_option("--clip-norm", tr.clip_norm, "Gradient norm clip (<= 0 disables)");
  tr_cmd->add_flag("--landmarks", tr_landmarks, "Feed manifest landmarks to the classifier");
  tr_cmd->add_option("--gating", tr_gating, "learned or uniform")
      ->check(CLI::IsMember({"learned", "uniform"}));
  tr_cmd->add_option("--objective", tr_objective, "prefixes or final")
      ->check(CLI::IsMember({"prefixes", "final"}));
  tr_cmd->add_option("--streams", tr_streams, "Active streams")->delimiter(',');

  // eval
  SequenceSource ev_src;
  std::string ev_checkpoint;
  std::string ev_scores;
  std::string ev_out;
  CLI::App* ev_cmd = app.add_subcommand("eval", "Score a split and write metric reports");
  ev_cmd->add_option("--manifest", ev_src.manifest, "Dataset manifest (JSON Lines)");
  ev_cmd->add_option("--features", ev_src.features,
                     "Feature CSV from `extract`; features are recomputed when omitted");
  AddFeatureFlags(ev_cmd, ev_src.feature_flags);
  ev_src.split = "test";
  ev_cmd->add_option("--split", ev_src.split, "Videos to use: all, train or test")
      ->check(CLI::IsMember({"all", "train", "test"}));
  ev_cmd->add_option("--train-frac", ev_src.train_frac, "Training fraction of the split")
      ->check(CLI::Range(0.0, 1.0));
  ev_cmd->add_option("--seed", ev_src.seed, "Seed of the split");
  ev_cmd->add_option("--jobs", ev_src.jobs, "Worker threads")->check(CLI::PositiveNumber);
  ev_cmd->add_option("--checkpoint", ev_checkpoint, "Model checkpoint");
  ev_cmd->add_option("--scores", ev_scores,
                     "Existing scores CSV (id,video_id,label,score) instead of a model");
  ev_cmd->add_option("--out", ev_out, "Output directory for report.csv, roc.csv, scores.csv")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (gen_cmd->parsed()) {
    return Guarded([&] {
      gen.forgery_mix = ParseMix(gen_mix);
      const auto records = synth::GenDataset(gen, gen_out);
      std::cout << "wrote " << records.size() << " videos to "
                << (fs::path(gen_out) / synth::kManifestName).string() << '\n';
    });
  }
  if (ex_cmd->parsed()) {
    return Guarded([&] {
      const fs::path out(ex_out);
      const fs::path dump = ex_dump ? out.parent_path() / "maps" : fs::path();
      const std::vector<FeatureRow> rows =
          ExtractRows(ex_manifest, ex_flags.config(), ex_jobs, dump);
      if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
      WriteFeatureCsv(rows, out);
      std::cout << "wrote " << rows.size() << " feature rows to " << out.string() << '\n';
    });
  }
  if (tr_cmd->parsed()) {
    return Guarded([&] {
      tr.seed = tr_src.seed;
      tr.jobs = tr_src.jobs;
      tr.use_landmarks = tr_landmarks;
      tr.gating = tr_gating == "learned" ? net::Gating::kLearned : net::Gating::kUniform;
      tr.objective =
          tr_objective == "prefixes" ? net::Objective::kAllPrefixes : net::Objective::kFinalFrame;
      tr.active = ParseStreams(tr_streams);
      const std::vector<net::FrameSequence> seqs = LoadSequences(tr_src, tr_landmarks);
      const net::TrainResult result = net::Train(seqs, tr);
      const fs::path out(tr_out);
      std::error_code ec;
      fs::create_directories(out, ec);
      if (ec) throw IoError("cannot create " + out.string());
      net::SaveCheckpoint(result.model, out / "model.ckpt");
      std::ofstream loss(out / "loss.csv", std::ios::trunc);
      if (!loss) throw IoError("cannot write " + (out / "loss.csv").string());
      loss << "epoch,loss\n";
      for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
        loss << e << ',' << FormatDouble(result.loss_trace[e]) << '\n';
      }
      std::cout << "trained on " << seqs.size() << " sequences";
      if (!result.loss_trace.empty()) std::cout << ", final loss " << result.loss_trace.back();
      std::cout << "\nwrote " << (out / "model.ckpt").string() << '\n';
    });
  }
  if (ev_cmd->parsed()) {
    return Guarded([&] {
      std::vector<metrics::ScoredSample> samples;
      if (!ev_scores.empty()) {
        samples = ReadScoresCsv(ev_scores);
      } else {
        if (ev_checkpoint.empty() || ev_src.manifest.empty()) {
          throw std::invalid_argument("eval needs --checkpoint and --manifest, or --scores");
        }
        const net::SfeModel model = net::LoadCheckpoint(ev_checkpoint);
        const auto seqs = LoadSequences(ev_src, model.spec().landmark_dim > 0);
        samples = ScoreSequences(model, seqs);
      }
      const metrics::MetricReport report = metrics::Evaluate(samples);
      const fs::path out(ev_out);
      std::error_code ec;
      fs::create_directories(out, ec);
      if (ec) throw IoError("cannot create " + out.string());
      WriteScoresCsv(samples, out / "scores.csv");
      metrics::WriteReportCsv(report, out / "report.csv");
      metrics::WriteRocCsv(report, out / "roc.csv");
      std::cout << metrics::FormatReportTable(report);
    });
  }
  return kExitConfig;
}

int Run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("sfe_cli");
  for (const std::string& a : args) argv.push_back(a.c_str());
  return Run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace sfe::cli
