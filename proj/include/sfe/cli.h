#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sfe/features.h"
#include "sfe/metrics.h"
#include "sfe/sfenet.h"

// Pipeline glue behind the `sfe_cli` subcommands gen / extract / train /
// eval, exposed as functions so tests can drive the same code paths.
namespace sfe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;

// Feature rows for every frame of every manifest record, in manifest order.
// Throws IoError listing every missing frame before extracting anything.
// When `dump_dir` is non-empty, each feature map is written there as PGM.
std::vector<FeatureRow> ExtractRows(const std::filesystem::path& manifest,
                                    const FeatureConfig& cfg, int jobs,
                                    const std::filesystem::path& dump_dir = {});

// Groups feature rows into per-video sequences following manifest order.
// Landmarks are attached from the manifest when `with_landmarks` is set.
std::vector<net::FrameSequence> SequencesFromRows(const std::filesystem::path& manifest,
                                                  const std::vector<FeatureRow>& rows,
                                                  bool with_landmarks);

// Stratified deterministic split: within each label, indices are shuffled
// with `seed` and the first round(train_fraction * n) go to training.
// Returns one flag per video (true = train).
std::vector<bool> SplitMask(const std::vector<int>& labels, double train_fraction,
                            std::uint64_t seed);

// Frame-level samples: the score of frame t is the model output after the
// prefix 0..t. Sample ids are "<video_id>#<t>" with t zero-padded to 3.
std::vector<metrics::ScoredSample> ScoreSequences(const net::SfeModel& model,
                                                  const std::vector<net::FrameSequence>& seqs);

void WriteScoresCsv(const std::vector<metrics::ScoredSample>& samples,
                    const std::filesystem::path& path);
std::vector<metrics::ScoredSample> ReadScoresCsv(const std::filesystem::path& path);

// Entry point of the command-line tool; returns the process exit code.
int Run(int argc, const char* const* argv);
int Run(const std::vector<std::string>& args);

}  // namespace sfe::cli
