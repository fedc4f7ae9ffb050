#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sfe/features.h"

// Selective feature expression network: one LSTM per feature stream, a
// softmax gate across the five stream summaries, weighted fusion and a
// two-layer binary classifier. Gradients are derived by hand and verified
// against central finite differences.
namespace sfe::net {

inline constexpr int kReal = 0;
inline constexpr int kFake = 1;

struct FrameSequence {
  std::string video_id;
  std::vector<FeatureBundle> bundles;            // time-ordered, T >= 1
  std::vector<std::vector<double>> landmarks;    // empty, or one vector per frame
  int label = kReal;
};

// Throws std::invalid_argument when the sequence breaks its invariants.
void ValidateSequence(const FrameSequence& seq);

enum class Gating {
  kLearned,  // softmax over a_k . h_k + b
  kUniform,  // fixed 1/|active| weights (ablation)
};

struct ModelSpec {
  std::array<int, kNumStreams> stream_dims{};
  int hidden = 16;
  int landmark_dim = 0;  // 2K
  std::array<bool, kNumStreams> active{true, true, true, true, true};
  Gating gating = Gating::kLearned;

  int num_active() const;
  bool operator==(const ModelSpec&) const = default;
};

// Named view into the flat parameter vector.
struct TensorInfo {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * cols; }
};

// Read-only view of one LSTM cell. Gate order throughout is i, f, o, g.
struct LstmWeights {
  int input_dim = 0;
  int hidden = 0;
  std::array<std::span<const double>, 4> W;  // hidden x input_dim
  std::array<std::span<const double>, 4> U;  // hidden x hidden
  std::array<std::span<const double>, 4> b;  // hidden
};

struct LstmGrads {
  std::array<std::span<double>, 4> W;
  std::array<std::span<double>, 4> U;
  std::array<std::span<double>, 4> b;
};

// Activations of one step, kept for the backward pass.
struct LstmStepCache {
  std::vector<double> x, h_prev, c_prev;
  std::vector<double> i, f, o, g;
  std::vector<double> c, tanh_c, h;
};

// c' = f*c + i*g, h' = o*tanh(c').
LstmStepCache LstmStep(const LstmWeights& w, std::span<const double> x,
                       std::span<const double> h, std::span<const double> c);

// Accumulates parameter gradients into `grads` and writes dx, dh_prev and
// dc_prev given dL/dh' and dL/dc'.
void LstmStepBackward(const LstmWeights& w, const LstmStepCache& cache,
                      std::span<const double> dh, std::span<const double> dc,
                      const LstmGrads& grads, std::span<double> dx,
                      std::span<double> dh_prev, std::span<double> dc_prev);

double Sigmoid(double x);

// Softmax over a_k . h_k + b for the active streams; inactive entries are 0.
std::array<double, kNumStreams> GateWeights(
    const std::array<std::span<const double>, kNumStreams>& summaries,
    const std::array<std::span<const double>, kNumStreams>& gate_vectors, double gate_bias,
    const std::array<bool, kNumStreams>& active);

class SfeModel {
 public:
  // All parameters zero; standardization is the identity.
  explicit SfeModel(const ModelSpec& spec);

  const ModelSpec& spec() const { return spec_; }
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo& tensor(const std::string& name) const;

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::span<double> values(const std::string& name);
  std::span<const double> values(const std::string& name) const;

  // Per-stream input standardization (x - mean) / std, clipped to +-kInputClip.
  std::vector<double>& norm_mean(Stream s) { return norm_mean_[StreamIndex(s)]; }
  std::vector<double>& norm_std(Stream s) { return norm_std_[StreamIndex(s)]; }
  const std::vector<double>& norm_mean(Stream s) const { return norm_mean_[StreamIndex(s)]; }
  const std::vector<double>& norm_std(Stream s) const { return norm_std_[StreamIndex(s)]; }

  LstmWeights lstm(Stream s) const;
  LstmGrads lstm_grads(Stream s, std::span<double> grad) const;

  bool operator==(const SfeModel& other) const;

  static constexpr double kInputClip = 8.0;

 private:
  std::size_t Add(std::string name, int rows, int cols);

  ModelSpec spec_;
  std::vector<TensorInfo> tensors_;
  std::vector<double> params_;
  std::array<std::vector<double>, kNumStreams> norm_mean_;
  std::array<std::vector<double>, kNumStreams> norm_std_;
};

struct ForwardResult {
  double score = 0.5;                                  // after the last frame
  std::array<double, kNumStreams> gates{};             // after the last frame
  std::array<std::vector<double>, kNumStreams> stream_h;  // final h_k
  std::vector<double> frame_scores;                    // score after each prefix
};

ForwardResult Forward(const FrameSequence& seq, const SfeModel& model);

// Binary cross-entropy with the score clamped to [1e-12, 1 - 1e-12].
double Loss(double score, int label);
// d Loss / d score (0 inside the clamped region).
double LossGradient(double score, int label);

// Which prefix scores enter the sequence objective.
enum class Objective {
  kFinalFrame,   // loss on the full-sequence score only
  kAllPrefixes,  // mean of the per-prefix losses
};

// Returns the sequence objective and accumulates d objective / d params into
// `grad` (same layout as model.params()).
double LossAndGradient(const FrameSequence& seq, const SfeModel& model, Objective objective,
                       std::span<double> grad);
double ObjectiveValue(const FrameSequence& seq, const SfeModel& model, Objective objective);

// Per-tensor finite-difference comparison; returns the largest
// ||analytic - numeric|| / (||analytic|| + ||numeric||) over trainable tensors.
struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
};
GradientCheckResult GradientCheck(const SfeModel& model, const FrameSequence& seq,
                                  Objective objective, double step = 1e-5);

struct TrainConfig {
  std::uint64_t seed = 0;
  double learning_rate = 0.2;
  double momentum = 0.9;
  int epochs = 300;
  int hidden = 16;
  double init_scale = 0.3;
  // Global gradient-norm clip; <= 0 disables.
  double clip_norm = 5.0;
  Objective objective = Objective::kAllPrefixes;
  Gating gating = Gating::kLearned;
  std::array<bool, kNumStreams> active{true, true, true, true, true};
  bool use_landmarks = true;
  int jobs = 1;
};

struct TrainResult {
  SfeModel model;
  std::vector<double> loss_trace;  // mean objective before each update
};

// Builds the model spec implied by the data and config.
ModelSpec SpecFor(const std::vector<FrameSequence>& data, const TrainConfig& cfg);

// Uniform(-init_scale, init_scale) parameters with forget biases at +1.
SfeModel InitModel(const ModelSpec& spec, std::uint64_t seed, double init_scale);

// Per-dimension mean / population std over every frame in `data`.
void FitStandardization(SfeModel& model, const std::vector<FrameSequence>& data);

// Full-batch gradient descent with momentum. Deterministic for a given seed
// and data regardless of cfg.jobs.
TrainResult Train(const std::vector<FrameSequence>& data, const TrainConfig& cfg);

// Text checkpoint: "SFE-CKPT v1" then one line per tensor:
// <name> <rows> <cols> <values...> with 17 significant digits.
void SaveCheckpoint(const SfeModel& model, const std::filesystem::path& path);
std::string SerializeCheckpoint(const SfeModel& model);
SfeModel LoadCheckpoint(const std::filesystem::path& path);
SfeModel ParseCheckpoint(const std::string& text);

}  // namespace sfe::net
