#include "sfe/sfenet.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "sfe/parallel.h"
#include "sfe/random.h"

namespace sfe::net {
namespace {

constexpr std::array<const char*, 4> kGateNames = {"i", "f", "o", "g"};
constexpr int kForgetGate = 1;
constexpr char kCheckpointMagic[] = "SFE-CKPT v1";

std::string Name(Stream s) { return std::string(StreamName(s)); }

// y += A x for row-major A (rows x cols).
void MatVecAdd(std::span<const double> a, int rows, int cols, std::span<const double> x,
               std::span<double> y) {
  for (int r = 0; r < rows; ++r) {
    const double* row = a.data() + static_cast<std::size_t>(r) * cols;
    double acc = 0.0;
    for (int c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
}

// y += A^T x.
void MatTVecAdd(std::span<const double> a, int rows, int cols, std::span<const double> x,
                std::span<double> y) {
  for (int r = 0; r < rows; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const double* row = a.data() + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) y[c] += row[c] * xr;
  }
}

// G += u v^T.
void OuterAdd(std::span<double> g, std::span<const double> u, std::span<const double> v) {
  const std::size_t cols = v.size();
  for (std::size_t r = 0; r < u.size(); ++r) {
    const double ur = u[r];
    if (ur == 0.0) continue;
    double* row = g.data() + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += ur * v[c];
  }
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

struct HeadCache {
  std::array<double, kNumStreams> w{};
  std::vector<double> in, z1, a1;
  double s = 0.0;
  double score = 0.5;
};

struct Trace {
  std::array<std::vector<std::vector<double>>, kNumStreams> x;
  std::array<std::vector<LstmStepCache>, kNumStreams> steps;
  std::vector<HeadCache> heads;
};

// Spans for the classifier and gate, resolved once per pass.
struct HeadView {
  std::span<const double> W1, b1, w2, b2;
  std::array<std::span<const double>, kNumStreams> gate_a;
  double gate_b = 0.0;
};

HeadView ResolveHead(const SfeModel& m) {
  HeadView v;
  v.W1 = m.values("cls.W1");
  v.b1 = m.values("cls.b1");
  v.w2 = m.values("cls.w2");
  v.b2 = m.values("cls.b2");
  for (Stream s : kAllStreams) v.gate_a[StreamIndex(s)] = m.values("gate.a." + Name(s));
  v.gate_b = m.values("gate.b")[0];
  return v;
}

void CheckCompatible(const FrameSequence& seq, const SfeModel& model) {
  ValidateSequence(seq);
  const ModelSpec& spec = model.spec();
  for (Stream s : kAllStreams) {
    if (!spec.active[StreamIndex(s)]) continue;
    if (static_cast<int>(seq.bundles.front()[s].size()) != spec.stream_dims[StreamIndex(s)]) {
      throw std::invalid_argument("sequence " + seq.video_id + ": stream " + Name(s) +
                                  " width does not match the model");
    }
  }
  if (spec.landmark_dim > 0 && !seq.landmarks.empty() &&
      static_cast<int>(seq.landmarks.front().size()) != spec.landmark_dim) {
    throw std::invalid_argument("sequence " + seq.video_id +
                                ": landmark width does not match the model");
  }
}

Trace RunForward(const FrameSequence& seq, const SfeModel& model) {
  CheckCompatible(seq, model);
  const ModelSpec& spec = model.spec();
  const int D = spec.hidden;
  const int T = static_cast<int>(seq.bundles.size());
  const int in_dim = kNumStreams * D + spec.landmark_dim;
  const HeadView head = ResolveHead(model);
  Trace tr;

  for (Stream s : kAllStreams) {
    const int k = StreamIndex(s);
    if (!spec.active[k]) continue;
    const int dim = spec.stream_dims[k];
    const auto P = model.values("proj." + Name(s) + ".W");
    const auto p = model.values("proj." + Name(s) + ".b");
    const auto& mean = model.norm_mean(s);
    const auto& sd = model.norm_std(s);
    const LstmWeights lw = model.lstm(s);
    std::vector<double> h(D, 0.0);
    std::vector<double> c(D, 0.0);
    for (int t = 0; t < T; ++t) {
      const std::vector<double>& raw = seq.bundles[t][s];
      std::vector<double> x(dim);
      for (int d = 0; d < dim; ++d) {
        x[d] = std::clamp((raw[d] - mean[d]) / sd[d], -SfeModel::kInputClip,
                          SfeModel::kInputClip);
      }
      std::vector<double> u(p.begin(), p.end());
      MatVecAdd(P, D, dim, x, u);
      LstmStepCache step = LstmStep(lw, u, h, c);
      h = step.h;
      c = step.c;
      tr.x[k].push_back(std::move(x));
      tr.steps[k].push_back(std::move(step));
    }
  }

  std::vector<double> lm_sum(spec.landmark_dim, 0.0);
  for (int t = 0; t < T; ++t) {
    HeadCache hc;
    std::array<std::span<const double>, kNumStreams> summaries;
    for (int k = 0; k < kNumStreams; ++k) {
      if (spec.active[k]) summaries[k] = tr.steps[k][t].h;
    }
    if (spec.gating == Gating::kLearned) {
      hc.w = GateWeights(summaries, head.gate_a, head.gate_b, spec.active);
    } else {
      for (int k = 0; k < kNumStreams; ++k) {
        hc.w[k] = spec.active[k] ? 1.0 / spec.num_active() : 0.0;
      }
    }
    hc.in.assign(in_dim, 0.0);
    for (int k = 0; k < kNumStreams; ++k) {
      if (!spec.active[k]) continue;
      for (int d = 0; d < D; ++d) hc.in[k * D + d] = hc.w[k] * summaries[k][d];
    }
    if (spec.landmark_dim > 0 && !seq.landmarks.empty()) {
      for (int j = 0; j < spec.landmark_dim; ++j) {
        lm_sum[j] += seq.landmarks[t][j];
        hc.in[kNumStreams * D + j] = lm_sum[j] / (t + 1);
      }
    }
    hc.z1.assign(head.b1.begin(), head.b1.end());
    MatVecAdd(head.W1, D, in_dim, hc.in, hc.z1);
    hc.a1.resize(D);
    for (int d = 0; d < D; ++d) hc.a1[d] = std::max(hc.z1[d], 0.0);
    hc.s = Dot(head.w2, hc.a1) + head.b2[0];
    hc.score = Sigmoid(hc.s);
    tr.heads.push_back(std::move(hc));
  }
  return tr;
}

std::vector<double> PrefixWeights(int T, Objective objective) {
  std::vector<double> lambda(T, 0.0);
  if (objective == Objective::kFinalFrame) {
    lambda[T - 1] = 1.0;
  } else {
    std::fill(lambda.begin(), lambda.end(), 1.0 / T);
  }
  return lambda;
}

double GlobalNorm(std::span<const double> v) {
  double ss = 0.0;
  for (double x : v) ss += x * x;
  return std::sqrt(ss);
}

}  // namespace

void ValidateSequence(const FrameSequence& seq) {
  if (seq.bundles.empty()) {
    throw std::invalid_argument("sequence " + seq.video_id + " has no frames");
  }
  if (seq.label != kReal && seq.label != kFake) {
    throw std::invalid_argument("sequence " + seq.video_id + " has an invalid label");
  }
  const FeatureBundle& first = seq.bundles.front();
  for (const FeatureBundle& b : seq.bundles) {
    bool same = b.config_hash == first.config_hash;
    for (int k = 0; k < kNumStreams; ++k) {
      same = same && b.streams[k].size() == first.streams[k].size();
    }
    if (!same) {
      throw std::invalid_argument("sequence " + seq.video_id +
                                  " mixes feature configurations");
    }
  }
  if (!seq.landmarks.empty()) {
    if (seq.landmarks.size() != seq.bundles.size()) {
      throw std::invalid_argument("sequence " + seq.video_id +
                                  ": landmark count differs from frame count");
    }
    for (const auto& lm : seq.landmarks) {
      if (lm.size() != seq.landmarks.front().size()) {
        throw std::invalid_argument("sequence " + seq.video_id +
                                    ": landmark vectors have different lengths");
      }
    }
  }
}

int ModelSpec::num_active() const {
  return static_cast<int>(std::count(active.begin(), active.end(), true));
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

LstmStepCache LstmStep(const LstmWeights& w, std::span<const double> x,
                       std::span<const double> h, std::span<const double> c) {
  const int D = w.hidden;
  if (static_cast<int>(x.size()) != w.input_dim || static_cast<int>(h.size()) != D ||
      static_cast<int>(c.size()) != D) {
    throw std::invalid_argument("LSTM step shape mismatch");
  }
  LstmStepCache cache;
  cache.x.assign(x.begin(), x.end());
  cache.h_prev.assign(h.begin(), h.end());
  cache.c_prev.assign(c.begin(), c.end());
  std::array<std::vector<double>*, 4> gates = {&cache.i, &cache.f, &cache.o, &cache.g};
  for (int q = 0; q < 4; ++q) {
    std::vector<double>& pre = *gates[q];
    pre.assign(w.b[q].begin(), w.b[q].end());
    MatVecAdd(w.W[q], D, w.input_dim, x, pre);
    MatVecAdd(w.U[q], D, D, h, pre);
    for (double& v : pre) v = q == 3 ? std::tanh(v) : Sigmoid(v);
  }
  cache.c.resize(D);
  cache.tanh_c.resize(D);
  cache.h.resize(D);
  for (int d = 0; d < D; ++d) {
    cache.c[d] = cache.f[d] * c[d] + cache.i[d] * cache.g[d];
    cache.tanh_c[d] = std::tanh(cache.c[d]);
    cache.h[d] = cache.o[d] * cache.tanh_c[d];
  }
  return cache;
}

void LstmStepBackward(const LstmWeights& w, const LstmStepCache& cache,
                      std::span<const double> dh, std::span<const double> dc,
                      const LstmGrads& grads, std::span<double> dx,
                      std::span<double> dh_prev, std::span<double> dc_prev) {
  const int D = w.hidden;
  std::array<std::vector<double>, 4> dpre;
  for (auto& v : dpre) v.resize(D);
  for (int d = 0; d < D; ++d) {
    const double dc_total =
        dc[d] + dh[d] * cache.o[d] * (1.0 - cache.tanh_c[d] * cache.tanh_c[d]);
    const double di = dc_total * cache.g[d];
    const double df = dc_total * cache.c_prev[d];
    const double d_o = dh[d] * cache.tanh_c[d];
    const double dg = dc_total * cache.i[d];
    dpre[0][d] = di * cache.i[d] * (1.0 - cache.i[d]);
    dpre[1][d] = df * cache.f[d] * (1.0 - cache.f[d]);
    dpre[2][d] = d_o * cache.o[d] * (1.0 - cache.o[d]);
    dpre[3][d] = dg * (1.0 - cache.g[d] * cache.g[d]);
    dc_prev[d] = dc_total * cache.f[d];
  }
  std::fill(dx.begin(), dx.end(), 0.0);
  std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
  for (int q = 0; q < 4; ++q) {
    OuterAdd(grads.W[q], dpre[q], cache.x);
    OuterAdd(grads.U[q], dpre[q], cache.h_prev);
    for (int d = 0; d < D; ++d) grads.b[q][d] += dpre[q][d];
    MatTVecAdd(w.W[q], D, w.input_dim, dpre[q], dx);
    MatTVecAdd(w.U[q], D, D, dpre[q], dh_prev);
  }
}

std::array<double, kNumStreams> GateWeights(
    const std::array<std::span<const double>, kNumStreams>& summaries,
    const std::array<std::span<const double>, kNumStreams>& gate_vectors, double gate_bias,
    const std::array<bool, kNumStreams>& active) {
  std::array<double, kNumStreams> logits{};
  double max_logit = -INFINITY;
  for (int k = 0; k < kNumStreams; ++k) {
    if (!active[k]) continue;
    if (summaries[k].size() != gate_vectors[k].size()) {
      throw std::invalid_argument("gate vector and summary widths differ");
    }
    logits[k] = Dot(gate_vectors[k], summaries[k]) + gate_bias;
    max_logit = std::max(max_logit, logits[k]);
  }
  std::array<double, kNumStreams> w{};
  double total = 0.0;
  for (int k = 0; k < kNumStreams; ++k) {
    if (!active[k]) continue;
    w[k] = std::exp(logits[k] - max_logit);
    total += w[k];
  }
  if (total == 0.0) throw std::invalid_argument("gate needs at least one active stream");
  for (double& v : w) v /= total;
  return w;
}

SfeModel::SfeModel(const ModelSpec& spec) : spec_(spec) {
  if (spec.hidden < 1) throw std::invalid_argument("hidden size must be >= 1");
  if (spec.landmark_dim < 0) throw std::invalid_argument("landmark width must be >= 0");
  if (spec.num_active() == 0) throw std::invalid_argument("no active feature streams");
  const int D = spec.hidden;
  for (Stream s : kAllStreams) {
    const int dim = spec.stream_dims[StreamIndex(s)];
    if (dim < 1) throw std::invalid_argument("stream " + Name(s) + " has no features");
    Add("proj." + Name(s) + ".W", D, dim);
    Add("proj." + Name(s) + ".b", D, 1);
    for (const char* g : kGateNames) Add("lstm." + Name(s) + ".W_" + g, D, D);
    for (const char* g : kGateNames) Add("lstm." + Name(s) + ".U_" + g, D, D);
    for (const char* g : kGateNames) Add("lstm." + Name(s) + ".b_" + g, D, 1);
    Add("gate.a." + Name(s), D, 1);
    norm_mean_[StreamIndex(s)].assign(dim, 0.0);
    norm_std_[StreamIndex(s)].assign(dim, 1.0);
  }
  Add("gate.b", 1, 1);
  Add("cls.W1", D, kNumStreams * D + spec.landmark_dim);
  Add("cls.b1", D, 1);
  Add("cls.w2", 1, D);
  Add("cls.b2", 1, 1);
}

std::size_t SfeModel::Add(std::string name, int rows, int cols) {
  const std::size_t offset = params_.size();
  tensors_.push_back({std::move(name), rows, cols, offset});
  params_.resize(offset + static_cast<std::size_t>(rows) * cols, 0.0);
  return offset;
}

const TensorInfo& SfeModel::tensor(const std::string& name) const {
  for (const TensorInfo& t : tensors_) {
    if (t.name == name) return t;
  }
  throw std::out_of_range("no tensor named " + name);
}

std::span<double> SfeModel::values(const std::string& name) {
  const TensorInfo& t = tensor(name);
  return std::span<double>(params_).subspan(t.offset, t.size());
}

std::span<const double> SfeModel::values(const std::string& name) const {
  const TensorInfo& t = tensor(name);
  return std::span<const double>(params_).subspan(t.offset, t.size());
}

LstmWeights SfeModel::lstm(Stream s) const {
  LstmWeights w;
  w.input_dim = spec_.hidden;
  w.hidden = spec_.hidden;
  for (int q = 0; q < 4; ++q) {
    w.W[q] = values("lstm." + Name(s) + ".W_" + kGateNames[q]);
    w.U[q] = values("lstm." + Name(s) + ".U_" + kGateNames[q]);
    w.b[q] = values("lstm." + Name(s) + ".b_" + kGateNames[q]);
  }
  return w;
}

LstmGrads SfeModel::lstm_grads(Stream s, std::span<double> grad) const {
  LstmGrads g;
  for (int q = 0; q < 4; ++q) {
    const TensorInfo& W = tensor("lstm." + Name(s) + ".W_" + kGateNames[q]);
    const TensorInfo& U = tensor("lstm." + Name(s) + ".U_" + kGateNames[q]);
    const TensorInfo& b = tensor("lstm." + Name(s) + ".b_" + kGateNames[q]);
    g.W[q] = grad.subspan(W.offset, W.size());
    g.U[q] = grad.subspan(U.offset, U.size());
    g.b[q] = grad.subspan(b.offset, b.size());
  }
  return g;
}

bool SfeModel::operator==(const SfeModel& other) const {
  return spec_ == other.spec_ && params_ == other.params_ && norm_mean_ == other.norm_mean_ &&
         norm_std_ == other.norm_std_;
}

ForwardResult Forward(const FrameSequence& seq, const SfeModel& model) {
  const Trace tr = RunForward(seq, model);
  ForwardResult r;
  for (const HeadCache& h : tr.heads) r.frame_scores.push_back(h.score);
  r.score = tr.heads.back().score;
  r.gates = tr.heads.back().w;
  for (int k = 0; k < kNumStreams; ++k) {
    if (model.spec().active[k]) r.stream_h[k] = tr.steps[k].back().h;
  }
  return r;
}

double Loss(double score, int label) {
  const double p = std::clamp(score, 1e-12, 1.0 - 1e-12);
  return label == kFake ? -std::log(p) : -std::log(1.0 - p);
}

double LossGradient(double score, int label) {
  if (score < 1e-12 || score > 1.0 - 1e-12) return 0.0;
  return label == kFake ? -1.0 / score : 1.0 / (1.0 - score);
}

double ObjectiveValue(const FrameSequence& seq, const SfeModel& model, Objective objective) {
  const Trace tr = RunForward(seq, model);
  const std::vector<double> lambda = PrefixWeights(static_cast<int>(tr.heads.size()), objective);
  double total = 0.0;
  for (std::size_t t = 0; t < tr.heads.size(); ++t) {
    if (lambda[t] != 0.0) total += lambda[t] * Loss(tr.heads[t].score, seq.label);
  }
  return total;
}

double LossAndGradient(const FrameSequence& seq, const SfeModel& model, Objective objective,
                       std::span<double> grad) {
  if (grad.size() != model.params().size()) {
    throw std::invalid_argument("gradient buffer does not match the model");
  }
  const Trace tr = RunForward(seq, model);
  const ModelSpec& spec = model.spec();
  const int D = spec.hidden;
  const int T = static_cast<int>(tr.heads.size());
  const int in_dim = kNumStreams * D + spec.landmark_dim;
  const std::vector<double> lambda = PrefixWeights(T, objective);
  const HeadView head = ResolveHead(model);

  auto grad_of = [&](const std::string& name) {
    const TensorInfo& t = model.tensor(name);
    return grad.subspan(t.offset, t.size());
  };
  const auto gW1 = grad_of("cls.W1");
  const auto gb1 = grad_of("cls.b1");
  const auto gw2 = grad_of("cls.w2");
  const auto gb2 = grad_of("cls.b2");
  const auto ggb = grad_of("gate.b");
  std::array<std::span<double>, kNumStreams> gga;
  for (Stream s : kAllStreams) gga[StreamIndex(s)] = grad_of("gate.a." + Name(s));

  std::array<std::vector<double>, kNumStreams> dh, dc;
  for (int k = 0; k < kNumStreams; ++k) {
    dh[k].assign(D, 0.0);
    dc[k].assign(D, 0.0);
  }
  std::vector<double> dz1(D), din(in_dim), dx(D), dh_prev(D), dc_prev(D);

  double loss = 0.0;
  for (int t = T - 1; t >= 0; --t) {
    const HeadCache& hc = tr.heads[t];
    if (lambda[t] != 0.0) {
      loss += lambda[t] * Loss(hc.score, seq.label);
      // d BCE / d s = score - y away from the clamp.
      const double ds = lambda[t] * LossGradient(hc.score, seq.label) * hc.score * (1.0 - hc.score);
      gb2[0] += ds;
      for (int d = 0; d < D; ++d) {
        gw2[d] += ds * hc.a1[d];
        dz1[d] = hc.z1[d] > 0.0 ? ds * head.w2[d] : 0.0;
        gb1[d] += dz1[d];
      }
      OuterAdd(gW1, dz1, hc.in);
      std::fill(din.begin(), din.end(), 0.0);
      MatTVecAdd(head.W1, D, in_dim, dz1, din);

      std::array<double, kNumStreams> dw{};
      double weighted = 0.0;
      for (int k = 0; k < kNumStreams; ++k) {
        if (!spec.active[k]) continue;
        const std::vector<double>& h = tr.steps[k][t].h;
        for (int d = 0; d < D; ++d) {
          dh[k][d] += hc.w[k] * din[k * D + d];
          dw[k] += din[k * D + d] * h[d];
        }
        weighted += hc.w[k] * dw[k];
      }
      if (spec.gating == Gating::kLearned) {
        for (int k = 0; k < kNumStreams; ++k) {
          if (!spec.active[k]) continue;
          const double dlogit = hc.w[k] * (dw[k] - weighted);
          const std::vector<double>& h = tr.steps[k][t].h;
          for (int d = 0; d < D; ++d) {
            gga[k][d] += dlogit * h[d];
            dh[k][d] += dlogit * head.gate_a[k][d];
          }
          ggb[0] += dlogit;
        }
      }
    }

    for (Stream s : kAllStreams) {
      const int k = StreamIndex(s);
      if (!spec.active[k]) continue;
      const LstmWeights lw = model.lstm(s);
      LstmStepBackward(lw, tr.steps[k][t], dh[k], dc[k], model.lstm_grads(s, grad), dx,
                       dh_prev, dc_prev);
      const auto gP = grad_of("proj." + Name(s) + ".W");
      const auto gp = grad_of("proj." + Name(s) + ".b");
      OuterAdd(gP, dx, tr.x[k][t]);
      for (int d = 0; d < D; ++d) gp[d] += dx[d];
      dh[k].swap(dh_prev);
      dc[k].swap(dc_prev);
    }
  }
  return loss;
}

GradientCheckResult GradientCheck(const SfeModel& model, const FrameSequence& seq,
                                  Objective objective, double step) {
  std::vector<double> analytic(model.params().size(), 0.0);
  LossAndGradient(seq, model, objective, analytic);
  SfeModel probe = model;
  GradientCheckResult result;
  for (const TensorInfo& t : model.tensors()) {
    double diff_sq = 0.0;
    double a_sq = 0.0;
    double n_sq = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      double& theta = probe.params()[t.offset + j];
      const double saved = theta;
      theta = saved + step;
      const double up = ObjectiveValue(seq, probe, objective);
      theta = saved - step;
      const double down = ObjectiveValue(seq, probe, objective);
      theta = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[t.offset + j];
      diff_sq += (a - numeric) * (a - numeric);
      a_sq += a * a;
      n_sq += numeric * numeric;
    }
    // Floor keeps identically-zero gradients (the shared gate bias) from reading as noise ratios.
    const double denom = std::max(std::sqrt(a_sq) + std::sqrt(n_sq), 1e-6);
    const double rel = std::sqrt(diff_sq) / denom;
    if (result.worst_tensor.empty() || rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_tensor = t.name;
    }
  }
  return result;
}

ModelSpec SpecFor(const std::vector<FrameSequence>& data, const TrainConfig& cfg) {
  if (data.empty()) throw std::invalid_argument("training data is empty");
  ModelSpec spec;
  for (int k = 0; k < kNumStreams; ++k) {
    spec.stream_dims[k] = static_cast<int>(data.front().bundles.front().streams[k].size());
  }
  spec.hidden = cfg.hidden;
  spec.active = cfg.active;
  spec.gating = cfg.gating;
  if (cfg.use_landmarks) {
    for (const FrameSequence& seq : data) {
      if (seq.landmarks.empty()) continue;
      const int dim = static_cast<int>(seq.landmarks.front().size());
      if (spec.landmark_dim != 0 && dim != spec.landmark_dim) {
        throw std::invalid_argument("landmark widths differ across sequences");
      }
      spec.landmark_dim = dim;
    }
  }
  return spec;
}

SfeModel InitModel(const ModelSpec& spec, std::uint64_t seed, double init_scale) {
  SfeModel model(spec);
  Xoshiro256 rng(seed);
  for (double& p : model.params()) p = rng.Uniform(-init_scale, init_scale);
  for (Stream s : kAllStreams) {
    for (double& b : model.values("lstm." + Name(s) + ".b_" + kGateNames[kForgetGate])) b = 1.0;
  }
  return model;
}

void FitStandardization(SfeModel& model, const std::vector<FrameSequence>& data) {
  for (Stream s : kAllStreams) {
    const int dim = model.spec().stream_dims[StreamIndex(s)];
    std::vector<double> sum(dim, 0.0);
    double n = 0.0;
    for (const FrameSequence& seq : data) {
      for (const FeatureBundle& b : seq.bundles) {
        for (int d = 0; d < dim; ++d) sum[d] += b[s][d];
        n += 1.0;
      }
    }
    std::vector<double>& mean = model.norm_mean(s);
    std::vector<double>& sd = model.norm_std(s);
    for (int d = 0; d < dim; ++d) mean[d] = sum[d] / n;
    std::vector<double> ss(dim, 0.0);
    for (const FrameSequence& seq : data) {
      for (const FeatureBundle& b : seq.bundles) {
        for (int d = 0; d < dim; ++d) ss[d] += (b[s][d] - mean[d]) * (b[s][d] - mean[d]);
      }
    }
    // Features that never vary in training are passed through centered.
    for (int d = 0; d < dim; ++d) sd[d] = std::max(std::sqrt(ss[d] / n), 1e-6);
  }
}

TrainResult Train(const std::vector<FrameSequence>& data, const TrainConfig& cfg) {
  if (!(cfg.learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
  if (cfg.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (cfg.hidden < 1) throw std::invalid_argument("hidden size must be >= 1");
  bool has_real = false;
  bool has_fake = false;
  for (const FrameSequence& seq : data) {
    ValidateSequence(seq);
    if (seq.bundles.front().config_hash != data.front().bundles.front().config_hash) {
      throw std::invalid_argument("training sequences mix feature configurations");
    }
    has_real = has_real || seq.label == kReal;
    has_fake = has_fake || seq.label == kFake;
  }
  if (!has_real || !has_fake) {
    throw std::invalid_argument("training data must contain both Real and Fake sequences");
  }

  SfeModel model = InitModel(SpecFor(data, cfg), cfg.seed, cfg.init_scale);
  FitStandardization(model, data);

  const std::size_t n = data.size();
  const std::size_t p = model.params().size();
  std::vector<double> velocity(p, 0.0);
  std::vector<double> total(p);
  const int jobs = std::max(cfg.jobs, 1);
  std::vector<std::vector<double>> per_seq(jobs > 1 ? n : 1, std::vector<double>(p));
  std::vector<double> losses(n);
  TrainResult result{model, {}};

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(total.begin(), total.end(), 0.0);
    auto seq_grad = [&](std::size_t i, std::vector<double>& buf) {
      std::fill(buf.begin(), buf.end(), 0.0);
      losses[i] = LossAndGradient(data[i], result.model, cfg.objective, buf);
    };
    if (jobs > 1) {
      ParallelFor(n, jobs, [&](std::size_t i) { seq_grad(i, per_seq[i]); });
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) total[j] += per_seq[i][j];
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        seq_grad(i, per_seq[0]);
        for (std::size_t j = 0; j < p; ++j) total[j] += per_seq[0][j];
      }
    }
    double loss = 0.0;
    for (double l : losses) loss += l;
    result.loss_trace.push_back(loss / n);

    for (double& g : total) g /= static_cast<double>(n);
    const double norm = GlobalNorm(total);
    const double scale = cfg.clip_norm > 0.0 && norm > cfg.clip_norm ? cfg.clip_norm / norm : 1.0;
    std::span<double> params = result.model.params();
    for (std::size_t j = 0; j < p; ++j) {
      velocity[j] = cfg.momentum * velocity[j] - cfg.learning_rate * scale * total[j];
      params[j] += velocity[j];
    }
  }
  return result;
}

std::string SerializeCheckpoint(const SfeModel& model) {
  const ModelSpec& spec = model.spec();
  std::ostringstream out;
  out << kCheckpointMagic << '\n';
  auto record = [&out](const std::string& name, int rows, int cols, std::span<const double> v) {
    out << name << ' ' << rows << ' ' << cols;
    for (double x : v) out << ' ' << FormatDouble(x);
    out << '\n';
  };
  std::vector<double> dims(spec.stream_dims.begin(), spec.stream_dims.end());
  std::vector<double> active;
  for (bool a : spec.active) active.push_back(a ? 1.0 : 0.0);
  const double hidden = spec.hidden;
  const double landmark_dim = spec.landmark_dim;
  const double gating = spec.gating == Gating::kLearned ? 0.0 : 1.0;
  record("meta.stream_dims", 1, kNumStreams, dims);
  record("meta.hidden", 1, 1, {&hidden, 1});
  record("meta.landmark_dim", 1, 1, {&landmark_dim, 1});
  record("meta.active", 1, kNumStreams, active);
  record("meta.gating", 1, 1, {&gating, 1});
  for (Stream s : kAllStreams) {
    const int dim = spec.stream_dims[StreamIndex(s)];
    record("norm." + Name(s) + ".mean", 1, dim, model.norm_mean(s));
    record("norm." + Name(s) + ".std", 1, dim, model.norm_std(s));
  }
  for (const TensorInfo& t : model.tensors()) {
    record(t.name, t.rows, t.cols, model.values(t.name));
  }
  return out.str();
}

void SaveCheckpoint(const SfeModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << SerializeCheckpoint(model);
  if (!out) throw IoError("write failed for " + path.string());
}

SfeModel ParseCheckpoint(const std::string& text) {
  struct Record {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;
  };
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw FormatError("unsupported checkpoint version: '" + line + "'");
  }
  std::map<std::string, Record> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name;
    Record r;
    if (!(ls >> name >> r.rows >> r.cols) || r.rows < 0 || r.cols < 0) {
      throw FormatError("malformed checkpoint record: " + line.substr(0, 40));
    }
    std::string tok;
    while (ls >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') {
        throw FormatError("bad value in checkpoint record " + name);
      }
      r.values.push_back(v);
    }
    if (r.values.size() != static_cast<std::size_t>(r.rows) * r.cols) {
      throw FormatError("checkpoint record " + name + " has the wrong number of values");
    }
    if (!records.emplace(name, std::move(r)).second) {
      throw FormatError("duplicate checkpoint record " + name);
    }
  }

  auto take = [&records](const std::string& name, int rows, int cols) {
    auto it = records.find(name);
    if (it == records.end()) throw FormatError("checkpoint is missing " + name);
    if (it->second.rows != rows || it->second.cols != cols) {
      throw FormatError("checkpoint shape mismatch for " + name);
    }
    std::vector<double> v = std::move(it->second.values);
    records.erase(it);
    return v;
  };
  auto as_int = [](double v, const char* what) {
    if (v != std::floor(v) || v < 0 || v > 1e9) {
      throw FormatError(std::string("checkpoint: bad ") + what);
    }
    return static_cast<int>(v);
  };

  ModelSpec spec;
  const std::vector<double> dims = take("meta.stream_dims", 1, kNumStreams);
  const std::vector<double> active = take("meta.active", 1, kNumStreams);
  for (int k = 0; k < kNumStreams; ++k) {
    spec.stream_dims[k] = as_int(dims[k], "stream width");
    spec.active[k] = active[k] != 0.0;
  }
  spec.hidden = as_int(take("meta.hidden", 1, 1)[0], "hidden size");
  spec.landmark_dim = as_int(take("meta.landmark_dim", 1, 1)[0], "landmark width");
  const int gating = as_int(take("meta.gating", 1, 1)[0], "gating mode");
  if (gating > 1) throw FormatError("checkpoint: unknown gating mode");
  spec.gating = gating == 0 ? Gating::kLearned : Gating::kUniform;

  std::optional<SfeModel> model;
  try {
    model.emplace(spec);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  for (Stream s : kAllStreams) {
    const int dim = spec.stream_dims[StreamIndex(s)];
    model->norm_mean(s) = take("norm." + Name(s) + ".mean", 1, dim);
    model->norm_std(s) = take("norm." + Name(s) + ".std", 1, dim);
  }
  for (const TensorInfo& t : model->tensors()) {
    const std::vector<double> v = take(t.name, t.rows, t.cols);
    std::copy(v.begin(), v.end(), model->values(t.name).begin());
  }
  if (!records.empty()) {
    throw FormatError("checkpoint has unknown record " + records.begin()->first);
  }
  return std::move(*model);
}

SfeModel LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseCheckpoint(buf.str());
}

}  // namespace sfe::net
