#include "sfe/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "sfe/features.h"
#include "sfe/image.h"

namespace sfe::metrics {
namespace {

void CountClasses(const std::vector<ScoredSample>& samples, int& n_pos, int& n_neg) {
  n_pos = 0;
  n_neg = 0;
  for (const ScoredSample& s : samples) {
    if (!std::isfinite(s.score)) throw std::invalid_argument("non-finite score for " + s.id);
    if (s.label == 1) {
      ++n_pos;
    } else if (s.label == 0) {
      ++n_neg;
    } else {
      throw std::invalid_argument("label must be 0 or 1 for " + s.id);
    }
  }
}

void RequireBothClasses(const std::vector<ScoredSample>& samples, int& n_pos, int& n_neg) {
  CountClasses(samples, n_pos, n_neg);
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("metric needs both positive and negative samples");
  }
}

// Descending score, ties by ascending id.
std::vector<ScoredSample> RankedDescending(std::vector<ScoredSample> samples) {
  std::sort(samples.begin(), samples.end(), [](const ScoredSample& a, const ScoredSample& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  return samples;
}

}  // namespace

double Auc(const std::vector<ScoredSample>& samples) {
  int n_pos = 0;
  int n_neg = 0;
  RequireBothClasses(samples, n_pos, n_neg);
  std::vector<std::pair<double, int>> order;
  order.reserve(samples.size());
  for (const ScoredSample& s : samples) order.emplace_back(s.score, s.label);
  std::sort(order.begin(), order.end());
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && order[j].first == order[i].first) ++j;
    // Ranks i+1 .. j share the midrank.
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (order[k].second == 1) rank_sum += midrank;
    }
    i = j;
  }
  const double p = n_pos;
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n_neg);
}

double AveragePrecision(const std::vector<ScoredSample>& samples) {
  int n_pos = 0;
  int n_neg = 0;
  CountClasses(samples, n_pos, n_neg);
  if (n_pos == 0) throw std::invalid_argument("average precision needs a positive sample");
  const std::vector<ScoredSample> ranked = RankedDescending(samples);
  double ap = 0.0;
  int hits = 0;
  for (std::size_t k = 0; k < ranked.size(); ++k) {
    if (ranked[k].label != 1) continue;
    ++hits;
    ap += (static_cast<double>(hits) / (k + 1)) / n_pos;
  }
  return ap;
}

std::vector<RocPoint> Roc(const std::vector<ScoredSample>& samples) {
  int n_pos = 0;
  int n_neg = 0;
  RequireBothClasses(samples, n_pos, n_neg);
  const std::vector<ScoredSample> ranked = RankedDescending(samples);
  std::vector<RocPoint> roc{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  int tp = 0;
  int fp = 0;
  for (std::size_t i = 0; i < ranked.size();) {
    const double threshold = ranked[i].score;
    for (; i < ranked.size() && ranked[i].score == threshold; ++i) {
      (ranked[i].label == 1 ? tp : fp) += 1;
    }
    roc.push_back({static_cast<double>(fp) / n_neg, static_cast<double>(tp) / n_pos, threshold});
  }
  return roc;
}

double Eer(const std::vector<ScoredSample>& samples) {
  const std::vector<RocPoint> roc = Roc(samples);
  // gap = FPR - FNR rises from -1 at (0,0) to +1 at (1,1).
  auto gap = [](const RocPoint& p) { return p.fpr - (1.0 - p.tpr); };
  for (std::size_t i = 0; i < roc.size(); ++i) {
    const double g = gap(roc[i]);
    if (g == 0.0) return roc[i].fpr;
    if (g > 0.0) {
      const RocPoint& a = roc[i - 1];
      const RocPoint& b = roc[i];
      const double ga = gap(a);
      const double alpha = -ga / (g - ga);
      return a.fpr + alpha * (b.fpr - a.fpr);
    }
  }
  return roc.back().fpr;
}

std::vector<ScoredSample> VideoLevel(const std::vector<ScoredSample>& samples) {
  struct Acc {
    double sum = 0.0;
    int count = 0;
    int label = -1;
  };
  std::map<std::string, Acc> videos;
  for (const ScoredSample& s : samples) {
    if (s.video_id.empty()) throw std::invalid_argument("sample " + s.id + " has no video id");
    Acc& acc = videos[s.video_id];
    if (acc.label != -1 && acc.label != s.label) {
      throw std::invalid_argument("video " + s.video_id + " has frames with mixed labels");
    }
    acc.label = s.label;
    acc.sum += s.score;
    ++acc.count;
  }
  std::vector<ScoredSample> out;
  out.reserve(videos.size());
  for (const auto& [id, acc] : videos) {
    out.push_back({id, acc.sum / acc.count, acc.label, id});
  }
  return out;
}

MetricReport Evaluate(const std::vector<ScoredSample>& frames) {
  MetricReport r;
  RequireBothClasses(frames, r.n_pos, r.n_neg);
  r.frame_auc = Auc(frames);
  r.video_auc = Auc(VideoLevel(frames));
  r.ap = AveragePrecision(frames);
  r.roc = Roc(frames);
  r.eer = Eer(frames);
  return r;
}

void WriteReportCsv(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "metric,value\n"
      << "frame_auc," << FormatDouble(report.frame_auc) << '\n'
      << "video_auc," << FormatDouble(report.video_auc) << '\n'
      << "ap," << FormatDouble(report.ap) << '\n'
      << "eer," << FormatDouble(report.eer) << '\n'
      << "n_pos," << report.n_pos << '\n'
      << "n_neg," << report.n_neg << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

void WriteRocCsv(const MetricReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "fpr,tpr,threshold\n";
  for (const RocPoint& p : report.roc) {
    out << FormatDouble(p.fpr) << ',' << FormatDouble(p.tpr) << ','
        << (std::isinf(p.threshold) ? std::string("inf") : FormatDouble(p.threshold)) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

std::string FormatReportTable(const MetricReport& report) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "metric      value\n"
                "----------  --------\n"
                "frame_auc   %.4f\n"
                "video_auc   %.4f\n"
                "ap          %.4f\n"
                "eer         %.4f\n"
                "n_pos       %d\n"
                "n_neg       %d\n",
                report.frame_auc, report.video_auc, report.ap, report.eer, report.n_pos,
                report.n_neg);
  return buf;
}

}  // namespace sfe::metrics
