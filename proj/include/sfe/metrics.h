#pragma once

#include <filesystem>
#include <string>
#include <vector>

// Ranking metrics: AUC (Mann-Whitney with midranks), step-wise average
// precision, EER with linear interpolation, and video-level aggregation.
namespace sfe::metrics {

struct ScoredSample {
  std::string id;
  double score = 0.0;
  int label = 0;  // 1 = positive (Fake)
  std::string video_id;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;  // predict positive iff score >= threshold
};

struct MetricReport {
  double frame_auc = 0.0;
  double video_auc = 0.0;
  double ap = 0.0;
  double eer = 0.0;
  int n_pos = 0;
  int n_neg = 0;
  std::vector<RocPoint> roc;
};

// Throws std::invalid_argument unless both classes are present.
double Auc(const std::vector<ScoredSample>& samples);
// Throws std::invalid_argument without positives.
double AveragePrecision(const std::vector<ScoredSample>& samples);
double Eer(const std::vector<ScoredSample>& samples);

// From (0,0) at threshold +inf to (1,1), one vertex per distinct score.
std::vector<RocPoint> Roc(const std::vector<ScoredSample>& samples);

// One sample per video with the mean frame score, ordered by video id.
// Throws std::invalid_argument on mixed labels within a video.
std::vector<ScoredSample> VideoLevel(const std::vector<ScoredSample>& samples);

MetricReport Evaluate(const std::vector<ScoredSample>& frames);

// metric,value rows: frame_auc, video_auc, ap, eer, n_pos, n_neg.
void WriteReportCsv(const MetricReport& report, const std::filesystem::path& path);
void WriteRocCsv(const MetricReport& report, const std::filesystem::path& path);
std::string FormatReportTable(const MetricReport& report);

}  // namespace sfe::metrics
