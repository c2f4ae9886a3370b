#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "litevp/rd_oracle.hpp"
#include "litevp/stats.hpp"

namespace litevp {

struct TargetOutcome {
  double qp_pred = 0.0;
  double qp_true = 0.0;
  double qp_err = 0.0;        // |qp_pred - qp_true|
  double vmaf_achieved = 0.0;  // curve at qp_pred
  double vmaf_target = 0.0;    // curve at qp_true
  double vmaf_err = 0.0;       // |vmaf_achieved - vmaf_target|
};

struct EvalRecord {
  std::string video_id;
  std::array<TargetOutcome, kNumTargets> targets{};
};

/// Achieved VMAF is read off the video's ground-truth curve at the predicted
/// QP; the reference is the curve at the ground-truth QP, so a perfect
/// prediction scores 0 even for targets the curve cannot reach.
EvalRecord make_record(std::string video_id, const RdCurve& curve, std::span<const double> qp_pred,
                       std::span<const double> qp_true);

enum class Band { kHigh = 0, kMedium = 1, kLow = 2 };
inline constexpr std::array<Band, 3> kBands = {Band::kHigh, Band::kMedium, Band::kLow};

/// Target indices per band. High = targets 1-4 (VMAF 99..91), Medium = 3-6
/// (95..85), Low = 5-8 (88..80); neighbouring bands share two targets.
std::span<const std::size_t> band_targets(Band b);
const char* band_name(Band b);

struct ErrorSummary {
  double mean = 0.0;
  double median = 0.0;
  double std = 0.0;
};

struct ScopeReport {
  std::string name;
  std::size_t count = 0;  // pooled (video, target) entries
  ErrorSummary qp;
  ErrorSummary vmaf;
  double coverage2 = 0.0;  // fraction with |dVMAF| <= 2
  double coverage4 = 0.0;
};

struct Quartiles {
  double min = 0.0, p25 = 0.0, median = 0.0, p75 = 0.0, max = 0.0;
};

struct TargetTable {
  std::size_t target = 0;
  std::vector<std::pair<double, double>> cdf;  // (threshold, fraction)
  Quartiles qp_box;
  Quartiles vmaf_box;
};

struct ScoreOptions {
  /// false: MAE pools every (video, in-band target) error. true: mean of the
  /// per-target means inside the scope.
  bool per_target_mean = false;
  std::vector<double> cdf_thresholds;  // empty = default_thresholds()
};

struct EvalReport {
  bool per_target_mean = false;
  std::size_t videos = 0;
  ScopeReport overall;
  std::array<ScopeReport, 3> bands;
  std::array<TargetTable, kNumTargets> per_target;
};

/// 0, 0.25, ..., 12 VMAF points.
std::vector<double> default_thresholds();

/// Throws InvalidInput for an empty set or non-finite fields.
EvalReport score(std::span<const EvalRecord> records, const ScoreOptions& opts = {});

/// Fraction of videos with |dVMAF| <= threshold at one target. Throws
/// InvalidInput when the thresholds are not ascending.
std::vector<std::pair<double, double>> cdf_table(std::span<const EvalRecord> records, std::size_t target,
                                                 std::span<const double> thresholds);

struct Outlier {
  std::string video_id;
  std::vector<std::size_t> targets;  // indices with |dVMAF| >= jnd
  double max_vmaf_err = 0.0;
};

inline constexpr double kJnd = 6.0;

/// Videos with any |dVMAF| >= jnd, in input order.
std::vector<Outlier> jnd_outliers(std::span<const EvalRecord> records, double jnd = kJnd);

nlohmann::json to_json(const EvalReport& r);
nlohmann::json to_json(std::span<const Outlier> outliers);
/// scope,n,qp_mean,qp_median,qp_std,vmaf_mean,vmaf_median,vmaf_std,coverage2,coverage4
void write_summary_csv(std::ostream& out, const EvalReport& r);
/// target,threshold,fraction (one row per threshold)
void write_cdf_csv(std::ostream& out, const EvalReport& r);
/// target,metric,min,p25,median,p75,max
void write_boxplot_csv(std::ostream& out, const EvalReport& r);

}  // namespace litevp
