#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cemb/confidence.hpp"

namespace cemb {

/// Counts indexed by (true class, predicted class).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  std::size_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * classes_ + predicted];
  }
  void add(std::size_t truth, std::size_t predicted) { ++counts_[truth * classes_ + predicted]; }
  std::size_t total() const;
  std::size_t row_sum(std::size_t truth) const;
  std::size_t col_sum(std::size_t predicted) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

/// Throws SchemaError if a record lacks a true label, ShapeError if a class
/// index is out of range.
ConfusionMatrix confusion(std::span<const PredictionRecord> records, std::size_t class_count);

struct ClassMetrics {
  std::size_t support = 0;  // samples whose true label is this class
  double sensitivity = 0.0;  // recall
  double specificity = 0.0;  // TN / (TN + FP); NaN without negatives
  double accuracy = 0.0;  // one-vs-rest (TP + TN) / n
  double f1 = 0.0;
  double auc = 0.0;  // NaN without both positives and negatives
};

struct MetricSummary {
  std::size_t count = 0;
  double f1_macro = 0.0;
  double accuracy = 0.0;  // multiclass
  double balanced_accuracy = 0.0;  // mean recall over classes present in the truth
  double mean_auc = 0.0;  // unweighted over classes with a defined AUC
  std::vector<ClassMetrics> per_class;
  std::vector<std::string> warnings;
};

MetricSummary metrics(std::span<const PredictionRecord> records, std::size_t class_count);

/// One-vs-rest AUC on score_mean[c] (Mann-Whitney, ties count one half).
/// NaN when class c has no positives or no negatives.
double one_vs_rest_auc(std::span<const PredictionRecord> records, std::size_t c);

enum class RejectionMode { global, per_class };

const char* to_string(RejectionMode mode);
/// Accepts "global" and "per-class"; throws ConfigError otherwise.
RejectionMode parse_rejection_mode(const std::string& s);

/// Records kept after discarding the lowest-confidence `ratio` fraction.
///
/// Global mode keeps ceil((1 - ratio) n) records overall; per-class mode
/// applies the same rule within each predicted class. Ties in confidence are
/// dropped in ascending sample_id order. Throws RangeError unless 0 <= ratio < 1.
std::vector<PredictionRecord> retain_confident(std::span<const PredictionRecord> records,
                                               double ratio, RejectionMode mode);

struct RejectionRow {
  double ratio = 0.0;
  std::size_t retained = 0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
};

struct RejectionCurve {
  RejectionMode mode = RejectionMode::global;
  std::vector<RejectionRow> rows;
};

/// Throws RangeError unless ratios are strictly increasing within [0, 1).
RejectionCurve rejection_curve(std::span<const PredictionRecord> records, std::size_t class_count,
                               std::span<const double> ratios, RejectionMode mode);

/// count,f1_macro,accuracy,balanced_accuracy,mean_auc
void write_metrics_csv(std::ostream& out, const MetricSummary& m);
/// class,support,sensitivity,specificity,accuracy,f1,auc
void write_per_class_csv(std::ostream& out, const MetricSummary& m);
/// ratio,retained,f1,accuracy,balanced_accuracy
void write_rejection_csv(std::ostream& out, const RejectionCurve& curve);

}  // namespace cemb
