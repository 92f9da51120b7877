#include "cemb/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "cemb/errors.hpp"
#include "cemb/text.hpp"

namespace cemb {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Number of records kept out of n at this ratio. The small slack keeps
/// products such as 0.95 * 100 from rounding up past an integer.
std::size_t kept_count(std::size_t n, double ratio) {
  const double keep = (1.0 - ratio) * static_cast<double>(n);
  return std::min(n, static_cast<std::size_t>(std::ceil(keep - 1e-9)));
}

void check_ratio(double ratio) {
  if (!(ratio >= 0.0 && ratio < 1.0)) {
    throw RangeError("rejection ratio " + text::format_real(ratio) + " outside [0, 1)");
  }
}

/// Least confident first; ties by sample_id, then by position.
std::vector<std::size_t> rejection_order(std::span<const PredictionRecord> records,
                                         std::span<const std::size_t> members) {
  std::vector<std::size_t> order(members.begin(), members.end());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].confidence != records[b].confidence) {
      return records[a].confidence < records[b].confidence;
    }
    return records[a].sample_id < records[b].sample_id;
  });
  return order;
}

std::string fmt(double v) { return std::isnan(v) ? std::string("nan") : text::format_real(v); }

}  // namespace

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p) s += at(truth, p);
  return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t predicted) const {
  std::size_t s = 0;
  for (std::size_t t = 0; t < classes_; ++t) s += at(t, predicted);
  return s;
}

ConfusionMatrix confusion(std::span<const PredictionRecord> records, std::size_t class_count) {
  ConfusionMatrix m(class_count);
  for (const auto& r : records) {
    if (!r.true_label) {
      throw SchemaError("record " + std::to_string(r.sample_id) + " has no true label");
    }
    if (*r.true_label >= class_count || r.predicted_class >= class_count) {
      throw ShapeError("record " + std::to_string(r.sample_id) + " has a class index >= " +
                       std::to_string(class_count));
    }
    m.add(*r.true_label, r.predicted_class);
  }
  return m;
}

double one_vs_rest_auc(std::span<const PredictionRecord> records, std::size_t c) {
  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].score_mean.at(c) < records[b].score_mean.at(c);
  });
  // Mid-ranks give tied scores half credit.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    const double score = records[order[i]].score_mean[c];
    while (j < n && records[order[j]].score_mean[c] == score) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (records[order[k]].true_label == c) {
        positive_rank_sum += mid_rank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) return kNaN;
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

MetricSummary metrics(std::span<const PredictionRecord> records, std::size_t class_count) {
  const ConfusionMatrix cm = confusion(records, class_count);
  MetricSummary s;
  s.count = records.size();
  s.per_class.resize(class_count);
  const std::size_t n = cm.total();

  std::size_t correct = 0;
  double recall_sum = 0.0;
  double f1_sum = 0.0;
  double auc_sum = 0.0;
  std::size_t present = 0;
  std::size_t auc_defined = 0;
  for (std::size_t c = 0; c < class_count; ++c) {
    ClassMetrics& m = s.per_class[c];
    const std::size_t tp = cm.at(c, c);
    const std::size_t positives = cm.row_sum(c);
    const std::size_t predicted = cm.col_sum(c);
    const std::size_t fp = predicted - tp;
    const std::size_t fn = positives - tp;
    const std::size_t tn = n - tp - fp - fn;
    correct += tp;
    m.support = positives;
    m.specificity = (tn + fp) > 0 ? static_cast<double>(tn) / static_cast<double>(tn + fp) : kNaN;
    m.accuracy = n > 0 ? static_cast<double>(tp + tn) / static_cast<double>(n) : kNaN;
    m.auc = one_vs_rest_auc(records, c);
    if (std::isnan(m.auc)) {
      s.warnings.push_back("class " + std::to_string(c) + ": AUC undefined, excluded from mean");
    } else {
      auc_sum += m.auc;
      ++auc_defined;
    }
    if (positives == 0) {
      m.sensitivity = kNaN;
      m.f1 = kNaN;
      s.warnings.push_back("class " + std::to_string(c) +
                           ": absent from truth, excluded from BACC and F1");
      continue;
    }
    m.sensitivity = static_cast<double>(tp) / static_cast<double>(positives);
    m.f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    recall_sum += m.sensitivity;
    f1_sum += m.f1;
    ++present;
  }
  s.accuracy = n > 0 ? static_cast<double>(correct) / static_cast<double>(n) : kNaN;
  s.balanced_accuracy = present > 0 ? recall_sum / static_cast<double>(present) : kNaN;
  s.f1_macro = present > 0 ? f1_sum / static_cast<double>(present) : kNaN;
  s.mean_auc = auc_defined > 0 ? auc_sum / static_cast<double>(auc_defined) : kNaN;
  return s;
}

const char* to_string(RejectionMode mode) {
  return mode == RejectionMode::global ? "global" : "per-class";
}

RejectionMode parse_rejection_mode(const std::string& s) {
  if (s == "global") return RejectionMode::global;
  if (s == "per-class") return RejectionMode::per_class;
  throw ConfigError("rejection mode must be 'global' or 'per-class', got '" + s + "'");
}

std::vector<PredictionRecord> retain_confident(std::span<const PredictionRecord> records,
                                               double ratio, RejectionMode mode) {
  check_ratio(ratio);
  std::vector<bool> keep(records.size(), false);
  auto keep_top = [&](std::span<const std::size_t> members) {
    const auto order = rejection_order(records, members);
    const std::size_t drop = members.size() - kept_count(members.size(), ratio);
    for (std::size_t k = drop; k < order.size(); ++k) keep[order[k]] = true;
  };

  if (mode == RejectionMode::global) {
    std::vector<std::size_t> all(records.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    keep_top(all);
  } else {
    std::size_t classes = 0;
    for (const auto& r : records) classes = std::max(classes, r.predicted_class + 1);
    std::vector<std::vector<std::size_t>> groups(classes);
    for (std::size_t i = 0; i < records.size(); ++i) {
      groups[records[i].predicted_class].push_back(i);
    }
    for (const auto& g : groups) keep_top(g);
  }

  std::vector<PredictionRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (keep[i]) out.push_back(records[i]);
  }
  return out;
}

RejectionCurve rejection_curve(std::span<const PredictionRecord> records, std::size_t class_count,
                               std::span<const double> ratios, RejectionMode mode) {
  RejectionCurve curve;
  curve.mode = mode;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    check_ratio(ratios[i]);
    if (i > 0 && !(ratios[i] > ratios[i - 1])) {
      throw RangeError("rejection ratios must be strictly increasing");
    }
    const auto kept = retain_confident(records, ratios[i], mode);
    const MetricSummary m = metrics(kept, class_count);
    curve.rows.push_back({ratios[i], kept.size(), m.f1_macro, m.accuracy, m.balanced_accuracy});
  }
  return curve;
}

void write_metrics_csv(std::ostream& out, const MetricSummary& m) {
  out << "count,f1_macro,accuracy,balanced_accuracy,mean_auc\n";
  out << m.count << ',' << fmt(m.f1_macro) << ',' << fmt(m.accuracy) << ','
      << fmt(m.balanced_accuracy) << ',' << fmt(m.mean_auc) << '\n';
}

void write_per_class_csv(std::ostream& out, const MetricSummary& m) {
  out << "class,support,sensitivity,specificity,accuracy,f1,auc\n";
  for (std::size_t c = 0; c < m.per_class.size(); ++c) {
    const auto& k = m.per_class[c];
    out << c << ',' << k.support << ',' << fmt(k.sensitivity) << ',' << fmt(k.specificity) << ','
        << fmt(k.accuracy) << ',' << fmt(k.f1) << ',' << fmt(k.auc) << '\n';
  }
}

void write_rejection_csv(std::ostream& out, const RejectionCurve& curve) {
  out << "ratio,retained,f1,accuracy,balanced_accuracy\n";
  for (const auto& r : curve.rows) {
    out << fmt(r.ratio) << ',' << r.retained << ',' << fmt(r.f1) << ',' << fmt(r.accuracy) << ','
        << fmt(r.balanced_accuracy) << '\n';
  }
}

}  // namespace cemb
