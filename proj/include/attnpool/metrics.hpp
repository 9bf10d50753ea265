#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

namespace attnpool {

struct ConfusionMatrix {
  std::size_t num_classes = 0;
  std::vector<long> counts;  // counts[true * m + pred]

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t m) : num_classes(m), counts(m * m, 0) {}

  long& at(std::size_t truth, std::size_t pred) { return counts[truth * num_classes + pred]; }
  long at(std::size_t truth, std::size_t pred) const { return counts[truth * num_classes + pred]; }

  long total() const;
};

struct MetricsReport {
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<double> auc;  // per class, NaN for classes skipped by auc_ovr
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double macro_auc_ovr = 0.0;
  ConfusionMatrix confusion;
};

ConfusionMatrix confusion(const std::vector<int>& labels, const std::vector<int>& preds,
                          std::size_t num_classes);

/// Per-class precision/recall/F1 with the 0/0 -> 0 convention, plus their
/// unweighted macro means. Fills those fields of the report.
void prf(const ConfusionMatrix& cm, MetricsReport& report);

/// Binary ROC AUC of `scores` against 0/1 labels via the Mann-Whitney rank
/// statistic with midranks for ties; algebraically equal to the mean over
/// all (positive, negative) pairs of [s_p > s_n] + 1/2 [s_p == s_n].
/// Throws unless both a positive and a negative are present.
double binary_auc(const std::vector<double>& scores, const std::vector<int>& binary_labels);

/// Macro one-vs-rest AUC over the classes that have at least one positive
/// and one negative; others are skipped with a warning on stderr and a NaN
/// in per_class. Throws if every class is skipped.
double auc_ovr(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels,
               std::size_t num_classes, std::vector<double>* per_class = nullptr);

/// Confusion + prf + one-vs-rest AUC in one pass.
MetricsReport compute_metrics(const std::vector<int>& labels, const std::vector<int>& preds,
                              const std::vector<std::vector<double>>& scores,
                              std::size_t num_classes);

nlohmann::json to_json(const MetricsReport& report);

}  // namespace attnpool
