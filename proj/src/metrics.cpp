#include "attnpool/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

namespace attnpool {

long ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0L);
}

ConfusionMatrix confusion(const std::vector<int>& labels, const std::vector<int>& preds,
                          std::size_t num_classes) {
  if (labels.size() != preds.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(labels.size()) + " labels vs " +
                                std::to_string(preds.size()) + " predictions");
  }
  ConfusionMatrix cm(num_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i];
    const int p = preds[i];
    if (t < 0 || static_cast<std::size_t>(t) >= num_classes || p < 0 ||
        static_cast<std::size_t>(p) >= num_classes) {
      throw std::invalid_argument("confusion: entry " + std::to_string(i) +
                                  " outside 0.." + std::to_string(num_classes - 1));
    }
    ++cm.at(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
  }
  return cm;
}

void prf(const ConfusionMatrix& cm, MetricsReport& report) {
  const std::size_t m = cm.num_classes;
  report.precision.assign(m, 0.0);
  report.recall.assign(m, 0.0);
  report.f1.assign(m, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    long tp = cm.at(c, c);
    long fp = 0, fn = 0;
    for (std::size_t o = 0; o < m; ++o) {
      if (o == c) continue;
      fp += cm.at(o, c);
      fn += cm.at(c, o);
    }
    const double p = (tp + fp) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = (tp + fn) == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double f = (p + r) == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    report.precision[c] = p;
    report.recall[c] = r;
    report.f1[c] = f;
  }
  const double inv_m = 1.0 / static_cast<double>(m);
  report.macro_precision = std::accumulate(report.precision.begin(), report.precision.end(), 0.0) * inv_m;
  report.macro_recall = std::accumulate(report.recall.begin(), report.recall.end(), 0.0) * inv_m;
  report.macro_f1 = std::accumulate(report.f1.begin(), report.f1.end(), 0.0) * inv_m;
}

double binary_auc(const std::vector<double>& scores, const std::vector<int>& binary_labels) {
  if (scores.size() != binary_labels.size()) {
    throw std::invalid_argument("binary_auc: size mismatch");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int l : binary_labels) n_pos += (l != 0);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("binary_auc: needs at least one positive and one negative");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks: a run of equal scores at sorted positions [lo, hi] all get
  // rank (lo + hi + 2) / 2 (1-based average).
  double rank_sum_pos = 0.0;
  std::size_t lo = 0;
  while (lo < n) {
    std::size_t hi = lo;
    while (hi + 1 < n && scores[order[hi + 1]] == scores[order[lo]]) ++hi;
    const double midrank = static_cast<double>(lo + hi + 2) / 2.0;
    for (std::size_t k = lo; k <= hi; ++k) {
      if (binary_labels[order[k]] != 0) rank_sum_pos += midrank;
    }
    lo = hi + 1;
  }
  const double u = rank_sum_pos -
                   static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc_ovr(const std::vector<std::vector<double>>& scores, const std::vector<int>& labels,
               std::size_t num_classes, std::vector<double>* per_class) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("auc_ovr: size mismatch");
  }
  if (per_class) per_class->assign(num_classes, std::nan(""));
  double sum = 0.0;
  std::size_t included = 0;
  std::vector<double> class_scores(labels.size());
  std::vector<int> class_labels(labels.size());
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      class_scores[i] = scores[i].at(c);
      class_labels[i] = labels[i] == static_cast<int>(c) ? 1 : 0;
      n_pos += static_cast<std::size_t>(class_labels[i]);
    }
    if (n_pos == 0 || n_pos == labels.size()) {
      std::cerr << "auc_ovr: class " << c << " lacks positives or negatives, skipped\n";
      continue;
    }
    const double a = binary_auc(class_scores, class_labels);
    if (per_class) (*per_class)[c] = a;
    sum += a;
    ++included;
  }
  if (included == 0) {
    throw std::invalid_argument("auc_ovr: no class has both positives and negatives");
  }
  return sum / static_cast<double>(included);
}

MetricsReport compute_metrics(const std::vector<int>& labels, const std::vector<int>& preds,
                              const std::vector<std::vector<double>>& scores,
                              std::size_t num_classes) {
  MetricsReport report;
  report.confusion = confusion(labels, preds, num_classes);
  prf(report.confusion, report);
  report.macro_auc_ovr = auc_ovr(scores, labels, num_classes, &report.auc);
  return report;
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["per_class"] = {{"precision", report.precision},
                    {"recall", report.recall},
                    {"f1", report.f1},
                    {"auc", report.auc}};
  j["macro"] = {{"precision", report.macro_precision},
                {"recall", report.macro_recall},
                {"f1", report.macro_f1},
                {"auc_ovr", report.macro_auc_ovr}};
  const std::size_t m = report.confusion.num_classes;
  nlohmann::json cm = nlohmann::json::array();
  for (std::size_t t = 0; t < m; ++t) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t p = 0; p < m; ++p) row.push_back(report.confusion.at(t, p));
    cm.push_back(row);
  }
  j["confusion"] = cm;
  return j;
}

}  // namespace attnpool
