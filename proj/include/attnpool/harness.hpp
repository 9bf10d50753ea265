#pragma once

#include "attnpool/config.hpp"
#include "attnpool/metrics.hpp"
#include "attnpool/model.hpp"
#include "attnpool/train.hpp"

namespace attnpool {

/// Full-pass inference over a test split followed by the metrics module.
/// Examples must be encoded with the model's vocabulary; labels outside
/// the model's category set raise a dimension error.
MetricsReport evaluate_model(const ModelParams& params, const DatasetSplit& test);

double accuracy(const ModelParams& params, const DatasetSplit& split);

/// One cell of a sweep: a setting value (hidden dim or imbalance ratio k),
/// the sweep seed, and the resulting metrics. A training failure marks the
/// cell instead of aborting the sweep.
struct SweepCell {
  long setting = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  MetricsReport report;
};

/// Trains one model per (hidden dim, seed) from scratch, varying only d
/// (with key and feed-forward widths derived), and evaluates each on the
/// test rows. Cells are ordered settings ascending, then seeds as given.
std::vector<SweepCell> sweep_hidden(std::vector<std::size_t> dims, const RunConfig& base,
                                    const std::vector<RawExample>& train_rows,
                                    const std::vector<RawExample>& test_rows,
                                    const std::vector<std::uint64_t>& seeds);

struct ImbalanceSpec {
  int positive_class = 0;
  std::vector<long> ratios;  // k values of 1:k, strictly increasing
};

/// Binary task: positive_class vs. the rest (positive is category 1).
/// For ratio 1:k every negative is kept and positives are subsampled
/// without replacement to floor(N_neg / k) with the cell's seeded RNG.
/// The test set is binarized once and balanced; it never changes across
/// cells. Throws if the train rows cannot satisfy the largest demand,
/// naming the required count.
std::vector<SweepCell> sweep_imbalance(const ImbalanceSpec& spec, const RunConfig& base,
                                       const std::vector<RawExample>& train_rows,
                                       const std::vector<RawExample>& test_rows,
                                       const std::vector<std::uint64_t>& seeds);

/// CSV per the sweep contract: header `setting,seed,precision,recall,f1,auc`,
/// one row per cell, six-decimal floats, newline terminated. For binary
/// (imbalance) sweeps the row carries positive-class metrics; otherwise
/// macro metrics. Failed cells print nan metrics.
std::string sweep_csv(const std::vector<SweepCell>& cells, bool positive_class_metrics);
void write_sweep_csv(const std::string& path, const std::vector<SweepCell>& cells,
                     bool positive_class_metrics);

/// Deterministic two-class keyword corpus: each example is eight words,
/// five from the class's ten-word pool and three from a shared neutral
/// pool. Classes are separable by construction.
std::vector<RawExample> make_synthetic_rows(std::size_t n_per_class, std::uint64_t seed);

struct SyntheticData {
  Vocabulary vocab;
  DatasetSplit train;
  DatasetSplit test;
};

/// The smoke-benchmark bundle: train/test corpora drawn from the same
/// pools with derived seeds, vocabulary built from the train rows.
SyntheticData make_synthetic_benchmark(std::size_t train_per_class, std::size_t test_per_class,
                                       std::uint64_t seed);

/// Four-topic news-style corpus in the exact AG CSV format (quoted fields,
/// "" escapes, labels 1..4). Topic pools overlap through cross-class word
/// contamination and optional label noise, so the task is learnable but
/// not trivially separable. Used when no real corpus is on disk.
void write_news_csv(const std::string& path, std::size_t per_class, std::uint64_t seed,
                    double label_noise);

/// Per-class proportional subset of `total` rows (shuffle within class,
/// take quota), deterministic in seed. total == 0 keeps everything.
std::vector<RawExample> stratified_subset(const std::vector<RawExample>& rows, long total,
                                          int num_classes, std::uint64_t seed);

/// Keep `keep` rows chosen without replacement; the kept set is a subset
/// of the input, in original order.
std::vector<RawExample> subsample_rows(const std::vector<RawExample>& rows, std::size_t keep,
                                       Rng& rng);

struct GradcheckGroup {
  std::string name;
  double max_rel_err = 0.0;
  bool pass = true;
};

struct GradcheckReport {
  std::vector<GradcheckGroup> groups;
  bool all_pass = true;
  double worst = 0.0;
};

/// End-to-end gradient check of the whole pipeline at tiny dimensions:
/// analytic batch-mean gradients vs central finite differences with step
/// h = 1e-6 * max(1, |x|), relative error
/// |a - fd| / max(1e-8, |a| + |fd|) <= 1e-6 for every parameter entry.
GradcheckReport gradcheck_pipeline(std::uint64_t seed, const TrainConfig& config,
                                   std::size_t batch, std::size_t num_classes);

/// The suite the CLI runs: n_seeds random models cycling through both
/// beta sources and fixed vs learnable alpha, results merged per group.
GradcheckReport gradcheck_suite(std::size_t n_seeds, std::uint64_t base_seed = 977);

}  // namespace attnpool
