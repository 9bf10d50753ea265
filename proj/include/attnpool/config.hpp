#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "attnpool/model.hpp"

namespace attnpool {

/// Everything a reproducible run needs beyond the TrainConfig: data
/// locations, vocabulary build settings, desk-scale subset sizes and the
/// imbalance-sweep positive class. Parsed from a single JSON document with
/// strict unknown-key rejection; missing keys take the documented defaults.
struct RunConfig {
  TrainConfig train;

  std::string train_csv;
  std::string test_csv;
  std::size_t max_vocab = 20000;
  std::size_t min_freq = 1;
  long train_subset = 8000;  // stratified subset size, 0 = use everything
  long test_subset = 2000;
  std::uint64_t subset_seed = 1234;
  int positive_class = 0;  // binarization target for the imbalance sweep
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

/// FNV-1a 64 over raw bytes; the run log's content hash.
std::uint64_t content_hash(const std::string& bytes);
std::uint64_t file_hash(const std::string& path);

}  // namespace attnpool
