#pragma once

#include <stdexcept>
#include <string>

#include "attnpool/model.hpp"

namespace attnpool {

/// Checkpoint parsing failures, with a kind so callers and tests can tell
/// the failure classes apart.
class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { kVersion, kParse, kTruncated, kShapeMismatch, kIo };

  CheckpointError(Kind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// On-disk layout:
///   bytes 0..7   magic "ATPLCKP1"
///   bytes 8..15  little-endian u64 byte length of the JSON header
///   header       UTF-8 JSON: config, categories, vocab tokens, and an
///                ordered tensor manifest of {name, rows, cols}
///   payload      each tensor's entries as little-endian 64-bit floats,
///                row-major, in manifest order
void save_checkpoint(const ModelParams& params, const std::string& path);

ModelParams load_checkpoint(const std::string& path);

/// Zero-initialized model with the shapes implied by config, vocabulary
/// and category list. Consumes no RNG draws.
ModelParams make_model_shell(const TrainConfig& config, Vocabulary vocab,
                             std::vector<std::string> category_names);

}  // namespace attnpool
