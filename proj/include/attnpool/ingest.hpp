#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace attnpool {

/// One unprocessed dataset row. Labels are 0-based category indices.
struct RawExample {
  int label = 0;
  std::string title;
  std::string description;
};

/// Token <-> dense id bijection with two reserved ids. The reserved
/// surface forms contain non-alphanumerics, so tokenization of real text
/// can never produce them.
struct Vocabulary {
  static constexpr int pad_id = 0;
  static constexpr int unk_id = 1;

  std::vector<std::string> tokens;  // tokens[id] = surface form; [0]="<pad>", [1]="<unk>"
  std::unordered_map<std::string, int> id_of;

  std::size_t size() const { return tokens.size(); }

  /// Id of a token, or unk_id when absent.
  int lookup(const std::string& token) const {
    auto it = id_of.find(token);
    return it == id_of.end() ? unk_id : it->second;
  }

  static Vocabulary from_tokens(std::vector<std::string> real_tokens);
};

/// Fixed-length padded id sequence. ids.size() == max_len; positions at and
/// beyond true_len hold pad_id, positions before it never do.
struct EncodedExample {
  std::vector<int> ids;
  int true_len = 0;
  int label = 0;
};

struct DatasetSplit {
  std::vector<EncodedExample> examples;
  std::vector<long> class_counts;  // indexed by label, sums to examples.size()
};

/// Lowercase, then split on every maximal run of non-alphanumeric (ASCII)
/// characters. Empty input yields an empty list.
std::vector<std::string> tokenize(const std::string& text);

/// Rank tokens by (frequency desc, token string asc), keep those with
/// frequency >= min_freq, cap at max_size - 2 real tokens (ids 0 and 1 are
/// reserved). Throws on an empty corpus or max_size < 2.
Vocabulary build_vocab(const std::vector<RawExample>& corpus, std::size_t max_size,
                       std::size_t min_freq);

/// Title tokens then description tokens, mapped through the vocabulary,
/// truncated to the first max_len tokens and padded. A wholly-empty text
/// becomes a single unk token so the sequence is never empty.
EncodedExample encode(const RawExample& example, const Vocabulary& vocab, std::size_t max_len);

DatasetSplit encode_dataset(const std::vector<RawExample>& rows, const Vocabulary& vocab,
                            std::size_t max_len, int num_classes);

/// AG News CSV: three RFC-4180-style fields per record
/// ("<class 1-4>","<title>","<description>"), comma separated, double-quote
/// quoting with "" escapes, UTF-8. A first record whose first field is not
/// an integer is treated as a header and skipped. Labels are returned
/// 0-based. Malformed records and out-of-range class indices raise errors
/// naming the record's starting line.
std::vector<RawExample> load_agnews_rows(const std::string& path);

/// Convenience: parse and encode in one step with a caller-provided
/// vocabulary (AG News is 4-class).
DatasetSplit load_agnews_csv(const std::string& path, const Vocabulary& vocab,
                             std::size_t max_len);

/// Split a CSV payload that is already in memory (used by tests).
std::vector<RawExample> parse_agnews_csv(const std::string& text);

}  // namespace attnpool
