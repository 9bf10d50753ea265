#include "attnpool/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace attnpool {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0; }

bool parse_int(const std::string& s, long& out) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stol(s, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == s.size();
}

[[noreturn]] void csv_error(std::size_t line, const std::string& what) {
  throw std::runtime_error("csv: line " + std::to_string(line) + ": " + what);
}

struct CsvRecord {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

// Minimal RFC-4180 reader: quoted fields may contain commas, escaped
// quotes ("") and newlines. Bare '\r' before a newline is dropped.
std::vector<CsvRecord> parse_csv(const std::string& text) {
  std::vector<CsvRecord> records;
  std::size_t line = 1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    CsvRecord rec;
    rec.line = line;
    bool record_done = false;
    while (!record_done) {
      std::string field;
      if (i < n && text[i] == '"') {
        ++i;  // opening quote
        for (;;) {
          if (i >= n) csv_error(rec.line, "unterminated quoted field");
          const char c = text[i];
          if (c == '"') {
            if (i + 1 < n && text[i + 1] == '"') {
              field.push_back('"');
              i += 2;
            } else {
              ++i;  // closing quote
              break;
            }
          } else {
            if (c == '\n') ++line;
            field.push_back(c);
            ++i;
          }
        }
        if (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          csv_error(rec.line, "garbage after closing quote");
        }
      } else {
        while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r') {
          field.push_back(text[i]);
          ++i;
        }
      }
      rec.fields.push_back(std::move(field));
      if (i >= n) {
        record_done = true;
      } else if (text[i] == ',') {
        ++i;
      } else {
        if (text[i] == '\r') ++i;
        if (i < n && text[i] == '\n') {
          ++i;
          ++line;
        }
        record_done = true;
      }
    }
    // A lone empty field from a trailing newline is not a record.
    if (rec.fields.size() == 1 && rec.fields[0].empty() && i >= n) break;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (is_word_char(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> real_tokens) {
  Vocabulary v;
  v.tokens.reserve(real_tokens.size() + 2);
  v.tokens.push_back("<pad>");
  v.tokens.push_back("<unk>");
  for (auto& t : real_tokens) v.tokens.push_back(std::move(t));
  for (std::size_t id = 0; id < v.tokens.size(); ++id) {
    v.id_of.emplace(v.tokens[id], static_cast<int>(id));
  }
  return v;
}

Vocabulary build_vocab(const std::vector<RawExample>& corpus, std::size_t max_size,
                       std::size_t min_freq) {
  if (max_size < 2) {
    throw std::invalid_argument("build_vocab: max_size must be >= 2");
  }
  if (corpus.empty()) {
    throw std::runtime_error("build_vocab: empty corpus");
  }
  std::unordered_map<std::string, long> freq;
  for (const RawExample& ex : corpus) {
    for (const auto& t : tokenize(ex.title)) ++freq[t];
    for (const auto& t : tokenize(ex.description)) ++freq[t];
  }
  std::vector<std::pair<std::string, long>> ranked;
  ranked.reserve(freq.size());
  for (auto& kv : freq) {
    if (kv.second >= static_cast<long>(min_freq)) ranked.emplace_back(kv.first, kv.second);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const std::size_t keep = std::min(ranked.size(), max_size - 2);
  std::vector<std::string> real;
  real.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) real.push_back(ranked[i].first);
  return Vocabulary::from_tokens(std::move(real));
}

EncodedExample encode(const RawExample& example, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 1) {
    throw std::invalid_argument("encode: max_len must be >= 1");
  }
  std::vector<std::string> toks = tokenize(example.title);
  {
    std::vector<std::string> desc = tokenize(example.description);
    toks.insert(toks.end(), std::make_move_iterator(desc.begin()),
                std::make_move_iterator(desc.end()));
  }
  EncodedExample out;
  out.label = example.label;
  out.ids.assign(max_len, Vocabulary::pad_id);
  if (toks.empty()) {
    out.ids[0] = Vocabulary::unk_id;
    out.true_len = 1;
    return out;
  }
  const std::size_t n = std::min(toks.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) {
    out.ids[i] = vocab.lookup(toks[i]);
  }
  out.true_len = static_cast<int>(n);
  return out;
}

DatasetSplit encode_dataset(const std::vector<RawExample>& rows, const Vocabulary& vocab,
                            std::size_t max_len, int num_classes) {
  DatasetSplit split;
  split.examples.reserve(rows.size());
  split.class_counts.assign(static_cast<std::size_t>(num_classes), 0);
  for (const RawExample& row : rows) {
    if (row.label < 0 || row.label >= num_classes) {
      throw std::runtime_error("encode_dataset: label " + std::to_string(row.label) +
                               " outside 0.." + std::to_string(num_classes - 1));
    }
    split.examples.push_back(encode(row, vocab, max_len));
    ++split.class_counts[static_cast<std::size_t>(row.label)];
  }
  return split;
}

std::vector<RawExample> parse_agnews_csv(const std::string& text) {
  std::vector<CsvRecord> records = parse_csv(text);
  std::vector<RawExample> rows;
  rows.reserve(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    CsvRecord& rec = records[r];
    long cls = 0;
    if (r == 0 && !rec.fields.empty() && !parse_int(rec.fields[0], cls)) {
      continue;  // header row
    }
    if (rec.fields.size() != 3) {
      csv_error(rec.line, "expected 3 columns, got " + std::to_string(rec.fields.size()));
    }
    if (!parse_int(rec.fields[0], cls)) {
      csv_error(rec.line, "class index is not an integer: '" + rec.fields[0] + "'");
    }
    if (cls < 1 || cls > 4) {
      csv_error(rec.line, "class index " + std::to_string(cls) + " outside 1..4");
    }
    RawExample ex;
    ex.label = static_cast<int>(cls - 1);
    ex.title = std::move(rec.fields[1]);
    ex.description = std::move(rec.fields[2]);
    rows.push_back(std::move(ex));
  }
  return rows;
}

std::vector<RawExample> load_agnews_rows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_agnews_csv(buf.str());
}

DatasetSplit load_agnews_csv(const std::string& path, const Vocabulary& vocab,
                             std::size_t max_len) {
  return encode_dataset(load_agnews_rows(path), vocab, max_len, 4);
}

}  // namespace attnpool
