#include "attnpool/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "attnpool/config.hpp"

namespace attnpool {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'A', 'T', 'P', 'L', 'C', 'K', 'P', '1'};

void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void put_f64_le(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64_le(out, bits);
}

double get_f64_le(const unsigned char* p) {
  const std::uint64_t bits = get_u64_le(p);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

}  // namespace

ModelParams make_model_shell(const TrainConfig& config, Vocabulary vocab,
                             std::vector<std::string> category_names) {
  config.validate();
  const std::size_t d = config.hidden_dim;
  const std::size_t d_k = config.effective_key_dim();
  const std::size_t d_ff = config.effective_ff_dim();
  const std::size_t m = category_names.size();

  ModelParams p;
  p.config = config;
  p.vocab = std::move(vocab);
  p.encoder.token_emb = Matrix(p.vocab.size(), d);
  p.encoder.pos_emb = Matrix(config.max_len, d);
  for (std::size_t l = 0; l < config.layers; ++l) {
    AttentionBlockParams b;
    b.w_q = Matrix(d, d_k);
    b.w_k = Matrix(d, d_k);
    b.w_v = Matrix(d, d_k);
    b.w_o = Matrix(d_k, d);
    b.ln1_gain = Matrix(1, d);
    b.ln1_bias = Matrix(1, d);
    b.ln2_gain = Matrix(1, d);
    b.ln2_bias = Matrix(1, d);
    b.ff_w1 = Matrix(d, d_ff);
    b.ff_b1 = Matrix(1, d_ff);
    b.ff_w2 = Matrix(d_ff, d);
    b.ff_b2 = Matrix(1, d);
    p.encoder.blocks.push_back(std::move(b));
  }
  p.aggregator.alpha = config.alpha;
  p.aggregator.learnable_alpha = config.learnable_alpha;
  p.aggregator.beta_source = beta_source_from_string(config.beta_source);
  p.aggregator.pooling_query = Matrix(1, d);
  p.aggregator.alpha_raw = Matrix(1, 1);
  p.classifier.w_c = Matrix(m, d);
  p.classifier.b_c = Matrix(1, m);
  p.classifier.category_names = std::move(category_names);
  return p;
}

void save_checkpoint(const ModelParams& params, const std::string& path) {
  // enumerate_params only mutates through the refs, which we use read-only
  auto& mutable_params = const_cast<ModelParams&>(params);
  const std::vector<ParamRef> refs = enumerate_params(mutable_params, nullptr);

  json manifest = json::array();
  for (const ParamRef& r : refs) {
    manifest.push_back({{"name", r.name}, {"rows", r.value->rows}, {"cols", r.value->cols}});
  }
  json header;
  header["config"] = to_json(params.config);
  header["categories"] = params.classifier.category_names;
  header["vocab"] = params.vocab.tokens;
  header["manifest"] = manifest;

  const std::string header_bytes = header.dump();
  std::string out;
  out.reserve(16 + header_bytes.size());
  out.append(kMagic, sizeof(kMagic));
  put_u64_le(out, header_bytes.size());
  out += header_bytes;
  for (const ParamRef& r : refs) {
    for (double v : r.value->data) put_f64_le(out, v);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError(CheckpointError::Kind::kIo, "cannot write " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError(CheckpointError::Kind::kIo, "short write to " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(CheckpointError::Kind::kIo, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (bytes.size() < 16) {
    throw CheckpointError(CheckpointError::Kind::kTruncated,
                          "checkpoint shorter than its fixed header");
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(CheckpointError::Kind::kVersion,
                          "bad magic: not an ATPLCKP1 checkpoint");
  }
  const std::uint64_t header_len =
      get_u64_le(reinterpret_cast<const unsigned char*>(bytes.data()) + 8);
  if (16 + header_len > bytes.size()) {
    throw CheckpointError(CheckpointError::Kind::kTruncated,
                          "checkpoint ends inside the JSON header");
  }

  json header;
  try {
    header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(header_len));
  } catch (const json::parse_error& e) {
    throw CheckpointError(CheckpointError::Kind::kParse,
                          std::string("unparseable checkpoint header: ") + e.what());
  }

  TrainConfig config;
  Vocabulary vocab;
  std::vector<std::string> categories;
  json manifest;
  try {
    config = train_config_from_json(header.at("config"));
    categories = header.at("categories").get<std::vector<std::string>>();
    std::vector<std::string> tokens = header.at("vocab").get<std::vector<std::string>>();
    if (tokens.size() < 2) {
      throw std::invalid_argument("vocab must contain the two reserved tokens");
    }
    vocab.tokens = std::move(tokens);
    for (std::size_t id = 0; id < vocab.tokens.size(); ++id) {
      vocab.id_of.emplace(vocab.tokens[id], static_cast<int>(id));
    }
    manifest = header.at("manifest");
    if (!manifest.is_array()) throw std::invalid_argument("manifest is not an array");
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(CheckpointError::Kind::kParse,
                          std::string("invalid checkpoint header: ") + e.what());
  }

  ModelParams params = make_model_shell(config, std::move(vocab), std::move(categories));
  const std::vector<ParamRef> refs = enumerate_params(params, nullptr);

  if (manifest.size() != refs.size()) {
    throw CheckpointError(CheckpointError::Kind::kShapeMismatch,
                          "manifest lists " + std::to_string(manifest.size()) + " tensors, model has " +
                              std::to_string(refs.size()));
  }
  for (std::size_t i = 0; i < refs.size(); ++i) {
    const json& entry = manifest.at(i);
    std::string name;
    std::size_t rows = 0, cols = 0;
    try {
      name = entry.at("name").get<std::string>();
      rows = entry.at("rows").get<std::size_t>();
      cols = entry.at("cols").get<std::size_t>();
    } catch (const std::exception& e) {
      throw CheckpointError(CheckpointError::Kind::kParse,
                            std::string("invalid manifest entry: ") + e.what());
    }
    if (name != refs[i].name || rows != refs[i].value->rows || cols != refs[i].value->cols) {
      throw CheckpointError(CheckpointError::Kind::kShapeMismatch,
                            "manifest entry " + std::to_string(i) + " is " + name + " " +
                                shape_str(rows, cols) + ", model expects " + refs[i].name + " " +
                                refs[i].value->shape_str());
    }
  }

  std::size_t offset = 16 + header_len;
  for (const ParamRef& r : refs) {
    const std::size_t need = r.value->data.size() * 8;
    if (offset + need > bytes.size()) {
      throw CheckpointError(CheckpointError::Kind::kTruncated,
                            "checkpoint ends inside tensor " + r.name);
    }
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + offset;
    for (double& v : r.value->data) {
      v = get_f64_le(p);
      p += 8;
    }
    offset += need;
  }
  if (offset != bytes.size()) {
    throw CheckpointError(CheckpointError::Kind::kShapeMismatch,
                          "checkpoint has " + std::to_string(bytes.size() - offset) +
                              " trailing bytes beyond the manifest");
  }
  return params;
}

}  // namespace attnpool
