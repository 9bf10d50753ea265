#include "attnpool/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <stdexcept>

namespace attnpool {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) {
      throw std::invalid_argument("config: unknown key '" + where + it.key() + "'");
    }
  }
}

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

nlohmann::json to_json(const TrainConfig& c) {
  json j;
  j["model"] = {{"hidden_dim", c.hidden_dim}, {"key_dim", c.key_dim},
                {"ff_dim", c.ff_dim},         {"layers", c.layers},
                {"max_len", c.max_len}};
  j["aggregator"] = {{"alpha", c.alpha},
                     {"beta_source", c.beta_source},
                     {"learnable_alpha", c.learnable_alpha}};
  j["optimizer"] = {
      {"lr", c.lr}, {"beta1", c.adam_beta1}, {"beta2", c.adam_beta2}, {"eps", c.adam_eps}};
  j["training"] = {{"batch_size", c.batch_size}, {"epochs", c.epochs}, {"seed", c.seed}};
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  reject_unknown_keys(j, {"model", "aggregator", "optimizer", "training"}, "");
  if (j.contains("model")) {
    const json& m = j.at("model");
    reject_unknown_keys(m, {"hidden_dim", "key_dim", "ff_dim", "layers", "max_len"}, "model.");
    read_key(m, "hidden_dim", c.hidden_dim);
    read_key(m, "key_dim", c.key_dim);
    read_key(m, "ff_dim", c.ff_dim);
    read_key(m, "layers", c.layers);
    read_key(m, "max_len", c.max_len);
  }
  if (j.contains("aggregator")) {
    const json& a = j.at("aggregator");
    reject_unknown_keys(a, {"alpha", "beta_source", "learnable_alpha"}, "aggregator.");
    read_key(a, "alpha", c.alpha);
    read_key(a, "beta_source", c.beta_source);
    read_key(a, "learnable_alpha", c.learnable_alpha);
  }
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    reject_unknown_keys(o, {"lr", "beta1", "beta2", "eps"}, "optimizer.");
    read_key(o, "lr", c.lr);
    read_key(o, "beta1", c.adam_beta1);
    read_key(o, "beta2", c.adam_beta2);
    read_key(o, "eps", c.adam_eps);
  }
  if (j.contains("training")) {
    const json& t = j.at("training");
    reject_unknown_keys(t, {"batch_size", "epochs", "seed"}, "training.");
    read_key(t, "batch_size", c.batch_size);
    read_key(t, "epochs", c.epochs);
    read_key(t, "seed", c.seed);
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const RunConfig& c) {
  json j = to_json(c.train);
  j["data"] = {{"train_csv", c.train_csv},     {"test_csv", c.test_csv},
               {"train_subset", c.train_subset}, {"test_subset", c.test_subset},
               {"subset_seed", c.subset_seed}};
  j["vocab"] = {{"max_size", c.max_vocab}, {"min_freq", c.min_freq}};
  j["imbalance"] = {{"positive_class", c.positive_class}};
  return j;
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  reject_unknown_keys(
      j, {"model", "aggregator", "optimizer", "training", "data", "vocab", "imbalance"}, "");
  json train_part;
  for (const char* key : {"model", "aggregator", "optimizer", "training"}) {
    if (j.contains(key)) train_part[key] = j.at(key);
  }
  c.train = train_config_from_json(train_part);
  if (j.contains("data")) {
    const json& d = j.at("data");
    reject_unknown_keys(d, {"train_csv", "test_csv", "train_subset", "test_subset", "subset_seed"},
                        "data.");
    read_key(d, "train_csv", c.train_csv);
    read_key(d, "test_csv", c.test_csv);
    read_key(d, "train_subset", c.train_subset);
    read_key(d, "test_subset", c.test_subset);
    read_key(d, "subset_seed", c.subset_seed);
  }
  if (j.contains("vocab")) {
    const json& v = j.at("vocab");
    reject_unknown_keys(v, {"max_size", "min_freq"}, "vocab.");
    read_key(v, "max_size", c.max_vocab);
    read_key(v, "min_freq", c.min_freq);
  }
  if (j.contains("imbalance")) {
    const json& im = j.at("imbalance");
    reject_unknown_keys(im, {"positive_class"}, "imbalance.");
    read_key(im, "positive_class", c.positive_class);
  }
  if (c.max_vocab < 2) throw std::invalid_argument("config: vocab.max_size must be >= 2");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config " + path + ": " + e.what());
  }
  return run_config_from_json(j);
}

std::uint64_t content_hash(const std::string& bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return content_hash(buf.str());
}

}  // namespace attnpool
