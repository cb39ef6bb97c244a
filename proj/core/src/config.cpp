#include "dmsr/config.hpp"

#include <cstdio>
#include <fstream>

#include "dmsr/errors.hpp"
#include "json.hpp"

namespace dmsr {

ExperimentConfig::ExperimentConfig() {
  values_ = {
      {"data.path", ""},
      {"data.schema", "playlist"},
      {"data.split_ratio", "0.8"},
      {"data.seed", "42"},
      {"model.latent_dim", "80"},
      {"model.slate_len", "32"},
      {"model.model_dim", "320"},
      {"model.layers", "3"},
      {"model.heads", "10"},
      {"model.head_dim", "32"},
      {"model.groups", "20"},
      {"tau.dim", "128"},
      {"tau.layers", "3"},
      {"tau.heads", "8"},
      {"tau.ffn", "128"},
      {"tau.dropout", "0.1"},
      {"tau.max_tokens", "77"},
      {"tau.min_frequency", "2"},
      {"diffusion.T", "1000"},
      {"diffusion.schedule", "linear"},
      {"train.epochs", "1000"},
      {"train.batch_size", "64"},
      {"train.lr", "1e-4"},
      {"train.seed", "1"},
      {"train.checkpoint_every", "100"},
      {"generate.steps", "8"},
      {"generate.runs", "5"},
      {"generate.post", "none"},
      {"generate.dedup", "true"},
      {"generate.seed", "7"},
      {"eval.k", "30"},
      {"bench.prompt2vec_hidden", "4096"},
      {"bench.prompt2vec_epochs", "200"},
  };
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    size_t eq = line.find('=');
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    if (eq == std::string::npos) {
      if (!trim(line).empty())
        throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
      continue;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      cfg.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key: " + key);
  it->second = value;
}

const std::string& ExperimentConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key: " + key);
  return it->second;
}

int ExperimentConfig::get_int(const std::string& key) const {
  try {
    return std::stoi(get(key));
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not an integer: " + get(key));
  }
}

double ExperimentConfig::get_double(const std::string& key) const {
  try {
    return std::stod(get(key));
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not a number: " + get(key));
  }
}

bool ExperimentConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key " + key + " is not a boolean: " + v);
}

uint64_t ExperimentConfig::get_seed(const std::string& key) const {
  try {
    return std::stoull(get(key));
  } catch (const std::exception&) {
    throw ConfigError("config key " + key + " is not a seed: " + get(key));
  }
}

void ExperimentConfig::validate() const {
  int model_dim = get_int("model.model_dim");
  if (get_int("model.heads") * get_int("model.head_dim") != model_dim)
    throw ConfigError("model.heads * model.head_dim must equal model.model_dim");
  if (model_dim % get_int("model.groups") != 0)
    throw ConfigError("model.groups must divide model.model_dim");
  if (get_int("tau.dim") % get_int("tau.heads") != 0)
    throw ConfigError("tau.heads must divide tau.dim");
  if (get_int("diffusion.T") < 2) throw ConfigError("diffusion.T must be >= 2");
  schedule_kind_from_string(get("diffusion.schedule"));
  post_process_from_string(get("generate.post"));
  if (get("data.schema") != "playlist" && get("data.schema") != "bundle")
    throw ConfigError("data.schema must be playlist or bundle");
  double ratio = get_double("data.split_ratio");
  if (ratio <= 0.0 || ratio >= 1.0) throw ConfigError("data.split_ratio must be in (0,1)");
  for (const char* k : {"model.latent_dim", "model.slate_len", "model.layers", "train.epochs",
                        "train.batch_size", "generate.steps", "generate.runs", "eval.k",
                        "tau.max_tokens", "tau.layers"})
    if (get_int(k) < 1) throw ConfigError(std::string(k) + " must be >= 1");
  double dropout = get_double("tau.dropout");
  if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("tau.dropout must be in [0,1)");
}

ModelConfig ExperimentConfig::model_config() const {
  validate();
  ModelConfig cfg;
  cfg.T = get_int("diffusion.T");
  cfg.schedule_kind = schedule_kind_from_string(get("diffusion.schedule"));
  cfg.denoiser.latent_dim = get_int("model.latent_dim");
  cfg.denoiser.slate_len = get_int("model.slate_len");
  cfg.denoiser.model_dim = get_int("model.model_dim");
  cfg.denoiser.layers = get_int("model.layers");
  cfg.denoiser.heads = get_int("model.heads");
  cfg.denoiser.head_dim = get_int("model.head_dim");
  cfg.denoiser.groups = get_int("model.groups");
  cfg.context.model_dim = get_int("tau.dim");
  cfg.denoiser.context_dim = cfg.context.model_dim;
  cfg.context.layers = get_int("tau.layers");
  cfg.context.heads = get_int("tau.heads");
  cfg.context.ffn_hidden = get_int("tau.ffn");
  cfg.context.dropout = static_cast<float>(get_double("tau.dropout"));
  cfg.context.max_tokens = get_int("tau.max_tokens");
  return cfg;
}

GenerationConfig ExperimentConfig::generation_config() const {
  GenerationConfig g;
  g.steps = get_int("generate.steps");
  g.seed = get_seed("generate.seed");
  g.dedup = get_bool("generate.dedup");
  g.post_process = post_process_from_string(get("generate.post"));
  g.samples_per_prompt = get_int("generate.runs");
  return g;
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = version;
  j["config"] = config;
  j["output_hashes"] = output_hashes;
  j["report_paths"] = report_paths;
  j["timings_seconds"] = timings_seconds;
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw DataError("cannot write manifest: " + tmp);
    os << j.dump(2) << "\n";
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("cannot move manifest into place: " + path);
}

}  // namespace dmsr
