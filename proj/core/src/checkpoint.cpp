#include "dmsr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "dmsr/errors.hpp"

namespace dmsr {

namespace {

constexpr char kMagic[4] = {'D', 'M', 'S', 'R'};
constexpr uint16_t kVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_le<uint32_t>(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& is) {
  uint32_t len = read_le<uint32_t>(is);
  std::string s(len, '\0');
  is.read(s.data(), len);
  return s;
}

std::map<std::string, std::string> model_meta(const DiffusionModel& m, long epochs) {
  const DenoiserConfig& d = m.cfg.denoiser;
  const ContextEncoderConfig& c = m.cfg.context;
  return {
      {"T", std::to_string(m.cfg.T)},
      {"schedule", to_string(m.cfg.schedule_kind)},
      {"latent_dim", std::to_string(d.latent_dim)},
      {"slate_len", std::to_string(d.slate_len)},
      {"model_dim", std::to_string(d.model_dim)},
      {"layers", std::to_string(d.layers)},
      {"heads", std::to_string(d.heads)},
      {"head_dim", std::to_string(d.head_dim)},
      {"groups", std::to_string(d.groups)},
      {"tau_dim", std::to_string(c.model_dim)},
      {"tau_layers", std::to_string(c.layers)},
      {"tau_heads", std::to_string(c.heads)},
      {"tau_ffn", std::to_string(c.ffn_hidden)},
      {"tau_dropout", std::to_string(c.dropout)},
      {"max_tokens", std::to_string(c.max_tokens)},
      {"epochs_completed", std::to_string(epochs)},
  };
}

}  // namespace

void save_checkpoint(const DiffusionModel& model, const std::string& path,
                     long epochs_completed) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw DataError("cannot write checkpoint: " + tmp);
    os.write(kMagic, 4);
    write_le<uint16_t>(os, kVersion);

    auto meta = model_meta(model, epochs_completed);
    write_le<uint32_t>(os, static_cast<uint32_t>(meta.size()));
    for (const auto& [k, v] : meta) {
      write_string(os, k);
      write_string(os, v);
    }

    const auto& vocab = model.tokenizer.sorted_tokens();
    write_le<uint32_t>(os, static_cast<uint32_t>(vocab.size()));
    for (const std::string& tok : vocab) write_string(os, tok);

    const auto& params = model.params.params;
    write_le<uint32_t>(os, static_cast<uint32_t>(params.size()));
    uint64_t offset = 0;
    for (const nn::Parameter* p : params) {
      write_string(os, p->name);
      write_le<uint32_t>(os, static_cast<uint32_t>(p->value.rows));
      write_le<uint32_t>(os, static_cast<uint32_t>(p->value.cols));
      write_le<uint64_t>(os, offset);
      offset += sizeof(float) * p->value.size();
    }
    for (const nn::Parameter* p : params) {
      p->value.require_finite("checkpoint parameter " + p->name);
      os.write(reinterpret_cast<const char*>(p->value.data.data()),
               static_cast<std::streamsize>(sizeof(float) * p->value.size()));
    }
    if (!os) throw DataError("failed writing checkpoint: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw DataError("cannot move checkpoint into place: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw DataError("bad magic in checkpoint: " + path);
  uint16_t version = read_le<uint16_t>(is);
  if (version != kVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version));

  std::map<std::string, std::string> meta;
  uint32_t n_meta = read_le<uint32_t>(is);
  for (uint32_t i = 0; i < n_meta; ++i) {
    std::string k = read_string(is);
    meta[k] = read_string(is);
  }
  auto meta_int = [&](const std::string& k) {
    auto it = meta.find(k);
    if (it == meta.end()) throw DataError("checkpoint missing config key " + k);
    return std::stoi(it->second);
  };

  uint32_t n_vocab = read_le<uint32_t>(is);
  std::vector<std::string> vocab(n_vocab);
  for (uint32_t i = 0; i < n_vocab; ++i) vocab[i] = read_string(is);

  ModelConfig cfg;
  cfg.T = meta_int("T");
  cfg.schedule_kind = schedule_kind_from_string(meta.at("schedule"));
  cfg.denoiser.latent_dim = meta_int("latent_dim");
  cfg.denoiser.slate_len = meta_int("slate_len");
  cfg.denoiser.model_dim = meta_int("model_dim");
  cfg.denoiser.layers = meta_int("layers");
  cfg.denoiser.heads = meta_int("heads");
  cfg.denoiser.head_dim = meta_int("head_dim");
  cfg.denoiser.groups = meta_int("groups");
  cfg.context.model_dim = meta_int("tau_dim");
  cfg.denoiser.context_dim = cfg.context.model_dim;
  cfg.context.layers = meta_int("tau_layers");
  cfg.context.heads = meta_int("tau_heads");
  cfg.context.ffn_hidden = meta_int("tau_ffn");
  cfg.context.dropout = std::stof(meta.at("tau_dropout"));
  int max_tokens = meta_int("max_tokens");

  LoadedCheckpoint out;
  out.epochs_completed = std::stol(meta.at("epochs_completed"));
  out.model = std::make_unique<DiffusionModel>(
      cfg, PromptTokenizer::from_vocab(vocab, max_tokens), /*init_seed=*/0);

  uint32_t n_params = read_le<uint32_t>(is);
  if (n_params != out.model->params.params.size())
    throw DataError("checkpoint parameter count mismatch: file has " +
                    std::to_string(n_params) + ", model expects " +
                    std::to_string(out.model->params.params.size()));
  struct Entry {
    std::string path;
    uint32_t rows, cols;
    uint64_t offset;
  };
  std::vector<Entry> entries(n_params);
  for (Entry& e : entries) {
    e.path = read_string(is);
    e.rows = read_le<uint32_t>(is);
    e.cols = read_le<uint32_t>(is);
    e.offset = read_le<uint64_t>(is);
  }
  std::streampos payload_start = is.tellg();
  for (uint32_t i = 0; i < n_params; ++i) {
    nn::Parameter* p = out.model->params.params[i];
    const Entry& e = entries[i];
    if (e.path != p->name)
      throw DataError("checkpoint manifest mismatch at " + e.path + " vs " + p->name);
    if (static_cast<int>(e.rows) != p->value.rows || static_cast<int>(e.cols) != p->value.cols)
      throw DataError("checkpoint shape mismatch for " + e.path + ": file " +
                      std::to_string(e.rows) + "x" + std::to_string(e.cols) + ", model " +
                      p->value.shape_str());
    is.seekg(payload_start + static_cast<std::streamoff>(e.offset));
    is.read(reinterpret_cast<char*>(p->value.data.data()),
            static_cast<std::streamsize>(sizeof(float) * p->value.size()));
    if (!is) throw DataError("truncated checkpoint: " + path);
    p->value.require_finite("loaded parameter " + p->name);
  }
  return out;
}

std::string file_hash(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot hash missing file: " + path);
  uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (!is) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

}  // namespace dmsr
