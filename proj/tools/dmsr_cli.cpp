#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "dmsr/baselines.hpp"
#include "dmsr/checkpoint.hpp"
#include "dmsr/config.hpp"
#include "dmsr/data.hpp"
#include "dmsr/embeddings.hpp"
#include "dmsr/errors.hpp"
#include "dmsr/evaluate.hpp"
#include "dmsr/train.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace dmsr;

namespace {

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

ExperimentConfig load_config(const std::string& config_path,
                             const std::vector<std::string>& overrides) {
  ExperimentConfig cfg =
      config_path.empty() ? ExperimentConfig() : ExperimentConfig::from_file(config_path);
  for (const std::string& kv : overrides) {
    size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw ConfigError("override must be key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

Schema schema_of(const ExperimentConfig& cfg) {
  return cfg.get("data.schema") == "bundle" ? Schema::kBundle : Schema::kPlaylist;
}

Dataset load_data(const ExperimentConfig& cfg, const std::string& dir) {
  std::string path = (fs::path(dir) / "slates.jsonl").string();
  return load_dataset(path, schema_of(cfg), cfg.get_int("model.slate_len"));
}

void finish_manifest(RunManifest& manifest, const ExperimentConfig& cfg,
                     const std::string& out_dir, double elapsed) {
  manifest.config = cfg.entries();
  manifest.timings_seconds["total"] = elapsed;
  manifest.write((fs::path(out_dir) / "manifest.json").string());
}

int cmd_ingest(const ExperimentConfig& cfg, const std::string& input,
               const std::string& out_dir) {
  Timer timer;
  fs::create_directories(out_dir);
  int skipped = 0;
  Dataset ds = load_dataset(input, schema_of(cfg), cfg.get_int("model.slate_len"), &skipped);
  std::string slates_path = (fs::path(out_dir) / "slates.jsonl").string();
  std::string catalog_path = (fs::path(out_dir) / "catalog.jsonl").string();
  write_canonical(ds, slates_path, catalog_path);
  std::cout << "ingested " << ds.slates.size() << " slates, " << ds.catalog.size()
            << " catalog items";
  if (skipped > 0) std::cout << " (skipped " << skipped << " empty slates)";
  std::cout << "\n";
  RunManifest manifest;
  manifest.command = "ingest";
  manifest.output_hashes[slates_path] = file_hash(slates_path);
  manifest.output_hashes[catalog_path] = file_hash(catalog_path);
  finish_manifest(manifest, cfg, out_dir, timer.seconds());
  return 0;
}

int cmd_embed(const ExperimentConfig& cfg, const std::string& data_dir,
              const std::string& out_dir) {
  Timer timer;
  fs::create_directories(out_dir);
  Dataset ds = load_data(cfg, data_dir);
  EmbeddingTable table = train_embeddings(ds.catalog, ds.slates, cfg.get_int("model.latent_dim"));
  std::string path = (fs::path(out_dir) / "embeddings.dmse").string();
  table.save(path);
  std::cout << "trained " << table.size() << " item embeddings, dim " << table.dim() << "\n";
  RunManifest manifest;
  manifest.command = "embed";
  manifest.output_hashes[path] = file_hash(path);
  finish_manifest(manifest, cfg, out_dir, timer.seconds());
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& data_dir,
              const std::string& out_dir, const std::string& resume) {
  Timer timer;
  fs::create_directories(out_dir);
  Dataset ds = load_data(cfg, data_dir);
  EmbeddingTable table =
      EmbeddingTable::load((fs::path(data_dir) / "embeddings.dmse").string());
  DatasetSplit splits =
      split(ds.slates, cfg.get_double("data.split_ratio"), cfg.get_seed("data.seed"));

  std::unique_ptr<DiffusionModel> model;
  long start_epoch = 0;
  if (!resume.empty()) {
    LoadedCheckpoint loaded = load_checkpoint(resume);
    model = std::move(loaded.model);
    start_epoch = loaded.epochs_completed;
    std::cout << "resuming from epoch " << start_epoch << "\n";
  } else {
    std::vector<std::string> labels;
    for (const Slate& s : splits.train) labels.push_back(s.label);
    PromptTokenizer tokenizer = PromptTokenizer::build(labels, cfg.get_int("tau.max_tokens"),
                                                       cfg.get_int("tau.min_frequency"));
    model = std::make_unique<DiffusionModel>(cfg.model_config(), std::move(tokenizer),
                                             cfg.get_seed("train.seed"));
  }

  TrainOptions opts;
  opts.epochs = cfg.get_int("train.epochs");
  opts.batch_size = cfg.get_int("train.batch_size");
  opts.lr = static_cast<float>(cfg.get_double("train.lr"));
  opts.seed = cfg.get_seed("train.seed");
  opts.checkpoint_every = cfg.get_int("train.checkpoint_every");
  std::string ckpt = (fs::path(out_dir) / "model.ckpt").string();
  opts.checkpoint_path = ckpt;
  TrainResult result = train_model(*model, splits.train, table, opts, start_epoch, &std::cout);
  std::cout << "trained to epoch " << result.epochs_completed << ", final loss "
            << result.epoch_losses.back() << "\n";
  RunManifest manifest;
  manifest.command = "train";
  manifest.output_hashes[ckpt] = file_hash(ckpt);
  finish_manifest(manifest, cfg, out_dir, timer.seconds());
  return 0;
}

int cmd_generate(const ExperimentConfig& cfg, const std::string& model_path,
                 const std::string& embeddings_path, const std::string& prompt) {
  LoadedCheckpoint loaded = load_checkpoint(model_path);
  EmbeddingTable table = EmbeddingTable::load(embeddings_path);
  NeighborIndex index(table);
  ModelBundle bundle{*loaded.model, table, index};
  GenerationConfig gen = cfg.generation_config();
  for (int run = 0; run < gen.samples_per_prompt; ++run) {
    GeneratedSlate slate = generate(prompt, gen, bundle, run);
    nlohmann::json j;
    j["prompt"] = slate.prompt;
    j["run_index"] = slate.run_index;
    j["items"] = slate.items;
    std::cout << j.dump() << "\n";
  }
  return 0;
}

struct EvalContext {
  Dataset ds;
  EmbeddingTable table;
  std::unique_ptr<NeighborIndex> index;
  LoadedCheckpoint loaded;
  DatasetSplit splits;
};

EvalContext make_eval_context(const ExperimentConfig& cfg, const std::string& model_path,
                              const std::string& data_dir) {
  EvalContext ctx;
  ctx.ds = load_data(cfg, data_dir);
  ctx.table = EmbeddingTable::load((fs::path(data_dir) / "embeddings.dmse").string());
  ctx.index = std::make_unique<NeighborIndex>(ctx.table);
  ctx.loaded = load_checkpoint(model_path);
  ctx.splits = split(ctx.ds.slates, cfg.get_double("data.split_ratio"),
                     cfg.get_seed("data.seed"));
  return ctx;
}

int cmd_evaluate(const ExperimentConfig& cfg, const std::string& model_path,
                 const std::string& data_dir, const std::string& out_dir) {
  Timer timer;
  fs::create_directories(out_dir);
  EvalContext ctx = make_eval_context(cfg, model_path, data_dir);
  ModelBundle bundle{*ctx.loaded.model, ctx.table, *ctx.index};
  GenerationConfig gen = cfg.generation_config();
  EvalConfig eval_cfg{cfg.get_int("eval.k"), gen.samples_per_prompt};

  MetricReport report = evaluate(dmsr_generator(bundle, gen), ctx.splits.test, ctx.table,
                                 ctx.ds.catalog, eval_cfg);
  std::string report_path = (fs::path(out_dir) / "report.csv").string();
  report.write_csv(report_path);

  // plot data: freshness grid for the first test prompt, exposure curve
  // over run-0 slates for the whole split
  std::vector<std::vector<std::string>> generated_corpus, reference_corpus;
  FreshnessResult first_grid;
  for (size_t i = 0; i < ctx.splits.test.size(); ++i) {
    const Slate& ref = ctx.splits.test[i];
    std::vector<std::vector<std::string>> runs;
    for (int r = 0; r < gen.samples_per_prompt; ++r)
      runs.push_back(generate(ref.label, gen, bundle, r).items);
    if (i == 0) first_grid = freshness(runs);
    generated_corpus.push_back(runs[0]);
    reference_corpus.emplace_back(ref.items.begin(), ref.items.begin() + ref.true_length);
  }
  std::string fresh_path = (fs::path(out_dir) / "freshness.csv").string();
  write_freshness_csv(first_grid, fresh_path);
  std::string expo_path = (fs::path(out_dir) / "exposure.csv").string();
  write_exposure_csv(popularity_exposure(generated_corpus, reference_corpus, ctx.ds.catalog),
                     expo_path);

  for (const auto& [metric, stats] : report.aggregate)
    std::cout << metric << "@" << eval_cfg.k << ": " << stats.mean << " (+- " << stats.stddev
              << ")\n";
  RunManifest manifest;
  manifest.command = "evaluate";
  manifest.report_paths = {report_path, fresh_path, expo_path};
  for (const std::string& p : manifest.report_paths)
    manifest.output_hashes[p] = file_hash(p);
  finish_manifest(manifest, cfg, out_dir, timer.seconds());
  return 0;
}

int cmd_bench(const ExperimentConfig& cfg, const std::string& model_path,
              const std::string& data_dir, const std::string& out_dir) {
  Timer timer;
  fs::create_directories(out_dir);
  EvalContext ctx = make_eval_context(cfg, model_path, data_dir);
  ModelBundle bundle{*ctx.loaded.model, ctx.table, *ctx.index};
  GenerationConfig gen = cfg.generation_config();
  EvalConfig eval_cfg{cfg.get_int("eval.k"), gen.samples_per_prompt};
  int k = eval_cfg.k;

  BenchReport bench;
  bench.k = k;
  auto add_row = [&](const std::string& name, const SlateGenerator& g) {
    try {
      MetricReport r = evaluate(g, ctx.splits.test, ctx.table, ctx.ds.catalog, eval_cfg);
      bench.rows.push_back({name, r.aggregate});
    } catch (const std::exception& e) {
      std::cerr << "skipping " << name << ": " << e.what() << "\n";
    }
  };
  add_row("dmsr", dmsr_generator(bundle, gen));
  add_row("popularity", fixed_slate_generator(baseline_popularity(ctx.ds.catalog, k)));
  Bm25Index bm25(ctx.ds.catalog);
  add_row("bm25", [&](const Slate& ref, int runs) {
    return std::vector<std::vector<std::string>>(runs, bm25.top_k(ref.label, k));
  });
  Prompt2Vec::Config p2v_cfg;
  p2v_cfg.hidden_dim = cfg.get_int("bench.prompt2vec_hidden");
  p2v_cfg.epochs = cfg.get_int("bench.prompt2vec_epochs");
  Prompt2Vec p2v(ctx.loaded.model->tokenizer, ctx.table.dim(), p2v_cfg);
  p2v.train(ctx.ds.catalog, ctx.table);
  add_row("prompt2vec", [&](const Slate& ref, int runs) {
    return std::vector<std::vector<std::string>>(runs, p2v.top_k(ref.label, *ctx.index, k));
  });

  std::string csv_path = (fs::path(out_dir) / "bench.csv").string();
  bench.write_csv(csv_path);
  std::cout << bench.render_table();
  RunManifest manifest;
  manifest.command = "bench";
  manifest.report_paths = {csv_path};
  manifest.output_hashes[csv_path] = file_hash(csv_path);
  finish_manifest(manifest, cfg, out_dir, timer.seconds());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DMSR: conditional diffusion slate generation"};
  app.require_subcommand(1);

  std::string config_path, input, out_dir = ".", data_dir, model_path, embeddings_path, prompt,
              resume;
  std::vector<std::string> overrides;
  long seed = -1;
  app.add_option("--config", config_path, "config file (key = value lines)");
  app.add_option("--set", overrides, "config override key=value")->take_all();
  app.add_option("--seed", seed, "override train/generate seed");

  CLI::App* ingest = app.add_subcommand("ingest", "convert a slate file to canonical form");
  ingest->add_option("--input", input, "input JSON-lines slate file")->required();
  ingest->add_option("--out", out_dir, "output directory")->required();
  std::string schema;
  ingest->add_option("--schema", schema, "playlist|bundle");

  CLI::App* embed = app.add_subcommand("embed", "train item embeddings");
  embed->add_option("--data", data_dir, "ingested data directory")->required();
  embed->add_option("--out", out_dir, "output directory")->required();

  CLI::App* train = app.add_subcommand("train", "train the diffusion model");
  train->add_option("--data", data_dir, "data directory (slates + embeddings)")->required();
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--resume", resume, "checkpoint to resume from");

  CLI::App* gen = app.add_subcommand("generate", "generate slates for a prompt");
  gen->add_option("--model", model_path, "checkpoint path")->required();
  gen->add_option("--embeddings", embeddings_path, "embedding table path")->required();
  gen->add_option("--prompt", prompt, "text prompt")->required();
  int steps = -1, runs = -1;
  std::string post;
  gen->add_option("--steps", steps, "sampler steps");
  gen->add_option("--runs", runs, "samples per prompt");
  gen->add_option("--post", post, "none|centroid|shuffle");

  CLI::App* eval = app.add_subcommand("evaluate", "run the offline metric suite");
  eval->add_option("--model", model_path, "checkpoint path")->required();
  eval->add_option("--data", data_dir, "data directory")->required();
  eval->add_option("--out", out_dir, "output directory")->required();
  int eval_k = -1;
  eval->add_option("--k", eval_k, "metric cutoff");

  CLI::App* bench = app.add_subcommand("bench", "compare against baselines");
  bench->add_option("--model", model_path, "checkpoint path")->required();
  bench->add_option("--data", data_dir, "data directory")->required();
  bench->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    ExperimentConfig cfg = load_config(config_path, overrides);
    if (seed >= 0) {
      cfg.set("train.seed", std::to_string(seed));
      cfg.set("generate.seed", std::to_string(seed));
    }
    if (!schema.empty()) cfg.set("data.schema", schema);
    if (steps > 0) cfg.set("generate.steps", std::to_string(steps));
    if (runs > 0) cfg.set("generate.runs", std::to_string(runs));
    if (!post.empty()) cfg.set("generate.post", post);
    if (eval_k > 0) cfg.set("eval.k", std::to_string(eval_k));
    cfg.validate();

    if (ingest->parsed()) return cmd_ingest(cfg, input, out_dir);
    if (embed->parsed()) return cmd_embed(cfg, data_dir, out_dir);
    if (train->parsed()) return cmd_train(cfg, data_dir, out_dir, resume);
    if (gen->parsed()) return cmd_generate(cfg, model_path, embeddings_path, prompt);
    if (eval->parsed()) return cmd_evaluate(cfg, model_path, data_dir, out_dir);
    if (bench->parsed()) return cmd_bench(cfg, model_path, data_dir, out_dir);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
