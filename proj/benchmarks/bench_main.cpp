#include <benchmark/benchmark.h>

#include "dmsr/data.hpp"
#include "dmsr/diffusion.hpp"
#include "dmsr/embeddings.hpp"
#include "dmsr/metrics.hpp"
#include "dmsr/pipeline.hpp"

namespace {

using namespace dmsr;

struct Fixture {
  Dataset ds;
  EmbeddingTable table;
  std::unique_ptr<NeighborIndex> index;
  std::unique_ptr<DiffusionModel> model;

  Fixture() {
    SyntheticSpec spec;
    spec.slates_per_genre = 50;
    ds = generate_synthetic(spec);
    table = train_embeddings(ds.catalog, ds.slates, 16);
    index = std::make_unique<NeighborIndex>(table);
    std::vector<std::string> labels;
    for (const Slate& s : ds.slates) labels.push_back(s.label);
    PromptTokenizer tok = PromptTokenizer::build(labels, 12, 1);
    ModelConfig cfg;
    cfg.T = 200;
    cfg.denoiser.latent_dim = 16;
    cfg.denoiser.slate_len = spec.slate_len;
    cfg.denoiser.model_dim = 64;
    cfg.denoiser.layers = 2;
    cfg.denoiser.heads = 4;
    cfg.denoiser.head_dim = 16;
    cfg.denoiser.groups = 8;
    cfg.denoiser.context_dim = 32;
    cfg.context.model_dim = 32;
    cfg.context.layers = 2;
    cfg.context.heads = 4;
    cfg.context.ffn_hidden = 64;
    cfg.context.max_tokens = 12;
    model = std::make_unique<DiffusionModel>(cfg, std::move(tok), 3);
  }
};

Fixture& fixture() {
  static Fixture f;
  return f;
}

void BM_SampleLatent(benchmark::State& state) {
  Fixture& f = fixture();
  SampleOptions opts;
  opts.steps = static_cast<int>(state.range(0));
  opts.seed = 9;
  for (auto _ : state)
    benchmark::DoNotOptimize(sample_latent(*f.model, "a mix of jazz music", opts));
}
BENCHMARK(BM_SampleLatent)->Arg(1)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_DenoiserForward(benchmark::State& state) {
  Fixture& f = fixture();
  auto tokens = f.model->tokenizer.encode("a mix of jazz music");
  nn::Rng rng(5);
  nn::Tensor x_t = gaussian_tensor(f.model->cfg.denoiser.slate_len,
                                   f.model->cfg.denoiser.latent_dim, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(predict_velocity(*f.model, x_t, 100, tokens));
}
BENCHMARK(BM_DenoiserForward)->Unit(benchmark::kMillisecond);

void BM_RoundLatent(benchmark::State& state) {
  Fixture& f = fixture();
  nn::Rng rng(7);
  nn::Tensor latent = gaussian_tensor(8, f.table.dim(), rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(round_latent(latent, *f.index, true, {}));
}
BENCHMARK(BM_RoundLatent);

void BM_NeighborQuery(benchmark::State& state) {
  Fixture& f = fixture();
  nn::Rng rng(11);
  nn::Tensor q = gaussian_tensor(1, f.table.dim(), rng);
  for (auto _ : state) benchmark::DoNotOptimize(f.index->nearest(q.row(0), 10, {}));
}
BENCHMARK(BM_NeighborQuery);

void BM_MetricSuite(benchmark::State& state) {
  Fixture& f = fixture();
  const Slate& ref = f.ds.slates.front();
  std::vector<std::string> gen(ref.items.begin(), ref.items.begin() + ref.true_length);
  std::reverse(gen.begin(), gen.end());
  for (auto _ : state) {
    benchmark::DoNotOptimize(ndcg_sim(gen, ref, f.table, 8));
    benchmark::DoNotOptimize(map_sim(gen, ref, f.table, 8));
    benchmark::DoNotOptimize(embed_score(gen, ref, f.table));
    benchmark::DoNotOptimize(category_sim(gen, ref, f.ds.catalog, 8));
  }
}
BENCHMARK(BM_MetricSuite);

}  // namespace

BENCHMARK_MAIN();
