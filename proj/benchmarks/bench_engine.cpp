#include <benchmark/benchmark.h>

#include "qdforge/decoder.hpp"
#include "qdforge/evolve.hpp"
#include "qdforge/oracle.hpp"
#include "qdforge/refine.hpp"

using namespace qdforge;

namespace {

struct Fixture {
    EngineConfig cfg;
    std::shared_ptr<const Codebook> book;
    std::shared_ptr<const SyntheticEmbedder> embedder;
    std::unique_ptr<SyntheticEvaluator> eval;

    explicit Fixture(EngineConfig c) : cfg(c)
    {
        RngStream book_rng = derive_stream(cfg.master_seed, "codebook");
        RngStream embed_rng = derive_stream(cfg.master_seed, "embedding");
        book = std::make_shared<const Codebook>(generate_codebook(cfg, book_rng));
        embedder = std::make_shared<const SyntheticEmbedder>(embed_rng);
        eval = std::make_unique<SyntheticEvaluator>(cfg, book, embedder, embed_prompt_synthetic("fire in the sky"));
    }

    Population population(std::size_t n) const
    {
        Population pop(n);
        for (std::size_t i = 0; i < n; ++i) {
            RngStream rng = derive_stream(cfg.master_seed, "init/" + std::to_string(i));
            pop[i].genome = init_genome_fractal(cfg, rng);
        }
        eval->evaluate_all(pop);
        return pop;
    }
};

EngineConfig geometry(int which)
{
    return which == 0 ? presets::desk() : EngineConfig{};
}

void BM_FullEvaluation(benchmark::State& state)
{
    const Fixture f(geometry(static_cast<int>(state.range(0))));
    Population pop = f.population(1);
    for (auto _ : state) {
        Individual ind;
        ind.genome = pop[0].genome;
        f.eval->evaluate(ind);
        benchmark::DoNotOptimize(ind.fitness);
    }
}
BENCHMARK(BM_FullEvaluation)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_RefineStep(benchmark::State& state)
{
    const Fixture f(geometry(static_cast<int>(state.range(0))));
    const GreedyRefiner refiner(*f.eval, {});
    Population pop = f.population(1);
    RngStream rng = derive_stream(0, "refine/0");
    Individual ind = pop[0];
    for (auto _ : state) {
        ind = refiner.step(ind, rng);
        benchmark::DoNotOptimize(ind.fitness);
    }
    state.counters["candidates/s"] =
        benchmark::Counter(static_cast<double>(refiner.candidate_evaluations()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_RefineStep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_NslcGeneration(benchmark::State& state)
{
    const Fixture f(presets::desk());
    NoveltyParams params;
    params.metric = state.range(0) == 0 ? DistanceMetricKind::Hsv : DistanceMetricKind::Embedding;
    const Population start = f.population(50);
    RngStream rng = derive_stream(0, "mutation/0");
    for (auto _ : state) {
        state.PauseTiming();
        Population pop = start;
        NoveltyArchive archive;
        state.ResumeTiming();
        for (int g = 0; g < 10; ++g)
            benchmark::DoNotOptimize(nslc_generation(pop, archive, params, *f.eval, f.cfg, rng));
    }
}
BENCHMARK(BM_NslcGeneration)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PopulationDiversity(benchmark::State& state)
{
    const Fixture f(presets::desk());
    const Population pop = f.population(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(population_diversity(pop, DistanceMetricKind::Embedding));
        benchmark::DoNotOptimize(population_diversity(pop, DistanceMetricKind::Hsv));
    }
}
BENCHMARK(BM_PopulationDiversity)->Arg(50)->Arg(200)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
