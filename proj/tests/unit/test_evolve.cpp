#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "qdforge/evolve.hpp"
#include "reference.hpp"

using namespace qdforge;

namespace {

Individual with(std::vector<double> embedding, double fitness)
{
    Individual ind;
    ind.embedding = std::move(embedding);
    ind.fitness = fitness;
    ind.hsv = HsvSummary{};
    return ind;
}

NoveltyParams embedding_params(std::uint32_t k)
{
    NoveltyParams p;
    p.k = k;
    p.metric = DistanceMetricKind::Embedding;
    return p;
}

}  // namespace

TEST(Mutate, ResamplesRoundedCountOfDistinctPositions)
{
    EngineConfig cfg;
    cfg.codebook_size = 256;
    RngStream init = derive_stream(0, "init/0");
    const Genome g = init_genome_fractal(cfg, init);
    RngStream rng = derive_stream(0, "mutation/0");
    std::size_t max_changed = 0;
    for (int t = 0; t < 2000; ++t) {
        const Genome m = mutate(g, 0.05, cfg, rng);
        ASSERT_TRUE(m.valid_for(cfg));
        std::size_t changed = 0;
        for (std::size_t i = 0; i < g.size(); ++i)
            changed += g[i] != m[i];
        ASSERT_LE(changed, 29u);
        max_changed = std::max(max_changed, changed);
    }
    EXPECT_EQ(max_changed, 29u);
}

TEST(Mutate, ChangedValueFractionWithinThreeSigma)
{
    EngineConfig cfg;
    cfg.codebook_size = 256;
    RngStream init = derive_stream(1, "init/0");
    const Genome g = init_genome_fractal(cfg, init);
    RngStream rng = derive_stream(1, "mutation/0");
    const int trials = 10000;
    const double L = static_cast<double>(g.size());
    const double positions = std::round(0.05 * L);
    const double p_change = 1.0 - 1.0 / cfg.codebook_size;
    std::size_t changed = 0;
    for (int t = 0; t < trials; ++t) {
        const Genome m = mutate(g, 0.05, cfg, rng);
        for (std::size_t i = 0; i < g.size(); ++i)
            changed += g[i] != m[i];
    }
    const double fraction = static_cast<double>(changed) / (trials * L);
    const double expected = positions / L * p_change;
    const double sigma = std::sqrt(trials * positions * p_change * (1 - p_change)) / (trials * L);
    EXPECT_NEAR(fraction, expected, 3 * sigma);
}

TEST(Mutate, RateBoundaries)
{
    const EngineConfig cfg = presets::desk();
    RngStream init = derive_stream(2, "init/0");
    const Genome g = init_genome_fractal(cfg, init);
    RngStream rng = derive_stream(2, "mutation/0");
    EXPECT_THROW(mutate(g, 0.0, cfg, rng), Error);
    const Genome all = mutate(g, 1.0, cfg, rng);
    EXPECT_TRUE(all.valid_for(cfg));
    NoveltyParams p;
    p.mutation_rate = 0;
    EXPECT_FALSE(validate_novelty_params(p).empty());
}

TEST(Novelty, HandCases)
{
    std::vector<Individual> pop{with({0}, 0.5), with({1}, 0.5), with({2}, 0.5), with({3}, 0.5)};
    NoveltyArchive archive;
    EXPECT_DOUBLE_EQ(novelty_score(0, pop, archive, embedding_params(2)), 1.5);
    std::vector<Individual> same(5, with({4}, 0.1));
    EXPECT_EQ(novelty_score(2, same, archive, embedding_params(3)), 0.0);
}

TEST(Novelty, ArchiveMembersAreCandidates)
{
    std::vector<Individual> pop{with({0}, 0.5), with({10}, 0.5)};
    NoveltyArchive archive;
    archive.members.push_back(with({1}, 0.9));
    const auto nn = nearest_neighbors(0, pop, archive, DistanceMetricKind::Embedding, 1);
    ASSERT_EQ(nn.size(), 1u);
    EXPECT_EQ(nn[0].candidate, 2u);
    EXPECT_DOUBLE_EQ(novelty_score(0, pop, archive, embedding_params(1)), 1.0);
}

TEST(LocalCompetition, HandCases)
{
    std::vector<Individual> pop{with({0}, 0.9), with({1}, 0.1), with({2}, 0.2), with({3}, 0.3), with({4}, 0.4)};
    NoveltyArchive archive;
    EXPECT_DOUBLE_EQ(local_competition_score(0, pop, archive, embedding_params(4)), 1.0);
    std::vector<Individual> tied{with({0}, 0.5), with({1}, 0.5), with({2}, 0.5)};
    EXPECT_EQ(local_competition_score(0, tied, archive, embedding_params(2)), 0.0);
    std::vector<Individual> one{with({0}, 0.25), with({1}, 0.2), with({2}, 0.3), with({3}, 0.3), with({4}, 0.5)};
    EXPECT_DOUBLE_EQ(local_competition_score(0, one, archive, embedding_params(4)), 0.25);
}

TEST(Objectives, MatchBruteForceOnRandomPools)
{
    std::mt19937_64 gen(31);
    for (int t = 0; t < 40; ++t) {
        const bool ties = t % 2 == 0;
        auto pop = ref::random_pool(gen, 60, 5, ties);
        NoveltyArchive archive;
        archive.members = ref::random_pool(gen, static_cast<std::size_t>(t % 7) * 3, 5, ties);
        for (auto kind : {DistanceMetricKind::Hsv, DistanceMetricKind::Embedding}) {
            NoveltyParams params;
            params.metric = kind;
            std::vector<std::vector<Neighbor>> sets;
            const auto obj = compute_objectives(pop, archive, params, &sets);
            for (std::size_t i = 0; i < pop.size(); ++i) {
                const double nov = ref::novelty(i, pop, archive.members, kind, 15);
                const double lc = ref::local_competition(i, pop, archive.members, kind, 15);
                ASSERT_NEAR(obj[i].novelty, nov, 1e-12);
                ASSERT_EQ(obj[i].local_competition, lc);
                ASSERT_NEAR(novelty_score(i, pop, archive, params), nov, 1e-12);
                ASSERT_EQ(local_competition_score(i, pop, archive, params), lc);
                // Both objectives come from the one neighbour set that was returned.
                ASSERT_EQ(sets[i].size(), 15u);
                const ObjectivePair again = objectives_from_neighbors(*pop[i].fitness, sets[i]);
                ASSERT_EQ(again, obj[i]);
                const double lattice = obj[i].local_competition * 15;
                ASSERT_EQ(lattice, std::round(lattice));
            }
        }
    }
}

TEST(NondominatedSort, HandCases)
{
    using F = std::vector<std::vector<std::size_t>>;
    EXPECT_EQ(nondominated_sort(std::vector<ObjectivePair>{{1, 1}, {2, 2}}), (F{{1}, {0}}));
    EXPECT_EQ(nondominated_sort(std::vector<ObjectivePair>{{1, 2}, {2, 1}}), (F{{0, 1}}));
    EXPECT_EQ(nondominated_sort(std::vector<ObjectivePair>{{1, 1}, {1, 1}}), (F{{0, 1}}));
}

TEST(NondominatedSort, MatchesPeelingReference)
{
    std::mt19937_64 gen(41);
    std::uniform_int_distribution<int> coarse(0, 9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(t * 2 % 200);
        std::vector<ObjectivePair> pts(n);
        for (auto& p : pts)
            p = t % 2 ? ObjectivePair{u(gen), u(gen)} : ObjectivePair{coarse(gen) / 9.0, coarse(gen) / 9.0};
        const auto fronts = nondominated_sort(pts);
        ASSERT_EQ(fronts, ref::nondominated_sort(pts));
        for (std::size_t f = 1; f < fronts.size(); ++f)
            for (auto later : fronts[f])
                for (std::size_t e = 0; e < f; ++e)
                    for (auto earlier : fronts[e])
                        ASSERT_FALSE(dominates(pts[later], pts[earlier]));
    }
}

TEST(SparsityTruncate, KeepAllReturnsEverything)
{
    const std::vector<ObjectivePair> front{{0, 3}, {1, 2}, {2, 1}, {3, 0}};
    EXPECT_EQ(sparsity_truncate(front, 4), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(SparsityTruncate, ColinearKeepsEndpointsAndMiddle)
{
    const std::vector<ObjectivePair> front{{0, 4}, {1, 3}, {2, 2}, {3, 1}, {4, 0}};
    EXPECT_EQ(sparsity_truncate(front, 3), (std::vector<std::size_t>{0, 2, 4}));
}

TEST(SparsityTruncate, DegenerateFrontKeepsLowestIndices)
{
    const std::vector<ObjectivePair> front(6, ObjectivePair{0.5, 0.5});
    EXPECT_EQ(sparsity_truncate(front, 2), (std::vector<std::size_t>{0, 1}));
}

TEST(SparsityTruncate, RejectsTooMany)
{
    const std::vector<ObjectivePair> front{{0, 1}};
    EXPECT_THROW(sparsity_truncate(front, 2), Error);
}

TEST(Nsga2Select, FillsWholeFrontsThenTruncates)
{
    const std::vector<ObjectivePair> pts{{0, 0}, {3, 3}, {1, 4}, {4, 1}, {2, 2}, {1, 1}};
    const auto s = nsga2_select(pts, 4);
    EXPECT_EQ(s.size(), 4u);
    EXPECT_TRUE(std::set<std::size_t>(s.begin(), s.end()).count(1));
    EXPECT_TRUE(std::set<std::size_t>(s.begin(), s.end()).count(2));
    EXPECT_TRUE(std::set<std::size_t>(s.begin(), s.end()).count(3));
    EXPECT_TRUE(std::set<std::size_t>(s.begin(), s.end()).count(4));
}

TEST(NslcGeneration, ArchiveGrowthAndSurvivorCount)
{
    const ref::World w(presets::desk());
    Population pop;
    for (int i = 0; i < 20; ++i) {
        RngStream init = derive_stream(0, "init/" + std::to_string(i));
        pop.push_back(w.random_individual(init));
    }
    NoveltyParams params;
    NoveltyArchive archive;
    RngStream rng = derive_stream(0, "mutation/0");
    for (int g = 1; g <= 5; ++g) {
        const auto report = nslc_generation(pop, archive, params, *w.eval, w.cfg, rng);
        EXPECT_EQ(archive.size(), static_cast<std::size_t>(3 * g));
        EXPECT_EQ(pop.size(), 20u);
        EXPECT_EQ(report.survivors.size(), 20u);
        EXPECT_TRUE(std::is_sorted(report.survivors.begin(), report.survivors.end()));
        EXPECT_EQ(report.objectives.size(), 40u);
        EXPECT_EQ(report.archived.size(), 3u);
        for (const auto& ind : pop)
            EXPECT_TRUE(ind.evaluated());
    }
}

TEST(NslcGeneration, DeterministicSurvivors)
{
    const ref::World w(presets::desk());
    auto run = [&] {
        Population pop;
        for (int i = 0; i < 20; ++i) {
            RngStream init = derive_stream(0, "init/" + std::to_string(i));
            pop.push_back(w.random_individual(init));
        }
        NoveltyArchive archive;
        RngStream rng = derive_stream(0, "mutation/0");
        std::vector<std::vector<std::size_t>> seq;
        for (int g = 0; g < 4; ++g)
            seq.push_back(nslc_generation(pop, archive, {}, *w.eval, w.cfg, rng).survivors);
        return seq;
    };
    EXPECT_EQ(run(), run());
}

TEST(RunExploration, RaisesHsvDiversityAndResetsArchive)
{
    const ref::World w(presets::desk());
    Population pop;
    for (int i = 0; i < 50; ++i) {
        RngStream init = derive_stream(0, "init/" + std::to_string(i));
        pop.push_back(w.random_individual(init));
    }
    const double before = population_diversity(pop, DistanceMetricKind::Hsv);
    NoveltyParams params;
    params.generations = 50;
    RngStream rng = derive_stream(0, "mutation/0");
    std::uint32_t calls = 0;
    const auto archive = run_exploration(pop, params, *w.eval, w.cfg, rng,
                                         [&](std::uint32_t g, std::span<const Individual>, const NoveltyArchive& a) {
                                             ++calls;
                                             EXPECT_EQ(a.size(), 3u * g);
                                         });
    EXPECT_EQ(calls, 50u);
    EXPECT_EQ(archive.size(), 150u);
    EXPECT_GT(population_diversity(pop, DistanceMetricKind::Hsv), before);
    RngStream rng2 = derive_stream(0, "mutation/1");
    params.generations = 1;
    EXPECT_EQ(run_exploration(pop, params, *w.eval, w.cfg, rng2).size(), 3u);
}
