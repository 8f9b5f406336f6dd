#include <gtest/gtest.h>

#include <cmath>

#include "qdforge/oracle.hpp"
#include "reference.hpp"

using namespace qdforge;

TEST(Cosine, HandCases)
{
    const std::vector<double> a{1, 1, 0}, b{1, 0, 0}, c{0, 1, 0};
    EXPECT_NEAR(cosine_similarity(a, b), 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(cosine_similarity(b, c), 0.0, 1e-15);
    EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-15);
    EXPECT_THROW(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}), Error);
    EXPECT_THROW(cosine_similarity(a, std::vector<double>{1, 0}), Error);
}

TEST(PromptEmbedding, DeterministicUnitVector)
{
    const auto a = embed_prompt_synthetic("a pyramid made of ice");
    const auto b = embed_prompt_synthetic("a pyramid made of ice");
    EXPECT_EQ(a.target, b.target);
    ASSERT_EQ(a.target.size(), kEmbeddingDim);
    double n2 = 0;
    for (double x : a.target)
        n2 += x * x;
    EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-9);
    EXPECT_THROW(embed_prompt_synthetic(""), Error);
}

TEST(PromptEmbedding, PresetPromptsAreNearlyOrthogonal)
{
    for (std::size_t i = 0; i < kPromptPresets.size(); ++i) {
        for (std::size_t j = i + 1; j < kPromptPresets.size(); ++j) {
            const auto a = embed_prompt_synthetic(kPromptPresets[i].text);
            const auto b = embed_prompt_synthetic(kPromptPresets[j].text);
            EXPECT_LT(std::abs(cosine_similarity(a.target, b.target)), 0.2)
                << kPromptPresets[i].id << " " << kPromptPresets[j].id;
        }
    }
}

TEST(PromptRef, PresetsAndFreeText)
{
    EXPECT_EQ(resolve_prompt("SP2").text, "a pyramid made of ice");
    const PromptRef sp5 = resolve_prompt("fire in the sky");
    EXPECT_EQ(sp5.id, "SP5");
    const PromptRef free = resolve_prompt("a red bicycle");
    EXPECT_EQ(free.text, "a red bicycle");
    EXPECT_EQ(free.id.size(), 9u);
    EXPECT_EQ(free.id[0], 'P');
    EXPECT_EQ(resolve_prompt("a red bicycle").id, free.id);
    EXPECT_THROW(resolve_prompt(""), Error);
}

TEST(Score, MatchesHandComposedPipeline)
{
    const ref::World w(presets::desk(), "a lonely house in the woods");
    for (int t = 0; t < 10; ++t) {
        RngStream rng = derive_stream(t, "init/0");
        Individual ind;
        ind.genome = init_genome_fractal(w.cfg, rng);
        w.eval->evaluate(ind);

        const ImageBuffer img = decode(ind.genome, *w.book, w.cfg);
        const auto d = downsample16(img);
        const auto m = w.embedder->matrix();
        std::vector<long double> y(kEmbeddingDim, 0.0L);
        for (std::size_t r = 0; r < kEmbeddingDim; ++r)
            for (std::size_t c = 0; c < kEmbeddingDim; ++c)
                y[r] += static_cast<long double>(m[r * kEmbeddingDim + c]) * d[c];
        const auto target = embed_prompt_synthetic("a lonely house in the woods").target;
        long double num = 0, ny = 0, nt = 0;
        for (std::size_t i = 0; i < kEmbeddingDim; ++i) {
            num += y[i] * target[i];
            ny += y[i] * y[i];
            nt += static_cast<long double>(target[i]) * target[i];
        }
        const double expected = static_cast<double>(num / std::sqrt(ny * nt));
        EXPECT_NEAR(*ind.fitness, expected, 1e-12);
        EXPECT_EQ(w.eval->evaluations(), static_cast<std::uint64_t>(t + 1));
    }
}

TEST(Score, ColinearEmbeddingScoresOne)
{
    const ref::World w(presets::desk());
    struct Fixed final : EmbeddingProvider {
        std::vector<double> v;
        std::vector<double> embed(const ImageBuffer&) const override { return v; }
        std::size_t dimension() const override { return v.size(); }
    } provider;
    const PromptVector p = embed_prompt_synthetic("artificial intelligence");
    provider.v = p.target;
    for (auto& x : provider.v)
        x *= 3.5;
    EXPECT_NEAR(score(ImageBuffer(16, 16), p, provider).value, 1.0, 1e-12);
}

TEST(Score, InvariantToTargetScaleAndRepeatable)
{
    const ref::World w(presets::desk());
    const SyntheticEmbeddingProvider provider(w.embedder);
    RngStream rng = derive_stream(2, "init/0");
    const ImageBuffer img = decode(init_genome_fractal(w.cfg, rng), *w.book, w.cfg);
    PromptVector p = embed_prompt_synthetic("cosmic love and attention");
    const double a = score(img, p, provider).value;
    EXPECT_EQ(a, score(img, p, provider).value);
    for (auto& x : p.target)
        x *= 17.0;
    EXPECT_NEAR(score(img, p, provider).value, a, 1e-12);
    EXPECT_LE(std::abs(a), 1.0);
}
