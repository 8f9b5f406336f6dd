#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "qdforge/decoder.hpp"
#include "qdforge/imagemetrics.hpp"
#include "qdforge/log.hpp"
#include "reference.hpp"

using namespace qdforge;

namespace {

ImageBuffer from_hues(const std::vector<double>& hues)
{
    ImageBuffer img(hues.size(), 1);
    for (std::size_t i = 0; i < hues.size(); ++i)
        img.at(i, 0) = hsv_to_rgb({hues[i], 1.0, 1.0});
    return img;
}

ImageBuffer random_image(std::mt19937_64& gen, std::size_t w, std::size_t h)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    ImageBuffer img(w, h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            img.at(x, y) = {u(gen), u(gen), u(gen)};
    return img;
}

}  // namespace

TEST(HsvConversion, PrimaryCases)
{
    const Hsv black = rgb_to_hsv({0, 0, 0});
    EXPECT_EQ(black.h, 0.0);
    EXPECT_EQ(black.s, 0.0);
    EXPECT_EQ(black.v, 0.0);
    const Hsv red = rgb_to_hsv({1, 0, 0});
    EXPECT_DOUBLE_EQ(red.h, 0.0);
    EXPECT_DOUBLE_EQ(red.s, 1.0);
    EXPECT_DOUBLE_EQ(red.v, 1.0);
    const Hsv green = rgb_to_hsv({0, 1, 0});
    EXPECT_DOUBLE_EQ(green.h, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(green.s, 1.0);
    EXPECT_DOUBLE_EQ(green.v, 1.0);
    const Hsv grey = rgb_to_hsv({0.4, 0.4, 0.4});
    EXPECT_EQ(grey.h, 0.0);
    EXPECT_EQ(grey.s, 0.0);
    EXPECT_DOUBLE_EQ(grey.v, 0.4);
}

TEST(HsvConversion, RoundTrip)
{
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const Rgb p{u(gen), u(gen), u(gen)};
        const Hsv q = rgb_to_hsv(p);
        ASSERT_GE(q.h, 0.0);
        ASSERT_LT(q.h, 1.0);
        const Rgb back = hsv_to_rgb(q);
        ASSERT_NEAR(back.r, p.r, 1e-12);
        ASSERT_NEAR(back.g, p.g, 1e-12);
        ASSERT_NEAR(back.b, p.b, 1e-12);
    }
}

TEST(HsvSummary, ConstantField)
{
    ImageBuffer img(8, 8, hsv_to_rgb({0.25, 0.5, 0.5}));
    const HsvSummary s = hsv_summary(img);
    EXPECT_NEAR(s.mean_h, 0.25, 1e-12);
    EXPECT_NEAR(s.std_h, 0.0, 1e-12);
    EXPECT_NEAR(s.mean_s, 0.5, 1e-12);
    EXPECT_NEAR(s.std_s, 0.0, 1e-12);
    EXPECT_NEAR(s.mean_b, 0.5, 1e-12);
    EXPECT_NEAR(s.std_b, 0.0, 1e-12);
    EXPECT_EQ(s.n_pixels, 64u);
}

TEST(HsvSummary, HueMeanWrapsAroundZero)
{
    const HsvSummary s = hsv_summary(from_hues({0.95, 0.05}));
    EXPECT_NEAR(std::min(s.mean_h, 1.0 - s.mean_h), 0.0, 1e-12);
    EXPECT_NEAR(s.std_h, std::sqrt(0.05 * 0.05 + 0.05 * 0.05), 1e-12);
}

TEST(HsvSummary, SinglePixelHasZeroDeviation)
{
    const HsvSummary s = hsv_summary(from_hues({0.7}));
    EXPECT_NEAR(s.mean_h, 0.7, 1e-12);
    EXPECT_EQ(s.std_h, 0.0);
    EXPECT_EQ(s.std_s, 0.0);
    EXPECT_EQ(s.std_b, 0.0);
}

TEST(HsvSummary, PixelOrderInvariant)
{
    std::mt19937_64 gen(11);
    const ImageBuffer img = random_image(gen, 12, 7);
    ImageBuffer rotated(7, 12);
    for (std::size_t y = 0; y < 7; ++y)
        for (std::size_t x = 0; x < 12; ++x)
            rotated.at(6 - y, x) = img.at(x, y);
    const HsvSummary a = hsv_summary(img), b = hsv_summary(rotated);
    EXPECT_NEAR(a.mean_h, b.mean_h, 1e-12);
    EXPECT_NEAR(a.std_h, b.std_h, 1e-12);
    EXPECT_NEAR(a.mean_s, b.mean_s, 1e-12);
    EXPECT_NEAR(a.std_s, b.std_s, 1e-12);
    EXPECT_NEAR(a.mean_b, b.mean_b, 1e-12);
    EXPECT_NEAR(a.std_b, b.std_b, 1e-12);
}

TEST(HsvSummary, HueRotationShiftsMeanAndKeepsDeviation)
{
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> hues(40);
        const double centre = u(gen);
        for (auto& h : hues)
            h = std::fmod(centre + 0.2 * (u(gen) - 0.5) + 1.0, 1.0);
        const double shift = u(gen);
        std::vector<double> shifted = hues;
        for (auto& h : shifted)
            h = std::fmod(h + shift, 1.0);
        const HsvSummary a = hsv_summary(from_hues(hues)), b = hsv_summary(from_hues(shifted));
        EXPECT_NEAR(std::abs(wrap_hue_delta(b.mean_h, a.mean_h + shift)), 0.0, 1e-9);
        EXPECT_NEAR(a.std_h, b.std_h, 1e-9);
    }
}

TEST(HsvDistance, IdenticalIsZero)
{
    HsvSummary s{0.3, 0.1, 0.6, 0.2, 0.4, 0.05, 10};
    EXPECT_EQ(hsv_distance(s, s), 0.0);
}

TEST(HsvDistance, BlackVersusWhite)
{
    const HsvSummary black = hsv_summary(ImageBuffer(4, 4, {0, 0, 0}));
    const HsvSummary white = hsv_summary(ImageBuffer(4, 4, {1, 1, 1}));
    EXPECT_DOUBLE_EQ(hsv_distance(black, white), 1.0 / 6.0);
}

TEST(HsvDistance, HueWrapGap)
{
    const HsvSummary a = hsv_summary(ImageBuffer(4, 4, hsv_to_rgb({0.98, 0.7, 0.6})));
    const HsvSummary b = hsv_summary(ImageBuffer(4, 4, hsv_to_rgb({0.02, 0.7, 0.6})));
    EXPECT_NEAR(hsv_distance(a, b), 0.04 * 0.04 / 6.0, 1e-12);
}

TEST(HsvDistance, SymmetricAndMatchesReference)
{
    std::mt19937_64 gen(17);
    const auto pool = ref::random_pool(gen, 1000, 4, false);
    for (std::size_t i = 0; i + 1 < pool.size(); i += 2) {
        const double ab = hsv_distance(*pool[i].hsv, *pool[i + 1].hsv);
        EXPECT_EQ(ab, hsv_distance(*pool[i + 1].hsv, *pool[i].hsv));
        EXPECT_NEAR(ab, ref::hsv_distance(*pool[i].hsv, *pool[i + 1].hsv), 1e-15);
        EXPECT_GE(ab, 0.0);
    }
}

TEST(EmbeddingDistance, Basics)
{
    const std::vector<double> a{0, 0}, b{3, 4};
    EXPECT_DOUBLE_EQ(embedding_distance(a, b), 5.0);
    EXPECT_EQ(embedding_distance(b, b), 0.0);
    EXPECT_THROW(embedding_distance(std::vector<double>(768), std::vector<double>(512)), Error);
}

TEST(Downsample, BoxMeansOfCells)
{
    std::mt19937_64 gen(2);
    const ImageBuffer img = random_image(gen, 40, 24);
    const auto d = downsample16(img);
    ASSERT_EQ(d.size(), kEmbeddingDim);
    for (std::size_t cy = 0; cy < 16; ++cy) {
        for (std::size_t cx = 0; cx < 16; ++cx) {
            double r = 0;
            std::size_t n = 0;
            for (std::size_t y = cy * 24 / 16; y < (cy + 1) * 24 / 16; ++y)
                for (std::size_t x = cx * 40 / 16; x < (cx + 1) * 40 / 16; ++x, ++n)
                    r += img.at(x, y).r;
            ASSERT_NEAR(d[(cy * 16 + cx) * 3], r / static_cast<double>(n), 1e-12);
        }
    }
}

TEST(SyntheticEmbedder, RotationIsOrthonormal)
{
    RngStream rng = derive_stream(0, "embedding");
    const SyntheticEmbedder e(rng);
    const auto m = e.matrix();
    ASSERT_EQ(m.size(), kEmbeddingDim * kEmbeddingDim);
    double worst = 0;
    for (std::size_t i = 0; i < kEmbeddingDim; i += 37) {
        for (std::size_t j = 0; j < kEmbeddingDim; j += 29) {
            double acc = 0;
            for (std::size_t k = 0; k < kEmbeddingDim; ++k)
                acc += m[i * kEmbeddingDim + k] * m[j * kEmbeddingDim + k];
            worst = std::max(worst, std::abs(acc - (i == j ? 1.0 : 0.0)));
        }
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(SyntheticEmbedder, NearIsometricAndDeterministic)
{
    RngStream rng = derive_stream(0, "embedding");
    const SyntheticEmbedder e(rng);
    std::mt19937_64 gen(8);
    for (int t = 0; t < 20; ++t) {
        const ImageBuffer a = random_image(gen, 64, 64), b = random_image(gen, 64, 64);
        const double pix = embedding_distance(downsample16(a), downsample16(b));
        const double emb = embedding_distance(e.embed(a), e.embed(b));
        EXPECT_NEAR(emb / pix, 1.0, 0.01);
        EXPECT_EQ(e.embed(a), e.embed(a));
    }
    EXPECT_GT(embedding_distance(e.embed(ImageBuffer(16, 16, {0, 0, 0})), e.embed(ImageBuffer(16, 16, {1, 1, 1}))),
              0.0);
}

TEST(SyntheticEmbedder, TransposeInvertsRotation)
{
    RngStream rng = derive_stream(4, "embedding");
    const SyntheticEmbedder e(rng);
    std::vector<double> x(kEmbeddingDim);
    std::mt19937_64 gen(1);
    std::normal_distribution<double> n;
    for (auto& v : x)
        v = n(gen);
    const auto back = e.rotate_transpose(e.rotate(x));
    for (std::size_t i = 0; i < x.size(); ++i)
        ASSERT_NEAR(back[i], x[i], 1e-12);
}

TEST(PopulationDiversity, IdenticalMembersGiveZero)
{
    std::mt19937_64 gen(1);
    auto pool = ref::random_pool(gen, 1);
    std::vector<Individual> pop(20, pool[0]);
    EXPECT_EQ(population_diversity(pop, DistanceMetricKind::Hsv), 0.0);
    EXPECT_EQ(population_diversity(pop, DistanceMetricKind::Embedding), 0.0);
}

TEST(PopulationDiversity, SeventeenPointOracle)
{
    std::vector<Individual> pop(17);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        const double t = static_cast<double>(i);
        HsvSummary s;
        s.mean_h = std::fmod(0.61 * t, 1.0);
        s.std_h = 0.01 * static_cast<double>(i % 5);
        s.mean_s = 0.05 * t;
        s.std_s = 0.02 * static_cast<double>(i % 3);
        s.mean_b = 1.0 - 0.04 * t;
        s.std_b = 0.03 * static_cast<double>(i % 4);
        pop[i].hsv = s;
    }
    EXPECT_NEAR(population_diversity(pop, DistanceMetricKind::Hsv, 15),
                ref::population_diversity(pop, DistanceMetricKind::Hsv, 15), 1e-12);
}

TEST(PopulationDiversity, RandomPoolsMatchReferenceAndArePermutationInvariant)
{
    std::mt19937_64 gen(23);
    for (int t = 0; t < 30; ++t) {
        auto pop = ref::random_pool(gen, 20 + static_cast<std::size_t>(t) * 3, 6, t % 2 == 0);
        for (auto kind : {DistanceMetricKind::Hsv, DistanceMetricKind::Embedding}) {
            const double v = population_diversity(pop, kind, 15);
            EXPECT_NEAR(v, ref::population_diversity(pop, kind, 15), 1e-12);
            auto shuffled = pop;
            std::shuffle(shuffled.begin(), shuffled.end(), gen);
            EXPECT_NEAR(population_diversity(shuffled, kind, 15), v, 1e-12);
        }
    }
}

TEST(PopulationDiversity, WarnsAndShrinksKForSmallPopulations)
{
    std::vector<std::string> warnings;
    auto previous = set_warning_sink([&](std::string_view w) { warnings.emplace_back(w); });
    std::mt19937_64 gen(4);
    const auto pop = ref::random_pool(gen, 10);
    EXPECT_NEAR(population_diversity(pop, DistanceMetricKind::Hsv, 15),
                ref::population_diversity(pop, DistanceMetricKind::Hsv, 9), 1e-12);
    set_warning_sink(std::move(previous));
    EXPECT_EQ(warnings.size(), 1u);
}
