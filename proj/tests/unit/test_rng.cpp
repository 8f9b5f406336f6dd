#include <gtest/gtest.h>

#include <set>
#include <stdexcept>

#include "qdforge/rng.hpp"

using namespace qdforge;

TEST(Rng, SameSeedAndLabelReproduce)
{
    RngStream a = derive_stream(42, "init/0");
    RngStream b = derive_stream(42, "init/0");
    for (int i = 0; i < 1000; ++i)
        ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, LabelsGiveDistinctStreams)
{
    const char* labels[] = {"codebook", "embedding", "init/0", "init/1", "refine/0", "mutation/0"};
    for (const char* x : labels) {
        for (const char* y : labels) {
            if (std::string_view(x) == y)
                continue;
            RngStream a = derive_stream(7, x);
            RngStream b = derive_stream(7, y);
            int equal = 0;
            for (int i = 0; i < 100; ++i)
                equal += a.next_u64() == b.next_u64();
            EXPECT_EQ(equal, 0) << x << " vs " << y;
        }
    }
}

TEST(Rng, SeedsGiveDistinctStreams)
{
    RngStream a = derive_stream(1, "init/0");
    RngStream b = derive_stream(2, "init/0");
    int equal = 0;
    for (int i = 0; i < 100; ++i)
        equal += a.next_u64() == b.next_u64();
    EXPECT_EQ(equal, 0);
}

TEST(Rng, EmptyLabelRejected)
{
    EXPECT_THROW(derive_stream(1, ""), std::invalid_argument);
}

TEST(Rng, RestoreContinuesExactly)
{
    RngStream a = derive_stream(99, "refine/3");
    for (int i = 0; i < 37; ++i)
        a.uniform_index(1000);
    (void)a.normal();
    (void)a.sample_distinct(576, 8);
    RngStream b = RngStream::restore(a.seed(), a.label(), a.draws());
    for (int i = 0; i < 200; ++i)
        ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, UniformIndexCoversRangeEvenly)
{
    RngStream r = derive_stream(5, "hist");
    std::vector<int> counts(10, 0);
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        ++counts[r.uniform_index(10)];
    for (int c : counts)
        EXPECT_NEAR(c, n / 10, 5 * std::sqrt(n * 0.1 * 0.9));
}

TEST(Rng, Uniform01InHalfOpenInterval)
{
    RngStream r = derive_stream(5, "u01");
    double sum = 0;
    for (int i = 0; i < 100000; ++i) {
        const double x = r.uniform01();
        ASSERT_GE(x, 0.0);
        ASSERT_LT(x, 1.0);
        sum += x;
    }
    EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(Rng, NormalMoments)
{
    RngStream r = derive_stream(5, "normal");
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = r.normal();
        s += x;
        s2 += x * x;
    }
    EXPECT_NEAR(s / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.02);
    EXPECT_EQ(r.draws(), 2u * n);
}

TEST(Rng, SampleDistinctReturnsUniqueInRange)
{
    RngStream r = derive_stream(5, "floyd");
    for (int t = 0; t < 200; ++t) {
        const auto s = r.sample_distinct(64, 16);
        ASSERT_EQ(s.size(), 16u);
        std::set<std::uint64_t> u(s.begin(), s.end());
        ASSERT_EQ(u.size(), 16u);
        ASSERT_LT(*u.rbegin(), 64u);
    }
    EXPECT_EQ(r.sample_distinct(5, 5).size(), 5u);
    EXPECT_TRUE(r.sample_distinct(5, 0).empty());
}

TEST(Rng, Fnv1aKnownValues)
{
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
    EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}
