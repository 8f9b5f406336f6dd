#include <gtest/gtest.h>

#include "qdforge/config.hpp"

using namespace qdforge;

TEST(RunConfigFile, RoundTripIsByteIdentical)
{
    for (RunConfig cfg : {presets::full_run(), presets::desk_run(), presets::desk_short_run()}) {
        cfg.variant = "NSLC-HSV";
        cfg.prompt = "fire in the sky";
        cfg.engine.master_seed = 0xfedcba9876543210ull;
        cfg.nslc.mutation_rate = 0.1 / 3.0;
        const std::string text = serialize_config(cfg);
        const RunConfig back = parse_config(text);
        EXPECT_EQ(serialize_config(back), text);
        EXPECT_EQ(config_hash(back), config_hash(cfg));
    }
}

TEST(RunConfigFile, PartialFileKeepsDefaults)
{
    const RunConfig cfg = parse_config(R"({"grid_w": 8, "grid_h": 8, "block_px": 8, "codebook_size": 256})");
    EXPECT_EQ(cfg.engine.grid_w, 8u);
    EXPECT_EQ(cfg.engine.population_size, 50u);
    EXPECT_EQ(cfg.schedule.total_refine_iters, 600u);
    EXPECT_EQ(cfg.schedule.interrupt_at, (std::vector<std::uint32_t>{100, 200, 300, 400}));
    EXPECT_EQ(cfg.nslc.generations, cfg.schedule.nslc_generations);
}

TEST(RunConfigFile, RejectsUnknownKeysAndBadTypes)
{
    EXPECT_THROW(parse_config(R"({"grid_width": 8})"), Error);
    EXPECT_THROW(parse_config(R"({"grid_w": -1})"), Error);
    EXPECT_THROW(parse_config(R"({"grid_w": "8"})"), Error);
    EXPECT_THROW(parse_config(R"([1, 2])"), Error);
    EXPECT_THROW(parse_config("{"), Error);
}

TEST(RunConfigFile, ValidationListsEveryProblem)
{
    RunConfig cfg = presets::desk_run();
    EXPECT_TRUE(validate_run_config(cfg).empty());
    cfg.engine.codebook_size = 1;
    cfg.schedule.interrupt_at = {200, 100, 700};
    cfg.nslc.mutation_rate = 0;
    cfg.oracle.backend = "gpu";
    const auto errors = validate_run_config(cfg);
    auto has = [&](std::string_view s) {
        return std::find(errors.begin(), errors.end(), s) != errors.end();
    };
    EXPECT_TRUE(has("codebook_size ≥ 2"));
    EXPECT_TRUE(has("schedule.interrupt_at strictly increasing"));
    EXPECT_TRUE(has("schedule.interrupt_at < schedule.total_refine_iters"));
    EXPECT_TRUE(has("0 < nslc.mutation_rate ≤ 1"));
    EXPECT_TRUE(has("oracle.backend ∈ {synthetic, remote}"));
}

TEST(RunConfigFile, HashChangesWithContent)
{
    RunConfig a = presets::desk_run(), b = a;
    b.engine.master_seed = 1;
    EXPECT_NE(config_hash(a), config_hash(b));
}
