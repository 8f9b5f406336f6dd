#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qdforge/decoder.hpp"
#include "qdforge/evolve.hpp"
#include "qdforge/refine.hpp"
#include "qdforge/types.hpp"

namespace qdforge {

struct CycleSchedule {
    std::uint32_t total_refine_iters = 600;
    std::vector<std::uint32_t> interrupt_at{100, 200, 300, 400};
    std::uint32_t nslc_generations = 50;

    bool operator==(const CycleSchedule&) const = default;
};

struct OracleSettings {
    std::string backend = "synthetic";  // synthetic | remote
    std::string sidecar_url = "http://127.0.0.1:8765";
    std::uint32_t max_in_flight = 4;
    std::string model;
    bool normalize = false;
    double timeout_s = 30.0;

    bool operator==(const OracleSettings&) const = default;
};

/// Everything a run needs besides the variant, prompt and output location.
struct RunConfig {
    EngineConfig engine;
    NoiseParams noise;
    RefineParams refine;
    NoveltyParams nslc;  // generations and metric are set per variant/schedule
    CycleSchedule schedule;
    std::uint32_t diversity_k = 15;
    OracleSettings oracle;
    bool log_wall_time = false;
    std::optional<std::string> variant;
    std::optional<std::string> prompt;

    bool operator==(const RunConfig&) const = default;
};

std::vector<std::string> validate_run_config(const RunConfig& cfg);

/// Flat JSON with dotted keys (`refine.positions_per_step`, ...). Keys are
/// emitted sorted, so serialize(parse(serialize(c))) is byte-identical.
std::string serialize_config(const RunConfig& cfg);

/// Missing keys keep their full-scale defaults. Throws Error on unknown
/// keys, wrong types or malformed JSON; does not validate ranges.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::string& path);

/// FNV-1a of the serialized form.
std::uint64_t config_hash(const RunConfig& cfg);

namespace presets {
RunConfig full_run();
/// Desk geometry (V = 256, 8x8 grid, 8 px blocks) with the full schedule.
RunConfig desk_run();
/// Desk geometry with the shortened schedule: 60 iterations, interrupts at
/// 10/20/30/40, 10 NSLC generations.
RunConfig desk_short_run();
}  // namespace presets

}  // namespace qdforge
