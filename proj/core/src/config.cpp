#include "qdforge/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace qdforge {

using nlohmann::json;

std::vector<std::string> validate_run_config(const RunConfig& cfg)
{
    std::vector<std::string> errors = validate_config(cfg.engine);
    const bool engine_ok = errors.empty();
    if (engine_ok) {
        for (auto& e : validate_refine_params(cfg.refine, cfg.engine))
            errors.push_back(std::move(e));
    }
    for (auto& e : validate_novelty_params(cfg.nslc))
        errors.push_back(std::move(e));
    if (cfg.noise.octaves == 0)
        errors.emplace_back("noise.octaves ≥ 1");
    if (!(cfg.noise.persistence > 0.0))
        errors.emplace_back("noise.persistence > 0");
    if (cfg.diversity_k == 0)
        errors.emplace_back("metrics.k ≥ 1");

    const auto& s = cfg.schedule;
    for (std::size_t i = 0; i < s.interrupt_at.size(); ++i) {
        if (i > 0 && s.interrupt_at[i] <= s.interrupt_at[i - 1]) {
            errors.emplace_back("schedule.interrupt_at strictly increasing");
            break;
        }
    }
    for (const auto t : s.interrupt_at) {
        if (t >= s.total_refine_iters) {
            errors.emplace_back("schedule.interrupt_at < schedule.total_refine_iters");
            break;
        }
    }
    if (cfg.oracle.backend != "synthetic" && cfg.oracle.backend != "remote")
        errors.emplace_back("oracle.backend ∈ {synthetic, remote}");
    if (cfg.oracle.max_in_flight == 0)
        errors.emplace_back("oracle.max_in_flight ≥ 1");
    if (!(cfg.oracle.timeout_s > 0.0))
        errors.emplace_back("oracle.timeout_s > 0");
    return errors;
}

namespace {

json to_json(const RunConfig& c)
{
    json j = json::object();
    j["grid_w"] = c.engine.grid_w;
    j["grid_h"] = c.engine.grid_h;
    j["block_px"] = c.engine.block_px;
    j["codebook_size"] = c.engine.codebook_size;
    j["population_size"] = c.engine.population_size;
    j["master_seed"] = c.engine.master_seed;
    j["noise.octaves"] = c.noise.octaves;
    j["noise.persistence"] = c.noise.persistence;
    j["refine.positions_per_step"] = c.refine.positions_per_step;
    j["refine.candidates_per_position"] = c.refine.candidates_per_position;
    j["nslc.k"] = c.nslc.k;
    j["nslc.e"] = c.nslc.e;
    j["nslc.mutation_rate"] = c.nslc.mutation_rate;
    j["schedule.total_refine_iters"] = c.schedule.total_refine_iters;
    j["schedule.interrupt_at"] = c.schedule.interrupt_at;
    j["schedule.nslc_generations"] = c.schedule.nslc_generations;
    j["metrics.k"] = c.diversity_k;
    j["oracle.backend"] = c.oracle.backend;
    j["oracle.sidecar_url"] = c.oracle.sidecar_url;
    j["oracle.max_in_flight"] = c.oracle.max_in_flight;
    j["oracle.model"] = c.oracle.model;
    j["oracle.normalize"] = c.oracle.normalize;
    j["oracle.timeout_s"] = c.oracle.timeout_s;
    j["log.wall_time"] = c.log_wall_time;
    if (c.variant)
        j["variant"] = *c.variant;
    if (c.prompt)
        j["prompt"] = *c.prompt;
    return j;
}

template <typename T>
T get_as(const json& value, const std::string& key)
{
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        throw Error("config key '" + key + "' has the wrong type");
    }
}

template <typename T>
T get_unsigned(const json& value, const std::string& key)
{
    if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() >= 0))
        throw Error("config key '" + key + "' must be a non-negative integer");
    const auto v = value.get<std::uint64_t>();
    if (v > std::numeric_limits<T>::max())
        throw Error("config key '" + key + "' is out of range");
    return static_cast<T>(v);
}

}  // namespace

std::string serialize_config(const RunConfig& cfg)
{
    return to_json(cfg).dump(2) + "\n";
}

RunConfig parse_config(std::string_view json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object())
        throw Error("config must be a flat JSON object");

    RunConfig c;
    std::vector<std::string> unknown;
    for (const auto& [key, v] : j.items()) {
        if (key == "grid_w") c.engine.grid_w = get_unsigned<std::uint32_t>(v, key);
        else if (key == "grid_h") c.engine.grid_h = get_unsigned<std::uint32_t>(v, key);
        else if (key == "block_px") c.engine.block_px = get_unsigned<std::uint32_t>(v, key);
        else if (key == "codebook_size") c.engine.codebook_size = get_unsigned<std::uint32_t>(v, key);
        else if (key == "population_size") c.engine.population_size = get_unsigned<std::uint32_t>(v, key);
        else if (key == "master_seed") c.engine.master_seed = get_unsigned<std::uint64_t>(v, key);
        else if (key == "noise.octaves") c.noise.octaves = get_unsigned<std::uint32_t>(v, key);
        else if (key == "noise.persistence") c.noise.persistence = get_as<double>(v, key);
        else if (key == "refine.positions_per_step") c.refine.positions_per_step = get_unsigned<std::uint32_t>(v, key);
        else if (key == "refine.candidates_per_position") c.refine.candidates_per_position = get_unsigned<std::uint32_t>(v, key);
        else if (key == "nslc.k") c.nslc.k = get_unsigned<std::uint32_t>(v, key);
        else if (key == "nslc.e") c.nslc.e = get_unsigned<std::uint32_t>(v, key);
        else if (key == "nslc.mutation_rate") c.nslc.mutation_rate = get_as<double>(v, key);
        else if (key == "schedule.total_refine_iters") c.schedule.total_refine_iters = get_unsigned<std::uint32_t>(v, key);
        else if (key == "schedule.interrupt_at") {
            if (!v.is_array())
                throw Error("config key 'schedule.interrupt_at' must be an array");
            c.schedule.interrupt_at.clear();
            for (const auto& t : v)
                c.schedule.interrupt_at.push_back(get_unsigned<std::uint32_t>(t, key));
        }
        else if (key == "schedule.nslc_generations") c.schedule.nslc_generations = get_unsigned<std::uint32_t>(v, key);
        else if (key == "metrics.k") c.diversity_k = get_unsigned<std::uint32_t>(v, key);
        else if (key == "oracle.backend") c.oracle.backend = get_as<std::string>(v, key);
        else if (key == "oracle.sidecar_url") c.oracle.sidecar_url = get_as<std::string>(v, key);
        else if (key == "oracle.max_in_flight") c.oracle.max_in_flight = get_unsigned<std::uint32_t>(v, key);
        else if (key == "oracle.model") c.oracle.model = get_as<std::string>(v, key);
        else if (key == "oracle.normalize") c.oracle.normalize = get_as<bool>(v, key);
        else if (key == "oracle.timeout_s") c.oracle.timeout_s = get_as<double>(v, key);
        else if (key == "log.wall_time") c.log_wall_time = get_as<bool>(v, key);
        else if (key == "variant") c.variant = get_as<std::string>(v, key);
        else if (key == "prompt") c.prompt = get_as<std::string>(v, key);
        else unknown.push_back(key);
    }
    if (!unknown.empty()) {
        std::string msg = "unknown config key(s):";
        for (const auto& k : unknown)
            msg += " '" + k + "'";
        throw Error(msg);
    }
    c.nslc.generations = c.schedule.nslc_generations;
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error("cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::uint64_t config_hash(const RunConfig& cfg)
{
    return fnv1a64(serialize_config(cfg));
}

namespace presets {

RunConfig full_run()
{
    return RunConfig{};
}

RunConfig desk_run()
{
    RunConfig c;
    c.engine = desk();
    return c;
}

RunConfig desk_short_run()
{
    RunConfig c = desk_run();
    c.schedule.total_refine_iters = 60;
    c.schedule.interrupt_at = {10, 20, 30, 40};
    c.schedule.nslc_generations = 10;
    c.nslc.generations = 10;
    return c;
}

}  // namespace presets

}  // namespace qdforge
