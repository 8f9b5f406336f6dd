#include "qdforge/types.hpp"

#include <algorithm>

namespace qdforge {

bool Genome::valid_for(const EngineConfig& cfg) const
{
    return indices_.size() == cfg.genome_length() &&
           std::all_of(indices_.begin(), indices_.end(),
                       [&](value_type v) { return v < cfg.codebook_size; });
}

ImageBuffer::ImageBuffer(std::size_t width, std::size_t height, Rgb fill)
    : width_(width), height_(height), pixels_(width * height, fill)
{
}

std::string_view to_string(DistanceMetricKind kind)
{
    switch (kind) {
    case DistanceMetricKind::Hsv:
        return "HSV";
    case DistanceMetricKind::Embedding:
        return "EMBEDDING";
    }
    return "?";
}

DistanceMetricKind parse_metric_kind(std::string_view text)
{
    if (text == "HSV" || text == "hsv")
        return DistanceMetricKind::Hsv;
    if (text == "EMBEDDING" || text == "embedding" || text == "ViT" || text == "VIT")
        return DistanceMetricKind::Embedding;
    throw Error("unknown distance metric '" + std::string(text) + "' (expected HSV or EMBEDDING)");
}

void Individual::clear_caches()
{
    phenotype.reset();
    fitness.reset();
    hsv.reset();
    embedding.reset();
}

std::vector<std::string> validate_config(const EngineConfig& cfg)
{
    std::vector<std::string> errors;
    if (cfg.codebook_size < 2)
        errors.emplace_back("codebook_size ≥ 2");
    if (cfg.grid_w == 0)
        errors.emplace_back("grid_w ≥ 1");
    if (cfg.grid_h == 0)
        errors.emplace_back("grid_h ≥ 1");
    if (cfg.block_px == 0)
        errors.emplace_back("block_px ≥ 1");
    if (cfg.population_size < 2)
        errors.emplace_back("population_size ≥ 2");
    if (cfg.grid_w != 0 && cfg.block_px != 0 && cfg.image_width() < 16)
        errors.emplace_back("image width (grid_w·block_px) ≥ 16");
    if (cfg.grid_h != 0 && cfg.block_px != 0 && cfg.image_height() < 16)
        errors.emplace_back("image height (grid_h·block_px) ≥ 16");
    return errors;
}

void require_valid(const EngineConfig& cfg)
{
    const auto errors = validate_config(cfg);
    if (errors.empty())
        return;
    std::string msg = "invalid config:";
    for (const auto& e : errors)
        msg += " [" + e + "]";
    throw Error(msg);
}

namespace presets {

EngineConfig full()
{
    return EngineConfig{};
}

EngineConfig desk()
{
    EngineConfig cfg;
    cfg.grid_w = 8;
    cfg.grid_h = 8;
    cfg.block_px = 8;
    cfg.codebook_size = 256;
    return cfg;
}

}  // namespace presets

}  // namespace qdforge
