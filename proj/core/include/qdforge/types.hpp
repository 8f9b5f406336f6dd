#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qdforge {

/// Raised for contract violations on engine inputs (corrupt genomes,
/// mismatched dimensions, invalid configurations).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EngineConfig {
    std::uint32_t grid_w = 24;
    std::uint32_t grid_h = 24;
    std::uint32_t block_px = 16;
    std::uint32_t codebook_size = 16384;
    std::uint32_t population_size = 50;
    std::uint64_t master_seed = 0;

    std::size_t genome_length() const { return std::size_t{grid_w} * grid_h; }
    std::size_t image_width() const { return std::size_t{grid_w} * block_px; }
    std::size_t image_height() const { return std::size_t{grid_h} * block_px; }

    bool operator==(const EngineConfig&) const = default;
};

/// Fixed-length sequence of codebook indices.
class Genome {
public:
    using value_type = std::uint32_t;

    Genome() = default;
    explicit Genome(std::vector<value_type> indices) : indices_(std::move(indices)) {}


    std::size_t size() const noexcept { return indices_.size(); }
    value_type operator[](std::size_t i) const { return indices_[i]; }
    value_type& operator[](std::size_t i) { return indices_[i]; }
    std::span<const value_type> indices() const noexcept { return indices_; }

    /// True when the length is L and every index is below V.
    bool valid_for(const EngineConfig& cfg) const;

    bool operator==(const Genome&) const = default;

private:
    std::vector<value_type> indices_;
};

struct Rgb {
    double r = 0, g = 0, b = 0;
    bool operator==(const Rgb&) const = default;
};

/// Row-major RGB raster with channels in [0, 1].
class ImageBuffer {
public:
    ImageBuffer() = default;
    ImageBuffer(std::size_t width, std::size_t height, Rgb fill = {});

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t pixel_count() const noexcept { return width_ * height_; }

    Rgb at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
    Rgb& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }

    std::span<const Rgb> pixels() const noexcept { return pixels_; }
    std::span<Rgb> pixels() noexcept { return pixels_; }

    bool operator==(const ImageBuffer&) const = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<Rgb> pixels_;
};

/// Chromatic summary of one image; hue statistics are circular.
struct HsvSummary {
    double mean_h = 0, std_h = 0;
    double mean_s = 0, std_s = 0;
    double mean_b = 0, std_b = 0;
    std::size_t n_pixels = 0;

    bool operator==(const HsvSummary&) const = default;
};

enum class DistanceMetricKind { Hsv, Embedding };

std::string_view to_string(DistanceMetricKind kind);
/// Accepts "HSV" / "EMBEDDING" (also "ViT" for the embedding metric).
DistanceMetricKind parse_metric_kind(std::string_view text);

/// Genome plus caches derived from it. Caches are filled by an Evaluator
/// and are either absent or consistent with the genome.
struct Individual {
    Genome genome;
    std::optional<ImageBuffer> phenotype;
    std::optional<double> fitness;
    std::optional<HsvSummary> hsv;
    std::optional<std::vector<double>> embedding;

    bool evaluated() const { return phenotype && fitness && hsv && embedding; }
    void clear_caches();
};

using Population = std::vector<Individual>;

/// Every violated invariant, not only the first. Empty means valid.
std::vector<std::string> validate_config(const EngineConfig& cfg);

/// Throws Error listing all violations when the config is invalid.
void require_valid(const EngineConfig& cfg);

namespace presets {
/// All constants at their published values: 24x24 grid of 16 px blocks, V = 16384.
EngineConfig full();
/// Fast preset for CI: V = 256, 8x8 grid, 8 px blocks.
EngineConfig desk();
}  // namespace presets

}  // namespace qdforge
