#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "qdforge/rng.hpp"
#include "qdforge/types.hpp"

namespace qdforge {

/// Fractal value-noise parameters used for genome initialization.
struct NoiseParams {
    std::uint32_t octaves = 2;
    double persistence = 0.5;

    bool operator==(const NoiseParams&) const = default;
};

/// V procedurally generated colour blocks, each block_px x block_px.
class Codebook {
public:
    Codebook(std::uint32_t block_px, std::vector<ImageBuffer> entries, std::uint64_t generation_seed);

    std::uint32_t block_px() const noexcept { return block_px_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::uint64_t generation_seed() const noexcept { return seed_; }
    const ImageBuffer& entry(std::size_t i) const { return entries_.at(i); }

private:
    std::uint32_t block_px_;
    std::vector<ImageBuffer> entries_;
    std::uint64_t seed_;
};

/// Each entry is a random base HSV colour modulated by a smooth, low amplitude
/// bilinear brightness field.
Codebook generate_codebook(const EngineConfig& cfg, RngStream& rng);

/// Tiles codebook entries row-major over the grid. Throws Error on an index
/// outside the codebook or a genome of the wrong length.
ImageBuffer decode(const Genome& genome, const Codebook& book, const EngineConfig& cfg);

/// Writes entry `index` into the tile at grid position `tile` of `img`.
void paint_tile(ImageBuffer& img, std::size_t tile, const ImageBuffer& entry, const EngineConfig& cfg);

/// Multi-octave value noise over the gene lattice, min-max normalized and
/// quantized to [0, V-1].
Genome init_genome_fractal(const EngineConfig& cfg, RngStream& rng, const NoiseParams& noise = {});

/// Nearest-entry (squared L2) match per tile; inverse of decode on exact tilings.
Genome match_tiles(const ImageBuffer& img, const Codebook& book, const EngineConfig& cfg);

/// Binary PPM (P6, maxval 255, channel = round(value * 255)).
std::string encode_ppm(const ImageBuffer& img);
ImageBuffer decode_ppm(const std::string& bytes);
void write_ppm(const std::filesystem::path& path, const ImageBuffer& img);

}  // namespace qdforge
