#include "qdforge/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "qdforge/imagemetrics.hpp"

namespace qdforge {

namespace {

constexpr double kNoiseAmplitude = 0.06;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double lerp(double a, double b, double t) { return a + (b - a) * t; }

// Bilinear interpolation on an (n+1)x(n+1) lattice covering the unit square.
double sample_lattice(const std::vector<double>& lattice, std::size_t n, double u, double v)
{
    const double fu = u * static_cast<double>(n);
    const double fv = v * static_cast<double>(n);
    const std::size_t x0 = std::min(static_cast<std::size_t>(fu), n - 1);
    const std::size_t y0 = std::min(static_cast<std::size_t>(fv), n - 1);
    const double tx = fu - static_cast<double>(x0);
    const double ty = fv - static_cast<double>(y0);
    const std::size_t stride = n + 1;
    const double top = lerp(lattice[y0 * stride + x0], lattice[y0 * stride + x0 + 1], tx);
    const double bot = lerp(lattice[(y0 + 1) * stride + x0], lattice[(y0 + 1) * stride + x0 + 1], tx);
    return lerp(top, bot, ty);
}

}  // namespace

Codebook::Codebook(std::uint32_t block_px, std::vector<ImageBuffer> entries, std::uint64_t generation_seed)
    : block_px_(block_px), entries_(std::move(entries)), seed_(generation_seed)
{
    for (const auto& e : entries_) {
        if (e.width() != block_px_ || e.height() != block_px_)
            throw Error("codebook entries must all be block_px x block_px");
    }
}

Codebook generate_codebook(const EngineConfig& cfg, RngStream& rng)
{
    require_valid(cfg);
    const std::size_t bp = cfg.block_px;
    std::vector<ImageBuffer> entries;
    entries.reserve(cfg.codebook_size);

    for (std::uint32_t i = 0; i < cfg.codebook_size; ++i) {
        const double h = rng.uniform01();
        const double s = rng.uniform(0.15, 1.0);
        const double v = rng.uniform(0.15, 0.95);
        std::vector<double> corners(4);
        for (auto& c : corners)
            c = rng.uniform(-kNoiseAmplitude, kNoiseAmplitude);

        ImageBuffer block(bp, bp);
        for (std::size_t y = 0; y < bp; ++y) {
            for (std::size_t x = 0; x < bp; ++x) {
                const double u = bp > 1 ? static_cast<double>(x) / static_cast<double>(bp - 1) : 0.0;
                const double w = bp > 1 ? static_cast<double>(y) / static_cast<double>(bp - 1) : 0.0;
                const double dv = sample_lattice(corners, 1, u, w);
                block.at(x, y) = hsv_to_rgb({h, s, clamp01(v + dv)});
            }
        }
        entries.push_back(std::move(block));
    }
    return Codebook(cfg.block_px, std::move(entries), rng.seed());
}

void paint_tile(ImageBuffer& img, std::size_t tile, const ImageBuffer& entry, const EngineConfig& cfg)
{
    const std::size_t bp = cfg.block_px;
    const std::size_t x0 = (tile % cfg.grid_w) * bp;
    const std::size_t y0 = (tile / cfg.grid_w) * bp;
    for (std::size_t y = 0; y < bp; ++y)
        for (std::size_t x = 0; x < bp; ++x)
            img.at(x0 + x, y0 + y) = entry.at(x, y);
}

ImageBuffer decode(const Genome& genome, const Codebook& book, const EngineConfig& cfg)
{
    if (genome.size() != cfg.genome_length())
        throw Error("decode: genome length " + std::to_string(genome.size()) + " != " +
                    std::to_string(cfg.genome_length()));
    if (book.block_px() != cfg.block_px)
        throw Error("decode: codebook block size does not match config");
    ImageBuffer img(cfg.image_width(), cfg.image_height());
    for (std::size_t i = 0; i < genome.size(); ++i) {
        if (genome[i] >= book.size())
            throw Error("decode: gene " + std::to_string(i) + " index " + std::to_string(genome[i]) +
                        " outside codebook of size " + std::to_string(book.size()));
        paint_tile(img, i, book.entry(genome[i]), cfg);
    }
    return img;
}

Genome init_genome_fractal(const EngineConfig& cfg, RngStream& rng, const NoiseParams& noise)
{
    require_valid(cfg);
    if (noise.octaves == 0)
        throw Error("init_genome_fractal: octaves must be positive");

    const std::size_t gw = cfg.grid_w;
    const std::size_t gh = cfg.grid_h;
    std::vector<double> field(gw * gh, 0.0);

    double amplitude = 1.0;
    for (std::uint32_t o = 0; o < noise.octaves; ++o) {
        // Octave o has 2^(o+1) lattice intervals across the grid.
        const std::size_t n = std::size_t{2} << o;
        std::vector<double> lattice((n + 1) * (n + 1));
        for (auto& l : lattice)
            l = rng.uniform01();
        for (std::size_t y = 0; y < gh; ++y) {
            for (std::size_t x = 0; x < gw; ++x) {
                const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(gw);
                const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(gh);
                field[y * gw + x] += amplitude * sample_lattice(lattice, n, u, v);
            }
        }
        amplitude *= noise.persistence;
    }

    const auto [lo_it, hi_it] = std::minmax_element(field.begin(), field.end());
    const double lo = *lo_it;
    const double range = *hi_it - lo;
    const double V = static_cast<double>(cfg.codebook_size);

    std::vector<Genome::value_type> indices(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        const double t = range > 0 ? (field[i] - lo) / range : 0.5;
        const auto q = static_cast<std::uint64_t>(std::floor(t * V));
        indices[i] = static_cast<Genome::value_type>(std::min<std::uint64_t>(q, cfg.codebook_size - 1));
    }
    return Genome(std::move(indices));
}

Genome match_tiles(const ImageBuffer& img, const Codebook& book, const EngineConfig& cfg)
{
    const std::size_t bp = cfg.block_px;
    std::vector<Genome::value_type> indices(cfg.genome_length());
    for (std::size_t t = 0; t < indices.size(); ++t) {
        const std::size_t x0 = (t % cfg.grid_w) * bp;
        const std::size_t y0 = (t / cfg.grid_w) * bp;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t e = 0; e < book.size(); ++e) {
            const auto& entry = book.entry(e);
            double d = 0;
            for (std::size_t y = 0; y < bp && d < best; ++y) {
                for (std::size_t x = 0; x < bp; ++x) {
                    const Rgb a = img.at(x0 + x, y0 + y);
                    const Rgb b = entry.at(x, y);
                    d += (a.r - b.r) * (a.r - b.r) + (a.g - b.g) * (a.g - b.g) + (a.b - b.b) * (a.b - b.b);
                }
            }
            if (d < best) {
                best = d;
                indices[t] = static_cast<Genome::value_type>(e);
            }
        }
    }
    return Genome(std::move(indices));
}

std::string encode_ppm(const ImageBuffer& img)
{
    std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    const std::size_t header = out.size();
    out.resize(header + img.pixel_count() * 3);
    auto quantize = [](double v) {
        return static_cast<char>(static_cast<unsigned char>(std::lround(clamp01(v) * 255.0)));
    };
    std::size_t k = header;
    for (const Rgb& p : img.pixels()) {
        out[k++] = quantize(p.r);
        out[k++] = quantize(p.g);
        out[k++] = quantize(p.b);
    }
    return out;
}

ImageBuffer decode_ppm(const std::string& bytes)
{
    std::istringstream in(bytes);
    std::string magic;
    std::size_t w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    if (!in || magic != "P6" || maxval != 255 || w == 0 || h == 0)
        throw Error("decode_ppm: expected binary P6 with maxval 255");
    in.get();  // single whitespace byte after the header
    const auto offset = static_cast<std::size_t>(in.tellg());
    if (bytes.size() < offset + w * h * 3)
        throw Error("decode_ppm: truncated pixel data");
    ImageBuffer img(w, h);
    std::size_t k = offset;
    for (Rgb& p : img.pixels()) {
        p.r = static_cast<unsigned char>(bytes[k++]) / 255.0;
        p.g = static_cast<unsigned char>(bytes[k++]) / 255.0;
        p.b = static_cast<unsigned char>(bytes[k++]) / 255.0;
    }
    return img;
}

void write_ppm(const std::filesystem::path& path, const ImageBuffer& img)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw Error("cannot open " + path.string() + " for writing");
    const std::string bytes = encode_ppm(img);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace qdforge
