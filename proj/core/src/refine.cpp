#include "qdforge/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qdforge/decoder.hpp"

namespace qdforge {

std::vector<std::string> validate_refine_params(const RefineParams& params, const EngineConfig& cfg)
{
    std::vector<std::string> errors;
    if (params.positions_per_step == 0)
        errors.emplace_back("refine.positions_per_step ≥ 1");
    if (params.candidates_per_position == 0)
        errors.emplace_back("refine.candidates_per_position ≥ 1");
    if (params.positions_per_step > cfg.genome_length())
        errors.emplace_back("refine.positions_per_step ≤ genome length");
    if (params.candidates_per_position > cfg.codebook_size)
        errors.emplace_back("refine.candidates_per_position ≤ codebook_size");
    return errors;
}

PopulationMetrics measure_population(std::span<const Individual> pop, std::size_t k)
{
    PopulationMetrics m;
    double total = 0;
    for (const auto& ind : pop) {
        if (!ind.fitness)
            throw Error("measure_population: fitness cache missing");
        total += *ind.fitness;
    }
    m.mean_fitness = total / static_cast<double>(pop.size());
    m.mean_hsv_diversity = population_diversity(pop, DistanceMetricKind::Hsv, k);
    m.mean_vit_diversity = population_diversity(pop, DistanceMetricKind::Embedding, k);
    return m;
}

TileGeometry::TileGeometry(const EngineConfig& cfg) : tiles_(cfg.genome_length())
{
    const std::size_t w = cfg.image_width();
    const std::size_t h = cfg.image_height();
    const std::size_t bp = cfg.block_px;
    for (std::size_t t = 0; t < tiles_.size(); ++t) {
        const std::size_t tx0 = (t % cfg.grid_w) * bp, tx1 = tx0 + bp;
        const std::size_t ty0 = (t / cfg.grid_w) * bp, ty1 = ty0 + bp;
        for (std::size_t cy = 0; cy < kDownsampleSide; ++cy) {
            const std::size_t cy0 = cell_begin(h, cy), cy1 = cell_begin(h, cy + 1);
            const std::size_t oy0 = std::max(ty0, cy0), oy1 = std::min(ty1, cy1);
            if (oy0 >= oy1)
                continue;
            for (std::size_t cx = 0; cx < kDownsampleSide; ++cx) {
                const std::size_t cx0 = cell_begin(w, cx), cx1 = cell_begin(w, cx + 1);
                const std::size_t ox0 = std::max(tx0, cx0), ox1 = std::min(tx1, cx1);
                if (ox0 >= ox1)
                    continue;
                TileCellOverlap o;
                o.cell = cy * kDownsampleSide + cx;
                o.x0 = ox0;
                o.x1 = ox1;
                o.y0 = oy0;
                o.y1 = oy1;
                o.inv_count = 1.0 / static_cast<double>((cy1 - cy0) * (cx1 - cx0));
                tiles_[t].push_back(o);
            }
        }
    }
}

IncrementalScorer::IncrementalScorer(const SyntheticEvaluator& eval, const TileGeometry& geometry, ImageBuffer img)
    : eval_(&eval), geometry_(&geometry), img_(std::move(img)), cells_(downsample16(img_))
{
    recompute_totals();
}

void IncrementalScorer::recompute_totals()
{
    dot_ = dot(cells_, eval_->pixel_space_target());
    norm2_ = dot(cells_, cells_);
}

double IncrementalScorer::current() const
{
    if (norm2_ <= 0.0)
        throw Error("IncrementalScorer: zero-magnitude image embedding");
    return std::clamp(dot_ / std::sqrt(norm2_), -1.0, 1.0);
}

double IncrementalScorer::try_tile(std::size_t tile, const ImageBuffer& entry) const
{
    const auto target = eval_->pixel_space_target();
    const std::size_t bp = eval_->config().block_px;
    const std::size_t tx0 = (tile % eval_->config().grid_w) * bp;
    const std::size_t ty0 = (tile / eval_->config().grid_w) * bp;
    double dot = dot_;
    double norm2 = norm2_;
    for (const auto& o : geometry_->overlaps(tile)) {
        double dr = 0, dg = 0, db = 0;
        for (std::size_t y = o.y0; y < o.y1; ++y) {
            for (std::size_t x = o.x0; x < o.x1; ++x) {
                const Rgb now = img_.at(x, y);
                const Rgb next = entry.at(x - tx0, y - ty0);
                dr += next.r - now.r;
                dg += next.g - now.g;
                db += next.b - now.b;
            }
        }
        const std::size_t k = o.cell * 3;
        const double delta[3] = {dr * o.inv_count, dg * o.inv_count, db * o.inv_count};
        for (std::size_t c = 0; c < 3; ++c) {
            const double old_v = cells_[k + c];
            const double new_v = old_v + delta[c];
            dot += delta[c] * target[k + c];
            norm2 += new_v * new_v - old_v * old_v;
        }
    }
    if (norm2 <= 0.0)
        return -1.0;
    return std::clamp(dot / std::sqrt(norm2), -1.0, 1.0);
}

void IncrementalScorer::apply_tile(std::size_t tile, const ImageBuffer& entry)
{
    paint_tile(img_, tile, entry, eval_->config());
    const std::size_t w = img_.width();
    const std::size_t h = img_.height();
    for (const auto& o : geometry_->overlaps(tile)) {
        // Recompute the touched cells exactly from pixels.
        const std::size_t cy = o.cell / kDownsampleSide, cx = o.cell % kDownsampleSide;
        const std::size_t y0 = cell_begin(h, cy), y1 = cell_begin(h, cy + 1);
        const std::size_t x0 = cell_begin(w, cx), x1 = cell_begin(w, cx + 1);
        double r = 0, g = 0, b = 0;
        for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t x = x0; x < x1; ++x) {
                const Rgb p = img_.at(x, y);
                r += p.r;
                g += p.g;
                b += p.b;
            }
        }
        const double count = static_cast<double>((y1 - y0) * (x1 - x0));
        cells_[o.cell * 3] = r / count;
        cells_[o.cell * 3 + 1] = g / count;
        cells_[o.cell * 3 + 2] = b / count;
    }
    recompute_totals();
}

GreedyRefiner::GreedyRefiner(const SyntheticEvaluator& eval, RefineParams params)
    : eval_(&eval), params_(params), geometry_(eval.config())
{
    const auto errors = validate_refine_params(params_, eval.config());
    if (!errors.empty())
        throw Error("GreedyRefiner: " + errors.front());
}

Individual GreedyRefiner::step(const Individual& ind, RngStream& rng) const
{
    const EngineConfig& cfg = eval_->config();
    const Codebook& book = eval_->codebook();
    if (!ind.genome.valid_for(cfg))
        throw Error("GreedyRefiner: genome invalid for config");

    Individual out;
    out.genome = ind.genome;
    IncrementalScorer scorer(*eval_, geometry_,
                             ind.phenotype ? *ind.phenotype : decode(ind.genome, book, cfg));

    const std::uint64_t L = cfg.genome_length();
    const std::uint64_t V = cfg.codebook_size;
    const auto positions = rng.sample_distinct(L, params_.positions_per_step);
    for (const std::uint64_t pos : positions) {
        const auto incumbent = out.genome[pos];
        const auto others = rng.sample_distinct(V - 1, params_.candidates_per_position - 1);
        const double incumbent_score = scorer.current();
        double best_score = incumbent_score + kImprovementEpsilon;
        std::optional<Genome::value_type> best;
        for (const std::uint64_t raw : others) {
            const auto candidate = static_cast<Genome::value_type>(raw >= incumbent ? raw + 1 : raw);
            const double s = scorer.try_tile(pos, book.entry(candidate));
            if (s > best_score) {
                best_score = s;
                best = candidate;
            }
        }
        candidate_evals_ += params_.candidates_per_position;
        if (best) {
            scorer.apply_tile(pos, book.entry(*best));
            out.genome[pos] = *best;
        }
    }

    eval_->evaluate(out);
    return out;
}

std::vector<PopulationMetrics> refine_population(Population& pop, const Refiner& refiner, std::uint32_t n_iters,
                                                 std::span<RngStream> streams, const IterationCallback& on_iteration,
                                                 std::size_t diversity_k)
{
    if (streams.size() != pop.size())
        throw Error("refine_population: need exactly one stream per individual");
    std::vector<PopulationMetrics> rows;
    rows.reserve(n_iters);
    for (std::uint32_t it = 1; it <= n_iters; ++it) {
        for (std::size_t i = 0; i < pop.size(); ++i)
            pop[i] = refiner.step(pop[i], streams[i]);
        rows.push_back(measure_population(pop, diversity_k));
        if (on_iteration)
            on_iteration(it, pop);
    }
    return rows;
}

}  // namespace qdforge
