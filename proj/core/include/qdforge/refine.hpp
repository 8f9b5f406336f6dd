#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qdforge/oracle.hpp"
#include "qdforge/rng.hpp"
#include "qdforge/types.hpp"

namespace qdforge {

struct RefineParams {
    std::uint32_t positions_per_step = 8;
    std::uint32_t candidates_per_position = 16;

    bool operator==(const RefineParams&) const = default;
};

std::vector<std::string> validate_refine_params(const RefineParams& params, const EngineConfig& cfg);

/// Population-level measurements logged once per iteration or generation.
struct PopulationMetrics {
    double mean_fitness = 0;
    double mean_hsv_diversity = 0;
    double mean_vit_diversity = 0;
};

PopulationMetrics measure_population(std::span<const Individual> pop, std::size_t k = 15);

/// One refinement step per call. Implementations must be safe to call for
/// different individuals concurrently.
class Refiner {
public:
    virtual ~Refiner() = default;
    virtual Individual step(const Individual& ind, RngStream& rng) const = 0;
};

/// Overlap of one gene tile with one 16x16 downsample cell.
struct TileCellOverlap {
    std::size_t cell = 0;  // cy * 16 + cx
    std::size_t x0 = 0, x1 = 0, y0 = 0, y1 = 0;  // image pixel rectangle
    double inv_count = 0;  // 1 / pixels in the whole cell
};

/// Per-tile list of affected downsample cells for one engine geometry.
class TileGeometry {
public:
    explicit TileGeometry(const EngineConfig& cfg);
    std::span<const TileCellOverlap> overlaps(std::size_t tile) const { return tiles_.at(tile); }

private:
    std::vector<std::vector<TileCellOverlap>> tiles_;
};

/// Tracks the synthetic score of one image under single-tile edits without
/// re-running the full decode/embed/cosine pipeline.
class IncrementalScorer {
public:
    IncrementalScorer(const SyntheticEvaluator& eval, const TileGeometry& geometry, ImageBuffer img);

    double current() const;
    /// Score the image would have with `entry` painted into `tile`.
    double try_tile(std::size_t tile, const ImageBuffer& entry) const;
    void apply_tile(std::size_t tile, const ImageBuffer& entry);

    const ImageBuffer& image() const noexcept { return img_; }

private:
    void recompute_totals();

    const SyntheticEvaluator* eval_;
    const TileGeometry* geometry_;
    ImageBuffer img_;
    std::vector<double> cells_;
    double dot_ = 0;
    double norm2_ = 0;
};

/// Greedy discrete coordinate ascent: per step, sample distinct gene
/// positions; at each, score a random candidate set that always contains
/// the incumbent and keep the best. Fitness never decreases.
class GreedyRefiner final : public Refiner {
public:
    /// Strict improvement needed to replace the incumbent gene.
    static constexpr double kImprovementEpsilon = 1e-12;

    GreedyRefiner(const SyntheticEvaluator& eval, RefineParams params);

    Individual step(const Individual& ind, RngStream& rng) const override;

    const RefineParams& params() const noexcept { return params_; }
    /// Candidate scores computed so far (incumbent included), P*C per step.
    std::uint64_t candidate_evaluations() const noexcept { return candidate_evals_.load(); }

private:
    const SyntheticEvaluator* eval_;
    RefineParams params_;
    TileGeometry geometry_;
    mutable std::atomic<std::uint64_t> candidate_evals_{0};
};

using IterationCallback = std::function<void(std::uint32_t iteration, std::span<const Individual> pop)>;

/// Applies `n_iters` refinement steps to every individual, each drawing from
/// its own stream (`streams[i]` serves `pop[i]`). Returns one measurement
/// per iteration; `on_iteration` (if set) sees the population after each.
std::vector<PopulationMetrics> refine_population(Population& pop, const Refiner& refiner,
                                                 std::uint32_t n_iters, std::span<RngStream> streams,
                                                 const IterationCallback& on_iteration = {},
                                                 std::size_t diversity_k = 15);

}  // namespace qdforge
