#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qdforge/oracle.hpp"
#include "qdforge/rng.hpp"
#include "qdforge/types.hpp"

namespace qdforge {

struct NoveltyParams {
    std::uint32_t k = 15;
    std::uint32_t e = 3;
    std::uint32_t generations = 50;
    double mutation_rate = 0.05;
    DistanceMetricKind metric = DistanceMetricKind::Hsv;

    bool operator==(const NoveltyParams&) const = default;
};

std::vector<std::string> validate_novelty_params(const NoveltyParams& params);

/// Reference points for novelty: snapshots of past individuals (caches only
/// matter). Never selected as survivors.
struct NoveltyArchive {
    std::vector<Individual> members;

    std::size_t size() const noexcept { return members.size(); }
    void clear() { members.clear(); }
};

struct ObjectivePair {
    double novelty = 0;
    double local_competition = 0;

    bool operator==(const ObjectivePair&) const = default;
};

/// Replaces round(rate * L) distinct genes with uniform draws from [0, V-1].
Genome mutate(const Genome& g, double rate, const EngineConfig& cfg, RngStream& rng);

struct Neighbor {
    /// Index into pop for values < pop.size(), else archive index + pop.size().
    std::size_t candidate = 0;
    double distance = 0;
    double fitness = 0;
};

/// The k nearest of (pop \ {pop[self]}) ∪ archive, ordered by (distance,
/// candidate). Returns all candidates when fewer than k exist. Throws Error
/// when there are none.
std::vector<Neighbor> nearest_neighbors(std::size_t self, std::span<const Individual> pop,
                                        const NoveltyArchive& archive, DistanceMetricKind metric, std::size_t k);

/// Mean neighbour distance and fraction of neighbours strictly outperformed.
ObjectivePair objectives_from_neighbors(double self_fitness, std::span<const Neighbor> neighbors);

double novelty_score(std::size_t self, std::span<const Individual> pop, const NoveltyArchive& archive,
                     const NoveltyParams& params);
double local_competition_score(std::size_t self, std::span<const Individual> pop, const NoveltyArchive& archive,
                               const NoveltyParams& params);

/// Objectives for every member of `pop`; both objectives of member i come
/// from a single neighbour set, optionally returned through `neighbor_sets`.
std::vector<ObjectivePair> compute_objectives(std::span<const Individual> pop, const NoveltyArchive& archive,
                                              const NoveltyParams& params,
                                              std::vector<std::vector<Neighbor>>* neighbor_sets = nullptr);

/// True when a is at least as good as b in both (maximized) objectives and
/// strictly better in one.
bool dominates(const ObjectivePair& a, const ObjectivePair& b);

/// Fast non-dominated sort. Fronts list input indices in ascending order.
std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const ObjectivePair> points);

/// Keeps `n_keep` points of one front. Objectives are min-max normalized
/// over the front; the point with the smallest crowding value (sum over
/// dimensions of the normalized gap between its sorted neighbours,
/// extremes infinite) is dropped repeatedly, recomputing crowding on the
/// remaining points. Ties drop the higher index. A dimension with zero
/// range contributes nothing. Returns ascending indices into `front`.
std::vector<std::size_t> sparsity_truncate(std::span<const ObjectivePair> front, std::size_t n_keep);

/// NSGA-II survivor selection of `n` points: whole fronts while they fit,
/// then a sparsity truncation of the first front that does not.
std::vector<std::size_t> nsga2_select(std::span<const ObjectivePair> points, std::size_t n);

struct GenerationReport {
    std::vector<ObjectivePair> objectives;  // for the pooled parents + offspring
    std::vector<std::size_t> survivors;     // pool indices, ascending
    std::vector<std::size_t> archived;      // pool indices appended to the archive
};

/// One (mu + lambda) NSLC generation: one mutated child per parent, pooled
/// with the parents, scored against pool ∪ archive and truncated back to
/// |pop| by NSGA-II. The e most novel pool members join the archive.
GenerationReport nslc_generation(Population& pop, NoveltyArchive& archive, const NoveltyParams& params,
                                 const Evaluator& evaluator, const EngineConfig& cfg, RngStream& rng);

using GenerationCallback = std::function<void(std::uint32_t generation, std::span<const Individual> pop,
                                              const NoveltyArchive& archive)>;

/// A full exploration cycle with a fresh archive. Returns the final archive.
NoveltyArchive run_exploration(Population& pop, const NoveltyParams& params, const Evaluator& evaluator,
                               const EngineConfig& cfg, RngStream& rng, const GenerationCallback& on_generation = {});

}  // namespace qdforge
