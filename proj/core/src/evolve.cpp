#include "qdforge/evolve.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "qdforge/imagemetrics.hpp"

namespace qdforge {

std::vector<std::string> validate_novelty_params(const NoveltyParams& params)
{
    std::vector<std::string> errors;
    if (params.k < 1)
        errors.emplace_back("nslc.k ≥ 1");
    if (!(params.mutation_rate > 0.0 && params.mutation_rate <= 1.0))
        errors.emplace_back("0 < nslc.mutation_rate ≤ 1");
    return errors;
}

Genome mutate(const Genome& g, double rate, const EngineConfig& cfg, RngStream& rng)
{
    if (!(rate > 0.0 && rate <= 1.0))
        throw Error("mutate: rate must be in (0, 1]");
    if (!g.valid_for(cfg))
        throw Error("mutate: genome invalid for config");
    const std::uint64_t L = g.size();
    const auto count = std::min<std::uint64_t>(L, static_cast<std::uint64_t>(std::llround(rate * static_cast<double>(L))));
    Genome out = g;
    for (const std::uint64_t pos : rng.sample_distinct(L, count))
        out[pos] = static_cast<Genome::value_type>(rng.uniform_index(cfg.codebook_size));
    return out;
}

std::vector<Neighbor> nearest_neighbors(std::size_t self, std::span<const Individual> pop,
                                        const NoveltyArchive& archive, DistanceMetricKind metric, std::size_t k)
{
    if (self >= pop.size())
        throw Error("nearest_neighbors: index out of range");
    std::vector<Neighbor> all;
    all.reserve(pop.size() + archive.size());
    auto fitness_of = [](const Individual& ind) {
        if (!ind.fitness)
            throw Error("nearest_neighbors: fitness cache missing");
        return *ind.fitness;
    };
    for (std::size_t j = 0; j < pop.size(); ++j)
        if (j != self)
            all.push_back({j, individual_distance(pop[self], pop[j], metric), fitness_of(pop[j])});
    for (std::size_t a = 0; a < archive.size(); ++a)
        all.push_back({pop.size() + a, individual_distance(pop[self], archive.members[a], metric),
                       fitness_of(archive.members[a])});
    if (all.empty())
        throw Error("nearest_neighbors: empty neighbour set");

    const std::size_t take = std::min(k, all.size());
    auto closer = [](const Neighbor& a, const Neighbor& b) {
        return a.distance < b.distance || (a.distance == b.distance && a.candidate < b.candidate);
    };
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), closer);
    all.resize(take);
    return all;
}

ObjectivePair objectives_from_neighbors(double self_fitness, std::span<const Neighbor> neighbors)
{
    if (neighbors.empty())
        throw Error("objectives_from_neighbors: empty neighbour set");
    double sum = 0;
    std::size_t wins = 0;
    for (const auto& n : neighbors) {
        sum += n.distance;
        if (self_fitness > n.fitness)
            ++wins;
    }
    const auto count = static_cast<double>(neighbors.size());
    return {sum / count, static_cast<double>(wins) / count};
}

double novelty_score(std::size_t self, std::span<const Individual> pop, const NoveltyArchive& archive,
                     const NoveltyParams& params)
{
    const auto nn = nearest_neighbors(self, pop, archive, params.metric, params.k);
    return objectives_from_neighbors(pop[self].fitness.value_or(0.0), nn).novelty;
}

double local_competition_score(std::size_t self, std::span<const Individual> pop, const NoveltyArchive& archive,
                               const NoveltyParams& params)
{
    if (!pop[self].fitness)
        throw Error("local_competition_score: fitness cache missing");
    const auto nn = nearest_neighbors(self, pop, archive, params.metric, params.k);
    return objectives_from_neighbors(*pop[self].fitness, nn).local_competition;
}

std::vector<ObjectivePair> compute_objectives(std::span<const Individual> pop, const NoveltyArchive& archive,
                                              const NoveltyParams& params,
                                              std::vector<std::vector<Neighbor>>* neighbor_sets)
{
    std::vector<ObjectivePair> out;
    out.reserve(pop.size());
    if (neighbor_sets)
        neighbor_sets->assign(pop.size(), {});
    for (std::size_t i = 0; i < pop.size(); ++i) {
        if (!pop[i].fitness)
            throw Error("compute_objectives: fitness cache missing");
        auto nn = nearest_neighbors(i, pop, archive, params.metric, params.k);
        out.push_back(objectives_from_neighbors(*pop[i].fitness, nn));
        if (neighbor_sets)
            (*neighbor_sets)[i] = std::move(nn);
    }
    return out;
}

bool dominates(const ObjectivePair& a, const ObjectivePair& b)
{
    return a.novelty >= b.novelty && a.local_competition >= b.local_competition &&
           (a.novelty > b.novelty || a.local_competition > b.local_competition);
}

std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const ObjectivePair> points)
{
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated_by(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;

    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q)
                continue;
            if (dominates(points[p], points[q]))
                dominated_by[p].push_back(q);
            else if (dominates(points[q], points[p]))
                ++domination_count[p];
        }
        if (domination_count[p] == 0)
            current.push_back(p);
    }

    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (const std::size_t p : current) {
            for (const std::size_t q : dominated_by[p]) {
                if (--domination_count[q] == 0)
                    next.push_back(q);
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

std::vector<std::size_t> sparsity_truncate(std::span<const ObjectivePair> front, std::size_t n_keep)
{
    const std::size_t n = front.size();
    if (n_keep > n)
        throw Error("sparsity_truncate: n_keep exceeds front size");

    constexpr std::size_t kDims = 2;
    auto value = [&](std::size_t i, std::size_t d) {
        return d == 0 ? front[i].novelty : front[i].local_competition;
    };
    std::array<double, kDims> range{};
    for (std::size_t d = 0; d < kDims; ++d) {
        double mn = std::numeric_limits<double>::infinity(), mx = -mn;
        for (std::size_t i = 0; i < n; ++i) {
            mn = std::min(mn, value(i, d));
            mx = std::max(mx, value(i, d));
        }
        range[d] = n > 0 ? mx - mn : 0.0;
    }

    std::vector<std::size_t> active(n);
    std::iota(active.begin(), active.end(), std::size_t{0});
    std::vector<double> crowding(n);
    std::vector<std::size_t> order;

    while (active.size() > n_keep) {
        for (const std::size_t i : active)
            crowding[i] = 0.0;
        for (std::size_t d = 0; d < kDims; ++d) {
            if (range[d] <= 0.0)
                continue;
            order = active;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const double va = value(a, d), vb = value(b, d);
                return va < vb || (va == vb && a < b);
            });
            crowding[order.front()] = std::numeric_limits<double>::infinity();
            crowding[order.back()] = std::numeric_limits<double>::infinity();
            for (std::size_t r = 1; r + 1 < order.size(); ++r) {
                const double gap = (value(order[r + 1], d) - value(order[r - 1], d)) / range[d];
                crowding[order[r]] += gap;
            }
        }
        // Drop the least crowded point; among ties, the highest index.
        std::size_t victim = 0;
        for (std::size_t a = 1; a < active.size(); ++a) {
            if (crowding[active[a]] <= crowding[active[victim]])
                victim = a;
        }
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(victim));
    }
    return active;
}

std::vector<std::size_t> nsga2_select(std::span<const ObjectivePair> points, std::size_t n)
{
    if (n > points.size())
        throw Error("nsga2_select: cannot select more points than available");
    std::vector<std::size_t> selected;
    selected.reserve(n);
    for (const auto& front : nondominated_sort(points)) {
        if (selected.size() == n)
            break;
        if (selected.size() + front.size() <= n) {
            selected.insert(selected.end(), front.begin(), front.end());
            continue;
        }
        std::vector<ObjectivePair> values;
        values.reserve(front.size());
        for (const std::size_t i : front)
            values.push_back(points[i]);
        for (const std::size_t kept : sparsity_truncate(values, n - selected.size()))
            selected.push_back(front[kept]);
        break;
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

GenerationReport nslc_generation(Population& pop, NoveltyArchive& archive, const NoveltyParams& params,
                                 const Evaluator& evaluator, const EngineConfig& cfg, RngStream& rng)
{
    if (pop.size() < 2)
        throw Error("nslc_generation: population must have at least two members");

    Population offspring;
    offspring.reserve(pop.size());
    for (const auto& parent : pop) {
        Individual child;
        child.genome = mutate(parent.genome, params.mutation_rate, cfg, rng);
        offspring.push_back(std::move(child));
    }
    evaluator.evaluate_all(offspring);

    Population pool;
    pool.reserve(pop.size() * 2);
    for (auto& p : pop) {
        if (!p.evaluated())
            evaluator.evaluate(p);
        pool.push_back(std::move(p));
    }
    for (auto& c : offspring)
        pool.push_back(std::move(c));

    GenerationReport report;
    report.objectives = compute_objectives(pool, archive, params);
    report.survivors = nsga2_select(report.objectives, pop.size());

    std::vector<std::size_t> by_novelty(pool.size());
    std::iota(by_novelty.begin(), by_novelty.end(), std::size_t{0});
    std::stable_sort(by_novelty.begin(), by_novelty.end(), [&](std::size_t a, std::size_t b) {
        return report.objectives[a].novelty > report.objectives[b].novelty;
    });
    const std::size_t add = std::min<std::size_t>(params.e, pool.size());
    report.archived.assign(by_novelty.begin(), by_novelty.begin() + static_cast<std::ptrdiff_t>(add));
    for (const std::size_t i : report.archived) {
        Individual snapshot;
        snapshot.genome = pool[i].genome;
        snapshot.fitness = pool[i].fitness;
        snapshot.hsv = pool[i].hsv;
        snapshot.embedding = pool[i].embedding;
        archive.members.push_back(std::move(snapshot));
    }

    Population next;
    next.reserve(report.survivors.size());
    for (const std::size_t i : report.survivors)
        next.push_back(std::move(pool[i]));
    pop = std::move(next);
    return report;
}

NoveltyArchive run_exploration(Population& pop, const NoveltyParams& params, const Evaluator& evaluator,
                               const EngineConfig& cfg, RngStream& rng, const GenerationCallback& on_generation)
{
    const auto errors = validate_novelty_params(params);
    if (!errors.empty())
        throw Error("run_exploration: " + errors.front());
    NoveltyArchive archive;
    for (std::uint32_t g = 1; g <= params.generations; ++g) {
        nslc_generation(pop, archive, params, evaluator, cfg, rng);
        if (on_generation)
            on_generation(g, pop, archive);
    }
    return archive;
}

}  // namespace qdforge
