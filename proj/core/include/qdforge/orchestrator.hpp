#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdforge/config.hpp"
#include "qdforge/evolve.hpp"
#include "qdforge/oracle.hpp"
#include "qdforge/refine.hpp"

namespace qdforge {

enum class VariantName { GanBaseline, NslcHsv, NslcVit };

struct VariantSpec {
    VariantName name = VariantName::GanBaseline;
    std::optional<DistanceMetricKind> metric;

    bool explores() const noexcept { return metric.has_value(); }
};

std::string_view to_string(VariantName name);
/// "GAN-BSL", "NSLC-HSV" or "NSLC-ViT"; throws Error listing the valid names.
VariantSpec parse_variant(std::string_view name);
VariantSpec make_variant(VariantName name);

enum class Phase { Refine, Explore };
std::string_view to_string(Phase phase);

/// One line of the metrics log. Refine rows carry generation 0; explore rows
/// carry the interrupt iteration and the generation number (1-based).
struct MetricsRow {
    std::string variant;
    std::string prompt_id;
    std::uint32_t refine_iteration = 0;
    Phase phase = Phase::Refine;
    std::uint32_t generation = 0;
    double mean_fitness = 0;
    double mean_hsv_diversity = 0;
    double mean_vit_diversity = 0;
    std::uint64_t wall_ms = 0;  // 0 unless log.wall_time is enabled

    bool operator==(const MetricsRow&) const = default;
};

/// JSON Lines codec; field order is fixed.
std::string to_jsonl(const MetricsRow& row);
std::string to_jsonl(std::span<const MetricsRow> rows);
MetricsRow parse_metrics_row(std::string_view line);
std::vector<MetricsRow> parse_metrics_log(std::string_view text);
std::vector<MetricsRow> read_metrics_log(const std::filesystem::path& path);

/// Bookkeeping of oracle work, checked against the schedule.
struct RunAudit {
    std::uint64_t full_evaluations = 0;
    std::uint64_t candidate_evaluations = 0;
    std::vector<std::size_t> archive_sizes;  // one per exploration cycle

    bool operator==(const RunAudit&) const = default;
};

/// Exact oracle budget implied by a schedule for the synthetic backend.
RunAudit expected_audit(const RunConfig& cfg, const VariantSpec& variant);

/// Optional hooks into a running experiment, mainly for instrumentation.
struct RunObserver {
    std::function<void(std::uint32_t iteration, std::span<const Individual> pop)> on_refine_iteration;
    std::function<void(std::uint32_t interrupt, std::span<const Individual> pop)> on_exploration_start;
    std::function<void(std::uint32_t interrupt, std::span<const Individual> pop, const NoveltyArchive& archive)>
        on_exploration_end;
};

struct RunOptions {
    /// When set, metrics.jsonl, checkpoint.json and images go here.
    std::optional<std::filesystem::path> out_dir;
    bool export_images = true;
    /// Stop (throwing RunInterrupted) after this many completed stages.
    std::optional<std::size_t> stop_after_stages;
    RunObserver observer;
};

/// Thrown when RunOptions::stop_after_stages is reached; the checkpoint on
/// disk is complete up to that point.
class RunInterrupted : public Error {
public:
    using Error::Error;
};

struct RunResult {
    Population population;
    std::vector<MetricsRow> rows;
    std::vector<std::filesystem::path> exported_images;
    RunAudit audit;
};

/// Codebook, embedder, evaluator and refiner for one (config, prompt).
class Backend {
public:
    static std::unique_ptr<Backend> create(const RunConfig& cfg, const PromptRef& prompt);
    virtual ~Backend() = default;
    virtual const Evaluator& evaluator() const = 0;
    virtual const Refiner& refiner() const = 0;
    virtual std::uint64_t candidate_evaluations() const = 0;
};

/// Initial population: one fractal-noise genome per slot from stream
/// "init/<slot>"; shared by every variant and prompt for a given seed.
Population initial_population(const RunConfig& cfg);

/// Runs the alternating refine/explore schedule for one variant and prompt.
RunResult run_variant(const VariantSpec& variant, const PromptRef& prompt, const RunConfig& cfg,
                      const RunOptions& options = {});

/// Continues a run from a checkpoint written by run_variant.
RunResult resume_variant(const std::filesystem::path& checkpoint, const RunOptions& options = {});

/// Run metadata and genomes stored in a checkpoint (caches are not filled).
struct CheckpointContents {
    RunConfig config;
    VariantSpec variant;
    PromptRef prompt;
    std::size_t stages_completed = 0;
    std::uint32_t iteration = 0;
    Population population;
};
CheckpointContents load_checkpoint(const std::filesystem::path& checkpoint);

/// Indices of the n members with the largest distance to their nearest
/// neighbour in `pop` (ties: lower index first).
std::vector<std::size_t> select_showcase(std::span<const Individual> pop, DistanceMetricKind kind, std::size_t n);

struct CycleGain {
    std::uint32_t interrupt = 0;
    double fitness_ratio = 0;  // after exploration / before
    double hsv_ratio = 0;
    double vit_ratio = 0;
};

struct RunComparison {
    std::string variant;
    std::string prompt_id;
    std::string baseline_variant;
    MetricsRow final_row;
    double fitness_delta = 0, hsv_delta = 0, vit_delta = 0;           // absolute, vs baseline
    double fitness_rel_delta = 0, hsv_rel_delta = 0, vit_rel_delta = 0;  // relative, vs baseline
    std::vector<CycleGain> cycles;
};

struct VariantAverage {
    std::string variant;
    std::size_t prompts = 0;
    std::size_t cycles = 0;
    double fitness_rel_delta = 0, hsv_rel_delta = 0, vit_rel_delta = 0;
    double mean_cycle_fitness_ratio = 0, mean_cycle_hsv_ratio = 0, mean_cycle_vit_ratio = 0;
};

struct ComparisonSummary {
    std::vector<RunComparison> runs;
    std::vector<VariantAverage> averages;
};

/// Compares logs (one per variant/prompt) against the GAN-BSL log of the
/// same prompt, or the first log of that prompt when there is none. Throws
/// Error when logs disagree on the schedule.
ComparisonSummary compare_runs(std::span<const std::vector<MetricsRow>> logs);
std::string format_comparison(const ComparisonSummary& summary);

struct PlotPoint {
    std::uint32_t iteration = 0;
    double value = 0;
};

/// Per-metric series ("fitness", "hsv_diversity", "vit_diversity") of one
/// log; each exploration cycle contributes its terminal value at the
/// interrupt iteration.
std::map<std::string, std::vector<PlotPoint>> plot_series(std::span<const MetricsRow> rows);

/// Writes `{variant}_{prompt}_{metric}.csv` files; returns their paths.
std::vector<std::filesystem::path> export_plot_csv(std::span<const MetricsRow> rows,
                                                   const std::filesystem::path& out_dir);

/// Number with 17 significant digits.
std::string format_double(double v);

}  // namespace qdforge
