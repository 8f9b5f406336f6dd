#include "qdforge/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "qdforge/decoder.hpp"
#include "qdforge/remote.hpp"

namespace qdforge {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Variants and log rows

std::string_view to_string(VariantName name)
{
    switch (name) {
    case VariantName::GanBaseline: return "GAN-BSL";
    case VariantName::NslcHsv: return "NSLC-HSV";
    case VariantName::NslcVit: return "NSLC-ViT";
    }
    return "?";
}

VariantSpec make_variant(VariantName name)
{
    switch (name) {
    case VariantName::GanBaseline: return {name, std::nullopt};
    case VariantName::NslcHsv: return {name, DistanceMetricKind::Hsv};
    case VariantName::NslcVit: return {name, DistanceMetricKind::Embedding};
    }
    throw Error("unknown variant");
}

VariantSpec parse_variant(std::string_view name)
{
    for (const auto v : {VariantName::GanBaseline, VariantName::NslcHsv, VariantName::NslcVit}) {
        if (to_string(v) == name)
            return make_variant(v);
    }
    throw Error("unknown variant '" + std::string(name) + "'; valid names: GAN-BSL, NSLC-HSV, NSLC-ViT");
}

std::string_view to_string(Phase phase)
{
    return phase == Phase::Refine ? "refine" : "explore";
}

std::string to_jsonl(const MetricsRow& row)
{
    ordered_json j;
    j["variant"] = row.variant;
    j["prompt_id"] = row.prompt_id;
    j["refine_iteration"] = row.refine_iteration;
    j["phase"] = to_string(row.phase);
    j["generation"] = row.generation;
    j["mean_fitness"] = row.mean_fitness;
    j["mean_hsv_diversity"] = row.mean_hsv_diversity;
    j["mean_vit_diversity"] = row.mean_vit_diversity;
    j["wall_ms"] = row.wall_ms;
    return j.dump();
}

std::string to_jsonl(std::span<const MetricsRow> rows)
{
    std::string out;
    for (const auto& r : rows) {
        out += to_jsonl(r);
        out += '\n';
    }
    return out;
}

MetricsRow parse_metrics_row(std::string_view line)
{
    json j;
    try {
        j = json::parse(line);
        MetricsRow r;
        r.variant = j.at("variant").get<std::string>();
        r.prompt_id = j.at("prompt_id").get<std::string>();
        r.refine_iteration = j.at("refine_iteration").get<std::uint32_t>();
        const auto phase = j.at("phase").get<std::string>();
        if (phase == "refine")
            r.phase = Phase::Refine;
        else if (phase == "explore")
            r.phase = Phase::Explore;
        else
            throw Error("unknown phase '" + phase + "'");
        r.generation = j.at("generation").get<std::uint32_t>();
        r.mean_fitness = j.at("mean_fitness").get<double>();
        r.mean_hsv_diversity = j.at("mean_hsv_diversity").get<double>();
        r.mean_vit_diversity = j.at("mean_vit_diversity").get<double>();
        r.wall_ms = j.at("wall_ms").get<std::uint64_t>();
        return r;
    } catch (const json::exception& e) {
        throw Error(std::string("corrupt metrics row: ") + e.what());
    }
}

std::vector<MetricsRow> parse_metrics_log(std::string_view text)
{
    std::vector<MetricsRow> rows;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        const auto line = text.substr(pos, end - pos);
        if (line.find_first_not_of(" \t\r") != std::string_view::npos)
            rows.push_back(parse_metrics_row(line));
        pos = end + 1;
    }
    return rows;
}

std::vector<MetricsRow> read_metrics_log(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read metrics log " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    auto rows = parse_metrics_log(ss.str());
    if (rows.empty())
        throw Error("metrics log " + path.string() + " is empty");
    return rows;
}

// ---------------------------------------------------------------------------
// Backends

namespace {

class SyntheticBackend final : public Backend {
public:
    SyntheticBackend(const RunConfig& cfg, const PromptRef& prompt)
    {
        RngStream book_rng = derive_stream(cfg.engine.master_seed, "codebook");
        RngStream embed_rng = derive_stream(cfg.engine.master_seed, "embedding");
        auto book = std::make_shared<const Codebook>(generate_codebook(cfg.engine, book_rng));
        auto embedder = std::make_shared<const SyntheticEmbedder>(embed_rng);
        evaluator_ = std::make_unique<SyntheticEvaluator>(cfg.engine, std::move(book), std::move(embedder),
                                                          embed_prompt_synthetic(prompt.text));
        refiner_ = std::make_unique<GreedyRefiner>(*evaluator_, cfg.refine);
    }

    const Evaluator& evaluator() const override { return *evaluator_; }
    const Refiner& refiner() const override { return *refiner_; }
    std::uint64_t candidate_evaluations() const override { return refiner_->candidate_evaluations(); }

private:
    std::unique_ptr<SyntheticEvaluator> evaluator_;
    std::unique_ptr<GreedyRefiner> refiner_;
};

class RemoteBackend final : public Backend {
public:
    RemoteBackend(const RunConfig& cfg, const PromptRef& prompt)
    {
        auto client = std::make_shared<const SidecarClient>(cfg.oracle.sidecar_url, cfg.oracle.timeout_s,
                                                            cfg.oracle.model);
        client->health();
        RngStream book_rng = derive_stream(cfg.engine.master_seed, "codebook");
        auto book = std::make_shared<const Codebook>(generate_codebook(cfg.engine, book_rng));
        evaluator_ = std::make_unique<RemoteEvaluator>(cfg.engine, std::move(book), std::move(client), prompt.text,
                                                       cfg.oracle.max_in_flight, cfg.oracle.normalize);
        refiner_ = std::make_unique<RemoteRefiner>(*evaluator_);
    }

    const Evaluator& evaluator() const override { return *evaluator_; }
    const Refiner& refiner() const override { return *refiner_; }
    std::uint64_t candidate_evaluations() const override { return 0; }

private:
    std::unique_ptr<RemoteEvaluator> evaluator_;
    std::unique_ptr<RemoteRefiner> refiner_;
};

}  // namespace

std::unique_ptr<Backend> Backend::create(const RunConfig& cfg, const PromptRef& prompt)
{
    if (cfg.oracle.backend == "remote")
        return std::make_unique<RemoteBackend>(cfg, prompt);
    if (cfg.oracle.backend == "synthetic")
        return std::make_unique<SyntheticBackend>(cfg, prompt);
    throw Error("unknown oracle.backend '" + cfg.oracle.backend + "'");
}

Population initial_population(const RunConfig& cfg)
{
    Population pop(cfg.engine.population_size);
    for (std::size_t i = 0; i < pop.size(); ++i) {
        RngStream rng = derive_stream(cfg.engine.master_seed, "init/" + std::to_string(i));
        pop[i].genome = init_genome_fractal(cfg.engine, rng, cfg.noise);
    }
    return pop;
}

// ---------------------------------------------------------------------------
// Schedule execution

namespace {

struct Stage {
    bool explore = false;
    std::uint32_t from = 0, to = 0;  // refine iterations (from, to]
    std::size_t cycle = 0;           // exploration cycle index
};

std::vector<Stage> build_stages(const VariantSpec& variant, const CycleSchedule& schedule)
{
    std::vector<Stage> stages;
    std::uint32_t prev = 0;
    if (variant.explores()) {
        for (std::size_t c = 0; c < schedule.interrupt_at.size(); ++c) {
            const std::uint32_t t = schedule.interrupt_at[c];
            stages.push_back({false, prev, t, 0});
            stages.push_back({true, t, t, c});
            prev = t;
        }
    }
    stages.push_back({false, prev, schedule.total_refine_iters, 0});
    return stages;
}

std::vector<RngStream> refine_streams(const RunConfig& cfg)
{
    std::vector<RngStream> streams;
    streams.reserve(cfg.engine.population_size);
    for (std::size_t i = 0; i < cfg.engine.population_size; ++i)
        streams.push_back(derive_stream(cfg.engine.master_seed, "refine/" + std::to_string(i)));
    return streams;
}

struct RunState {
    RunConfig cfg;
    VariantSpec variant;
    PromptRef prompt;
    Population pop;
    std::vector<RngStream> streams;
    std::vector<MetricsRow> rows;
    RunAudit audit;
    std::size_t stages_completed = 0;
    std::uint32_t iteration = 0;
};

std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes)
{
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            throw Error("cannot write " + tmp);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    std::filesystem::rename(tmp, path);
}

void write_checkpoint(const std::filesystem::path& path, const RunState& s)
{
    json j;
    j["format"] = "qdforge-checkpoint-1";
    j["config_hash"] = hex64(config_hash(s.cfg));
    j["config"] = json::parse(serialize_config(s.cfg));
    j["variant"] = std::string(to_string(s.variant.name));
    j["prompt_id"] = s.prompt.id;
    j["prompt_text"] = s.prompt.text;
    j["stages_completed"] = s.stages_completed;
    j["iteration"] = s.iteration;
    json pop = json::array();
    for (const auto& ind : s.pop) {
        json genes = json::array();
        for (const auto g : ind.genome.indices())
            genes.push_back(g);
        pop.push_back(std::move(genes));
    }
    j["population"] = std::move(pop);
    json rng = json::array();
    for (const auto& st : s.streams)
        rng.push_back({{"label", st.label()}, {"seed", st.seed()}, {"draws", st.draws()}});
    j["rng"] = std::move(rng);
    json rows = json::array();
    for (const auto& r : s.rows)
        rows.push_back(json::parse(to_jsonl(r)));
    j["rows"] = std::move(rows);
    j["audit"] = {{"full_evaluations", s.audit.full_evaluations},
                  {"candidate_evaluations", s.audit.candidate_evaluations},
                  {"archive_sizes", s.audit.archive_sizes}};
    write_file_atomic(path, j.dump() + "\n");
}

json read_checkpoint_json(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error("cannot read checkpoint " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw Error(std::string("corrupt checkpoint: ") + e.what());
    }
    if (j.value("format", "") != "qdforge-checkpoint-1")
        throw Error("not a qdforge checkpoint: " + path.string());
    return j;
}

RunState state_from_checkpoint(const json& j)
{
    RunState s;
    try {
        s.cfg = parse_config(j.at("config").dump());
        if (hex64(config_hash(s.cfg)) != j.at("config_hash").get<std::string>())
            throw Error("checkpoint config hash mismatch");
        s.variant = parse_variant(j.at("variant").get<std::string>());
        s.prompt = {j.at("prompt_id").get<std::string>(), j.at("prompt_text").get<std::string>()};
        s.stages_completed = j.at("stages_completed").get<std::size_t>();
        s.iteration = j.at("iteration").get<std::uint32_t>();
        for (const auto& genes : j.at("population")) {
            Individual ind;
            ind.genome = Genome(genes.get<std::vector<Genome::value_type>>());
            if (!ind.genome.valid_for(s.cfg.engine))
                throw Error("checkpoint genome invalid for its config");
            s.pop.push_back(std::move(ind));
        }
        for (const auto& st : j.at("rng"))
            s.streams.push_back(RngStream::restore(st.at("seed").get<std::uint64_t>(),
                                                   st.at("label").get<std::string>(),
                                                   st.at("draws").get<std::uint64_t>()));
        for (const auto& r : j.at("rows"))
            s.rows.push_back(parse_metrics_row(r.dump()));
        const auto& a = j.at("audit");
        s.audit.full_evaluations = a.at("full_evaluations").get<std::uint64_t>();
        s.audit.candidate_evaluations = a.at("candidate_evaluations").get<std::uint64_t>();
        s.audit.archive_sizes = a.at("archive_sizes").get<std::vector<std::size_t>>();
    } catch (const json::exception& e) {
        throw Error(std::string("corrupt checkpoint: ") + e.what());
    }
    return s;
}

std::vector<std::size_t> rank_by_fitness(std::span<const Individual> pop)
{
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return *pop[a].fitness > *pop[b].fitness; });
    return order;
}

void export_population(const RunState& s, const std::filesystem::path& dir, std::uint32_t iteration,
                       std::vector<std::filesystem::path>& exported)
{
    const auto order = rank_by_fitness(s.pop);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const auto& ind = s.pop[order[rank]];
        const auto path = dir / (std::string(to_string(s.variant.name)) + "_" + s.prompt.id + "_" +
                                 std::to_string(iteration) + "_" + std::to_string(rank) + ".ppm");
        write_ppm(path, *ind.phenotype);
        exported.push_back(path);
    }
}

RunResult execute(RunState s, const RunOptions& options)
{
    const auto started = std::chrono::steady_clock::now();
    const auto backend = Backend::create(s.cfg, s.prompt);
    const Evaluator& evaluator = backend->evaluator();

    // Cache rebuild on start or resume is not part of the audited budget.
    const bool fresh = s.stages_completed == 0 && s.rows.empty();
    evaluator.evaluate_all(s.pop);
    if (fresh)
        s.audit.full_evaluations += s.pop.size();
    const std::uint64_t evals_base = evaluator.evaluations();
    const std::uint64_t cands_base = backend->candidate_evaluations();
    const RunAudit audit_base = s.audit;

    auto sync_audit = [&] {
        s.audit.full_evaluations = audit_base.full_evaluations + (evaluator.evaluations() - evals_base);
        s.audit.candidate_evaluations =
            audit_base.candidate_evaluations + (backend->candidate_evaluations() - cands_base);
    };
    auto wall_ms = [&]() -> std::uint64_t {
        if (!s.cfg.log_wall_time)
            return 0;
        return static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started)
                .count());
    };
    auto push_row = [&](std::uint32_t iteration, Phase phase, std::uint32_t generation, const PopulationMetrics& m) {
        s.rows.push_back({std::string(to_string(s.variant.name)), s.prompt.id, iteration, phase, generation,
                          m.mean_fitness, m.mean_hsv_diversity, m.mean_vit_diversity, wall_ms()});
    };

    const auto stages = build_stages(s.variant, s.cfg.schedule);
    if (s.stages_completed > stages.size())
        throw Error("checkpoint stage index beyond schedule");

    std::optional<std::filesystem::path> dir = options.out_dir;
    if (dir)
        std::filesystem::create_directories(*dir);

    RunResult result;
    for (std::size_t si = s.stages_completed; si < stages.size(); ++si) {
        const Stage& stage = stages[si];
        if (!stage.explore) {
            const std::uint32_t base = stage.from;
            refine_population(
                s.pop, backend->refiner(), stage.to - stage.from, s.streams,
                [&](std::uint32_t it, std::span<const Individual> pop) {
                    push_row(base + it, Phase::Refine, 0, measure_population(pop, s.cfg.diversity_k));
                    if (options.observer.on_refine_iteration)
                        options.observer.on_refine_iteration(base + it, pop);
                },
                s.cfg.diversity_k);
            s.iteration = stage.to;
        } else {
            if (dir && options.export_images)
                export_population(s, *dir, stage.from, result.exported_images);
            if (options.observer.on_exploration_start)
                options.observer.on_exploration_start(stage.from, s.pop);

            NoveltyParams params = s.cfg.nslc;
            params.metric = *s.variant.metric;
            params.generations = s.cfg.schedule.nslc_generations;
            RngStream mutation = derive_stream(s.cfg.engine.master_seed, "mutation/" + std::to_string(stage.cycle));
            const NoveltyArchive archive = run_exploration(
                s.pop, params, evaluator, s.cfg.engine, mutation,
                [&](std::uint32_t g, std::span<const Individual> pop, const NoveltyArchive&) {
                    push_row(stage.from, Phase::Explore, g, measure_population(pop, s.cfg.diversity_k));
                });
            s.audit.archive_sizes.push_back(archive.size());
            if (options.observer.on_exploration_end)
                options.observer.on_exploration_end(stage.from, s.pop, archive);
        }
        s.stages_completed = si + 1;
        sync_audit();
        if (dir)
            write_checkpoint(*dir / "checkpoint.json", s);
        if (options.stop_after_stages && s.stages_completed == *options.stop_after_stages &&
            s.stages_completed < stages.size())
            throw RunInterrupted("run stopped after " + std::to_string(s.stages_completed) + " stages");
    }

    sync_audit();
    if (dir) {
        write_file_atomic(*dir / "metrics.jsonl", to_jsonl(s.rows));
        if (options.export_images)
            export_population(s, *dir, s.cfg.schedule.total_refine_iters, result.exported_images);
    }
    result.population = std::move(s.pop);
    result.rows = std::move(s.rows);
    result.audit = std::move(s.audit);
    return result;
}

}  // namespace

RunAudit expected_audit(const RunConfig& cfg, const VariantSpec& variant)
{
    const std::uint64_t n = cfg.engine.population_size;
    const std::uint64_t iters = cfg.schedule.total_refine_iters;
    RunAudit a;
    a.full_evaluations = n + n * iters;
    a.candidate_evaluations = n * iters * cfg.refine.positions_per_step * cfg.refine.candidates_per_position;
    if (variant.explores()) {
        const std::uint64_t cycles = cfg.schedule.interrupt_at.size();
        a.full_evaluations += cycles * cfg.schedule.nslc_generations * n;
        a.archive_sizes.assign(cycles, std::size_t{cfg.nslc.e} * cfg.schedule.nslc_generations);
    }
    return a;
}

RunResult run_variant(const VariantSpec& variant, const PromptRef& prompt, const RunConfig& cfg,
                      const RunOptions& options)
{
    const auto errors = validate_run_config(cfg);
    if (!errors.empty()) {
        std::string msg = "invalid config:";
        for (const auto& e : errors)
            msg += " [" + e + "]";
        throw Error(msg);
    }
    RunState s;
    s.cfg = cfg;
    s.cfg.nslc.generations = cfg.schedule.nslc_generations;
    s.variant = variant;
    s.prompt = prompt;
    s.pop = initial_population(cfg);
    s.streams = refine_streams(cfg);
    return execute(std::move(s), options);
}

RunResult resume_variant(const std::filesystem::path& checkpoint, const RunOptions& options)
{
    RunState s = state_from_checkpoint(read_checkpoint_json(checkpoint));
    RunOptions opts = options;
    if (!opts.out_dir)
        opts.out_dir = checkpoint.parent_path().empty() ? std::filesystem::path(".") : checkpoint.parent_path();
    return execute(std::move(s), opts);
}

CheckpointContents load_checkpoint(const std::filesystem::path& checkpoint)
{
    RunState s = state_from_checkpoint(read_checkpoint_json(checkpoint));
    CheckpointContents c;
    c.config = std::move(s.cfg);
    c.variant = s.variant;
    c.prompt = std::move(s.prompt);
    c.stages_completed = s.stages_completed;
    c.iteration = s.iteration;
    c.population = std::move(s.pop);
    return c;
}

// ---------------------------------------------------------------------------
// Showcase, comparison and plot data

std::vector<std::size_t> select_showcase(std::span<const Individual> pop, DistanceMetricKind kind, std::size_t n)
{
    if (n > pop.size())
        throw Error("select_showcase: n exceeds population size");
    std::vector<double> nn(pop.size(), 0.0);
    if (pop.size() > 1) {
        for (std::size_t i = 0; i < pop.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < pop.size(); ++j)
                if (j != i)
                    best = std::min(best, individual_distance(pop[i], pop[j], kind));
            nn[i] = best;
        }
    }
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nn[a] > nn[b]; });
    order.resize(n);
    return order;
}

namespace {

struct LogShape {
    std::string variant, prompt_id;
    std::uint32_t total_iters = 0;
    std::vector<std::uint32_t> interrupts;
    std::map<std::uint32_t, const MetricsRow*> refine_at;
    std::map<std::uint32_t, const MetricsRow*> explore_end;
    const MetricsRow* final_row = nullptr;
};

LogShape shape_of(const std::vector<MetricsRow>& log)
{
    if (log.empty())
        throw Error("compare_runs: empty log");
    LogShape s;
    s.variant = log.front().variant;
    s.prompt_id = log.front().prompt_id;
    for (const auto& r : log) {
        if (r.variant != s.variant || r.prompt_id != s.prompt_id)
            throw Error("compare_runs: a log must cover a single variant and prompt");
        if (r.phase == Phase::Refine) {
            s.refine_at[r.refine_iteration] = &r;
            if (!s.final_row || r.refine_iteration >= s.final_row->refine_iteration)
                s.final_row = &r;
        } else {
            s.explore_end[r.refine_iteration] = &r;
        }
    }
    if (!s.final_row)
        throw Error("compare_runs: log has no refine rows");
    s.total_iters = s.final_row->refine_iteration;
    for (const auto& [t, _] : s.explore_end)
        s.interrupts.push_back(t);
    return s;
}

double rel(double v, double base)
{
    if (base == 0.0)
        return v == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return (v - base) / std::abs(base);
}

double ratio(double after, double before)
{
    if (before == 0.0)
        return after == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return after / before;
}

}  // namespace

ComparisonSummary compare_runs(std::span<const std::vector<MetricsRow>> logs)
{
    if (logs.empty())
        throw Error("compare_runs: no logs");
    std::vector<LogShape> shapes;
    shapes.reserve(logs.size());
    for (const auto& log : logs)
        shapes.push_back(shape_of(log));

    const std::vector<std::uint32_t>* interrupts = nullptr;
    for (const auto& s : shapes) {
        if (s.total_iters != shapes.front().total_iters)
            throw Error("compare_runs: mismatched schedules (total refine iterations differ)");
        if (!s.interrupts.empty()) {
            if (interrupts && *interrupts != s.interrupts)
                throw Error("compare_runs: mismatched schedules (interrupt iterations differ)");
            interrupts = &s.interrupts;
        }
    }

    ComparisonSummary out;
    for (const auto& s : shapes) {
        const LogShape* base = nullptr;
        for (const auto& b : shapes) {
            if (b.prompt_id == s.prompt_id && b.variant == "GAN-BSL") {
                base = &b;
                break;
            }
        }
        if (!base) {
            for (const auto& b : shapes) {
                if (b.prompt_id == s.prompt_id) {
                    base = &b;
                    break;
                }
            }
        }
        RunComparison c;
        c.variant = s.variant;
        c.prompt_id = s.prompt_id;
        c.baseline_variant = base->variant;
        c.final_row = *s.final_row;
        const MetricsRow& b = *base->final_row;
        c.fitness_delta = c.final_row.mean_fitness - b.mean_fitness;
        c.hsv_delta = c.final_row.mean_hsv_diversity - b.mean_hsv_diversity;
        c.vit_delta = c.final_row.mean_vit_diversity - b.mean_vit_diversity;
        c.fitness_rel_delta = rel(c.final_row.mean_fitness, b.mean_fitness);
        c.hsv_rel_delta = rel(c.final_row.mean_hsv_diversity, b.mean_hsv_diversity);
        c.vit_rel_delta = rel(c.final_row.mean_vit_diversity, b.mean_vit_diversity);
        for (const auto t : s.interrupts) {
            const auto pre = s.refine_at.find(t);
            if (pre == s.refine_at.end())
                throw Error("compare_runs: no refine row at interrupt " + std::to_string(t));
            const MetricsRow& before = *pre->second;
            const MetricsRow& after = *s.explore_end.at(t);
            c.cycles.push_back({t, ratio(after.mean_fitness, before.mean_fitness),
                                ratio(after.mean_hsv_diversity, before.mean_hsv_diversity),
                                ratio(after.mean_vit_diversity, before.mean_vit_diversity)});
        }
        out.runs.push_back(std::move(c));
    }

    std::vector<std::string> variants;
    for (const auto& r : out.runs)
        if (std::find(variants.begin(), variants.end(), r.variant) == variants.end())
            variants.push_back(r.variant);
    for (const auto& v : variants) {
        VariantAverage avg;
        avg.variant = v;
        for (const auto& r : out.runs) {
            if (r.variant != v)
                continue;
            ++avg.prompts;
            avg.fitness_rel_delta += r.fitness_rel_delta;
            avg.hsv_rel_delta += r.hsv_rel_delta;
            avg.vit_rel_delta += r.vit_rel_delta;
            for (const auto& cg : r.cycles) {
                ++avg.cycles;
                avg.mean_cycle_fitness_ratio += cg.fitness_ratio;
                avg.mean_cycle_hsv_ratio += cg.hsv_ratio;
                avg.mean_cycle_vit_ratio += cg.vit_ratio;
            }
        }
        const auto np = static_cast<double>(avg.prompts);
        avg.fitness_rel_delta /= np;
        avg.hsv_rel_delta /= np;
        avg.vit_rel_delta /= np;
        if (avg.cycles > 0) {
            const auto nc = static_cast<double>(avg.cycles);
            avg.mean_cycle_fitness_ratio /= nc;
            avg.mean_cycle_hsv_ratio /= nc;
            avg.mean_cycle_vit_ratio /= nc;
        }
        out.averages.push_back(avg);
    }
    return out;
}

std::string format_comparison(const ComparisonSummary& summary)
{
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %-9s %-9s %12s %12s %12s %10s %10s %10s\n", "variant", "prompt",
                  "baseline", "fitness", "hsv_div", "vit_div", "d_fit%", "d_hsv%", "d_vit%");
    os << line;
    for (const auto& r : summary.runs) {
        std::snprintf(line, sizeof line, "%-10s %-9s %-9s %12.6f %12.6g %12.6g %+10.3f %+10.3f %+10.3f\n",
                      r.variant.c_str(), r.prompt_id.c_str(), r.baseline_variant.c_str(), r.final_row.mean_fitness,
                      r.final_row.mean_hsv_diversity, r.final_row.mean_vit_diversity, 100 * r.fitness_rel_delta,
                      100 * r.hsv_rel_delta, 100 * r.vit_rel_delta);
        os << line;
        for (const auto& c : r.cycles) {
            std::snprintf(line, sizeof line, "    cycle@%-5u fitness x%.4f  hsv x%.4f  vit x%.4f\n", c.interrupt,
                          c.fitness_ratio, c.hsv_ratio, c.vit_ratio);
            os << line;
        }
    }
    os << "averages over prompts:\n";
    for (const auto& a : summary.averages) {
        std::snprintf(line, sizeof line, "%-10s prompts=%zu d_fit%%=%+.3f d_hsv%%=%+.3f d_vit%%=%+.3f", a.variant.c_str(),
                      a.prompts, 100 * a.fitness_rel_delta, 100 * a.hsv_rel_delta, 100 * a.vit_rel_delta);
        os << line;
        if (a.cycles > 0) {
            std::snprintf(line, sizeof line, " cycle fitness x%.4f hsv x%.4f vit x%.4f", a.mean_cycle_fitness_ratio,
                          a.mean_cycle_hsv_ratio, a.mean_cycle_vit_ratio);
            os << line;
        }
        os << "\n";
    }
    return os.str();
}

std::map<std::string, std::vector<PlotPoint>> plot_series(std::span<const MetricsRow> rows)
{
    std::map<std::string, std::vector<PlotPoint>> out;
    auto& fit = out["fitness"];
    auto& hsv = out["hsv_diversity"];
    auto& vit = out["vit_diversity"];
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const MetricsRow& r = rows[i];
        if (r.phase == Phase::Explore) {
            const bool terminal = i + 1 == rows.size() || rows[i + 1].phase != Phase::Explore ||
                                  rows[i + 1].refine_iteration != r.refine_iteration;
            if (!terminal)
                continue;
        }
        fit.push_back({r.refine_iteration, r.mean_fitness});
        hsv.push_back({r.refine_iteration, r.mean_hsv_diversity});
        vit.push_back({r.refine_iteration, r.mean_vit_diversity});
    }
    return out;
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::filesystem::path> export_plot_csv(std::span<const MetricsRow> rows,
                                                   const std::filesystem::path& out_dir)
{
    std::filesystem::create_directories(out_dir);
    // Group by (variant, prompt) keeping the original row order.
    std::vector<std::pair<std::string, std::vector<MetricsRow>>> groups;
    for (const auto& r : rows) {
        const std::string key = r.variant + "_" + r.prompt_id;
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == key; });
        if (it == groups.end()) {
            groups.emplace_back(key, std::vector<MetricsRow>{});
            it = std::prev(groups.end());
        }
        it->second.push_back(r);
    }
    std::vector<std::filesystem::path> written;
    for (const auto& [key, group] : groups) {
        for (const auto& [metric, points] : plot_series(group)) {
            const auto path = out_dir / (key + "_" + metric + ".csv");
            std::string text = "iteration,value\n";
            for (const auto& p : points)
                text += std::to_string(p.iteration) + "," + format_double(p.value) + "\n";
            write_file_atomic(path, text);
            written.push_back(path);
        }
    }
    return written;
}

}  // namespace qdforge
