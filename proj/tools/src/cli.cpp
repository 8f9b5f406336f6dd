#include "qdforge_cli/cli.hpp"

#include <cstdlib>
#include <optional>

#include "CLI11.hpp"
#include "qdforge/config.hpp"
#include "qdforge/decoder.hpp"
#include "qdforge/orchestrator.hpp"
#include "qdforge/remote.hpp"

namespace qdforge::cli {

namespace {

namespace fs = std::filesystem;

class UsageError : public Error {
public:
    using Error::Error;
};

RunConfig preset_by_name(const std::string& name)
{
    if (name == "full")
        return presets::full_run();
    if (name == "desk")
        return presets::desk_run();
    if (name == "desk-short")
        return presets::desk_short_run();
    throw UsageError("unknown preset '" + name + "'; valid presets: full, desk, desk-short");
}

void apply_env(RunConfig& cfg)
{
    if (const char* url = std::getenv("QDFORGE_SIDECAR_URL"); url && *url)
        cfg.oracle.sidecar_url = url;
}

void require_valid_run_config(const RunConfig& cfg)
{
    const auto errors = validate_run_config(cfg);
    if (errors.empty())
        return;
    std::string msg = "invalid config:";
    for (const auto& e : errors)
        msg += "\n  " + e;
    throw UsageError(msg);
}

RunConfig load_or_preset(const std::string& config_path, const std::string& preset)
{
    if (config_path.empty())
        return preset_by_name(preset.empty() ? "desk" : preset);
    try {
        return load_config(config_path);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

struct RunArgs {
    std::string config, preset, variant, prompt, out, resume;
    std::optional<std::uint64_t> seed;
    bool no_images = false;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err)
{
    RunOptions options;
    options.export_images = !a.no_images;
    if (!a.out.empty())
        options.out_dir = fs::path(a.out);

    RunResult result;
    if (!a.resume.empty()) {
        result = resume_variant(a.resume, options);
    } else {
        RunConfig cfg = load_or_preset(a.config, a.preset);
        if (a.seed)
            cfg.engine.master_seed = *a.seed;
        apply_env(cfg);
        std::string variant_name = a.variant.empty() ? cfg.variant.value_or("") : a.variant;
        std::string prompt_text = a.prompt.empty() ? cfg.prompt.value_or("") : a.prompt;
        if (variant_name.empty())
            throw UsageError("no variant given; valid names: GAN-BSL, NSLC-HSV, NSLC-ViT");
        if (prompt_text.empty())
            throw UsageError("no prompt given; use SP1..SP5 or free text");
        VariantSpec variant;
        try {
            variant = parse_variant(variant_name);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        cfg.variant = variant_name;
        cfg.prompt = prompt_text;
        require_valid_run_config(cfg);
        result = run_variant(variant, resolve_prompt(prompt_text), cfg, options);
    }

    if (!options.out_dir)
        out << to_jsonl(result.rows);
    const MetricsRow& last = result.rows.back();
    err << last.variant << " " << last.prompt_id << ": " << result.rows.size()
        << " rows, final mean fitness " << format_double(last.mean_fitness) << "\n";
    return kOk;
}

std::vector<std::vector<MetricsRow>> read_logs(const std::vector<std::string>& paths)
{
    if (paths.empty())
        throw UsageError("no metrics logs given");
    std::vector<std::vector<MetricsRow>> logs;
    for (const auto& p : paths)
        logs.push_back(read_metrics_log(p));
    return logs;
}

int cmd_compare(const std::vector<std::string>& paths, std::ostream& out)
{
    const auto logs = read_logs(paths);
    out << format_comparison(compare_runs(logs));
    return kOk;
}

int cmd_export_plots(const std::vector<std::string>& paths, const std::string& out_dir, std::ostream& out)
{
    const auto logs = read_logs(paths);
    for (const auto& log : logs)
        for (const auto& p : export_plot_csv(log, out_dir))
            out << p.string() << "\n";
    return kOk;
}

int cmd_showcase(const std::string& checkpoint, std::size_t n, const std::string& metric, const std::string& out_dir,
                 std::ostream& out)
{
    DistanceMetricKind kind;
    try {
        kind = parse_metric_kind(metric);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    CheckpointContents c = load_checkpoint(checkpoint);
    apply_env(c.config);
    if (n > c.population.size())
        throw UsageError("showcase size exceeds population size " + std::to_string(c.population.size()));
    const auto backend = Backend::create(c.config, c.prompt);
    backend->evaluator().evaluate_all(c.population);
    const auto picks = select_showcase(c.population, kind, n);
    fs::create_directories(out_dir);
    for (std::size_t r = 0; r < picks.size(); ++r) {
        const Individual& ind = c.population[picks[r]];
        const fs::path path = fs::path(out_dir) / (std::string(to_string(c.variant.name)) + "_" + c.prompt.id +
                                                   "_showcase_" + std::to_string(r) + ".ppm");
        write_ppm(path, *ind.phenotype);
        out << picks[r] << " " << format_double(*ind.fitness) << " " << path.string() << "\n";
    }
    return kOk;
}

int cmd_validate_config(const std::string& path, std::ostream& out)
{
    RunConfig cfg;
    try {
        cfg = load_config(path);
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
    require_valid_run_config(cfg);
    out << "ok " << path << "\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"qdforge: latent-space quality-diversity image engine"};
    app.require_subcommand(1);

    RunArgs ra;
    auto* run_cmd = app.add_subcommand("run", "Run one variant on one prompt");
    run_cmd->add_option("--config", ra.config, "JSON config file");
    run_cmd->add_option("--preset", ra.preset, "full | desk | desk-short (default desk)");
    run_cmd->add_option("--variant", ra.variant, "GAN-BSL | NSLC-HSV | NSLC-ViT");
    run_cmd->add_option("--prompt", ra.prompt, "SP1..SP5 or free text");
    run_cmd->add_option("--seed", ra.seed, "Master seed");
    run_cmd->add_option("--out", ra.out, "Output directory");
    run_cmd->add_option("--resume", ra.resume, "Continue from a checkpoint.json");
    run_cmd->add_flag("--no-images", ra.no_images, "Skip PPM export");

    std::vector<std::string> compare_logs;
    auto* compare_cmd = app.add_subcommand("compare", "Compare metrics logs against GAN-BSL");
    compare_cmd->add_option("logs", compare_logs, "metrics.jsonl files");

    std::string show_ckpt, show_metric = "hsv", show_out = "showcase";
    std::size_t show_n = 8;
    auto* showcase_cmd = app.add_subcommand("showcase", "Export the most isolated members of a checkpoint");
    showcase_cmd->add_option("--checkpoint", show_ckpt, "checkpoint.json")->required();
    showcase_cmd->add_option("--n", show_n, "Number of images");
    showcase_cmd->add_option("--metric", show_metric, "hsv | embedding");
    showcase_cmd->add_option("--out", show_out, "Output directory");

    std::vector<std::string> plot_logs;
    std::string plot_out = "plots";
    auto* plots_cmd = app.add_subcommand("export-plots", "Write per-metric CSV series");
    plots_cmd->add_option("logs", plot_logs, "metrics.jsonl files");
    plots_cmd->add_option("--out", plot_out, "Output directory");

    std::string validate_path;
    auto* validate_cmd = app.add_subcommand("validate-config", "Check a config file");
    validate_cmd->add_option("config", validate_path, "JSON config file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (*run_cmd)
            return cmd_run(ra, out, err);
        if (*compare_cmd)
            return cmd_compare(compare_logs, out);
        if (*showcase_cmd)
            return cmd_showcase(show_ckpt, show_n, show_metric, show_out, out);
        if (*plots_cmd)
            return cmd_export_plots(plot_logs, plot_out, out);
        if (*validate_cmd)
            return cmd_validate_config(validate_path, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const SidecarUnavailable& e) {
        err << "error: " << e.what() << "\n";
        return kSidecarUnreachable;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntimeFailure;
    }
    return kUsage;
}

}  // namespace qdforge::cli
