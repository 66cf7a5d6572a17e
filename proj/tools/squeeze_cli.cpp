#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "squeeze/experiments.hpp"

namespace {

struct GlobalArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out_dir;
    std::optional<std::string> format;
};

squeeze::ExperimentConfig load_config(const GlobalArgs& args,
                                      squeeze::ExperimentKind kind) {
    squeeze::IniFile ini = args.config_path.empty()
                               ? squeeze::IniFile::parse_string("")
                               : squeeze::IniFile::parse_file(args.config_path);
    squeeze::ExperimentConfig config = squeeze::ExperimentConfig::from_ini(ini);
    config.experiment = kind;
    if (args.seed) config.master_seed = *args.seed;
    if (args.workers) config.workers = *args.workers;
    if (args.out_dir) config.out_dir = *args.out_dir;
    if (args.format) {
        if (*args.format != "csv" && *args.format != "json")
            throw squeeze::ConfigError("--format must be csv or json");
        config.format = *args.format;
    }
    return config;
}

int run(const GlobalArgs& args, squeeze::ExperimentKind kind,
        const std::string& protocol = "adiabatic") {
    squeeze::ExperimentConfig config;
    try {
        config = load_config(args, kind);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    try {
        const squeeze::ExperimentOutcome outcome =
            squeeze::run_experiment(config, protocol);
        const std::string summary_path = squeeze::write_summary(config, outcome);
        for (const std::string& f : outcome.files) std::cout << "wrote " << f << "\n";
        std::cout << "wrote " << summary_path << "\n";
        if (outcome.partial_failure) {
            std::cerr << "completed with per-point failures (see summary errors)\n";
            return 2;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int run_fit(const std::string& csv_path, int x_column, int y_column) {
    std::ifstream in(csv_path);
    if (!in) {
        std::cerr << "config error: cannot open " << csv_path << "\n";
        return 1;
    }
    std::vector<std::pair<double, double>> points;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream row(line);
        std::string tok;
        while (std::getline(row, tok, ',')) fields.push_back(tok);
        if (static_cast<int>(fields.size()) <= std::max(x_column, y_column)) continue;
        try {
            points.emplace_back(std::stod(fields[x_column]), std::stod(fields[y_column]));
        } catch (const std::exception&) {
            if (!first) {
                std::cerr << "config error: non-numeric row in " << csv_path << "\n";
                return 1;
            }
            // header row
        }
        first = false;
    }
    try {
        const squeeze::PowerLawFit fit = squeeze::fit_power_law(points);
        squeeze::Json j{{"amplitude", fit.amplitude},
                        {"exponent", fit.exponent},
                        {"r_squared", fit.r_squared},
                        {"n_points", fit.n_points}};
        std::cout << j.dump(2) << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Collective-spin squeezing experiments: adiabatic ramps vs "
                 "CRAB-optimized controls under telegraph noise and dissipation"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_path, "configuration file (INI-style)");
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "master seed");
    int workers_value = 0;
    auto* workers_opt = app.add_option("--workers", workers_value, "worker pool size");
    std::string out_value, format_value;
    auto* out_opt = app.add_option("--out", out_value, "output directory");
    auto* format_opt =
        app.add_option("--format", format_value, "table format: csv or json");

    auto* ground = app.add_subcommand("ground-scaling",
                                      "ground-state squeezing vs size, with fit");
    std::string protocol = "adiabatic";
    auto* timing = app.add_subcommand("time-scaling",
                                      "duration to reach the target infidelity vs size");
    timing->add_option("--protocol", protocol, "adiabatic or crab")
        ->check(CLI::IsMember({"adiabatic", "crab"}));
    auto* noise = app.add_subcommand("noise-sweep",
                                     "telegraph-noise ensembles, both protocols");
    auto* coop = app.add_subcommand("coop-sweep",
                                    "squeezing vs cooperativity (master equation)");
    auto* single = app.add_subcommand("single-run", "one seeded run with trajectory");
    auto* fit = app.add_subcommand("fit", "power-law fit of a CSV table");
    std::string fit_csv;
    int fit_x = 0, fit_y = 1;
    fit->add_option("csv", fit_csv, "input table")->required();
    fit->add_option("--xcol", fit_x, "x column index (default 0)");
    fit->add_option("--ycol", fit_y, "y column index (default 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (seed_opt->count()) args.seed = seed_value;
    if (workers_opt->count()) args.workers = workers_value;
    if (out_opt->count()) args.out_dir = out_value;
    if (format_opt->count()) args.format = format_value;

    if (ground->parsed()) return run(args, squeeze::ExperimentKind::GroundScaling);
    if (timing->parsed())
        return run(args, squeeze::ExperimentKind::TimeScaling, protocol);
    if (noise->parsed()) return run(args, squeeze::ExperimentKind::NoiseRobustness);
    if (coop->parsed()) return run(args, squeeze::ExperimentKind::CooperativitySweep);
    if (single->parsed()) return run(args, squeeze::ExperimentKind::SingleRun);
    if (fit->parsed()) return run_fit(fit_csv, fit_x, fit_y);
    return 1;
}
