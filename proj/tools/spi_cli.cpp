// spi: dataset generation, SPI/SGD experiments, lemma verification and
// convergence-rate estimation.
//
// Exit codes: 0 success, 1 check or run failure, 2 usage or config error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "spi/config.hpp"
#include "spi/experiment.hpp"
#include "spi/io.hpp"
#include "spi/verify.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Options {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::string method = "spi";
    std::string suite = "all";
    std::string table_path;
    std::uint64_t k_min = 1000;
    bool dry_run = false;
};

spi::CliConfig load(const Options& opt)
{
    std::istringstream defaults;
    auto cfg = opt.config_path.empty() ? spi::parse_config(defaults, opt.overrides)
                                       : spi::load_config(opt.config_path, opt.overrides);
    if (!opt.out_dir.empty()) {
        cfg.output_dir = opt.out_dir;
    }
    return cfg;
}

/// Creates the directory and confirms it accepts files; throws ConfigError otherwise.
void ensure_writable(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw spi::ConfigError("output directory '" + dir.string() + "' cannot be created");
    }
    const auto probe = dir / ".spi_write_probe";
    {
        std::ofstream f(probe);
        if (!f) {
            throw spi::ConfigError("output directory '" + dir.string() + "' is not writable");
        }
    }
    fs::remove(probe, ec);
}

/// Writes every (path, contents) pair or none of them.
void write_all(const std::vector<std::pair<fs::path, std::string>>& files)
{
    std::vector<fs::path> written;
    for (const auto& [path, contents] : files) {
        std::ofstream f(path, std::ios::binary);
        f << contents;
        f.close();
        if (!f) {
            std::error_code ec;
            for (const auto& p : written) {
                fs::remove(p, ec);
            }
            fs::remove(path, ec);
            throw std::runtime_error("failed to write '" + path.string() + "'");
        }
        written.push_back(path);
    }
}

int cmd_generate(const Options& opt)
{
    const auto cfg = load(opt);
    ensure_writable(cfg.output_dir);
    std::vector<std::pair<fs::path, std::string>> files;
    for (auto resolution : cfg.run.resolutions) {
        const auto data = spi::generate_dataset(cfg.run.n, resolution, cfg.run.dataset_seed);
        std::ostringstream os;
        spi::write_dataset_csv(os, data);
        files.emplace_back(cfg.output_dir / ("dataset_N" + std::to_string(resolution) + ".csv"),
                           os.str());
        std::cout << "generated n=" << data.size() << " N=" << resolution
                  << " seed=" << cfg.run.dataset_seed << " -> " << files.back().first.string()
                  << '\n';
    }
    write_all(files);
    return kExitOk;
}

int cmd_run(const Options& opt)
{
    const auto cfg = load(opt);
    const auto method = spi::parse_method(opt.method);
    const auto& rc = cfg.run;
    const std::string stem = "errors_" + std::string(spi::to_string(method));
    const auto csv_path = cfg.output_dir / (stem + ".csv");
    const auto svg_path = cfg.output_dir / (stem + ".svg");

    if (opt.dry_run) {
        std::cout << "plan: method=" << spi::to_string(method) << '\n'
                  << "  config: " << cfg.source << '\n'
                  << "  reference: " << rc.reference_multiplier * rc.steps
                  << " SPI steps per resolution, seed " << rc.reference_seed() << '\n'
                  << "  paths: seeds " << rc.path_seed(1) << ".." << rc.path_seed(rc.paths) << '\n'
                  << "  checkpoints: every " << rc.checkpoint_every << " up to " << rc.steps << '\n'
                  << "  outputs: " << csv_path.string() << ", " << svg_path.string() << '\n';
        return kExitOk;
    }
    ensure_writable(cfg.output_dir);

    const auto results = spi::run_suite(rc, {method});
    std::vector<spi::ErrorTable> tables;
    spi::Metadata meta{
        {"method", std::string(spi::to_string(method))},
        {"config", cfg.source},
        {"rng", std::string(spi::kRngAlgorithm)},
        {"dataset_seed", std::to_string(rc.dataset_seed)},
        {"reference_seed", std::to_string(rc.reference_seed())},
        {"path_seeds", std::to_string(rc.path_seed(1)) + ".." + std::to_string(rc.path_seed(rc.paths))},
        {"error_norm", "rms(w - w*)^2 + (bias - bias*)^2"},
    };
    for (const auto& r : results) {
        const auto& t = r.tables.front();
        meta.emplace_back("reference_grad_norm_N" + std::to_string(r.resolution),
                          spi::format_number(r.reference_gradient_norm));
        meta.emplace_back("initial_sq_error_N" + std::to_string(r.resolution),
                          spi::format_number(t.initial_sq_error));
        tables.push_back(t);
    }
    std::ostringstream csv;
    spi::write_error_tables_csv(csv, tables, meta);
    std::ostringstream svg;
    spi::write_error_plot_svg(svg, tables,
                              std::string(method == spi::Method::spi ? "SPI" : "SGD")
                                  + ": E||w^k - w*||^2 (RMS norm)");
    write_all({{csv_path, csv.str()}, {svg_path, svg.str()}});

    for (const auto& t : tables) {
        std::cout << spi::to_string(t.method) << " N=" << t.resolution
                  << " final_error=" << spi::format_number(t.rows.back().mean_sq_error);
        try {
            const auto fit = spi::estimate_rate(t, std::min<std::uint64_t>(opt.k_min, rc.steps / 2));
            std::cout << " slope=" << fit.slope;
        } catch (const std::invalid_argument&) {
        }
        std::cout << '\n';
    }
    std::cout << "wrote " << csv_path.string() << " and " << svg_path.string() << '\n';
    return kExitOk;
}

int cmd_verify(const Options& opt)
{
    const auto cfg = load(opt);
    const auto checks = spi::run_verify_suite(opt.suite, cfg.verify);
    std::ostringstream report;
    spi::write_check_report_csv(report, checks);
    std::cout << report.str();
    if (!opt.out_dir.empty()) {
        ensure_writable(cfg.output_dir);
        write_all({{cfg.output_dir / ("verify_" + opt.suite + ".csv"), report.str()}});
    }
    bool ok = true;
    for (const auto& c : checks) {
        if (!c.passed()) {
            ok = false;
            std::cerr << "FAILED " << c.name << ": " << c.failures << "/" << c.trials
                      << " violations, worst margin " << spi::format_number(c.worst_margin) << '\n';
        }
    }
    return ok ? kExitOk : kExitFailure;
}

int cmd_rate(const Options& opt)
{
    std::ifstream in(opt.table_path);
    if (!in) {
        throw spi::ConfigError("cannot open table '" + opt.table_path + "'");
    }
    const auto parsed = spi::read_error_tables_csv(in);
    std::cout << "method,N,slope,intercept,points\n";
    for (const auto& t : parsed.tables) {
        const auto fit = spi::estimate_rate(t, opt.k_min);
        std::printf("%s,%zu,%.6f,%.6f,%zu\n", std::string(spi::to_string(t.method)).c_str(),
                    t.resolution, fit.slope, fit.intercept, fit.points);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Stochastic proximal iteration experiments"};
    app.require_subcommand(1);
    Options opt;

    auto add_config = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "INI configuration file")->check(CLI::ExistingFile);
        sub->add_option("--set", opt.overrides, "Override a config key (section.key=value)");
        sub->add_option("--out", opt.out_dir, "Output directory (overrides [output] dir)");
    };

    auto* generate = app.add_subcommand("generate", "Write dataset CSVs for every resolution");
    add_config(generate);

    auto* run = app.add_subcommand("run", "Run the error-curve experiment for one method");
    add_config(run);
    run->add_option("--method", opt.method, "spi or sgd")->check(CLI::IsMember({"spi", "sgd"}));
    run->add_flag("--dry-run", opt.dry_run, "Validate the config and print the plan");
    run->add_option("--k-min", opt.k_min, "Smallest k used in the printed rate fit");

    auto* verify = app.add_subcommand("verify", "Run randomized checks of the lemma inequalities");
    add_config(verify);
    verify->add_option("--suite", opt.suite, "algebraic, operators, resolvent, moments or all");

    auto* rate = app.add_subcommand("rate", "Fit log-log convergence slopes to an error table");
    rate->add_option("table", opt.table_path, "ErrorTable CSV")->required();
    rate->add_option("--k-min", opt.k_min, "Smallest k included in the fit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (verify->parsed()) {
            bool known = false;
            for (auto s : spi::verify_suites()) {
                known = known || s == opt.suite;
            }
            if (!known) {
                std::cerr << "unknown suite '" << opt.suite
                          << "' (expected algebraic, operators, resolvent, moments or all)\n";
                return kExitUsage;
            }
            return cmd_verify(opt);
        }
        if (generate->parsed()) {
            return cmd_generate(opt);
        }
        if (run->parsed()) {
            return cmd_run(opt);
        }
        if (rate->parsed()) {
            return cmd_rate(opt);
        }
    } catch (const spi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const spi::ParseError& e) {
        std::cerr << "malformed table: " << e.what() << '\n';
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
