#ifndef SPI_CONFIG_HPP
#define SPI_CONFIG_HPP

// INI configuration shared by all CLI subcommands. Unknown sections and keys
// are rejected.
//
//   [dataset]     n, seed
//   [grid]        resolutions            (comma-separated list)
//   [experiment]  steps, paths, eta, lambda, checkpoint_every, seed_base,
//                 reference_multiplier, threads
//   [solver]      tolerance
//   [verify]      seed, algebraic_trials, max_k, operator_trials,
//                 resolvent_trials, resolvent_resolution, moment_n,
//                 moment_resolution, moment_steps, moment_paths
//   [output]      dir

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "spi/experiment.hpp"
#include "spi/verify.hpp"

namespace spi {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CliConfig {
    RunConfig run;
    VerifyOptions verify;
    std::filesystem::path output_dir = "out";
    std::string source; // normalized echo for output metadata
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema()
{
    static const std::map<std::string, std::set<std::string>> schema{
        {"dataset", {"n", "seed"}},
        {"grid", {"resolutions"}},
        {"experiment",
         {"steps", "paths", "eta", "lambda", "checkpoint_every", "seed_base",
          "reference_multiplier", "threads"}},
        {"solver", {"tolerance"}},
        {"verify",
         {"seed", "algebraic_trials", "max_k", "operator_trials", "resolvent_trials",
          "resolvent_resolution", "moment_n", "moment_resolution", "moment_steps",
          "moment_paths"}},
        {"output", {"dir"}},
    };
    return schema;
}

template <typename T>
T config_value(const boost::property_tree::ptree& tree, const std::string& path, T fallback)
{
    const auto node = tree.get_optional<std::string>(boost::property_tree::ptree::path_type(path, '.'));
    if (!node) {
        return fallback;
    }
    std::istringstream is(*node);
    T value{};
    is >> value;
    if (is.fail() || !(is >> std::ws).eof()) {
        throw ConfigError("config key '" + path + "': cannot parse '" + *node + "'");
    }
    if constexpr (std::is_unsigned_v<T>) {
        if (node->find('-') != std::string::npos) {
            throw ConfigError("config key '" + path + "': must be non-negative");
        }
    }
    return value;
}

inline std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& text)
{
    std::vector<std::size_t> out;
    std::istringstream is(text);
    std::string item;
    while (std::getline(is, item, ',')) {
        std::istringstream one(item);
        long long v = 0;
        one >> v;
        if (one.fail() || !(one >> std::ws).eof() || v <= 0) {
            throw ConfigError("config key '" + key + "': bad list entry '" + item + "'");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) {
        throw ConfigError("config key '" + key + "': empty list");
    }
    return out;
}

} // namespace detail

/// Parses INI text; overrides are "section.key=value" strings applied on top.
inline CliConfig parse_config(std::istream& is, const std::vector<std::string>& overrides = {})
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::ini_parser::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            throw ConfigError("override '" + o + "' must look like section.key=value");
        }
        tree.put(pt::ptree::path_type(o.substr(0, eq), '.'), o.substr(eq + 1));
    }

    const auto& schema = detail::config_schema();
    for (const auto& [section, body] : tree) {
        const auto it = schema.find(section);
        if (it == schema.end()) {
            throw ConfigError("unknown config section [" + section + "]");
        }
        if (!body.data().empty()) {
            throw ConfigError("config key '" + section + "' must be inside a section");
        }
        for (const auto& [key, value] : body) {
            if (!it->second.contains(key)) {
                throw ConfigError("unknown config key '" + section + "." + key + "'");
            }
        }
    }

    using detail::config_value;
    CliConfig cfg;
    auto& r = cfg.run;
    r.n = config_value<std::size_t>(tree, "dataset.n", r.n);
    r.dataset_seed = config_value<std::uint64_t>(tree, "dataset.seed", r.dataset_seed);
    if (const auto list = tree.get_optional<std::string>("grid.resolutions")) {
        r.resolutions = detail::parse_size_list("grid.resolutions", *list);
    }
    r.steps = config_value<std::uint64_t>(tree, "experiment.steps", r.steps);
    r.paths = config_value<std::uint64_t>(tree, "experiment.paths", r.paths);
    r.eta = config_value<double>(tree, "experiment.eta", r.eta);
    r.lambda = config_value<double>(tree, "experiment.lambda", r.lambda);
    r.checkpoint_every = config_value<std::uint64_t>(tree, "experiment.checkpoint_every", r.checkpoint_every);
    r.seed_base = config_value<std::uint64_t>(tree, "experiment.seed_base", r.seed_base);
    r.reference_multiplier
        = config_value<std::uint64_t>(tree, "experiment.reference_multiplier", r.reference_multiplier);
    r.threads = config_value<unsigned>(tree, "experiment.threads", r.threads);
    r.tolerance = config_value<double>(tree, "solver.tolerance", r.tolerance);

    auto& v = cfg.verify;
    v.seed = config_value<std::uint64_t>(tree, "verify.seed", v.seed);
    v.algebraic_trials = config_value<std::uint64_t>(tree, "verify.algebraic_trials", v.algebraic_trials);
    v.max_k = config_value<std::uint64_t>(tree, "verify.max_k", v.max_k);
    v.operator_trials = config_value<std::uint64_t>(tree, "verify.operator_trials", v.operator_trials);
    v.resolvent_trials = config_value<std::uint64_t>(tree, "verify.resolvent_trials", v.resolvent_trials);
    v.resolvent_resolution
        = config_value<std::size_t>(tree, "verify.resolvent_resolution", v.resolvent_resolution);
    v.moment_n = config_value<std::size_t>(tree, "verify.moment_n", v.moment_n);
    v.moment_resolution = config_value<std::size_t>(tree, "verify.moment_resolution", v.moment_resolution);
    v.moment_steps = config_value<std::uint64_t>(tree, "verify.moment_steps", v.moment_steps);
    v.moment_paths = config_value<std::uint64_t>(tree, "verify.moment_paths", v.moment_paths);
    v.eta = r.eta;
    v.lambda = r.lambda;

    if (const auto dir = tree.get_optional<std::string>("output.dir")) {
        cfg.output_dir = *dir;
    }

    try {
        r.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (v.max_k == 0 || v.resolvent_resolution == 0 || v.moment_resolution == 0
        || v.moment_n < 2 || v.moment_n % 2 != 0 || v.moment_paths == 0 || v.moment_steps < 400) {
        throw ConfigError("invalid [verify] section");
    }

    std::ostringstream echo;
    echo << "n=" << r.n << ";dataset_seed=" << r.dataset_seed << ";resolutions=";
    for (std::size_t i = 0; i < r.resolutions.size(); ++i) {
        echo << (i ? " " : "") << r.resolutions[i];
    }
    echo << ";steps=" << r.steps << ";paths=" << r.paths << ";eta=" << format_number(r.eta)
         << ";lambda=" << format_number(r.lambda) << ";checkpoint_every=" << r.checkpoint_every
         << ";seed_base=" << r.seed_base << ";reference_multiplier=" << r.reference_multiplier
         << ";tolerance=" << format_number(r.tolerance);
    cfg.source = echo.str();
    return cfg;
}

inline CliConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {})
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path.string() + "'");
    }
    return parse_config(in, overrides);
}

} // namespace spi

#endif
