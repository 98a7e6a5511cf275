// hbflow — experiment runner for heavy-ball optimizers, their continuous-time
// models, and the diagonal-linear-network bias reports.
//
// Subcommands:
//   hbflow run <config.json> [--jobs N] [--output-root DIR]
//   hbflow validate <config.json>
//   hbflow dump-ct --alpha A [--sigma S]
//
// Exit codes: 0 ok, 1 run failure, 2 config failure. The output root can
// also be set through HBFLOW_OUTPUT_ROOT.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hbflow/counterterms.hpp"
#include "hbflow/experiments.hpp"

namespace {

nlohmann::json load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw hbflow::ConfigError(path, "cannot open config file");
    try {
        return nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
        throw hbflow::ConfigError(path, std::string("invalid JSON: ") + e.what());
    }
}

std::string default_output_root() {
    const char* env = std::getenv("HBFLOW_OUTPUT_ROOT");
    return env ? std::string(env) : std::string(".");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"heavy-ball flow simulation and experiment runner"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_root = default_output_root();
    int jobs = 1;
    auto* run = app.add_subcommand("run", "run an experiment config");
    run->add_option("config", config_path, "experiment config (JSON)")->required();
    run->add_option("--jobs", jobs, "max concurrent sweep cells")->check(CLI::PositiveNumber);
    run->add_option("--output-root", output_root, "root directory for artifacts");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "validate a config without running");
    validate->add_option("config", validate_path, "experiment config (JSON)")->required();

    int alpha = 2, sigma = -1;
    auto* dump = app.add_subcommand("dump-ct", "dump counter-term structure as JSON");
    dump->add_option("--alpha", alpha, "target error order (truncates gamma at alpha-2)");
    dump->add_option("--sigma", sigma, "single series order to dump (default: all up to alpha-2)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto cfg = load_config(config_path);
            try {
                const auto res = hbflow::run_experiment(cfg, output_root, jobs);
                std::cout << "wrote " << res.manifest.artifacts.size() + 1
                          << " artifacts to " << res.output_dir.string() << " (manifest "
                          << std::hex << res.manifest.config_hash << std::dec << ")\n";
                return 0;
            } catch (const hbflow::ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                std::cerr << "run failed: " << e.what() << "\n";
                return 1;
            }
        }
        if (validate->parsed()) {
            const auto cfg = load_config(validate_path);
            const std::string kind = hbflow::validate_experiment(cfg);
            std::cout << "ok: " << kind << " (hash " << std::hex
                      << hbflow::config_hash(cfg) << std::dec << ")\n";
            return 0;
        }
        if (dump->parsed()) {
            if (alpha < 1) {
                std::cerr << "config error: --alpha must be >= 1\n";
                return 2;
            }
            if (sigma >= 0 && sigma > 4) {
                std::cerr << "config error: structure dump supports sigma <= 4\n";
                return 2;
            }
            nlohmann::json out{{"alpha", alpha}, {"truncation_order", alpha - 2}};
            nlohmann::json sigmas = nlohmann::json::array();
            if (sigma >= 0) {
                sigmas.push_back(hbflow::counterterm_structure(sigma));
            } else {
                for (int s = 0; s <= alpha - 2; ++s)
                    sigmas.push_back(hbflow::counterterm_structure(s));
            }
            out["sigma_terms"] = sigmas;
            std::cout << out.dump(2) << "\n";
            return 0;
        }
    } catch (const hbflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
