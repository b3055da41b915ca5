#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "gtml/config.hpp"
#include "gtml/errors.hpp"
#include "gtml/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

int fail(int code, const char* kind, const std::exception& e) {
    std::cerr << "error kind=" << kind << " message=\"" << e.what() << "\"\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Game-theoretic machine learning lab for GSP auctions with reserve prices"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
    std::string input;

    for (const auto& name : gtml::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--jobs", jobs, "worker threads for replications")
            ->check(CLI::PositiveNumber);
        if (name == "fit-behavior") {
            sub->add_option("--input", input, "trajectory file (simulated when omitted)");
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        auto config = gtml::load_config(config_path);
        if (seed) config.seed = *seed;
        gtml::RunOptions options;
        options.out = out_dir;
        options.jobs = jobs;
        if (!input.empty()) options.input = input;
        for (const auto& path : gtml::run_command(command, config, options)) {
            std::cout << path.string() << '\n';
        }
        return 0;
    } catch (const gtml::ConfigError& e) {
        return fail(kExitConfig, "config", e);
    } catch (const gtml::InputError& e) {
        return fail(kExitConfig, "input", e);
    } catch (const gtml::DomainError& e) {
        return fail(kExitNumerical, "domain", e);
    } catch (const gtml::ConvergenceError& e) {
        std::cerr << "error kind=convergence residual=" << e.residual() << " message=\""
                  << e.what() << "\"\n";
        return kExitNumerical;
    } catch (const gtml::NotErgodicError& e) {
        return fail(kExitNumerical, "not_ergodic", e);
    } catch (const std::exception& e) {
        return fail(EXIT_FAILURE, "internal", e);
    }
}
