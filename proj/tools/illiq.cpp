// illiq: command-line front end.
//
//   illiq solve|region|simulate|asymptotics|sweep|figures --config <file> [--out <dir>] [--seed <u64>]

#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "illiq/commands.hpp"
#include "illiq/config.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Portfolio choice with transaction costs and Poisson trading times"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    for (const char* name : {"solve", "region", "simulate", "asymptotics", "sweep", "figures"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "key=value config file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "simulation seed (overrides simulate.seed)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    const auto* sub = app.get_subcommands().front();
    try {
        illiq::RunConfig cfg = illiq::load_config(config_path);
        if (!out_dir.empty()) cfg.set("output.dir", out_dir);
        if (sub->count("--seed") > 0) cfg.set("simulate.seed", std::to_string(seed));
        return illiq::run_command(sub->get_name(), cfg, std::cerr);
    } catch (const illiq::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 1;
    }
}
