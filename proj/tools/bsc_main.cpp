#include <CLI11.hpp>

#include <iostream>

#include "bsc/commands.hpp"
#include "bsc/runconfig.hpp"

int main(int argc, char** argv) {
    CLI::App app{"spectral toolkit for bilinear Schrodinger control on (0,1)"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    std::string config_path, out_dir;
    int seed = -1, threads = -1;
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "random seed override");
    app.add_option("--threads", threads, "worker threads for parallel sweeps");

    for (const char* name : {"simulate", "expand", "forms", "moments", "synthesize",
                             "mintime", "sweep"})
        app.add_subcommand(name);

    CLI11_PARSE(app, argc, argv);

    bsc::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = bsc::RunConfig::from_file(config_path);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return bsc::kExitConfig;
    }
    if (!out_dir.empty()) cfg.set("out", out_dir);
    if (seed >= 0) cfg.set("seed", std::to_string(seed));
    if (threads > 0) cfg.set("threads", std::to_string(threads));

    return bsc::run_command(app.get_subcommands().front()->get_name(), cfg);
}
