#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Regulator synthesis and simulation for aperiodically sampled LTI plants"};
    app.require_subcommand(1);

    std::string config_path, regulator_path, out_dir = ".", example_id;
    std::optional<std::uint64_t> seed;

    auto* synth = app.add_subcommand("synthesize", "Design a regulator from a config");
    synth->add_option("--config", config_path, "run config (JSON)")->required();
    synth->add_option("--out", out_dir, "output directory")->required();

    auto* sim = app.add_subcommand("simulate", "Simulate a synthesized regulator");
    sim->add_option("--config", config_path, "run config (JSON)")->required();
    sim->add_option("--regulator", regulator_path, "regulator document")->required();
    sim->add_option("--out", out_dir, "output directory")->required();

    auto* ver = app.add_subcommand("verify", "Re-certify a regulator document");
    ver->add_option("--config", config_path, "run config (JSON)")->required();
    ver->add_option("--regulator", regulator_path, "regulator document")->required();

    auto* rep = app.add_subcommand("reproduce", "Run a bundled example end to end");
    rep->add_option("id", example_id, "example id (preproc | postproc)")->required();
    rep->add_option("--out", out_dir, "output directory")->required();
    std::uint64_t seed_value = 0;
    auto* seed_opt = rep->add_option("--seed", seed_value, "sampling seed override");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (synth->parsed()) return sdreg::cli::cmd_synthesize(config_path, out_dir);
    if (sim->parsed()) return sdreg::cli::cmd_simulate(config_path, regulator_path, out_dir);
    if (ver->parsed()) return sdreg::cli::cmd_verify(config_path, regulator_path);
    if (rep->parsed()) {
        if (*seed_opt) seed = seed_value;
        return sdreg::cli::cmd_reproduce(example_id, out_dir, seed);
    }
    return 1;
}
