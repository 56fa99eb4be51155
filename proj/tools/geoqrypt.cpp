#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "geoqrypt/cli.hpp"

namespace {

struct SubArgs {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
};

int run(const std::string& name, const SubArgs& args, bool seed_given) {
    std::ifstream in(args.config_path, std::ios::binary);
    if (!in) {
        std::cerr << "geoqrypt: cannot read config '" << args.config_path << "'\n";
        return geoqrypt::cli::exit_config;
    }
    std::ostringstream buf;
    buf << in.rdbuf();

    const std::optional<std::uint64_t> seed =
        seed_given ? std::optional<std::uint64_t>(args.seed) : std::nullopt;
    const geoqrypt::cli::CommandResult result =
        geoqrypt::cli::run_command(name, buf.str(), seed);
    if (result.exit_code != geoqrypt::cli::exit_ok) {
        std::cerr << "geoqrypt: " << result.error << "\n";
        return result.exit_code;
    }

    // --out beats the config's run.out; neither means stdout.
    const std::string& path = !args.out_path.empty() ? args.out_path : result.out_path;
    if (path.empty()) {
        std::cout << result.output;
        return geoqrypt::cli::exit_ok;
    }
    std::ofstream out(path, std::ios::binary);
    out << result.output;
    out.flush();
    if (!out) {
        std::cerr << "geoqrypt: cannot write output '" << path << "'\n";
        return geoqrypt::cli::exit_config;
    }
    return geoqrypt::cli::exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic simulators for location-locked decryption"};
    app.require_subcommand(1);

    SubArgs args;
    const std::pair<const char*, const char*> commands[] = {
        {"crb-surface", "position accuracy bound over a grid, as CSV"},
        {"ellipse", "error ellipse and coverage at the claimed position, as CSV"},
        {"spoof-sweep", "verification pass rate versus spoofing distance, as CSV"},
        {"session", "one decryption session end to end, transcript plus result line"},
        {"pingpong-demo", "entanglement-carried message transfer demo"},
    };
    for (const auto& [name, desc] : commands) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        cmd->add_option("--config", args.config_path, "run configuration file")
            ->required();
        cmd->add_option("--seed", args.seed, "override the config's run.seed");
        cmd->add_option("--out", args.out_path, "output file (default: config run.out, else stdout)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // help and friends
        app.exit(e);
        return geoqrypt::cli::exit_config;
    }

    CLI::App* sub = app.get_subcommands().front();
    return run(sub->get_name(), args, sub->count("--seed") > 0);
}
