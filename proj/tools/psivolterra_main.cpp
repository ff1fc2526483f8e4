// psivolterra <command> --config <path> [--out-dir <path>]

#include <string>

#include "CLI11.hpp"
#include "psivolterra/psivolterra.h"

int main(int argc, char** argv) {
    CLI::App app{"Fractional Volterra solver and Ulam-Hyers certifier", "psivolterra"};
    app.set_version_flag("--version", std::string(pv_version()));
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = ".";
    const char* commands[][2] = {
        {"solve", "Solve the configured problem by fixed-point iteration"},
        {"certify", "Certify a candidate against its Ulam-Hyers bound"},
        {"operators", "Tabulate the fractional integral and derivative of a function"},
        {"converge", "Refinement study over four grid doublings"},
    };
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c[0], c[1]);
        sub->add_option("--config", config, "JSON config file")->required();
        sub->add_option("--out-dir", out_dir, "Directory for CSV and report files");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    return pv_run(app.get_subcommands().front()->get_name().c_str(), config.c_str(), out_dir.c_str());
}
