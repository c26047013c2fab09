#include <algorithm>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli_util.hpp"
#include "commands.hpp"
#include "lumen/common.hpp"

// Exit codes: 0 success, 1 runtime error, 2 usage error.
int main(int argc, char **argv) {
    CLI::App app{"Desk-scale indoor lighting estimation pipeline"};
    app.set_version_flag("--version", lumen::kVersion);
    app.require_subcommand(1);

    lumen::cli::register_data_commands(app);
    lumen::cli::register_model_commands(app);
    lumen::cli::register_sh_commands(app);
    lumen::cli::register_eval_commands(app);

    try {
        std::vector<std::string> args = lumen::cli::expand_config_args(argc, argv);
        std::reverse(args.begin(), args.end());  // the vector overload wants it reversed
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "lumen: %s\n", e.what());
        return 1;
    }
    return 0;
}
