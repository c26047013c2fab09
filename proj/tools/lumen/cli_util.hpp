#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace lumen::cli {

using njson = nlohmann::ordered_json;

// Provenance record written next to every subcommand's outputs: the fully
// resolved configuration plus an FNV-1a hash per artifact. No timestamps, so
// identical runs produce identical bytes.
struct RunRecord {
    std::string subcommand;
    njson config = njson::object();
    njson results = njson::object();  // optional, e.g. final training losses

    // label -> path on disk; an empty path means <dir>/<label>.
    std::vector<std::pair<std::string, std::string>> artifacts;

    void add_artifact(const std::string &label, const std::string &path = "") {
        artifacts.emplace_back(label, path);
    }
    // Hashes every artifact and writes <dir>/run.json.
    void write(const std::string &dir) const;
};

std::string hash_hex(std::uint64_t h);

// Flat-JSON config files for --config: {"flag-name": value}. Values may be
// scalars or arrays (arrays feed multi-value options). CLI11 only applies
// config files to the root command, so configs are expanded before parsing
// instead: each key becomes an injected "--key=value" argument unless that
// flag is already present on the command line (flags override the file).
std::vector<std::string> expand_config_args(int argc, char **argv);

// Installs the --config option (documentation + validation; the expansion
// above does the actual work).
void add_config_option(CLI::App *cmd);

// Shared --threads option: defaults to LUMEN_THREADS, then 1.
void add_threads_option(CLI::App *cmd, int &threads);

}  // namespace lumen::cli
