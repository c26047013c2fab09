#include "cli_util.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lumen/common.hpp"
#include "lumen/evalsuite.hpp"

namespace fs = std::filesystem;

namespace lumen::cli {

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void RunRecord::write(const std::string &dir) const {
    njson j;
    j["version"] = kVersion;
    j["subcommand"] = subcommand;
    j["config"] = config;
    if (!results.empty()) j["results"] = results;
    njson hashes = njson::object();
    for (const auto &[label, path] : artifacts) {
        fs::path p = path.empty() ? fs::path(dir) / label : fs::path(path);
        hashes[label] = hash_hex(file_fnv1a64(p.string()));
    }
    j["artifacts"] = hashes;

    fs::create_directories(dir);
    fs::path out = fs::path(dir) / "run.json";
    std::ofstream f(out);
    f << j.dump(2) << '\n';
    if (!f)
        throw ResourceError("run record: cannot write '" + out.string() + "'");
}

// ---------------------------------------------------------------------------

namespace {

std::string scalar_to_string(const njson &v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();  // numbers keep their literal form
}

}  // namespace

std::vector<std::string> expand_config_args(int argc, char **argv) {
    std::vector<std::string> args(argv + 1, argv + argc);

    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size())
            config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0)
            config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;

    std::ifstream f(config_path);
    if (!f) throw CLI::FileError("config file '" + config_path + "' is not readable");
    njson j;
    try {
        j = njson::parse(f);
    } catch (const njson::exception &e) {
        throw CLI::ConfigError("config file '" + config_path + "' is not valid JSON: " +
                               e.what());
    }
    if (!j.is_object())
        throw CLI::ConfigError("config file '" + config_path + "' must hold a JSON object");

    auto given = [&](const std::string &name) {
        std::string flag = "--" + name;
        for (const auto &a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
        return false;
    };

    for (const auto &[key, value] : j.items()) {
        if (key == "config")
            throw CLI::ConfigError("config file '" + config_path + "': key 'config' is not allowed");
        if (value.is_object())
            throw CLI::ConfigError("config key '" + key + "': nested objects are not supported");
        if (given(key)) continue;  // command line wins
        if (value.is_array())
            for (const auto &v : value) args.push_back("--" + key + "=" + scalar_to_string(v));
        else
            args.push_back("--" + key + "=" + scalar_to_string(value));
    }
    return args;
}

void add_config_option(CLI::App *cmd) {
    cmd->add_option("--config", "JSON file with defaults for the flags below")
        ->check(CLI::ExistingFile);
}

void add_threads_option(CLI::App *cmd, int &threads) {
    cmd->add_option("--threads", threads, "Worker threads (1 = bit-exact reproducible)")
        ->envname("LUMEN_THREADS")
        ->check(CLI::PositiveNumber);
}

}  // namespace lumen::cli
