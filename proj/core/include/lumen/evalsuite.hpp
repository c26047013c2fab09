#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lumen/manifest.hpp"

namespace lumen {

// One test observation scored under one method.
struct EvalItem {
    std::size_t row = 0;  // obs manifest row
    double rmse = 0, si_rmse = 0, mae = 0, mre = 0, relight_rmse = 0, alpha = 0;
};

// Aggregate over the split's items for one object x material x method cell;
// the scalar fields are means over `items`.
struct EvalRow {
    std::string object, material, method;
    double rmse = 0, si_rmse = 0, mae = 0, mre = 0, relight_rmse = 0, alpha = 0;
    std::vector<EvalItem> items;
};

// Methods: "predictor" (needs ae_path + ip_path), "sh" or "sh:L" (transport
// least squares from the HDR render), "mean" (training-mean envmap), and
// "oracle" (ground truth back through the metrics; all-zero sanity row).
struct EvalConfig {
    std::vector<std::string> methods{"sh:5"};
    std::string ae_path, ip_path;
    double lambda = -1.0;  // ridge strength for sh fits; < 0 = solver default
    int relight_size = 64;
    Split split = Split::test;
    int n_threads = 1;
};

struct EvalReport {
    std::string object;
    std::string split;
    std::vector<std::string> methods;
    double lambda = -1.0;
    std::uint64_t dataset_seed = 0;
    std::string ae_path, ip_path;
    std::uint64_t ae_hash = 0, ip_hash = 0;  // FNV-1a of the checkpoint bytes
    int relight_size = 64;
    std::vector<EvalRow> rows;
};

EvalReport eval_suite(const ObsManifest &m, const std::string &obs_dir, const EvalConfig &cfg);

// CSV with the fixed header object,material,method,rmse,si_rmse,mae,mre,
// relight_rmse,alpha — aggregates only. Per-item numbers and provenance go
// in the JSON mirror.
void write_eval_csv(const EvalReport &r, const std::string &path);
void write_eval_json(const EvalReport &r, const std::string &path);

std::uint64_t file_fnv1a64(const std::string &path);  // ResourceError if unreadable

}  // namespace lumen
