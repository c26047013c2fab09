#pragma once

#include <CLI11.hpp>

namespace lumen::cli {

void register_data_commands(CLI::App &app);    // gen-scenes, augment, render-dataset
void register_model_commands(CLI::App &app);   // train-ae, train-ip, encode, decode, predict
void register_sh_commands(CLI::App &app);      // project-sh, fit-sh, relight
void register_eval_commands(CLI::App &app);    // eval, selftest

}  // namespace lumen::cli
