#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace feinfn::cli {

/// Failure carrying the process exit code (1 config/usage, 2 data,
/// 3 non-finite loss).
struct ToolError {
    int exit_code;
    std::string message;
};

struct CommonOpts {
    std::string config_path;
    std::string data_root;  // empty: fall back to $FEINFN_DATA_ROOT
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    double scale = 0.0;
    bool scale_set = false;
    bool deterministic = false;
};

int cmd_train(const CommonOpts& opts);
int cmd_eval(const CommonOpts& opts, const std::string& checkpoint, const std::string& split,
             bool bicubic_only);
int cmd_ablate(const CommonOpts& opts, const std::string& variant);
int cmd_plot(const std::vector<std::string>& run_dirs, const std::string& out_dir);

}  // namespace feinfn::cli
