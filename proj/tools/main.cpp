#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "commands.hpp"
#include "feinfn/config.hpp"
#include "feinfn/data.hpp"
#include "feinfn/model.hpp"

namespace {

void add_common(CLI::App* sub, feinfn::cli::CommonOpts& opts, bool with_config) {
    if (with_config) sub->add_option("--config", opts.config_path, "configuration file");
    sub->add_option("--data-root", opts.data_root,
                    "dataset directory (falls back to $FEINFN_DATA_ROOT)");
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--seed", opts.seed, "override the configured seed");
    sub->add_option("--scale", opts.scale, "override the configured scale");
    sub->add_flag("--deterministic", opts.deterministic,
                  "record the run as a determinism-audited run");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"feinfn: train, evaluate, ablate, and plot hyperspectral fusion models"};
    app.require_subcommand(1);

    feinfn::cli::CommonOpts train_opts;
    CLI::App* train = app.add_subcommand("train", "train a fusion model");
    add_common(train, train_opts, true);

    feinfn::cli::CommonOpts eval_opts;
    std::string checkpoint, split = "test";
    bool bicubic_only = false;
    CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint (or the bicubic baseline)");
    add_common(eval, eval_opts, true);
    eval->add_option("--checkpoint", checkpoint, "model checkpoint to evaluate");
    eval->add_option("--split", split, "scene split: train, test, or all");
    eval->add_flag("--bicubic-only", bicubic_only, "evaluate the bicubic baseline, no model");

    feinfn::cli::CommonOpts ablate_opts;
    std::string variant = "all";
    CLI::App* ablate = app.add_subcommand("ablate", "run an ablation matrix");
    add_common(ablate, ablate_opts, true);
    ablate->add_option("--variant", variant,
                       "all, a group (upsample|domain|activation), or group:member");

    std::string plot_out;
    std::vector<std::string> run_dirs;
    CLI::App* plot = app.add_subcommand("plot", "render figures from run manifests");
    plot->add_option("--out", plot_out, "output directory");
    plot->add_option("runs", run_dirs, "run directories containing manifest.json");

    CLI11_PARSE(app, argc, argv);
    for (auto [sub, opts] : {std::pair{train, &train_opts}, std::pair{eval, &eval_opts},
                             std::pair{ablate, &ablate_opts}}) {
        opts->seed_set = sub->count("--seed") > 0;
        opts->scale_set = sub->count("--scale") > 0;
    }

    try {
        if (train->parsed()) return feinfn::cli::cmd_train(train_opts);
        if (eval->parsed()) return feinfn::cli::cmd_eval(eval_opts, checkpoint, split, bicubic_only);
        if (ablate->parsed()) return feinfn::cli::cmd_ablate(ablate_opts, variant);
        if (plot->parsed()) return feinfn::cli::cmd_plot(run_dirs, plot_out);
    } catch (const feinfn::cli::ToolError& e) {
        std::fprintf(stderr, "error: %s\n", e.message.c_str());
        return e.exit_code;
    } catch (const feinfn::NonFiniteLossError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const feinfn::DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const feinfn::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
