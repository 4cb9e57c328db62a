#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ashe/commands.hpp"
#include "ashe/errors.hpp"
#include "ashe/gemm.hpp"

namespace {

struct CliState {
    std::string config_path;
    std::string out_dir;
    std::optional<uint64_t> seed;
};

ashe::RunConfig resolve_config(const CliState& st) {
    ashe::RunConfig cfg;
    if (!st.config_path.empty()) cfg = ashe::load_config_file(st.config_path);
    if (st.seed) cfg.seed = *st.seed;
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    ashe::set_blas_threads(1);

    CLI::App app{"Substrate reload simulator: scene synthesis, macro/micro "
                 "placement detectors, training, and closed-loop campaigns"};
    app.require_subcommand(1);
    app.fallthrough();

    CliState st;
    app.add_option("--config", st.config_path, "JSON run configuration");
    uint64_t seed_val = 0;
    auto* seed_opt = app.add_option("--seed", seed_val, "master seed override");
    app.add_option("--out", st.out_dir, "output directory override");

    auto* synth = app.add_subcommand("synth", "render the labeled base dataset");
    double scale = 1.0;
    std::optional<int> failures, successes;
    synth->add_option("--scale", scale, "scale both class counts");
    synth->add_option("--failures", failures, "failure base count override");
    synth->add_option("--successes", successes, "success base count override");

    auto* train = app.add_subcommand("train", "train the micro-error classifier");
    std::string data_dir, model_path;
    train->add_option("--data", data_dir, "dataset directory");
    train->add_option("--model", model_path, "weight file to write");

    auto* matrix =
        app.add_subcommand("matrix", "evaluate the placement-error matrix");
    matrix->add_option("--model", model_path, "weight file to load");

    auto* detect = app.add_subcommand("detect", "classify one commanded pose");
    double dx = 0.0, dy = 0.0, theta = 0.0;
    int frames = -1;
    bool no_cnn = false;
    detect->add_option("--dx", dx, "x offset, mm");
    detect->add_option("--dy", dy, "y offset, mm");
    detect->add_option("--theta", theta, "rotation, degrees");
    detect->add_option("--frames", frames, "frames to aggregate");
    detect->add_option("--model", model_path, "weight file to load");
    detect->add_flag("--no-cnn", no_cnn, "macro detector only");

    auto* campaign =
        app.add_subcommand("campaign", "run the closed-loop reload campaign");
    std::optional<int> trials, forced_failures;
    std::optional<double> p_gross;
    campaign->add_option("--trials", trials, "trial count override");
    campaign->add_option("--p-gross", p_gross, "gross misplacement probability");
    campaign->add_option("--forced-failures", forced_failures,
                         "force large-band failures on the first N trials");
    campaign->add_option("--model", model_path, "weight file to load");

    auto* report = app.add_subcommand("report", "summarize a campaign directory");
    std::string in_dir;
    report->add_option("--in", in_dir, "campaign output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int r = app.exit(e);
        return r == 0 ? 0 : static_cast<int>(ashe::kExitConfig);
    }

    try {
        if (seed_opt->count() > 0) st.seed = seed_val;
        ashe::RunConfig cfg = resolve_config(st);

        if (synth->parsed()) {
            const std::string out =
                st.out_dir.empty() ? cfg.paths.data_dir : st.out_dir;
            return ashe::cmd_synth(cfg, out, failures, successes, scale);
        }
        if (train->parsed()) {
            if (data_dir.empty()) data_dir = cfg.paths.data_dir;
            if (model_path.empty()) model_path = cfg.paths.model_path;
            return ashe::cmd_train(cfg, data_dir, model_path);
        }
        if (matrix->parsed()) {
            if (model_path.empty()) model_path = cfg.paths.model_path;
            const std::string out =
                st.out_dir.empty() ? cfg.paths.out_dir : st.out_dir;
            return ashe::cmd_matrix(cfg, model_path, out);
        }
        if (detect->parsed()) {
            if (model_path.empty()) model_path = cfg.paths.model_path;
            if (frames < 1) frames = cfg.gm.frames;
            const ashe::PoseError pose{dx, dy, theta};
            pose.validate();
            return ashe::cmd_detect(cfg, pose, frames, model_path, !no_cnn,
                                    st.out_dir);
        }
        if (campaign->parsed()) {
            if (model_path.empty()) model_path = cfg.paths.model_path;
            if (trials) cfg.campaign.n_trials = *trials;
            if (p_gross) cfg.campaign.p_gross = *p_gross;
            if (forced_failures) {
                if (*forced_failures < 0 ||
                    *forced_failures > cfg.campaign.n_trials)
                    throw ashe::ConfigError(
                        "campaign: --forced-failures out of range");
                cfg.campaign.forced.clear();
                for (int t = 0; t < *forced_failures; ++t) {
                    ashe::ForcedFailure f;
                    f.trial = t;
                    f.pose = ashe::sample_pose_error(
                        ashe::Band::Large, ashe::Kind::Combined,
                        ashe::rng_stream(cfg.seed, "forced",
                                         static_cast<uint64_t>(t)));
                    cfg.campaign.forced.push_back(f);
                }
            }
            cfg.campaign.validate();
            const std::string out =
                st.out_dir.empty() ? cfg.paths.out_dir : st.out_dir;
            return ashe::cmd_campaign(cfg, model_path, out);
        }
        if (report->parsed()) {
            if (in_dir.empty()) in_dir = cfg.paths.out_dir;
            return ashe::cmd_report(in_dir);
        }
        throw ashe::ConfigError("no subcommand selected");
    } catch (const ashe::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return static_cast<int>(ashe::kExitConfig);
    } catch (const ashe::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return static_cast<int>(ashe::kExitData);
    } catch (const ashe::ContractError& e) {
        std::fprintf(stderr, "contract violation: %s\n", e.what());
        return static_cast<int>(ashe::kExitContract);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(ashe::kExitContract);
    }
}
