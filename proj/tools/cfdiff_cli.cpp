// cfdiff: diffusion-based counter-forensics laboratory.
//
// Subcommands: gen, train, purify, detect, eval, sweep. Flags may also be
// given through a JSON config file (--config); explicit flags win.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfdiff/denoiser.hpp"
#include "cfdiff/diffusion.hpp"
#include "cfdiff/experiment.hpp"
#include "cfdiff/forensics.hpp"
#include "cfdiff/forgerylab.hpp"
#include "cfdiff/imageio.hpp"
#include "cfdiff/schedule.hpp"
#include "cfdiff/tiler.hpp"

using namespace cfdiff;

namespace {

struct CommonOpts {
    int t_star = 40;
    bool guided = false;
    double scale = 1e6;
    std::string metric = "ssim";
    uint64_t seed = 0;
    int patch = 256;
    int jobs = 1;
    std::string out;
    int schedule_T = kDefaultSteps;
    double beta_start = kDefaultBetaStart;
    double beta_end = kDefaultBetaEnd;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--t-star", o.t_star, "Diffusion depth t*");
    cmd->add_flag("--guided", o.guided, "Use guided reverse sampling (Diff-CFG)");
    cmd->add_option("--scale", o.scale, "Base guidance scale s");
    cmd->add_option("--metric", o.metric, "Guidance metric")
        ->check(CLI::IsMember({"ssim", "mse"}));
    cmd->add_option("--seed", o.seed, "Root seed");
    cmd->add_option("--patch", o.patch, "Patch size for tiling");
    cmd->add_option("--jobs", o.jobs, "Parallel image jobs");
    cmd->add_option("--out", o.out, "Output directory / file");
    cmd->add_option("--steps", o.schedule_T, "Schedule step count T");
    cmd->add_option("--beta-start", o.beta_start, "Schedule beta_1");
    cmd->add_option("--beta-end", o.beta_end, "Schedule beta_T");
}

PurifyConfig make_purify_config(const CommonOpts& o) {
    PurifyConfig pc;
    pc.t_star = o.t_star;
    pc.guided = o.guided;
    pc.scale = o.scale;
    pc.metric = parse_metric(o.metric);
    pc.seed = o.seed;
    return pc;
}

// JSON config file: top-level keys match long flag names without the leading
// dashes ("t-star", "scale", ...). Explicit command-line flags override.
void apply_json_config(CLI::App& app, const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CLI::ValidationError("--config", "cannot open " + path);
    nlohmann::json cfg = nlohmann::json::parse(f);
    for (auto& [key, value] : cfg.items()) {
        std::string flag = "--" + key;
        for (CLI::App* sub : app.get_subcommands({})) {
            CLI::Option* opt = sub->get_option_no_throw(flag);
            if (!opt || opt->count() > 0) continue;  // unknown or explicitly set
            std::string text = value.is_string() ? value.get<std::string>() : value.dump();
            opt->add_result(text);
            opt->run_callback();
        }
    }
}

// Required-flag check deferred until after the JSON config is applied, so a
// config file may supply required values.
void require(const CLI::App* sub, const std::string& flag, const std::string& value) {
    if (sub->parsed() && value.empty())
        throw CLI::RequiredError(sub->get_name() + " " + flag);
}

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> vals;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    return vals;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cfdiff: diffusion purification counter-forensics lab"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override)");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic forged dataset");
    DatasetRecipe recipe;
    CommonOpts gen_opts;
    gen->add_option("--count", recipe.count, "Number of images");
    gen->add_option("--size", recipe.size, "Image size (square)");
    gen->add_option("--region", recipe.region_size, "Spliced region size");
    gen->add_option("--quality", recipe.target_params.quality, "Quantizer quality in (0,1]");
    gen->add_option("--noise-std", recipe.target_params.noise_std, "Sensor noise std");
    gen->add_option("--donor-noise-std", recipe.donor_params.noise_std, "Donor sensor noise std");
    gen->add_option("--grid-offset", recipe.grid_offset, "Donor grid misalignment (mod 8)");
    gen->add_option("--seed", recipe.seed, "Dataset seed");
    gen->add_option("--out", gen_opts.out, "Output directory");

    // train
    auto* train = app.add_subcommand("train", "Train the convolutional denoiser");
    TrainConfig tc;
    CommonOpts train_opts;
    int train_count = 32;
    int train_size = 96;
    double train_quality = 0.2;
    double train_noise = 0.02;
    train->add_option("--iters", tc.iterations, "Training iterations");
    train->add_option("--batch", tc.batch_size, "Batch size");
    train->add_option("--lr", tc.learning_rate, "Learning rate");
    train->add_option("--train-patch", tc.patch, "Training patch size");
    train->add_option("--count", train_count, "Clean training images to synthesize");
    train->add_option("--size", train_size, "Training image size");
    train->add_option("--quality", train_quality, "Pipeline quality for training data");
    train->add_option("--noise-std", train_noise, "Pipeline noise for training data");
    add_common(train, train_opts);

    // purify
    auto* purify_cmd = app.add_subcommand("purify", "Purify one image");
    CommonOpts purify_opts;
    std::string purify_in, purify_model;
    purify_cmd->add_option("--in", purify_in, "Input PNG");
    purify_cmd->add_option("--model", purify_model, "CFDN1 model file");
    add_common(purify_cmd, purify_opts);

    // detect
    auto* detect = app.add_subcommand("detect", "Run a trace detector");
    std::string detect_in, detect_name = "grid", detect_format = "pfm";
    CommonOpts detect_opts;
    detect->add_option("--in", detect_in, "Input PNG");
    detect->add_option("--detector", detect_name, "Detector")
        ->check(CLI::IsMember({"grid", "variance", "residual"}));
    detect->add_option("--format", detect_format, "Heatmap format")
        ->check(CLI::IsMember({"pfm", "png16"}));
    detect->add_option("--out", detect_opts.out, "Output heatmap file");

    // eval
    auto* eval = app.add_subcommand("eval", "Run the full evaluation pipeline");
    CommonOpts eval_opts;
    std::string eval_data, eval_model, eval_variants = "orig,diff-cf,diff-cfg,median";
    std::string eval_detectors = "grid,variance,residual";
    eval->add_option("--data", eval_data, "Dataset directory");
    eval->add_option("--model", eval_model, "CFDN1 model file");
    eval->add_option("--variants", eval_variants, "Comma-separated variants");
    eval->add_option("--detectors", eval_detectors, "Comma-separated detectors");
    add_common(eval, eval_opts);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Parameter sweep (t_star or scale)");
    CommonOpts sweep_opts;
    std::string sweep_data, sweep_model, sweep_axis = "t_star";
    std::string sweep_values = "10,20,40,80,160";
    std::string sweep_detectors = "grid,variance,residual";
    sweep->add_option("--data", sweep_data, "Dataset directory");
    sweep->add_option("--model", sweep_model, "CFDN1 model file");
    sweep->add_option("--axis", sweep_axis, "Sweep axis")
        ->check(CLI::IsMember({"t_star", "scale"}));
    sweep->add_option("--values", sweep_values, "Comma-separated values");
    sweep->add_option("--detectors", sweep_detectors, "Comma-separated detectors");
    add_common(sweep, sweep_opts);

    try {
        app.parse(argc, argv);
        if (!config_path.empty()) {
            apply_json_config(app, config_path);
        }
        require(gen, "--out", gen_opts.out);
        require(purify_cmd, "--in", purify_in);
        require(purify_cmd, "--model", purify_model);
        require(detect, "--in", detect_in);
        require(detect, "--out", detect_opts.out);
        require(eval, "--data", eval_data);
        require(eval, "--model", eval_model);
        require(sweep, "--data", sweep_data);
        require(sweep, "--model", sweep_model);

        auto split_names = [](const std::string& csv) {
            std::vector<std::string> names;
            std::stringstream ss(csv);
            std::string tok;
            while (std::getline(ss, tok, ','))
                if (!tok.empty()) names.push_back(tok);
            return names;
        };

        if (gen->parsed()) {
            recipe.donor_params.quality = recipe.target_params.quality;
            auto cases = generate_dataset(recipe);
            write_dataset(cases, recipe, gen_opts.out);
            std::cout << "wrote " << cases.size() << " forged images to " << gen_opts.out << "\n";
        } else if (train->parsed()) {
            if (train_opts.out.empty())
                throw CLI::ValidationError("--out", "model output path required");
            NoiseSchedule sched(train_opts.schedule_T, train_opts.beta_start,
                                train_opts.beta_end);
            PipelineParams pp;
            pp.quality = train_quality;
            pp.noise_std = train_noise;
            std::vector<Image> dataset;
            for (int i = 0; i < train_count; ++i)
                dataset.push_back(
                    synth_clean(mix64(train_opts.seed ^ (0x74726eULL + i)), train_size, pp));
            tc.seed = train_opts.seed + 1;
            ConvNetDenoiser d = train_conv_denoiser(dataset, sched, tc, &std::cout);
            save_denoiser(d, train_opts.out);
            std::cout << "saved model to " << train_opts.out << "\n";
        } else if (purify_cmd->parsed()) {
            if (purify_opts.out.empty())
                throw CLI::ValidationError("--out", "output path required");
            NoiseSchedule sched(purify_opts.schedule_T, purify_opts.beta_start,
                                purify_opts.beta_end);
            ConvNetDenoiser d = load_denoiser(purify_model);
            Image x_in = read_png(purify_in);
            PurifyConfig pc = make_purify_config(purify_opts);
            auto [patches, layout] = split_patches(x_in, purify_opts.patch);
            for (size_t p = 0; p < patches.size(); ++p) {
                GaussianRng rng(derive_stream_seed(pc.seed, 0, p));
                patches[p] = purify(patches[p], d, sched, pc, rng);
            }
            write_png(merge_patches(patches, layout), purify_opts.out);
            std::cout << "wrote " << purify_opts.out << "\n";
        } else if (detect->parsed()) {
            Image img = read_png(detect_in);
            HeatMap heat = detector_by_name(detect_name)(img);
            if (detect_format == "pfm")
                write_pfm(heat, detect_opts.out);
            else
                write_heatmap_png16(heat, detect_opts.out);
            std::cout << "wrote " << detect_opts.out << "\n";
        } else if (eval->parsed()) {
            if (eval_opts.out.empty()) throw CLI::ValidationError("--out", "output dir required");
            NoiseSchedule sched(eval_opts.schedule_T, eval_opts.beta_start, eval_opts.beta_end);
            ConvNetDenoiser d = load_denoiser(eval_model);
            ExperimentConfig ec;
            ec.dataset_dir = eval_data;
            ec.out_dir = eval_opts.out;
            ec.purify = make_purify_config(eval_opts);
            ec.detectors = split_names(eval_detectors);
            ec.variants = split_names(eval_variants);
            ec.patch = eval_opts.patch;
            ec.jobs = eval_opts.jobs;
            run_experiment(ec, d, sched);
            std::cout << "wrote report.csv and summary.json to " << eval_opts.out << "\n";
        } else if (sweep->parsed()) {
            if (sweep_opts.out.empty()) throw CLI::ValidationError("--out", "output dir required");
            NoiseSchedule sched(sweep_opts.schedule_T, sweep_opts.beta_start,
                                sweep_opts.beta_end);
            ConvNetDenoiser d = load_denoiser(sweep_model);
            ExperimentConfig ec;
            ec.dataset_dir = sweep_data;
            ec.out_dir = sweep_opts.out;
            ec.purify = make_purify_config(sweep_opts);
            ec.detectors = split_names(sweep_detectors);
            ec.patch = sweep_opts.patch;
            ec.jobs = sweep_opts.jobs;
            run_sweep(ec, sweep_axis, parse_values(sweep_values), d, sched);
            std::cout << "wrote sweep.csv to " << sweep_opts.out << "\n";
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
