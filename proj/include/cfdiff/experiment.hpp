#pragma once

#include <map>
#include <string>
#include <vector>

#include "cfdiff/denoiser.hpp"
#include "cfdiff/diffusion.hpp"
#include "cfdiff/forgerylab.hpp"
#include "cfdiff/schedule.hpp"

namespace cfdiff {

struct DatasetEntry {
    std::string id;
    Image clean;
    Image forged;
    Mask mask;
};

/// Writes NNN_clean.png / NNN_forged.png / NNN_mask.png plus manifest.json.
void write_dataset(const std::vector<ForgeryCase>& cases, const DatasetRecipe& recipe,
                   const std::string& dir);
std::vector<DatasetEntry> load_dataset(const std::string& dir);

struct ExperimentConfig {
    std::string dataset_dir;
    std::string out_dir;
    PurifyConfig purify{};
    std::vector<std::string> detectors;  // default: all three
    std::vector<std::string> variants;   // subset of {orig, diff-cf, diff-cfg, median}
    int patch = 256;
    int jobs = 1;
    int median_kernel = 3;
};

struct ScoreRow {
    std::string image_id;
    std::string detector;
    std::string variant;
    double iou = 0, mcc = 0, f1 = 0, psnr = 0, ssim = 0;
};

struct ExperimentResult {
    std::vector<ScoreRow> rows;
    // dataset means, keyed [variant][detector]
    std::map<std::string, std::map<std::string, Scores>> means;
    // keyed [variant]
    std::map<std::string, double> mean_psnr, mean_ssim;
    // metric_purified - metric_orig, keyed [variant][detector]; avg_w weights
    // each detector's delta by its score on the originals
    std::map<std::string, std::map<std::string, Scores>> deltas;
    std::map<std::string, Scores> avg_w;
};

/// Full pipeline per image: tile -> purify per variant -> merge -> detect ->
/// weighted confusion -> scores -> deltas. Writes report.csv and summary.json
/// to out_dir (unless it is empty). Results are independent of `jobs`.
ExperimentResult run_experiment(const ExperimentConfig& config, const Denoiser& denoiser,
                                const NoiseSchedule& schedule);

struct SweepRow {
    std::string param;
    double value = 0;
    std::string detector;
    double delta_mcc = 0, delta_iou = 0, psnr = 0, ssim = 0;
};

/// Runs run_experiment once per axis value (axis is "t_star" or "scale") and
/// writes sweep.csv to config.out_dir.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::string& axis,
                                const std::vector<double>& values, const Denoiser& denoiser,
                                const NoiseSchedule& schedule);

}  // namespace cfdiff
