#include "cfdiff/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "cfdiff/forensics.hpp"
#include "cfdiff/guidance.hpp"
#include "cfdiff/imageio.hpp"
#include "cfdiff/metrics.hpp"
#include "cfdiff/tiler.hpp"

namespace fs = std::filesystem;

namespace cfdiff {

namespace {

std::string zero_pad(int i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%03d", i);
    return buf;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

void write_dataset(const std::vector<ForgeryCase>& cases, const DatasetRecipe& recipe,
                   const std::string& dir) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["count"] = recipe.count;
    manifest["size"] = recipe.size;
    manifest["seed"] = recipe.seed;
    manifest["region_size"] = recipe.region_size;
    manifest["grid_offset"] = recipe.grid_offset;
    manifest["target_params"] = {{"bayer_phase", recipe.target_params.bayer_phase},
                                 {"quantize", recipe.target_params.quantize},
                                 {"quality", recipe.target_params.quality},
                                 {"noise_std", recipe.target_params.noise_std}};
    manifest["donor_params"] = {{"bayer_phase", recipe.donor_params.bayer_phase},
                                {"quantize", recipe.donor_params.quantize},
                                {"quality", recipe.donor_params.quality},
                                {"noise_std", recipe.donor_params.noise_std}};
    auto images = nlohmann::json::array();
    for (size_t i = 0; i < cases.size(); ++i) {
        std::string id = zero_pad(static_cast<int>(i));
        write_png(cases[i].clean, dir + "/" + id + "_clean.png");
        write_png(cases[i].forged, dir + "/" + id + "_forged.png");
        write_mask_png(cases[i].mask, dir + "/" + id + "_mask.png");
        images.push_back({{"id", id},
                          {"clean", id + "_clean.png"},
                          {"forged", id + "_forged.png"},
                          {"mask", id + "_mask.png"},
                          {"clean_seed", cases[i].clean_seed},
                          {"donor_seed", cases[i].donor_seed},
                          {"region",
                           {{"y", cases[i].spec.y + cases[i].spec.offset_y},
                            {"x", cases[i].spec.x + cases[i].spec.offset_x},
                            {"h", cases[i].spec.h},
                            {"w", cases[i].spec.w}}}});
    }
    manifest["images"] = images;
    std::ofstream f(dir + "/manifest.json");
    f << manifest.dump(2) << "\n";
    if (!f) throw std::runtime_error("write_dataset: cannot write manifest in " + dir);
}

std::vector<DatasetEntry> load_dataset(const std::string& dir) {
    std::ifstream f(dir + "/manifest.json");
    if (!f) throw std::runtime_error("load_dataset: missing manifest.json in " + dir);
    nlohmann::json manifest = nlohmann::json::parse(f);
    std::vector<DatasetEntry> entries;
    for (const auto& e : manifest.at("images")) {
        DatasetEntry d;
        d.id = e.at("id").get<std::string>();
        d.clean = read_png(dir + "/" + e.at("clean").get<std::string>());
        d.forged = read_png(dir + "/" + e.at("forged").get<std::string>());
        d.mask = read_mask_png(dir + "/" + e.at("mask").get<std::string>());
        entries.push_back(std::move(d));
    }
    if (entries.empty()) throw std::runtime_error("load_dataset: empty dataset in " + dir);
    return entries;
}

namespace {

Image purify_variant(const std::string& variant, const Image& forged, size_t image_index,
                     const ExperimentConfig& config, const Denoiser& denoiser,
                     const NoiseSchedule& schedule) {
    if (variant == "orig") return forged;
    if (variant == "median") return median_purify(forged, config.median_kernel);

    PurifyConfig pc = config.purify;
    pc.guided = variant == "diff-cfg";
    auto [patches, layout] = split_patches(forged, config.patch);
    for (size_t p = 0; p < patches.size(); ++p) {
        GaussianRng rng(derive_stream_seed(config.purify.seed, image_index, p));
        patches[p] = purify(patches[p], denoiser, schedule, pc, rng);
    }
    return merge_patches(patches, layout);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const Denoiser& denoiser,
                                const NoiseSchedule& schedule) {
    auto entries = load_dataset(config.dataset_dir);
    std::vector<std::string> detectors =
        config.detectors.empty() ? all_detector_names() : config.detectors;
    std::vector<std::string> variants =
        config.variants.empty() ? std::vector<std::string>{"orig", "diff-cf"} : config.variants;
    for (const auto& v : variants)
        if (v != "orig" && v != "diff-cf" && v != "diff-cfg" && v != "median")
            throw std::invalid_argument("run_experiment: unknown variant '" + v + "'");
    for (const auto& d : detectors) detector_by_name(d);  // validate early

    const size_t n_img = entries.size();
    std::vector<std::vector<ScoreRow>> per_image(n_img);

    std::atomic<size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error_msg;
    std::mutex error_mu;

    auto worker = [&]() {
        SsimParams iqa_ssim;
        iqa_ssim.dynamic_range = 1.0;  // [0,1]-stored images
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= n_img || failed.load()) break;
            const DatasetEntry& e = entries[i];
            std::string stage = "start";
            try {
                Image forged_unit = to_unit_range(e.forged);
                for (const auto& variant : variants) {
                    stage = "purify[" + variant + "]";
                    Image purified =
                        purify_variant(variant, e.forged, i, config, denoiser, schedule);
                    Image purified_unit = to_unit_range(purified);
                    stage = "iqa[" + variant + "]";
                    double p = psnr(purified_unit, forged_unit, 1.0, 80.0);
                    double s = ssim(purified_unit, forged_unit, iqa_ssim);
                    for (const auto& det : detectors) {
                        stage = "detect[" + det + "," + variant + "]";
                        HeatMap heat = detector_by_name(det)(purified);
                        Scores sc = score(weighted_confusion(heat, e.mask));
                        per_image[i].push_back(
                            {e.id, det, variant, sc.iou, sc.mcc, sc.f1, p, s});
                    }
                }
            } catch (const std::exception& ex) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!failed.exchange(true))
                    error_msg = "image " + e.id + ", stage " + stage + ": " + ex.what();
            }
        }
    };

    int jobs = std::max(1, config.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw std::runtime_error("run_experiment: " + error_msg);

    ExperimentResult result;
    // rows ordered image -> detector -> variant for a stable CSV
    for (size_t i = 0; i < n_img; ++i)
        for (const auto& det : detectors)
            for (const auto& variant : variants)
                for (const auto& row : per_image[i])
                    if (row.detector == det && row.variant == variant) result.rows.push_back(row);

    for (const auto& variant : variants) {
        double psum = 0, ssum = 0;
        for (const auto& det : detectors) {
            Scores acc;
            size_t n = 0;
            for (const auto& row : result.rows)
                if (row.detector == det && row.variant == variant) {
                    acc.iou += row.iou;
                    acc.mcc += row.mcc;
                    acc.f1 += row.f1;
                    ++n;
                }
            acc.iou /= n;
            acc.mcc /= n;
            acc.f1 /= n;
            result.means[variant][det] = acc;
        }
        size_t n = 0;
        for (const auto& row : result.rows)
            if (row.variant == variant && row.detector == detectors.front()) {
                psum += row.psnr;
                ssum += row.ssim;
                ++n;
            }
        result.mean_psnr[variant] = psum / n;
        result.mean_ssim[variant] = ssum / n;
    }

    bool have_orig = std::find(variants.begin(), variants.end(), "orig") != variants.end();
    if (have_orig) {
        for (const auto& variant : variants) {
            if (variant == "orig") continue;
            std::map<std::string, double> before_iou, after_iou, before_mcc, after_mcc,
                before_f1, after_f1;
            for (const auto& det : detectors) {
                const Scores& b = result.means["orig"][det];
                const Scores& a = result.means[variant][det];
                result.deltas[variant][det] = {a.iou - b.iou, a.mcc - b.mcc, a.f1 - b.f1};
                before_iou[det] = b.iou;
                after_iou[det] = a.iou;
                before_mcc[det] = b.mcc;
                after_mcc[det] = a.mcc;
                before_f1[det] = b.f1;
                after_f1[det] = a.f1;
            }
            result.avg_w[variant] = {delta_report(before_iou, after_iou).avg_w,
                                     delta_report(before_mcc, after_mcc).avg_w,
                                     delta_report(before_f1, after_f1).avg_w};
        }
    }

    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        std::ofstream csv(config.out_dir + "/report.csv");
        csv << "image_id,detector,variant,iou,mcc,f1,psnr,ssim\n";
        for (const auto& r : result.rows)
            csv << r.image_id << "," << r.detector << "," << r.variant << "," << fmt(r.iou) << ","
                << fmt(r.mcc) << "," << fmt(r.f1) << "," << fmt(r.psnr) << "," << fmt(r.ssim)
                << "\n";
        if (!csv) throw std::runtime_error("run_experiment: cannot write report.csv");

        nlohmann::json summary;
        summary["detectors"] = detectors;
        summary["variants"] = variants;
        summary["note"] =
            "weighted confusion uses the standard FP/FN assignment; IoU, F1 and MCC are "
            "invariant under the FP<->FN relabeling";
        for (const auto& [variant, dets] : result.means)
            for (const auto& [det, sc] : dets)
                summary["means"][variant][det] = {
                    {"iou", sc.iou}, {"mcc", sc.mcc}, {"f1", sc.f1}};
        for (const auto& [variant, v] : result.mean_psnr) summary["iqa"][variant]["psnr"] = v;
        for (const auto& [variant, v] : result.mean_ssim) summary["iqa"][variant]["ssim"] = v;
        for (const auto& [variant, dets] : result.deltas)
            for (const auto& [det, sc] : dets)
                summary["deltas"][variant][det] = {
                    {"iou", sc.iou}, {"mcc", sc.mcc}, {"f1", sc.f1}};
        for (const auto& [variant, sc] : result.avg_w)
            summary["avg_w"][variant] = {{"iou", sc.iou}, {"mcc", sc.mcc}, {"f1", sc.f1}};
        std::ofstream js(config.out_dir + "/summary.json");
        js << summary.dump(2) << "\n";
        if (!js) throw std::runtime_error("run_experiment: cannot write summary.json");
    }
    return result;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, const std::string& axis,
                                const std::vector<double>& values, const Denoiser& denoiser,
                                const NoiseSchedule& schedule) {
    if (axis != "t_star" && axis != "scale")
        throw std::invalid_argument("run_sweep: axis must be t_star or scale");
    if (values.empty()) throw std::invalid_argument("run_sweep: no sweep values");

    std::string variant = config.purify.guided ? "diff-cfg" : "diff-cf";
    std::vector<SweepRow> rows;
    for (double value : values) {
        ExperimentConfig c = config;
        c.variants = {"orig", variant};
        if (axis == "t_star")
            c.purify.t_star = static_cast<int>(value);
        else
            c.purify.scale = value;
        if (!config.out_dir.empty()) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%s_%g", axis.c_str(), value);
            c.out_dir = config.out_dir + "/" + buf;
        }
        ExperimentResult r = run_experiment(c, denoiser, schedule);
        for (const auto& [det, sc] : r.deltas[variant])
            rows.push_back({axis, value, det, sc.mcc, sc.iou, r.mean_psnr[variant],
                            r.mean_ssim[variant]});
    }

    if (!config.out_dir.empty()) {
        fs::create_directories(config.out_dir);
        std::ofstream csv(config.out_dir + "/sweep.csv");
        csv << "param,value,detector,delta_mcc,delta_iou,psnr,ssim\n";
        for (const auto& r : rows)
            csv << r.param << "," << fmt(r.value) << "," << r.detector << "," << fmt(r.delta_mcc)
                << "," << fmt(r.delta_iou) << "," << fmt(r.psnr) << "," << fmt(r.ssim) << "\n";
        if (!csv) throw std::runtime_error("run_sweep: cannot write sweep.csv");
    }
    return rows;
}

}  // namespace cfdiff
