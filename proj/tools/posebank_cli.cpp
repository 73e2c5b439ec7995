// Command-line front end: exemplar selection, incremental schedules, pose
// warping augmentation, PCK scoring, and diversity reports over COCO-style
// keypoint annotations.
//
// Exit codes: 0 success, 1 configuration/parse error, 2 numeric/integrity
// error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "posebank/posebank.hpp"

namespace {

using namespace posebank;

struct SelectArgs {
    std::string annotations;
    std::string class_label;
    std::size_t count = 0;
    std::string strategy = "rbf_kdpp";
    double gamma = 50.0;
    std::uint64_t seed = 0;
    std::string scaling = "bbox";
    std::string output;
};

struct RunArgs {
    std::string annotations;
    std::string config;
    std::string output_dir;
    std::string images_dir;
    std::optional<std::uint64_t> seed_override;
};

struct AugmentArgs {
    std::string annotations;
    std::string images_dir;
    std::string output_dir;
    std::string manifest;
    double max_angle = 15.0;
    double inpaint_radius = 3.0;
    int crop_size = 512;
    bool no_crop = false;
    std::uint64_t seed = 0;
};

struct ScoreArgs {
    std::string annotations;
    std::string predictions;
    double tau = 0.05;
    std::string output;
};

struct ReportArgs {
    std::string annotations;
    std::string manifest;
    std::string kernel = "rbf";
    double gamma = 50.0;
};

FeatureScaling parse_scaling(const std::string& s) {
    if (s == "bbox" || s == "bbox_normalized") return FeatureScaling::bbox_normalized;
    if (s == "pixel") return FeatureScaling::pixel;
    throw ParameterError("unknown scaling '" + s + "' (expected bbox or pixel)");
}

int run_select(const SelectArgs& args) {
    const Dataset ds = load_annotations(args.annotations);
    auto it = ds.by_class.find(args.class_label);
    if (it == ds.by_class.end()) {
        throw ParameterError("class '" + args.class_label + "' not present in the annotations");
    }
    SamplerStrategy strategy;
    strategy.kind = strategy_kind_from_string(args.strategy);
    strategy.gamma = args.gamma;
    strategy.seed = args.seed;
    strategy.scaling = parse_scaling(args.scaling);

    const Selection sel = select_exemplars(it->second, args.count, strategy);
    for (const auto& id : sel.ids) std::cout << id << "\n";
    if (sel.rank_fallback) {
        std::cerr << "warning: requested count exceeded the kernel rank; "
                     "lowest-index fill applied\n";
    }
    if (!args.output.empty()) {
        nlohmann::json j;
        j["class"] = args.class_label;
        j["strategy"] = strategy_to_json(strategy);
        j["ids"] = sel.ids;
        j["rank_fallback"] = sel.rank_fallback;
        std::ofstream out(args.output, std::ios::binary);
        if (!out) throw ParseError("cannot open output file: " + args.output);
        out << j.dump(2) << "\n";
    }
    return 0;
}

int run_run(const RunArgs& args) {
    const Dataset ds = load_annotations(args.annotations);
    ExperimentSchedule schedule = load_schedule(args.config);
    if (args.seed_override) schedule.seed = *args.seed_override;

    RunOptions options;
    options.output_dir = args.output_dir;
    options.images_dir = args.images_dir;
    const auto reports = run_schedule(ds, schedule, options);

    write_metrics_csv(reports,
                      (std::filesystem::path(args.output_dir) / "metrics.csv").string());
    write_plot_series(reports, args.output_dir);

    for (const StepReport& report : reports) {
        std::size_t stored = 0;
        for (const auto& [label, d] : report.per_class) stored += d.stored;
        std::cout << "step " << report.step << ": classes=" << report.classes_seen.size()
                  << " stored=" << stored << " manifest=" << report.manifest_path << " ("
                  << report.wall_ms << " ms)\n";
    }
    return 0;
}

int run_augment(const AugmentArgs& args) {
    const Dataset ds = load_annotations(args.annotations);
    const InstanceCatalog catalog = ds.catalog();
    const Skeleton skeleton = animal_pose_skeleton();

    std::vector<std::string> ids;
    if (!args.manifest.empty()) {
        const Manifest manifest = read_manifest(args.manifest);
        for (const auto& [label, class_ids] : manifest.memory.per_class) {
            ids.insert(ids.end(), class_ids.begin(), class_ids.end());
        }
    } else {
        for (const auto& [label, insts] : ds.by_class) {
            for (const auto& inst : insts) ids.push_back(inst.id);
        }
    }

    std::filesystem::create_directories(args.output_dir);
    WarpAugmentConfig cfg;
    cfg.max_angle_deg = args.max_angle;
    cfg.inpaint_radius = args.inpaint_radius;

    nlohmann::json sidecar = nlohmann::json::array();
    std::size_t written = 0;
    std::size_t skipped = 0;
    for (const auto& id : ids) {
        auto cat_it = catalog.find(id);
        if (cat_it == catalog.end()) {
            throw IntegrityError("manifest id '" + id + "' missing from the annotations");
        }
        PoseInstance inst = cat_it->second;
        if (inst.image_ref.empty()) {
            ++skipped;
            continue;
        }
        const std::filesystem::path img_path =
            std::filesystem::path(args.images_dir) / inst.image_ref;
        if (!std::filesystem::exists(img_path)) {
            ++skipped;
            continue;
        }
        ImageGrid img = read_pnm(img_path.string());
        if (!args.no_crop) {
            auto cropped = square_crop(img, inst.bbox, args.crop_size, inst);
            img = std::move(cropped.first);
            inst = std::move(cropped.second);
        }
        Rng rng(mix64(args.seed, fnv1a(id)));
        const auto result = warp_pose_image(img, inst, skeleton, rng, cfg);
        if (!result) {
            ++skipped;
            continue;
        }
        const std::string out_name = id + "_warp.ppm";
        write_pnm(result->first, (std::filesystem::path(args.output_dir) / out_name).string());

        nlohmann::json rec;
        rec["source_id"] = id;
        rec["class"] = result->second.class_label;
        rec["file_name"] = out_name;
        nlohmann::json kps = nlohmann::json::array();
        for (const Keypoint& kp : result->second.keypoints) {
            kps.push_back(kp.x);
            kps.push_back(kp.y);
            kps.push_back(kp.v);
        }
        rec["keypoints"] = kps;
        rec["bbox"] = {result->second.bbox.x, result->second.bbox.y, result->second.bbox.width,
                       result->second.bbox.height};
        sidecar.push_back(rec);
        ++written;
    }
    std::ofstream side(std::filesystem::path(args.output_dir) / "annotations.json",
                       std::ios::binary);
    side << sidecar.dump(2) << "\n";
    std::cout << "augmented " << written << " instance(s), skipped " << skipped << "\n";
    return 0;
}

int run_score(const ScoreArgs& args) {
    const Dataset ds = load_annotations(args.annotations);
    const auto predictions = load_predictions(args.predictions);
    std::vector<PoseInstance> ground_truth;
    for (const auto& [label, insts] : ds.by_class) {
        ground_truth.insert(ground_truth.end(), insts.begin(), insts.end());
    }
    const PckResult result = pck_score(predictions, ground_truth, args.tau);
    for (const auto& [label, score] : result.per_class) {
        std::cout << label << " " << score << "\n";
    }
    std::cout << "overall " << result.overall << "\n";
    if (result.missing_predictions > 0) {
        std::cerr << "warning: " << result.missing_predictions
                  << " instance(s) had no prediction\n";
    }
    if (!args.output.empty()) {
        std::ofstream out(args.output, std::ios::binary);
        if (!out) throw ParseError("cannot open output file: " + args.output);
        out << "class,pck\n";
        for (const auto& [label, score] : result.per_class) {
            out << label << "," << score << "\n";
        }
        out << "overall," << result.overall << "\n";
    }
    return 0;
}

int run_report(const ReportArgs& args) {
    const Dataset ds = load_annotations(args.annotations);
    const InstanceCatalog catalog = ds.catalog();
    const Manifest manifest = read_manifest(args.manifest);
    const KernelKind kind = args.kernel == "linear" ? KernelKind::linear : KernelKind::rbf;
    if (args.kernel != "linear" && args.kernel != "rbf") {
        throw ParameterError("unknown kernel '" + args.kernel + "'");
    }

    std::cout << "class stored log_det mean_pair_dist min_pair_dist\n";
    for (const auto& [label, ids] : manifest.memory.per_class) {
        if (ids.empty()) continue;
        std::vector<PoseInstance> stored;
        for (const auto& id : ids) {
            auto it = catalog.find(id);
            if (it == catalog.end()) {
                throw IntegrityError("manifest id '" + id + "' missing from the annotations");
            }
            stored.push_back(it->second);
        }
        const FeatureMatrix f = flatten_poses(stored, manifest.strategy.scaling);
        std::vector<Eigen::Index> all(stored.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Eigen::Index>(i);
        const DiversityReport report = diversity_report(f, all, kind, args.gamma);
        std::cout << label << " " << report.size << " "
                  << (report.degenerate ? std::string("degenerate")
                                        : std::to_string(report.log_det))
                  << " " << report.mean_pairwise_distance << " " << report.min_pairwise_distance
                  << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"diverse exemplar selection and pose warping for class-incremental "
                 "animal pose estimation"};
    app.require_subcommand(1);

    SelectArgs select_args;
    auto* select = app.add_subcommand("select", "one-shot exemplar selection for one class");
    select->add_option("--annotations", select_args.annotations, "COCO-style annotation file")
        ->required();
    select->add_option("--class", select_args.class_label, "class label to select from")
        ->required();
    select->add_option("--count", select_args.count, "number of exemplars")->required();
    select->add_option("--strategy", select_args.strategy,
                       "rbf_kdpp | clustered_kdpp | random | herding | reservoir | "
                       "greedy_balanced");
    select->add_option("--gamma", select_args.gamma, "rbf kernel gamma");
    select->add_option("--seed", select_args.seed, "selection seed");
    select->add_option("--scaling", select_args.scaling, "bbox | pixel feature scaling");
    select->add_option("--output", select_args.output, "write the selection as JSON");

    RunArgs run_args;
    std::uint64_t run_seed = 0;
    auto* run = app.add_subcommand("run", "execute an incremental schedule");
    run->add_option("--annotations", run_args.annotations, "COCO-style annotation file")
        ->required();
    run->add_option("--config", run_args.config, "schedule config JSON")->required();
    run->add_option("--output-dir", run_args.output_dir, "directory for manifests and metrics")
        ->required();
    run->add_option("--images-dir", run_args.images_dir,
                    "image directory (enables augmentation output)");
    auto* seed_opt = run->add_option("--seed", run_seed, "override the schedule seed");

    AugmentArgs augment_args;
    auto* augment = app.add_subcommand("augment", "warp an exemplar set with limb rotations");
    augment->add_option("--annotations", augment_args.annotations, "COCO-style annotation file")
        ->required();
    augment->add_option("--images-dir", augment_args.images_dir, "directory with P5/P6 images")
        ->required();
    augment->add_option("--output-dir", augment_args.output_dir, "output directory")->required();
    augment->add_option("--manifest", augment_args.manifest,
                        "restrict to the ids stored in this manifest");
    augment->add_option("--max-angle", augment_args.max_angle, "limb rotation bound (degrees)");
    augment->add_option("--inpaint-radius", augment_args.inpaint_radius,
                        "inpainting neighborhood radius");
    augment->add_option("--crop-size", augment_args.crop_size, "square crop size");
    augment->add_flag("--no-crop", augment_args.no_crop, "warp the full image without cropping");
    augment->add_option("--seed", augment_args.seed, "augmentation seed");

    ScoreArgs score_args;
    auto* score = app.add_subcommand("score", "PCK score from a prediction file");
    score->add_option("--annotations", score_args.annotations, "COCO-style annotation file")
        ->required();
    score->add_option("--predictions", score_args.predictions, "prediction JSON file")
        ->required();
    score->add_option("--tau", score_args.tau, "PCK threshold fraction");
    score->add_option("--output", score_args.output, "write per-class scores as CSV");

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "diversity metrics for a manifest");
    report->add_option("--annotations", report_args.annotations, "COCO-style annotation file")
        ->required();
    report->add_option("--manifest", report_args.manifest, "exemplar manifest")->required();
    report->add_option("--kernel", report_args.kernel, "rbf | linear");
    report->add_option("--gamma", report_args.gamma, "rbf kernel gamma");

    CLI11_PARSE(app, argc, argv);

    try {
        if (select->parsed()) return run_select(select_args);
        if (run->parsed()) {
            if (seed_opt->count() > 0) run_args.seed_override = run_seed;
            return run_run(run_args);
        }
        if (augment->parsed()) return run_augment(augment_args);
        if (score->parsed()) return run_score(score_args);
        if (report->parsed()) return run_report(report_args);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IntegrityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
