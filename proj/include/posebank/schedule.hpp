#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "posebank/augment.hpp"
#include "posebank/coco.hpp"
#include "posebank/errors.hpp"
#include "posebank/memory.hpp"
#include "posebank/metrics.hpp"
#include "posebank/rng.hpp"

namespace posebank {

struct AugmentationConfig {
    double max_angle_deg = 15.0;
    double inpaint_radius = 3.0;
};

// Ordered class groups per incremental step plus memory and strategy
// configuration. Stage 0 is the base group.
struct ExperimentSchedule {
    std::vector<std::string> base_classes;
    std::vector<std::vector<std::string>> steps;
    MemoryMode memory_mode = MemoryMode::fixed;
    std::size_t budget = 1000;
    double fraction = 0.1;
    SamplerStrategy strategy;
    std::optional<AugmentationConfig> augmentation;
    std::uint64_t seed = 0;

    void validate() const {
        if (base_classes.empty()) {
            throw ParameterError("schedule: base class group is empty");
        }
        if (memory_mode == MemoryMode::fixed && budget == 0) {
            throw ParameterError("schedule: fixed memory requires a positive budget");
        }
        if (memory_mode == MemoryMode::growing && (!(fraction > 0.0) || fraction > 1.0)) {
            throw ParameterError("schedule: growing fraction must be in (0, 1]");
        }
        std::set<std::string> seen;
        auto check_group = [&seen](const std::vector<std::string>& group) {
            for (const auto& label : group) {
                if (!seen.insert(label).second) {
                    throw ParameterError("schedule: class '" + label +
                                         "' appears in more than one group");
                }
            }
        };
        check_group(base_classes);
        for (const auto& group : steps) check_group(group);
        strategy.validate();
    }
};

struct ClassDiversity {
    std::size_t stored = 0;
    double log_det = 0.0;
    bool degenerate = false;
    double mean_pairwise_distance = 0.0;
    double min_pairwise_distance = 0.0;
};

struct StepReport {
    std::size_t step = 0;
    std::vector<std::string> classes_seen;
    std::map<std::string, ClassDiversity> per_class;
    double wall_ms = 0.0;
    std::string manifest_path;
};

// ---- schedule config file ---------------------------------------------------

inline ExperimentSchedule schedule_from_json(const nlohmann::json& j) {
    ExperimentSchedule s;
    try {
        s.base_classes = j.at("base_classes").get<std::vector<std::string>>();
        if (j.contains("steps")) {
            s.steps = j.at("steps").get<std::vector<std::vector<std::string>>>();
        }
        const auto& mem = j.at("memory");
        const std::string mode = mem.at("mode").get<std::string>();
        if (mode == "fixed") {
            s.memory_mode = MemoryMode::fixed;
            s.budget = mem.at("budget").get<std::size_t>();
        } else if (mode == "growing") {
            s.memory_mode = MemoryMode::growing;
            s.fraction = mem.at("fraction").get<double>();
        } else {
            throw SchemaError("schedule: unknown memory mode '" + mode + "'");
        }
        s.strategy = strategy_from_json(j.at("strategy"));
        if (j.contains("augmentation") && !j.at("augmentation").is_null()) {
            AugmentationConfig aug;
            aug.max_angle_deg = j.at("augmentation").value("max_angle_deg", 15.0);
            aug.inpaint_radius = j.at("augmentation").value("inpaint_radius", 3.0);
            s.augmentation = aug;
        }
        s.seed = j.value("seed", std::uint64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("schedule config: ") + e.what());
    }
    s.validate();
    return s;
}

inline ExperimentSchedule load_schedule(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open schedule config: " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("schedule config '" + path + "': " + e.what());
    }
    return schedule_from_json(j);
}

struct RunOptions {
    std::string output_dir;
    std::string images_dir;  // enables augmentation output when set
    int expected_keypoints = 17;
};

namespace detail {

inline ClassData collect_group(const Dataset& dataset, const std::vector<std::string>& group) {
    ClassData data;
    for (const auto& label : group) {
        auto it = dataset.by_class.find(label);
        if (it == dataset.by_class.end()) {
            throw ParameterError("schedule references unknown class '" + label + "'");
        }
        data[label] = it->second;
    }
    return data;
}

inline void fill_diversity(StepReport& report, const ExemplarMemory& memory,
                           const InstanceCatalog& catalog, const SamplerStrategy& strategy) {
    const KernelKind kind =
        strategy.kind == StrategyKind::rbf_kdpp ? KernelKind::rbf : KernelKind::linear;
    for (const auto& [label, ids] : memory.per_class) {
        ClassDiversity d;
        d.stored = ids.size();
        if (!ids.empty()) {
            std::vector<PoseInstance> stored;
            stored.reserve(ids.size());
            for (const auto& id : ids) stored.push_back(catalog.at(id));
            const FeatureMatrix f = flatten_poses(stored, strategy.scaling);
            std::vector<Eigen::Index> all(stored.size());
            for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Eigen::Index>(i);
            const DiversityReport dr = diversity_report(f, all, kind, strategy.gamma);
            d.log_det = dr.log_det;
            d.degenerate = dr.degenerate;
            d.mean_pairwise_distance = dr.mean_pairwise_distance;
            d.min_pairwise_distance = dr.min_pairwise_distance;
        }
        report.per_class[label] = d;
    }
}

// Warps every exemplar newly selected at this stage and writes the augmented
// image next to a sidecar annotation record.
inline void emit_augmented(const ExemplarMemory& memory, const ClassData& new_data,
                           const InstanceCatalog& catalog, const ExperimentSchedule& schedule,
                           const RunOptions& options, std::size_t step,
                           nlohmann::json& sidecar) {
    const Skeleton skeleton = animal_pose_skeleton();
    WarpAugmentConfig cfg;
    cfg.max_angle_deg = schedule.augmentation->max_angle_deg;
    cfg.inpaint_radius = schedule.augmentation->inpaint_radius;
    const std::filesystem::path out_dir =
        std::filesystem::path(options.output_dir) / "augmented";
    std::filesystem::create_directories(out_dir);

    for (const auto& [label, data] : new_data) {
        auto stored_it = memory.per_class.find(label);
        if (stored_it == memory.per_class.end()) continue;
        for (const auto& id : stored_it->second) {
            const PoseInstance& inst = catalog.at(id);
            if (inst.image_ref.empty()) continue;
            const std::filesystem::path img_path =
                std::filesystem::path(options.images_dir) / inst.image_ref;
            if (!std::filesystem::exists(img_path)) continue;
            const ImageGrid img = read_pnm(img_path.string());
            if (static_cast<int>(inst.keypoints.size()) != skeleton.joint_count()) continue;
            Rng rng(mix64(mix64(schedule.seed, fnv1a(id)), step));
            auto warp = warp_pose_image(img, inst, skeleton, rng, cfg);
            if (!warp) continue;
            const std::string out_name = id + "_warp.ppm";
            write_pnm(warp->first, (out_dir / out_name).string());
            nlohmann::json rec;
            rec["source_id"] = id;
            rec["class"] = label;
            rec["step"] = step;
            rec["file_name"] = out_name;
            nlohmann::json kps = nlohmann::json::array();
            for (const Keypoint& kp : warp->second.keypoints) {
                kps.push_back(kp.x);
                kps.push_back(kp.y);
                kps.push_back(kp.v);
            }
            rec["keypoints"] = kps;
            rec["bbox"] = {warp->second.bbox.x, warp->second.bbox.y, warp->second.bbox.width,
                           warp->second.bbox.height};
            sidecar.push_back(rec);
        }
    }
}

}  // namespace detail

// Executes the incremental schedule: base stage initializes the memory, each
// step admits its class group (shrinking the old classes under a fixed
// budget), writes a manifest, and records diversity metrics. Byte-identical
// outputs for identical inputs and seed.
inline std::vector<StepReport> run_schedule(const Dataset& dataset,
                                            const ExperimentSchedule& schedule,
                                            const RunOptions& options) {
    schedule.validate();
    if (options.output_dir.empty()) {
        throw ParameterError("run_schedule: output directory required");
    }
    std::filesystem::create_directories(options.output_dir);
    const InstanceCatalog catalog = dataset.catalog();

    ExemplarMemory memory = schedule.memory_mode == MemoryMode::fixed
                                ? make_fixed_memory(schedule.budget)
                                : make_growing_memory(schedule.fraction);

    std::vector<StepReport> reports;
    nlohmann::json sidecar = nlohmann::json::array();
    const std::size_t stages = 1 + schedule.steps.size();
    for (std::size_t stage = 0; stage < stages; ++stage) {
        const auto start = std::chrono::steady_clock::now();
        const std::vector<std::string>& group =
            stage == 0 ? schedule.base_classes : schedule.steps[stage - 1];
        const ClassData new_data = detail::collect_group(dataset, group);

        SamplerStrategy stage_strategy = schedule.strategy;
        stage_strategy.seed = mix64(mix64(schedule.seed, schedule.strategy.seed), stage);
        if (schedule.memory_mode == MemoryMode::fixed) {
            memory = update_memory(memory, new_data, stage_strategy, catalog);
        } else {
            memory = growing_update(memory, new_data, schedule.fraction, stage_strategy);
        }

        StepReport report;
        report.step = stage;
        for (const auto& [label, ids] : memory.per_class) report.classes_seen.push_back(label);
        detail::fill_diversity(report, memory, catalog, stage_strategy);

        Manifest manifest{memory, stage_strategy, stage};
        const std::filesystem::path manifest_path =
            std::filesystem::path(options.output_dir) /
            ("manifest_step_" + std::to_string(stage) + ".json");
        write_manifest(manifest, manifest_path.string());
        report.manifest_path = manifest_path.string();

        if (schedule.augmentation && !options.images_dir.empty()) {
            detail::emit_augmented(memory, new_data, catalog, schedule, options, stage, sidecar);
        }

        report.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - start)
                             .count();
        reports.push_back(std::move(report));
    }

    if (schedule.augmentation && !options.images_dir.empty()) {
        std::ofstream side(std::filesystem::path(options.output_dir) / "augmented" /
                           "annotations.json");
        side << sidecar.dump(2) << "\n";
    }
    return reports;
}

// CSV metric table: one row per (step, class).
inline void write_metrics_csv(const std::vector<StepReport>& reports, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("cannot open metrics file for writing: " + path);
    }
    out << "step,class,stored,log_det,degenerate,mean_pairwise_distance,min_pairwise_distance\n";
    out << std::setprecision(17);
    for (const StepReport& report : reports) {
        for (const auto& [label, d] : report.per_class) {
            out << report.step << "," << label << "," << d.stored << "," << d.log_det << ","
                << (d.degenerate ? 1 : 0) << "," << d.mean_pairwise_distance << ","
                << d.min_pairwise_distance << "\n";
        }
    }
}

// Plain data series (step index vs. metric mean across classes), one file per
// metric, for external plotting.
inline void write_plot_series(const std::vector<StepReport>& reports,
                              const std::string& directory) {
    struct Series {
        const char* name;
        double ClassDiversity::*field;
    };
    const Series series[] = {
        {"series_log_det.dat", &ClassDiversity::log_det},
        {"series_mean_pairwise_distance.dat", &ClassDiversity::mean_pairwise_distance},
        {"series_min_pairwise_distance.dat", &ClassDiversity::min_pairwise_distance},
    };
    for (const Series& s : series) {
        std::ofstream out(std::filesystem::path(directory) / s.name, std::ios::binary);
        out << std::setprecision(17);
        for (const StepReport& report : reports) {
            double total = 0.0;
            std::size_t count = 0;
            for (const auto& [label, d] : report.per_class) {
                if (!d.degenerate) {
                    total += d.*(s.field);
                    ++count;
                }
            }
            out << report.step << " " << (count > 0 ? total / static_cast<double>(count) : 0.0)
                << "\n";
        }
    }
}

}  // namespace posebank
