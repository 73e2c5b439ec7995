#pragma once

#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "posebank/errors.hpp"
#include "posebank/memory.hpp"
#include "posebank/pose.hpp"

namespace posebank {

// Instances grouped by class label, as loaded from a COCO-style keypoint
// annotation file.
struct Dataset {
    std::map<std::string, std::vector<PoseInstance>> by_class;

    std::size_t total_instances() const {
        std::size_t n = 0;
        for (const auto& [label, instances] : by_class) n += instances.size();
        return n;
    }

    InstanceCatalog catalog() const {
        InstanceCatalog cat;
        for (const auto& [label, instances] : by_class) {
            for (const auto& inst : instances) cat.emplace(inst.id, inst);
        }
        return cat;
    }
};

// Parses a COCO-style annotation file: `images`, `categories` (class names),
// and `annotations` carrying flat x,y,v keypoint triples plus a bbox.
// Visibility values above 1 (COCO's "labeled and visible") collapse to 1.
inline Dataset load_annotations(const std::string& path, int expected_keypoints = 17) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open annotation file: " + path);
    }
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("annotation file '" + path + "': " + e.what());
    }

    std::unordered_map<std::int64_t, std::string> image_files;
    if (root.contains("images")) {
        for (const auto& im : root.at("images")) {
            if (!im.contains("id")) continue;
            image_files[im.at("id").get<std::int64_t>()] = im.value("file_name", "");
        }
    }
    std::unordered_map<std::int64_t, std::string> category_names;
    if (!root.contains("categories")) {
        throw SchemaError("annotation file '" + path + "': missing categories");
    }
    for (const auto& cat : root.at("categories")) {
        category_names[cat.at("id").get<std::int64_t>()] = cat.at("name").get<std::string>();
    }
    if (!root.contains("annotations")) {
        throw SchemaError("annotation file '" + path + "': missing annotations");
    }

    Dataset dataset;
    for (const auto& ann : root.at("annotations")) {
        std::string record = "annotation";
        try {
            record += " id " + ann.at("id").dump();
            PoseInstance inst;
            inst.id = ann.at("id").is_string() ? ann.at("id").get<std::string>()
                                               : std::to_string(ann.at("id").get<std::int64_t>());
            const auto cat_id = ann.at("category_id").get<std::int64_t>();
            auto cat_it = category_names.find(cat_id);
            if (cat_it == category_names.end()) {
                throw ParseError(record + ": unknown category_id " + std::to_string(cat_id));
            }
            inst.class_label = cat_it->second;

            const auto& kps = ann.at("keypoints");
            if (!kps.is_array() || kps.size() % 3 != 0) {
                throw ParseError(record + ": keypoints must be a flat array of x,y,v triples");
            }
            const int j = static_cast<int>(kps.size() / 3);
            if (j != expected_keypoints) {
                throw SchemaError(record + ": has " + std::to_string(j) + " keypoints, expected " +
                                  std::to_string(expected_keypoints));
            }
            for (int q = 0; q < j; ++q) {
                Keypoint kp;
                kp.x = kps[3 * q].get<double>();
                kp.y = kps[3 * q + 1].get<double>();
                kp.v = kps[3 * q + 2].get<double>() > 0.0 ? 1 : 0;
                inst.keypoints.push_back(kp);
            }

            const auto& bbox = ann.at("bbox");
            if (!bbox.is_array() || bbox.size() != 4) {
                throw ParseError(record + ": bbox must be [x, y, width, height]");
            }
            inst.bbox = {bbox[0].get<double>(), bbox[1].get<double>(), bbox[2].get<double>(),
                         bbox[3].get<double>()};
            if (inst.bbox.width <= 0.0 || inst.bbox.height <= 0.0) {
                throw ParseError(record + ": bbox has non-positive size");
            }

            if (ann.contains("image_id")) {
                auto im_it = image_files.find(ann.at("image_id").get<std::int64_t>());
                if (im_it != image_files.end()) inst.image_ref = im_it->second;
            }
            dataset.by_class[inst.class_label].push_back(std::move(inst));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(record + ": " + e.what());
        }
    }
    return dataset;
}

// Prediction file: array of {"id": ..., "keypoints": [x, y, v, ...]}.
inline std::map<std::string, std::vector<Keypoint>> load_predictions(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError("cannot open prediction file: " + path);
    }
    nlohmann::json root;
    try {
        in >> root;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("prediction file '" + path + "': " + e.what());
    }
    if (!root.is_array()) {
        throw SchemaError("prediction file '" + path + "' must be a JSON array");
    }
    std::map<std::string, std::vector<Keypoint>> predictions;
    for (const auto& rec : root) {
        try {
            const std::string id = rec.at("id").is_string()
                                       ? rec.at("id").get<std::string>()
                                       : std::to_string(rec.at("id").get<std::int64_t>());
            const auto& kps = rec.at("keypoints");
            if (!kps.is_array() || kps.size() % 3 != 0) {
                throw ParseError("prediction for id '" + id + "': malformed keypoints");
            }
            std::vector<Keypoint> points;
            for (std::size_t q = 0; q + 2 < kps.size(); q += 3) {
                points.push_back({kps[q].get<double>(), kps[q + 1].get<double>(),
                                  kps[q + 2].get<double>() > 0.0 ? 1 : 0});
            }
            predictions[id] = std::move(points);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("prediction record: ") + e.what());
        }
    }
    return predictions;
}

}  // namespace posebank
