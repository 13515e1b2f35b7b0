#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "relclust/analysis.hpp"
#include "relclust/clustering.hpp"
#include "relclust/metrics.hpp"

namespace relclust::cli {

inline constexpr int kStageVersion = 1;

// Assignment JSONL: a header object on the first line
//   {"config_hash","input_hash","k","method","params","seed","type":"assignment","version"}
// followed by one {"cluster_id","instance_id"} object per instance.
struct AssignmentFile {
    ClusterAssignment assignment;
    std::string config_hash;
    std::string input_hash;
};

std::string assignment_to_jsonl(const AssignmentFile& file);
AssignmentFile parse_assignment(std::string_view text);
AssignmentFile load_assignment(const std::filesystem::path& path);

// k,silhouette_raw,silhouette_smoothed
std::string elbow_to_csv(const ElbowCurve& curve);

nlohmann::json evaluation_to_json(const EvaluationReport& report, const std::string& config_hash);
std::string evaluation_table(const EvaluationReport& report);

nlohmann::json cluster_report_to_json(const ClusterReport& report);

}  // namespace relclust::cli
