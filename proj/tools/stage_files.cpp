#include "stage_files.hpp"

#include <cstdio>
#include <sstream>

#include "format.hpp"
#include "relclust/error.hpp"
#include "relclust/io.hpp"

namespace relclust::cli {

using nlohmann::json;

std::string assignment_to_jsonl(const AssignmentFile& file) {
    const ClusterAssignment& a = file.assignment;
    if (a.instance_ids.size() != a.labels.size()) {
        throw Error(ErrorKind::Argument, "assignment has no instance ids for some rows");
    }
    json header;
    header["type"] = "assignment";
    header["version"] = kStageVersion;
    header["config_hash"] = file.config_hash;
    header["input_hash"] = file.input_hash;
    header["k"] = a.k;
    header["method"] = std::string(to_string(a.method));
    header["seed"] = a.seed;
    header["params"] = a.params;

    std::string out = header.dump() + "\n";
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        json row;
        row["cluster_id"] = a.labels[i];
        row["instance_id"] = a.instance_ids[i];
        out += row.dump() + "\n";
    }
    return out;
}

AssignmentFile parse_assignment(std::string_view text) {
    AssignmentFile file;
    ClusterAssignment& a = file.assignment;
    std::size_t line_no = 0;
    bool have_header = false;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        const std::string_view line = text.substr(0, nl);
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (line.empty()) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw Error(ErrorKind::Parse, "assignment line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            if (!have_header) {
                if (j.value("type", "") != "assignment") {
                    throw Error(ErrorKind::Format, "assignment file lacks its header line");
                }
                if (j.at("version").get<int>() != kStageVersion) {
                    throw Error(ErrorKind::Format, "unsupported assignment version " + j.at("version").dump());
                }
                file.config_hash = j.at("config_hash").get<std::string>();
                file.input_hash = j.at("input_hash").get<std::string>();
                a.k = j.at("k").get<int>();
                a.method = parse_cluster_method(j.at("method").get<std::string>());
                a.seed = j.at("seed").get<std::uint64_t>();
                a.params = j.at("params").get<std::map<std::string, std::string>>();
                have_header = true;
                continue;
            }
            a.labels.push_back(j.at("cluster_id").get<int>());
            a.instance_ids.push_back(j.at("instance_id").get<std::string>());
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Format, "assignment line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_header) {
        throw Error(ErrorKind::Format, "assignment file is empty");
    }
    if (a.labels.empty()) {
        throw Error(ErrorKind::Format, "assignment file has no rows");
    }
    for (std::size_t i = 0; i < a.labels.size(); ++i) {
        if (a.labels[i] < 0 || a.labels[i] >= a.k) {
            throw Error(ErrorKind::Format, "row " + std::to_string(i) + ": cluster id " +
                                               std::to_string(a.labels[i]) + " outside [0, k)");
        }
    }
    return file;
}

AssignmentFile load_assignment(const std::filesystem::path& path) {
    return parse_assignment(read_file(path));
}

std::string elbow_to_csv(const ElbowCurve& curve) {
    std::string out = "k,silhouette_raw,silhouette_smoothed\n";
    for (std::size_t i = 0; i < curve.k_values.size(); ++i) {
        out += std::to_string(curve.k_values[i]) + "," + format_double(curve.silhouette_raw[i]) + "," +
               format_double(curve.silhouette_smoothed[i]) + "\n";
    }
    return out;
}

json evaluation_to_json(const EvaluationReport& r, const std::string& config_hash) {
    json j;
    j["type"] = "evaluation";
    j["version"] = kStageVersion;
    j["config_hash"] = config_hash;
    j["n"] = r.n;
    j["k_gold"] = r.k_gold;
    j["k_pred"] = r.k_pred;
    j["b3"] = {{"precision", r.b3_precision}, {"recall", r.b3_recall}, {"f1", r.b3_f1}};
    j["v_measure"] = {{"homogeneity", r.v_homogeneity}, {"completeness", r.v_completeness}, {"f1", r.v_f1}};
    j["ari"] = r.ari;
    return j;
}

std::string evaluation_table(const EvaluationReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "n = %zu   gold relations = %zu   clusters = %zu\n"
                  "metric         P / hom     R / comp    F1\n"
                  "B3             %6.2f      %6.2f      %6.2f\n"
                  "V-measure      %6.2f      %6.2f      %6.2f\n"
                  "ARI                                    %6.2f\n",
                  r.n, r.k_gold, r.k_pred, 100.0 * r.b3_precision, 100.0 * r.b3_recall, 100.0 * r.b3_f1,
                  100.0 * r.v_homogeneity, 100.0 * r.v_completeness, 100.0 * r.v_f1, 100.0 * r.ari);
    return buf;
}

json cluster_report_to_json(const ClusterReport& r) {
    json j;
    j["cluster_id"] = r.cluster_id;
    j["size"] = r.size;
    json comp = json::array();
    for (const LabelShare& s : r.composition) {
        comp.push_back({{"label", s.label}, {"count", s.count}, {"fraction", s.fraction}, {"percent", s.percent}});
    }
    j["composition"] = comp;
    if (r.top_tokens) {
        json toks = json::array();
        for (const TokenCount& t : *r.top_tokens) {
            toks.push_back({{"token", t.token}, {"count", t.count}});
        }
        j["top_tokens"] = toks;
    }
    return j;
}

}  // namespace relclust::cli
