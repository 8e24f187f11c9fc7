#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "faceanon/core/common.hpp"

#ifndef FACEANON_VERSION
#define FACEANON_VERSION "unknown"
#endif

namespace faceanon::io {

/// Reproducibility record written into every run directory before the
/// pipeline starts.
struct RunManifest {
    std::string command;
    std::vector<std::string> argv;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    nlohmann::json to_json() const {
        const auto now = std::chrono::system_clock::now();
        const auto t = std::chrono::system_clock::to_time_t(now);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
        return {{"command", command}, {"argv", argv},     {"config", config},
                {"seed", seed},       {"inputs", inputs}, {"outputs", outputs},
                {"code_version", FACEANON_VERSION},       {"started_at", stamp},
                {"config_hash", hex64(fnv1a(config.dump()))}};
    }

    void write(const std::filesystem::path& run_dir) const {
        std::filesystem::create_directories(run_dir);
        std::ofstream os(run_dir / "run_manifest.json");
        os << to_json().dump(2) << "\n";
        require(os.good(), "io", "failed to write run manifest");
    }
};

/// Metric report: {metric, value, ci, config_hash}.
inline void write_report(const std::filesystem::path& path, const std::string& metric,
                         double value, const nlohmann::json& ci, const nlohmann::json& config) {
    nlohmann::json report = {{"metric", metric},
                             {"value", value},
                             {"ci", ci},
                             {"config_hash", hex64(fnv1a(config.dump()))}};
    std::ofstream os(path);
    os << report.dump(2) << "\n";
    require(os.good(), "io", "failed to write report: " + path.string());
}

/// Upserts one row of a Table-2-style CSV: model label in the first column,
/// one column per metric.
inline void upsert_csv_row(const std::filesystem::path& path, const std::string& label,
                           const std::string& metric, double value) {
    static const std::vector<std::string> kColumns = {"detection", "recall_at_1", "fid",
                                                      "tar_at_far"};
    std::map<std::string, std::map<std::string, std::string>> rows;
    std::vector<std::string> order;
    {
        std::ifstream is(path);
        std::string line;
        bool first = true;
        while (is.good() && std::getline(is, line)) {
            if (line.empty()) continue;
            if (first) {
                first = false;
                continue;
            }
            std::stringstream ss(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            if (cells.empty()) continue;
            order.push_back(cells[0]);
            for (std::size_t i = 0; i + 1 < cells.size() && i < kColumns.size(); ++i)
                rows[cells[0]][kColumns[i]] = cells[i + 1];
        }
    }
    if (!rows.count(label)) order.push_back(label);
    rows[label][metric] = std::to_string(value);

    std::ofstream os(path);
    os << "model";
    for (const auto& c : kColumns) os << "," << c;
    os << "\n";
    for (const auto& name : order) {
        os << name;
        for (const auto& c : kColumns) {
            os << ",";
            auto it = rows[name].find(c);
            if (it != rows[name].end()) os << it->second;
        }
        os << "\n";
    }
    require(os.good(), "io", "failed to write CSV: " + path.string());
}

}  // namespace faceanon::io
