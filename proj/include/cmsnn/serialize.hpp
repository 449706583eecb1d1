#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cmsnn/eval.hpp"
#include "cmsnn/network.hpp"
#include "cmsnn/train.hpp"

namespace cmsnn {

// Model checkpoint: family, topology, LIF constants, parameters and seed
// lineage, as JSON. Doubles survive the round trip exactly (shortest
// round-trip serialization).
void save_model(const Model& model, const std::filesystem::path& path,
                const std::map<std::string, std::uint64_t>& seed_lineage = {});
Model load_model(const std::filesystem::path& path);

void save_history_csv(const std::vector<EpochStats>& history, const std::filesystem::path& path);
std::vector<EpochStats> load_history_csv(const std::filesystem::path& path);

// Long-form accuracy table: model,chip,accuracy.
void save_accuracies_csv(const std::vector<std::pair<std::string, std::vector<double>>>& rows,
                         const std::filesystem::path& path);
std::vector<std::pair<std::string, std::vector<double>>> load_accuracies_csv(
    const std::filesystem::path& path);

void save_report_json(const std::vector<EvalReport>& groups, const std::filesystem::path& path);
std::vector<EvalReport> load_report_json(const std::filesystem::path& path);

// Box geometry table consumed by external plotters:
// group,model,median,q1,q3,whisker_lo,whisker_hi,outliers (';'-separated).
void save_box_geometry_csv(const std::vector<EvalReport>& groups,
                           const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace cmsnn
