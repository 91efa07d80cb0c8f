#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nrm/algorithm.hpp"
#include <json.hpp>

namespace nrm {

/// Provenance of one CLI invocation; every output file points back to it.
struct RunManifest {
    std::string command;
    std::string instance_path;
    std::string instance_hash;
    nlohmann::json config;
    std::vector<std::string> outputs;
    std::string build_id;
    double wall_s = 0.0;
    std::string status;
};

nlohmann::json manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
void save_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest load_manifest(const std::filesystem::path& path);

nlohmann::json config_to_json(const AlgoConfig& cfg);
/// Overlays the keys present in `j` onto `cfg`; unknown keys are rejected.
void apply_config_json(const nlohmann::json& j, AlgoConfig& cfg);

std::string build_identifier();

/// K,Z_B,Zhat,Zbar,Rbar,Se,N,rows_total,cpu_s with a leading "# manifest=" line.
class TraceWriter {
public:
    TraceWriter(const std::filesystem::path& path, const std::string& manifest_ref);
    void write(const TraceRecord& r);

private:
    std::filesystem::path path_;
};

void write_trace_csv(const std::vector<TraceRecord>& records, const std::filesystem::path& path,
                     const std::string& manifest_ref);

struct TraceFile {
    std::string manifest_ref;
    std::vector<TraceRecord> records;
};

/// Throws ParseError on malformed rows.
TraceFile read_trace_csv(const std::filesystem::path& path);

}  // namespace nrm
