#include "nrm/trace_io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "nrm/errors.hpp"

namespace nrm {

using nlohmann::json;

#ifndef NRM_BUILD_ID
#define NRM_BUILD_ID "unknown"
#endif

std::string build_identifier() { return NRM_BUILD_ID; }

json manifest_to_json(const RunManifest& m) {
    return json{{"command", m.command},   {"instance_path", m.instance_path},
                {"instance_hash", m.instance_hash}, {"config", m.config},
                {"outputs", m.outputs},   {"build_id", m.build_id},
                {"wall_s", m.wall_s},     {"status", m.status}};
}

RunManifest manifest_from_json(const json& j) {
    try {
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.instance_path = j.value("instance_path", "");
        m.instance_hash = j.at("instance_hash").get<std::string>();
        m.config = j.value("config", json::object());
        m.outputs = j.value("outputs", std::vector<std::string>{});
        m.build_id = j.value("build_id", "");
        m.wall_s = j.value("wall_s", 0.0);
        m.status = j.value("status", "");
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
}

void save_manifest(const RunManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << manifest_to_json(m).dump(2) << "\n";
}

RunManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read " + path.string());
    try {
        return manifest_from_json(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ParseError("manifest " + path.string() + ": " + e.what());
    }
}

json config_to_json(const AlgoConfig& c) {
    json j{{"omega_gap", c.omega_gap},
           {"omega_policy", c.omega_policy},
           {"omega_pgap", c.omega_pgap},
           {"subproblem_time_limit_s", c.subproblem_time_limit_s},
           {"basis_time_limit_s", c.basis_time_limit_s},
           {"max_K", c.max_K},
           {"row_starts", c.row_starts},
           {"basis_starts", c.basis_starts},
           {"seed", c.seed},
           {"mode", to_string(c.mode)},
           {"monotonicity_rows_at_K1", c.monotonicity_rows_at_K1},
           {"subproblems", to_string(c.subproblems)},
           {"exact_state_limit", c.exact_state_limit},
           {"threads", c.threads},
           {"aa_nonnegative", c.aa_nonnegative},
           {"sim_n_max", c.sim_n_max},
           {"max_rowgen_rounds", c.max_rowgen_rounds}};
    // JSON has no infinity; null means unlimited.
    j["max_wall_s"] = std::isfinite(c.max_wall_s) ? json(c.max_wall_s) : json(nullptr);
    return j;
}

void apply_config_json(const json& j, AlgoConfig& c) {
    if (!j.is_object()) throw ParseError("config: expected a JSON object");
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "omega_gap") c.omega_gap = v.get<double>();
            else if (key == "omega_policy") c.omega_policy = v.get<double>();
            else if (key == "omega_pgap") c.omega_pgap = v.get<double>();
            else if (key == "subproblem_time_limit_s") c.subproblem_time_limit_s = v.get<double>();
            else if (key == "basis_time_limit_s") c.basis_time_limit_s = v.get<double>();
            else if (key == "max_K") c.max_K = v.get<int>();
            else if (key == "max_wall_s") c.max_wall_s = v.is_null() ? kInf : v.get<double>();
            else if (key == "row_starts") c.row_starts = v.get<int>();
            else if (key == "basis_starts") c.basis_starts = v.get<int>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "mode") {
                const auto s = v.get<std::string>();
                if (s == "standalone") c.mode = Mode::Standalone;
                else if (s == "addon") c.mode = Mode::Addon;
                else throw ParseError("config: mode must be standalone or addon");
            } else if (key == "monotonicity_rows_at_K1") c.monotonicity_rows_at_K1 = v.get<bool>();
            else if (key == "subproblems") {
                const auto s = v.get<std::string>();
                if (s == "auto") c.subproblems = SubproblemMode::Auto;
                else if (s == "exact") c.subproblems = SubproblemMode::Exact;
                else if (s == "local") c.subproblems = SubproblemMode::Local;
                else throw ParseError("config: subproblems must be auto, exact or local");
            } else if (key == "exact_state_limit") c.exact_state_limit = v.get<std::uint64_t>();
            else if (key == "threads") c.threads = v.get<int>();
            else if (key == "aa_nonnegative") c.aa_nonnegative = v.get<bool>();
            else if (key == "sim_n_max") c.sim_n_max = v.get<long>();
            else if (key == "max_rowgen_rounds") c.max_rowgen_rounds = v.get<int>();
            else throw ParseError("config: unknown key \"" + key + "\"");
        } catch (const json::type_error& e) {
            throw ParseError("config: bad value for \"" + key + "\": " + e.what());
        }
    }
}

namespace {

const char* kHeader = "K,Z_B,Zhat,Zbar,Rbar,Se,N,rows_total,cpu_s";

std::string num(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream s;
    s << std::setprecision(12) << v;
    return s.str();
}

std::string row(const TraceRecord& r) {
    return std::to_string(r.K) + "," + num(r.Z_B) + "," + num(r.Zhat) + "," + num(r.Zbar) + "," + num(r.Rbar) +
           "," + num(r.Se) + "," + std::to_string(r.N) + "," + std::to_string(r.rows_total) + "," + num(r.cpu_s);
}

}  // namespace

TraceWriter::TraceWriter(const std::filesystem::path& path, const std::string& manifest_ref) : path_(path) {
    std::ofstream out(path_);
    if (!out) throw InvalidArgument("cannot write " + path_.string());
    out << "# manifest=" << manifest_ref << "\n" << kHeader << "\n";
}

void TraceWriter::write(const TraceRecord& r) {
    std::ofstream out(path_, std::ios::app);
    out << row(r) << "\n";
}

void write_trace_csv(const std::vector<TraceRecord>& records, const std::filesystem::path& path,
                     const std::string& manifest_ref) {
    TraceWriter w(path, manifest_ref);
    for (const auto& r : records) w.write(r);
}

TraceFile read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot read " + path.string());
    TraceFile tf;
    std::string line;
    int lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.rfind("# manifest=", 0) == 0) {
            tf.manifest_ref = line.substr(11);
            continue;
        }
        if (line[0] == '#') continue;
        if (!header) {
            if (line != kHeader) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad header");
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (line.back() == ',') f.emplace_back();
        if (f.size() != 9) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected 9 fields");
        auto d = [&](const std::string& s) {
            if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
            try {
                return std::stod(s);
            } catch (const std::exception&) {
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": bad number \"" + s + "\"");
            }
        };
        TraceRecord r;
        r.K = static_cast<int>(d(f[0]));
        r.Z_B = d(f[1]);
        r.Zhat = d(f[2]);
        r.Zbar = d(f[3]);
        r.Rbar = d(f[4]);
        r.Se = d(f[5]);
        r.N = static_cast<long>(d(f[6]));
        r.rows_total = static_cast<long>(d(f[7]));
        r.cpu_s = d(f[8]);
        tf.records.push_back(r);
    }
    if (!header) throw ParseError(path.string() + ": missing header");
    return tf;
}

}  // namespace nrm
