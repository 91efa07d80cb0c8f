#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "nrm/algorithm.hpp"
#include "nrm/errors.hpp"
#include "nrm/exact_dp.hpp"
#include "nrm/model.hpp"
#include "nrm/simulate.hpp"
#include "nrm/timer.hpp"
#include "nrm/trace_io.hpp"

namespace nrm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string hex_hash(const Instance& inst) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << instance_hash(inst);
    return s.str();
}

std::string joined_args(int argc, const char* const* argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

/// Flags that override the config file only when given explicitly.
struct ConfigFlags {
    std::string config_path;
    double omega_gap = 0, omega_policy = 0, omega_pgap = 0;
    double sub_time = 0, basis_time = 0, max_wall = 0;
    int max_K = 0, row_starts = 0, basis_starts = 0, threads = 0;
    std::uint64_t seed = 0;
    std::string mode, subproblems;
    long n_max = 0;
    bool verbose = false;
    std::map<std::string, CLI::Option*> opts;

    void attach(CLI::App* app) {
        opts["config"] = app->add_option("--config", config_path, "JSON config file (flags override it)");
        opts["omega_gap"] = app->add_option("--omega-gap", omega_gap, "row-generation gap tolerance");
        opts["omega_policy"] = app->add_option("--omega-policy", omega_policy, "simulation relative error target");
        opts["omega_pgap"] = app->add_option("--omega-pgap", omega_pgap, "policy-to-bound gap for stopping");
        opts["sub_time"] = app->add_option("--subproblem-time", sub_time, "per-subproblem time limit (s)");
        opts["basis_time"] = app->add_option("--basis-time", basis_time, "basis search time limit (s)");
        opts["max_wall"] = app->add_option("--max-wall", max_wall, "wall-clock budget (s)");
        opts["max_K"] = app->add_option("--max-K", max_K, "maximum number of basis functions");
        opts["row_starts"] = app->add_option("--row-starts", row_starts, "local-search restarts per subproblem");
        opts["basis_starts"] = app->add_option("--basis-starts", basis_starts, "multistarts per basis search");
        opts["threads"] = app->add_option("--threads", threads, "worker threads");
        opts["seed"] = app->add_option("--seed", seed, "random seed");
        opts["mode"] = app->add_option("--mode", mode, "standalone or addon")
                           ->check(CLI::IsMember({"standalone", "addon"}));
        opts["subproblems"] = app->add_option("--subproblems", subproblems, "auto, exact or local")
                                  ->check(CLI::IsMember({"auto", "exact", "local"}));
        opts["n_max"] = app->add_option("--n-max", n_max, "maximum simulation replications");
        app->add_flag("-v,--verbose", verbose, "progress on stderr");
    }

    bool given(const std::string& k) const { return opts.at(k)->count() > 0; }

    AlgoConfig resolve() const {
        AlgoConfig c;
        if (given("config")) {
            std::ifstream in(config_path);
            if (!in) throw InvalidArgument("cannot read config " + config_path);
            json j;
            try {
                j = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ParseError("config " + config_path + ": " + e.what());
            }
            apply_config_json(j, c);
        }
        if (given("omega_gap")) c.omega_gap = omega_gap;
        if (given("omega_policy")) c.omega_policy = omega_policy;
        if (given("omega_pgap")) c.omega_pgap = omega_pgap;
        if (given("sub_time")) c.subproblem_time_limit_s = sub_time;
        if (given("basis_time")) c.basis_time_limit_s = basis_time;
        if (given("max_wall")) c.max_wall_s = max_wall;
        if (given("max_K")) c.max_K = max_K;
        if (given("row_starts")) c.row_starts = row_starts;
        if (given("basis_starts")) c.basis_starts = basis_starts;
        if (given("threads")) c.threads = threads;
        if (given("seed")) c.seed = seed;
        if (given("mode")) c.mode = mode == "addon" ? Mode::Addon : Mode::Standalone;
        if (given("subproblems"))
            c.subproblems = subproblems == "exact"   ? SubproblemMode::Exact
                            : subproblems == "local" ? SubproblemMode::Local
                                                     : SubproblemMode::Auto;
        if (given("n_max")) c.sim_n_max = n_max;
        c.verbose = verbose;
        c.validate();
        return c;
    }
};

void print_record(std::ostream& out, const TraceRecord& r) {
    out << "K=" << r.K << " Z_B=" << r.Z_B << " Zhat=" << r.Zhat;
    if (!std::isnan(r.Zbar)) out << " Zbar=" << r.Zbar;
    out << " Rbar=" << r.Rbar << " Se=" << r.Se << " N=" << r.N << " rows=" << r.rows_total << " cpu=" << r.cpu_s
        << "s" << std::endl;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Network revenue management: exact DP, affine and ridge value-function approximations"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate an instance file");
    bool hub = false, bus = false;
    int L = 2, tau = 20, legs = 3, lines = 1;
    std::vector<int> caps;
    std::uint64_t gen_seed = 1;
    double load = 1.6;
    std::string gen_out;
    auto* hub_flag = gen->add_flag("--hub-spoke", hub, "hub-and-spoke network");
    auto* bus_flag = gen->add_flag("--bus-line", bus, "bus line network");
    hub_flag->excludes(bus_flag);
    gen->add_option("--L", L, "non-hub locations (hub-spoke)");
    gen->add_option("--legs", legs, "legs per line (bus-line)");
    gen->add_option("--lines", lines, "independent line copies (bus-line)");
    gen->add_option("--tau", tau, "number of periods");
    auto* cap_opt = gen->add_option("--c", caps, "capacity (one value, or one per leg for bus-line)");
    gen->add_option("--load-factor", load, "target load factor (bus-line)");
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("-o,--out", gen_out, "output path (stdout when omitted)");

    // exact
    auto* exact = app.add_subcommand("exact", "solve the dynamic program and print v_1(c)");
    std::string instance_path;
    int exact_threads = 1;
    std::string table_out;
    exact->add_option("--instance", instance_path, "instance JSON")->required();
    exact->add_option("--threads", exact_threads, "worker threads");
    exact->add_option("--save-table", table_out, "write the value table");

    // aa
    auto* aa = app.add_subcommand("aa", "fit the affine approximation");
    ConfigFlags aa_flags;
    std::string aa_out = "aa-out";
    aa->add_option("--instance", instance_path, "instance JSON")->required();
    aa->add_option("--out-dir", aa_out, "output directory");
    aa_flags.attach(aa);

    // run
    auto* run = app.add_subcommand("run", "run a basis-increment algorithm");
    ConfigFlags run_flags;
    std::string algo = "h2pialg", run_out = "run-out";
    run->add_option("--instance", instance_path, "instance JSON")->required();
    run->add_option("--algo", algo, "h2pialg or nlialg")->check(CLI::IsMember({"h2pialg", "nlialg"}));
    run->add_option("--out-dir", run_out, "output directory");
    run_flags.attach(run);

    // simulate
    auto* sim = app.add_subcommand("simulate", "simulate the policy of a saved approximation");
    std::string approx_path, revenues_out;
    std::uint64_t sim_seed = 1;
    double sim_omega = 0.001;
    long sim_nmax = 200000;
    int sim_threads = 1;
    sim->add_option("--instance", instance_path, "instance JSON")->required();
    sim->add_option("--approx", approx_path, "approximation JSON")->required();
    sim->add_option("--seed", sim_seed, "random seed");
    sim->add_option("--omega-policy", sim_omega, "relative standard error target");
    sim->add_option("--n-max", sim_nmax, "maximum replications");
    sim->add_option("--threads", sim_threads, "worker threads");
    sim->add_option("--revenues", revenues_out, "per-replication revenue CSV");

    // report
    auto* report = app.add_subcommand("report", "compare runs on one instance");
    std::vector<std::string> run_dirs;
    report->add_option("runs", run_dirs, "output directories of aa/run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    const Stopwatch clock;
    try {
        if (*gen) {
            if (hub == bus) throw InvalidArgument("gen: choose exactly one of --hub-spoke and --bus-line");
            Instance inst;
            if (hub) {
                int c = 0;
                if (caps.size() == 1) {
                    c = caps[0];
                } else if (caps.empty()) {
                    auto t = hub_spoke_table_capacity(L, tau);
                    if (!t) throw InvalidArgument("gen: --c required for this (L, tau)");
                    c = *t;
                } else {
                    throw InvalidArgument("gen: hub-spoke takes a single --c");
                }
                inst = gen_hub_spoke(L, tau, c, gen_seed);
            } else {
                if (cap_opt->count() == 0) throw InvalidArgument("gen: --c required for bus-line");
                BusLineSpec spec;
                spec.load_factor = load;
                spec.lines = lines;
                inst = gen_bus_line(legs, tau, caps, spec, gen_seed);
            }
            if (gen_out.empty()) {
                out << dump_instance(inst) << "\n";
            } else {
                save_instance(inst, gen_out);
            }
            return kExitOk;
        }

        if (*exact) {
            const Instance inst = load_instance(instance_path);
            const ValueTable vt = value_iteration(inst, kDefaultStateCap, exact_threads);
            out << std::setprecision(10) << vt.at(1, inst.capacities()) << "\n";
            if (!table_out.empty()) save_value_table(vt, table_out);
            err << "exact: " << inst.state_count() << " states, " << clock.seconds() << " s\n";
            return kExitOk;
        }

        if (*aa) {
            const Instance inst = load_instance(instance_path);
            const AlgoConfig cfg = aa_flags.resolve();
            fs::create_directories(aa_out);
            const AaResult res = solve_aa(inst, cfg, Deadline(cfg.max_wall_s));
            const fs::path dir(aa_out);
            Approximation approx = res.rowgen.sol.approx;
            save_approximation(approx, dir / "approx.json");
            write_trace_csv({res.record}, dir / "trace.csv", "manifest.json");
            RunManifest m{joined_args(argc, argv), instance_path, hex_hash(inst), config_to_json(cfg),
                          {"approx.json", "trace.csv"}, build_identifier(), clock.seconds(),
                          res.rowgen.truncated ? "wall-clock" : "converged"};
            m.config["algo"] = "aa";
            save_manifest(m, dir / "manifest.json");
            print_record(out, res.record);
            return res.rowgen.truncated ? kExitTruncated : kExitOk;
        }

        if (*run) {
            const Instance inst = load_instance(instance_path);
            const AlgoConfig cfg = run_flags.resolve();
            const fs::path dir(run_out);
            fs::create_directories(dir);
            TraceWriter writer(dir / "trace.csv", "manifest.json");
            auto observer = [&](const TraceRecord& r) {
                writer.write(r);
                print_record(out, r);
            };
            const RunTrace trace = algo == "nlialg" ? nlialg(inst, cfg, observer) : h2pialg(inst, cfg, observer);
            save_approximation(trace.final_approx, dir / "approx.json");
            if (!trace.records.empty()) save_approximation(trace.best_approx, dir / "best_approx.json");
            RunManifest m{joined_args(argc, argv), instance_path, hex_hash(inst), config_to_json(cfg),
                          {"trace.csv", "approx.json", "best_approx.json"}, build_identifier(), clock.seconds(),
                          trace.status};
            m.config["algo"] = trace.algo;
            if (trace.baseline_record) {
                write_trace_csv({*trace.baseline_record}, dir / "aa_trace.csv", "manifest.json");
                m.outputs.push_back("aa_trace.csv");
            }
            save_manifest(m, dir / "manifest.json");
            out << "status=" << trace.status << " best_Rbar=" << trace.best_Rbar << " best_K=" << trace.best_K
                << " min_Zhat=" << trace.best_upper() << "\n";
            return trace.truncated ? kExitTruncated : kExitOk;
        }

        if (*sim) {
            const Instance inst = load_instance(instance_path);
            const Approximation approx = load_approximation(approx_path);
            if (approx.horizon() != inst.horizon()) throw ValidationError("approximation horizon does not match");
            SimOptions o;
            o.omega_policy = sim_omega;
            o.n_max = sim_nmax;
            o.threads = sim_threads;
            o.keep_revenues = !revenues_out.empty();
            const SimResult r = simulate_policy(inst, approx, sim_seed, o);
            if (!revenues_out.empty()) write_revenues_csv(r, revenues_out);
            out << std::setprecision(10) << "Rbar=" << r.Rbar << " Se=" << r.Se << " N=" << r.N
                << (r.undefined_ratio ? " (stopping ratio undefined)" : "") << "\n";
            return kExitOk;
        }

        if (*report) {
            std::string hash;
            out << std::left << std::setw(24) << "method" << std::setw(12) << "mode" << std::setw(14) << "UB"
                << std::setw(14) << "LB" << std::setw(8) << "K" << "status\n";
            for (const auto& d : run_dirs) {
                const fs::path dir(d);
                const RunManifest m = load_manifest(dir / "manifest.json");
                if (hash.empty()) hash = m.instance_hash;
                if (m.instance_hash != hash)
                    throw ValidationError("report: " + d + " was run on a different instance");
                auto emit = [&](const std::string& method, const TraceFile& tf) {
                    double ub = kInf, lb = -kInf;
                    int k = 0;
                    for (const auto& r : tf.records) {
                        ub = std::min(ub, std::isnan(r.Zbar) ? r.Zhat : r.Zbar);
                        if (r.Rbar > lb) lb = r.Rbar;
                        k = std::max(k, r.K);
                    }
                    out << std::setw(24) << method << std::setw(12) << m.config.value("mode", "") << std::setw(14)
                        << ub << std::setw(14) << lb << std::setw(8) << k << m.status << "\n";
                };
                const std::string method = m.config.value("algo", "?");
                if (fs::exists(dir / "aa_trace.csv")) emit("aa", read_trace_csv(dir / "aa_trace.csv"));
                emit(method, read_trace_csv(dir / "trace.csv"));
            }
            return kExitOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitUsage;
}

}  // namespace nrm
