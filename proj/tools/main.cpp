// Command-line front end: simulate single points, sweep grids, query the
// verification oracles, and run the built-in selftest.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phasebound/config.hpp"
#include "phasebound/harness.hpp"
#include "phasebound/oracle.hpp"
#include "phasebound/selftest.hpp"

namespace {

using namespace phasebound;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitSelftest = 3;

struct FlagOverrides {
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> sets; // config-key order of arrival
};

// Every flag maps onto a config key; flags override the file.
void add_common_flags(CLI::App* cmd, FlagOverrides& flags) {
    cmd->add_option("--config", flags.config_path, "Config file (key = value lines)");
    const auto bind = [cmd, &flags](const std::string& flag, const std::string& key,
                                    const std::string& help) {
        cmd->add_option_function<std::string>(
            flag, [key, &flags](const std::string& v) { flags.sets.emplace_back(key, v); }, help);
    };
    bind("--model", "model", "Built-in model name (sm, wiener)");
    bind("--poles", "poles", "Denominator roots, e.g. [0.9999]");
    bind("--zeros", "zeros", "Numerator factors, e.g. [[0.9937, 1], [0.7286, 2]]");
    bind("--gamma", "gamma", "Innovation std in radians (list allowed in sweep)");
    bind("--modulation", "modulation", "qam4 or qam16");
    bind("--snr-db", "snr_db", "Symbol SNR in dB (list allowed in sweep)");
    bind("--n", "n", "Trace length");
    bind("--burn-in", "burn_in", "Samples excluded from averages");
    bind("--np-blind", "np_blind", "Blind particle filter size");
    bind("--trackers", "trackers", "Data-aided trackers, e.g. [kalman, particle]");
    bind("--np-tracker", "np_tracker", "Particle-tracker size");
    bind("--quad-nodes", "quad_nodes", "Gauss-Hermite nodes for the lower bound");
    bind("--seed", "master_seed", "Master seed");
    bind("--repeats", "repeats", "Independent repeats per grid point");
    bind("--workers", "workers", "Worker threads (default: PHASEBOUND_WORKERS or hardware)");
    bind("--output", "output", "CSV output path");
}

ConfigFile load_config(const FlagOverrides& flags) {
    ConfigFile cfg = flags.config_path.empty() ? ConfigFile::parse_text("", "<flags>")
                                               : ConfigFile::parse_file(flags.config_path);
    for (const auto& [key, value] : flags.sets) cfg.set(key, value);
    if (!cfg.has("workers")) {
        if (const char* env = std::getenv("PHASEBOUND_WORKERS")) cfg.set("workers", env);
    }
    return cfg;
}

void print_rows(const std::vector<ResultRow>& rows) {
    for (const ResultRow& r : rows) {
        std::cout << r.model_id << " " << r.modulation << " snr_db=" << r.snr_db
                  << " gamma=" << r.gamma << " tracker=" << r.tracker << " seed=" << r.seed
                  << "\n";
        if (r.status != "ok") {
            std::cout << "  status: " << r.status << "\n";
            continue;
        }
        std::cout << std::setprecision(6) << std::fixed;
        std::cout << "  lb = " << r.lb << " +/- " << r.lb_se << " bits/use\n"
                  << "  ub = " << r.ub << " +/- " << r.ub_se << " bits/use\n"
                  << "  components: h_y=" << r.components.h_y
                  << " h_y_given_xs=" << r.components.h_y_given_xs
                  << " d_term=" << r.components.d_term << " hx=" << r.components.hx
                  << " hx_given_y=" << r.components.hx_given_y << "\n";
        std::cout.unsetf(std::ios::fixed);
        std::cout << std::setprecision(6);
    }
}

int cmd_simulate(const FlagOverrides& flags) {
    ConfigFile cfg = load_config(flags);
    if (!cfg.has("trackers")) cfg.set("trackers", "kalman");
    SweepConfig sw = SweepConfig::from_config(cfg);
    if (sw.snr_db.size() != 1 || sw.gamma.size() != 1)
        throw ConfigError("simulate: needs exactly one snr_db and one gamma (use sweep for grids)");
    const std::vector<ResultRow> rows = run_sweep(sw);
    print_rows(rows);
    if (cfg.has("output")) write_csv(cfg.get_string("output"), rows);
    for (const ResultRow& r : rows)
        if (r.status != "ok") return kExitRuntime;
    return kExitOk;
}

int cmd_sweep(const FlagOverrides& flags) {
    ConfigFile cfg = load_config(flags);
    SweepConfig sw = SweepConfig::from_config(cfg);
    const std::vector<ResultRow> rows = run_sweep(sw);
    const std::string out_path = cfg.get_string_or("output", "results.csv");
    write_csv(out_path, rows);
    long failed = 0;
    for (const ResultRow& r : rows)
        if (r.status != "ok") ++failed;
    std::cout << "wrote " << rows.size() << " rows to " << out_path;
    if (failed > 0) std::cout << " (" << failed << " flagged failed)";
    std::cout << "\n";
    return kExitOk;
}

struct OracleArgs {
    bool awgn = false;
    bool trellis = false;
    std::string write_fixtures;
    std::string modulation = "qam4";
    double snr_db = 6.0;
    double gamma = 0.1;
    int bins = 1024;
    long n = 100000;
    std::uint64_t seed = 7;
    long mc_n = 10000000;
    int nodes = 96;
};

int cmd_oracle(const OracleArgs& args) {
    std::cout << std::setprecision(12);
    if (args.awgn) {
        const Constellation cons = Constellation::from_name(args.modulation);
        const ChannelParams ch = ChannelParams::from_db(args.snr_db);
        const double mi = oracle::awgn_mi_checked(cons, ch, args.mc_n, 0x6f7261636c65ull,
                                                  args.nodes);
        std::cout << "awgn_mi " << args.modulation << " snr_db=" << args.snr_db << ": " << mi
                  << " bits\n";
    }
    if (args.trellis) {
        const Constellation cons = Constellation::from_name(args.modulation);
        const ChannelParams ch = ChannelParams::from_db(args.snr_db);
        const oracle::TrellisRates tr =
            oracle::trellis_rate(args.gamma, cons, ch, args.bins, args.n, args.seed);
        std::cout << "trellis_rate " << args.modulation << " gamma=" << args.gamma
                  << " snr_db=" << args.snr_db << " bins=" << args.bins << " n=" << args.n
                  << " seed=" << args.seed << ": " << tr.rate_bits << " bits (h_y=" << tr.h_y_bits
                  << ", h_y_given_x=" << tr.h_y_given_x_bits << ")\n";
    }
    if (!args.write_fixtures.empty()) {
        std::ofstream out(args.write_fixtures, std::ios::binary);
        if (!out) throw ConfigError("cannot open fixtures file '" + args.write_fixtures + "'");
        out << std::setprecision(17);
        out << "# oracle fixture constants, bits per channel use\n";
        out << "# regenerate: phasebound oracle --write-fixtures <path>\n";
        out << "# awgn values: Gauss-Hermite 96 nodes, cross-checked against 1e7 Monte Carlo\n";
        out << "# trellis values: 1024-bin quantized-phase forward algorithm, n=1e5, seed 7\n";
        const Constellation qam4 = Constellation::qam4();
        out << "awgn_mi.qam4.snr_lin4 = "
            << oracle::awgn_mi_checked(qam4, ChannelParams(4.0)) << "\n";
        out << "awgn_mi.qam4.snr_db6 = "
            << oracle::awgn_mi_checked(qam4, ChannelParams::from_db(6.0)) << "\n";
        for (double snr_db : {3.0, 6.0, 9.0}) {
            const oracle::TrellisRates tr = oracle::trellis_rate(
                0.1, qam4, ChannelParams::from_db(snr_db), 1024, 100000, 7);
            out << "trellis.qam4.gamma0.1.snr_db" << static_cast<int>(snr_db) << " = "
                << tr.rate_bits << "\n";
        }
        std::cout << "wrote fixtures to " << args.write_fixtures << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo information-rate bounds for the ARMA phase noise channel"};
    app.require_subcommand(1);

    FlagOverrides sim_flags, sweep_flags;
    CLI::App* sim = app.add_subcommand("simulate", "Estimate both bounds at one (snr, gamma)");
    add_common_flags(sim, sim_flags);
    CLI::App* sweep = app.add_subcommand("sweep", "Run a parameter grid and write CSV");
    add_common_flags(sweep, sweep_flags);

    OracleArgs oracle_args;
    CLI::App* orc = app.add_subcommand("oracle", "Independent reference computations");
    orc->add_flag("--awgn", oracle_args.awgn, "Cross-checked AWGN mutual information");
    orc->add_flag("--trellis", oracle_args.trellis, "Quantized-phase forward-algorithm rate");
    orc->add_option("--write-fixtures", oracle_args.write_fixtures,
                    "Write the fixture constants used by the acceptance tests");
    orc->add_option("--modulation", oracle_args.modulation, "qam4 or qam16");
    orc->add_option("--snr-db", oracle_args.snr_db, "Symbol SNR in dB");
    orc->add_option("--gamma", oracle_args.gamma, "Innovation std (trellis)");
    orc->add_option("--bins", oracle_args.bins, "Phase quantization levels");
    orc->add_option("--n", oracle_args.n, "Trace length (trellis)");
    orc->add_option("--seed", oracle_args.seed, "Trace seed (trellis)");
    orc->add_option("--mc-n", oracle_args.mc_n, "Monte Carlo samples (awgn cross-check)");
    orc->add_option("--nodes", oracle_args.nodes, "Gauss-Hermite nodes (awgn)");

    std::string fault_name = "none";
    CLI::App* self = app.add_subcommand("selftest", "Fast acceptance subset");
    self->add_option("--inject-fault", fault_name,
                     "Test hook: none or cov-asymmetry (forces a named failure)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_flags);
        if (sweep->parsed()) return cmd_sweep(sweep_flags);
        if (orc->parsed()) return cmd_oracle(oracle_args);
        if (self->parsed()) {
            FaultInjection fault;
            if (fault_name == "none") {
                fault = FaultInjection::none;
            } else if (fault_name == "cov-asymmetry") {
                fault = FaultInjection::cov_asymmetry;
            } else {
                std::cerr << "selftest: unknown fault '" << fault_name << "'\n";
                return kExitConfig;
            }
            const int failures = run_selftest(std::cout, fault);
            if (failures > 0) {
                std::cout << "selftest: " << failures << " check(s) failed\n";
                return kExitSelftest;
            }
            std::cout << "selftest: all checks passed\n";
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ModelError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
