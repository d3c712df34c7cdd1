#include "phasebound/harness.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include "phasebound/gaussian.hpp"
#include "phasebound/rng.hpp"

namespace phasebound {

void SweepConfig::validate() const {
    if (model.a.empty()) throw ConfigError("sweep: model has no taps");
    if (snr_db.empty()) throw ConfigError("sweep: field 'snr_db' must not be empty");
    if (gamma.empty()) throw ConfigError("sweep: field 'gamma' must not be empty");
    for (double g : gamma)
        if (!(g > 0.0)) throw ConfigError("sweep: field 'gamma': values must be > 0");
    if (trackers.empty()) throw ConfigError("sweep: field 'trackers' must not be empty");
    if (repeats < 1) throw ConfigError("sweep: field 'repeats' must be >= 1");
    if (n <= burn_in + 10000)
        throw ConfigError("sweep: field 'n' must exceed burn_in + 10000 for stable averages");
    if (np_blind < 2) throw ConfigError("sweep: field 'np_blind' must be >= 2");
    if (quad_nodes < 8) throw ConfigError("sweep: field 'quad_nodes' must be >= 8");
    Constellation::from_name(modulation); // throws on bad name
}

SweepConfig SweepConfig::from_config(const ConfigFile& cfg) {
    cfg.ensure_only({"model", "poles", "zeros", "gamma", "modulation", "snr_db", "n", "burn_in",
                     "np_blind", "trackers", "np_tracker", "quad_nodes", "master_seed", "repeats",
                     "workers", "output"});
    SweepConfig sw;
    sw.model = model_from_config(cfg);
    sw.modulation = cfg.get_string_or("modulation", "qam4");
    sw.snr_db = cfg.get_double_list("snr_db");
    sw.gamma = cfg.get_double_list("gamma");
    sw.n = cfg.get_long_or("n", 200000);
    sw.burn_in = cfg.get_long_or("burn_in", 1000);
    sw.np_blind = static_cast<int>(cfg.get_long_or("np_blind", 4096));
    sw.quad_nodes = static_cast<int>(cfg.get_long_or("quad_nodes", 32));
    sw.master_seed = cfg.has("master_seed") ? cfg.get_u64("master_seed") : 1;
    sw.repeats = static_cast<int>(cfg.get_long_or("repeats", 1));
    sw.workers = static_cast<int>(cfg.get_long_or("workers", 0));
    const int np_tracker = static_cast<int>(cfg.get_long_or("np_tracker", 4096));
    std::vector<std::string> names{"kalman", "particle"};
    if (cfg.has("trackers")) names = cfg.get_string_list("trackers");
    for (const auto& name : names) {
        try {
            TrackerChoice t = TrackerChoice::parse(name);
            if (t.kind == TrackerChoice::Kind::particle && name == "particle")
                t.np = np_tracker;
            sw.trackers.push_back(t);
        } catch (const std::invalid_argument& err) {
            throw ConfigError(std::string("field 'trackers': ") + err.what());
        }
    }
    sw.validate();
    return sw;
}

std::uint64_t row_seed(const SweepConfig& cfg, double snr_db, double gamma,
                       const TrackerChoice& tracker, int repeat) {
    std::uint64_t s = Rng::derive(cfg.master_seed, cfg.model.model_id);
    s = Rng::derive(s, cfg.modulation);
    s = Rng::derive(s, Rng::tag_of(snr_db));
    s = Rng::derive(s, Rng::tag_of(gamma));
    s = Rng::derive(s, tracker.name());
    s = Rng::derive(s, static_cast<std::uint64_t>(repeat));
    return s;
}

namespace {

std::string classify_failure(const char* what) {
    const std::string w(what);
    if (w.find("depletion") != std::string::npos) return "failed:depletion";
    if (w.find("dispersed") != std::string::npos) return "failed:dispersed_posterior";
    if (w.find("insufficient samples") != std::string::npos) return "failed:insufficient_samples";
    if (w.find("underflow") != std::string::npos) return "failed:underflow";
    return "failed:estimator";
}

ResultRow run_row(const SweepConfig& cfg, double snr_db, double gamma,
                  const TrackerChoice& tracker, int repeat) {
    ResultRow row;
    row.model_id = cfg.model.model_id;
    row.modulation = cfg.modulation;
    row.snr_db = snr_db;
    row.gamma = gamma;
    row.tracker = tracker.name();
    row.n = cfg.n;
    row.burn_in = cfg.burn_in;
    row.np_blind = cfg.np_blind;
    row.quad_nodes = cfg.quad_nodes;
    row.seed = row_seed(cfg, snr_db, gamma, tracker, repeat);

    const double nan = std::numeric_limits<double>::quiet_NaN();
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (!cfg.inject_row_fault.empty()) throw EstimatorError(cfg.inject_row_fault);
        const ArmaSpec spec(cfg.model.a, cfg.model.b, gamma);
        const Constellation cons = Constellation::from_name(cfg.modulation);
        const ChannelParams ch = ChannelParams::from_db(snr_db);
        const Trace trace = generate_trace(spec, cons, ch, cfg.n, row.seed);

        LbOptions lb_opts;
        lb_opts.quad_nodes = cfg.quad_nodes;
        lb_opts.burn_in = cfg.burn_in;
        const BoundEstimate lb = lower_bound(trace, spec, cons, ch, lb_opts);

        UbOptions ub_opts;
        ub_opts.tracker = tracker;
        ub_opts.np_blind = cfg.np_blind;
        ub_opts.seed = row.seed;
        ub_opts.burn_in = cfg.burn_in;
        const BoundEstimate ub = upper_bound(trace, spec, cons, ch, ub_opts);

        row.lb = lb.value;
        row.lb_se = lb.se;
        row.ub = ub.value;
        row.ub_se = ub.se;
        row.components = ub.components;
        row.components.hx = lb.components.hx;
        row.components.hx_given_y = lb.components.hx_given_y;
        row.status = "ok";
    } catch (const EstimatorError& err) {
        row.lb = row.lb_se = row.ub = row.ub_se = nan;
        row.status = classify_failure(err.what());
    } catch (const std::exception& err) {
        row.lb = row.lb_se = row.ub = row.ub_se = nan;
        row.status = "failed:config";
    }
    const auto t1 = std::chrono::steady_clock::now();
    row.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    return row;
}

} // namespace

std::vector<ResultRow> run_sweep(const SweepConfig& cfg) {
    cfg.validate();

    struct Task {
        double snr_db, gamma;
        TrackerChoice tracker;
        int repeat;
    };
    std::vector<Task> tasks;
    for (double s : cfg.snr_db)
        for (double g : cfg.gamma)
            for (const TrackerChoice& t : cfg.trackers)
                for (int r = 0; r < cfg.repeats; ++r) tasks.push_back({s, g, t, r});

    std::vector<ResultRow> rows(tasks.size());
    unsigned nw = cfg.workers > 0 ? static_cast<unsigned>(cfg.workers)
                                  : std::max(1u, std::thread::hardware_concurrency());
    nw = std::min<unsigned>(nw, tasks.size());

    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& t = tasks[i];
            rows[i] = run_row(cfg, t.snr_db, t.gamma, t.tracker, t.repeat);
        }
    };
    if (nw <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned i = 0; i < nw; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

namespace {

std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace

std::string csv_header() {
    return "model_id,modulation,snr_db,gamma,tracker,n,burn_in,np_blind,quad_nodes,seed,"
           "lb,lb_se,ub,ub_se,h_y,h_y_given_xs,d_term,hx,hx_given_y,status,wall_ms";
}

std::string to_csv(const std::vector<ResultRow>& rows) {
    std::ostringstream out;
    out << csv_header() << "\n";
    for (const ResultRow& r : rows) {
        out << r.model_id << ',' << r.modulation << ',' << fmt_double(r.snr_db) << ','
            << fmt_double(r.gamma) << ',' << r.tracker << ',' << r.n << ',' << r.burn_in << ','
            << r.np_blind << ',' << r.quad_nodes << ',' << r.seed << ',' << fmt_double(r.lb)
            << ',' << fmt_double(r.lb_se) << ',' << fmt_double(r.ub) << ',' << fmt_double(r.ub_se)
            << ',' << fmt_double(r.components.h_y) << ',' << fmt_double(r.components.h_y_given_xs)
            << ',' << fmt_double(r.components.d_term) << ',' << fmt_double(r.components.hx) << ','
            << fmt_double(r.components.hx_given_y) << ',' << r.status << ',' << r.wall_ms << "\n";
    }
    return out.str();
}

void write_csv(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file '" + path + "'");
    out << to_csv(rows);
}

ConvergenceReport convergence_report(std::span<const ResultRow> rows, Split split) {
    if (rows.size() < 2)
        throw std::invalid_argument("convergence_report: need at least 2 rows");

    std::vector<const ResultRow*> g1, g2;
    if (split == Split::halves) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            (i < rows.size() / 2 ? g1 : g2).push_back(&rows[i]);
    } else {
        long n_lo = rows[0].n, n_hi = rows[0].n;
        for (const auto& r : rows) {
            n_lo = std::min(n_lo, r.n);
            n_hi = std::max(n_hi, r.n);
        }
        if (n_lo == n_hi)
            throw std::invalid_argument("convergence_report: doubling_n needs two distinct n");
        for (const auto& r : rows) (r.n == n_lo ? g1 : g2).push_back(&r);
    }

    const auto group = [](const std::vector<const ResultRow*>& g, bool lb) {
        double mean = 0.0, var = 0.0;
        for (const ResultRow* r : g) {
            mean += lb ? r->lb : r->ub;
            const double se = lb ? r->lb_se : r->ub_se;
            var += se * se;
        }
        const double c = static_cast<double>(g.size());
        return std::pair<double, double>{mean / c, std::sqrt(var) / c};
    };

    ConvergenceReport rep;
    const auto [lb1, se_lb1] = group(g1, true);
    const auto [lb2, se_lb2] = group(g2, true);
    const auto [ub1, se_ub1] = group(g1, false);
    const auto [ub2, se_ub2] = group(g2, false);
    rep.delta_lb = std::abs(lb1 - lb2);
    rep.sigma_lb = std::sqrt(se_lb1 * se_lb1 + se_lb2 * se_lb2);
    rep.delta_ub = std::abs(ub1 - ub2);
    rep.sigma_ub = std::sqrt(se_ub1 * se_ub1 + se_ub2 * se_ub2);
    rep.flagged = rep.delta_lb > 3.0 * rep.sigma_lb || rep.delta_ub > 3.0 * rep.sigma_ub;
    return rep;
}

} // namespace phasebound
