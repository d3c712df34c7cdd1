#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "phasebound/bounds.hpp"
#include "phasebound/config.hpp"
#include "phasebound/model.hpp"

namespace phasebound {

/// One experiment grid: every (snr, gamma, tracker, repeat) combination.
struct SweepConfig {
    ModelSource model;
    std::string modulation = "qam4";
    std::vector<double> snr_db;
    std::vector<double> gamma;
    long n = 200000;
    long burn_in = 1000;
    int np_blind = 4096;
    std::vector<TrackerChoice> trackers;
    int quad_nodes = 32;
    std::uint64_t master_seed = 1;
    int repeats = 1;
    int workers = 0; // 0: hardware concurrency

    // Test hook: when non-empty every row throws this estimator error,
    // exercising the failure taxonomy without a statistical accident.
    std::string inject_row_fault;

    void validate() const;
    static SweepConfig from_config(const ConfigFile& cfg);
};

struct ResultRow {
    std::string model_id;
    std::string modulation;
    double snr_db = 0.0;
    double gamma = 0.0;
    std::string tracker;
    long n = 0;
    long burn_in = 0;
    int np_blind = 0;
    int quad_nodes = 0;
    std::uint64_t seed = 0;
    double lb = 0.0, lb_se = 0.0, ub = 0.0, ub_se = 0.0;
    BoundComponents components;
    std::string status = "ok"; // or failed:<reason>
    long wall_ms = 0;
};

/// Deterministic per-row seed from master seed and row coordinates only.
std::uint64_t row_seed(const SweepConfig& cfg, double snr_db, double gamma,
                       const TrackerChoice& tracker, int repeat);

/**
 * Run the whole grid with a bounded worker pool. Rows come back in grid
 * order (snr, gamma, tracker, repeat as listed) regardless of execution
 * order, and estimator failures flag the row instead of aborting.
 */
std::vector<ResultRow> run_sweep(const SweepConfig& cfg);

/// CSV with the fixed column set; doubles print shortest-round-trip.
std::string csv_header();
std::string to_csv(const std::vector<ResultRow>& rows);
void write_csv(const std::string& path, const std::vector<ResultRow>& rows);

enum class Split { halves, doubling_n };

struct ConvergenceReport {
    double delta_lb = 0.0, sigma_lb = 0.0;
    double delta_ub = 0.0, sigma_ub = 0.0;
    bool flagged = false;
};

/**
 * Compare two groups of estimates of the same configuration: the two
 * halves of a repeat set, or the rows at n and 2n. Flags when either
 * bound moves by more than 3 combined standard errors.
 */
ConvergenceReport convergence_report(std::span<const ResultRow> rows, Split split);

} // namespace phasebound
