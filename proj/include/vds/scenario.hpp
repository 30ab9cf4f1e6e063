#pragma once

// End-to-end production run: generate derivations for a request, queue one
// DAG per job in WorkRunner, and drive the grid simulator until every
// submitted DAG has terminated.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vds/concrete_planner.hpp"
#include "vds/grid_sim.hpp"
#include "vds/production.hpp"
#include "vds/workrunner.hpp"

namespace vds {

struct Scenario {
    std::string name;
    ProductionRequest production;
    GridConfig grid;
    SchedulerConfig scheduler;
    StorageElement storage{"storage", "/store"};
    /// WorkRunner stops submitting at this simulated time; submitted DAGs
    /// still run to completion.
    std::optional<double> submit_horizon_s;
};

/// `production.total_events` may be 0 for a scenario without jobs.
/// JSON with keys name, production, grid, scheduler (object of the key-value
/// settings), storage {site, prefix}, submit_horizon_s. Sites without
/// watermarks get low = slots, high = 2 * slots. Throws ConfigError.
Scenario parse_scenario(std::string_view json_text);

/// Fills in default watermarks for grid sites missing from `scheduler`.
SchedulerConfig with_default_watermarks(SchedulerConfig scheduler, const GridConfig& grid);

struct RunOptions {
    bool record_trace = false;
    /// Called after every scheduler tick (tests use it to audit invariants).
    std::function<void(const WorkRunner&, const GridSimulator&, double)> on_tick;
};

struct ScenarioResult {
    std::uint64_t seed = 0;
    SchedulerStats stats;
    ProductionTotals totals;
    double end_time_s = 0.0;
    std::uint64_t trace_digest = 0;
    std::vector<std::string> trace;
    std::size_t completion_records = 0;
    /// Grid failures by reason (random_failure, site_outage, ...).
    std::map<std::string, std::size_t> failure_reasons;

    std::size_t submitted() const { return stats.finished_on_grid(); }
    double failure_fraction() const { return stats.failure_fraction(); }
};

/// Deterministic in (scenario, seed). Overrides `scenario.grid.seed`.
ScenarioResult run_scenario(const Scenario& scenario, std::uint64_t seed, const RunOptions& options = {});

/// Independent runs, one per seed, fanned out over OpenMP threads. Results
/// are in seed order and identical to run_sweep_serial.
std::vector<ScenarioResult> run_sweep(const Scenario& scenario, std::span<const std::uint64_t> seeds);
/// Reference implementation of run_sweep.
std::vector<ScenarioResult> run_sweep_serial(const Scenario& scenario, std::span<const std::uint64_t> seeds);

std::string result_to_json(const ScenarioResult& result);

}  // namespace vds
