#include "vds/scenario.hpp"

#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "vds/catalog.hpp"
#include "vds/error.hpp"

namespace vds {

namespace {

using nlohmann::json;

ProductionRequest request_from_json(const json& j) {
    ProductionRequest r;
    r.project = j.at("project").get<std::string>();
    r.total_events = j.at("total_events").get<std::int64_t>();
    r.events_per_job = j.at("events_per_job").get<std::int64_t>();
    r.kincard = j.value("kincard", r.project + ".kin");
    r.simcard = j.value("simcard", r.project + ".sim");
    r.geomfile = j.value("geomfile", "cms.geom");
    if (j.contains("pipeline")) r.pipeline = j.at("pipeline").get<std::vector<std::string>>();
    return r;
}

std::string scalar_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number()) return json(v.get<double>()).dump();
    throw ConfigError("scheduler settings must be strings or numbers");
}

}  // namespace

SchedulerConfig with_default_watermarks(SchedulerConfig scheduler, const GridConfig& grid) {
    for (const auto& s : grid.sites) {
        if (!scheduler.sites.count(s.site)) scheduler.sites[s.site] = SiteWatermarks{s.slots, 2 * s.slots};
    }
    validate(scheduler);
    return scheduler;
}

Scenario parse_scenario(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    Scenario sc;
    try {
        sc.name = doc.value("name", "scenario");
        sc.production = request_from_json(doc.at("production"));
        sc.grid = parse_grid_config(doc.at("grid").dump());
        std::map<std::string, std::string> pairs;
        if (doc.contains("scheduler")) {
            for (const auto& [k, v] : doc.at("scheduler").items()) pairs[k] = scalar_to_string(v);
        }
        sc.scheduler = with_default_watermarks(scheduler_config_from_pairs(pairs), sc.grid);
        if (doc.contains("storage")) {
            sc.storage.site = doc["storage"].value("site", sc.storage.site);
            sc.storage.prefix = doc["storage"].value("prefix", sc.storage.prefix);
        }
        if (doc.contains("submit_horizon_s")) sc.submit_horizon_s = doc.at("submit_horizon_s").get<double>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    try {
        if (sc.production.total_events != 0) validate(sc.production);
    } catch (const Error& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    if (sc.storage.site.empty()) throw ConfigError("scenario: storage site must not be empty");
    return sc;
}

ScenarioResult run_scenario(const Scenario& scenario, std::uint64_t seed, const RunOptions& options) {
    const JobDescription jd{scenario.production};
    const GeneratedProduction gp = generate_derivations(jd, split_jobs(jd));

    VirtualDataCatalog vdc;
    for (const auto& tr : gp.transformations) vdc.insert(tr);
    for (const auto& dv : gp.derivations) vdc.insert(dv);

    ReplicaCatalog rls;
    const auto& st = scenario.storage;
    for (const auto& lfn : {jd.request.kincard, jd.request.simcard, jd.request.geomfile}) {
        rls.register_replica({lfn, st.site, st.prefix + "/" + lfn});
    }

    MetadataDb metadb;
    if (!gp.targets.empty()) metadb.put_request(jd.request);

    ConcretePlanOptions plan;
    plan.storage = st;
    WorkRunner runner(vdc, rls, scenario.scheduler, plan, &metadb);

    GridConfig grid_cfg = scenario.grid;
    grid_cfg.seed = seed;
    GridSimulator grid(grid_cfg, rls);
    grid.set_record_trace(options.record_trace);

    runner.enqueue(gp.targets);

    const double dt = scenario.scheduler.tick_interval_s;
    const double horizon = scenario.submit_horizon_s.value_or(INFINITY);
    double t = 0.0;
    for (;;) {
        const bool submitting = t < horizon && runner.queue_length() > 0;
        if (submitting) {
            for (auto& action : runner.tick(grid, t)) grid.submit(std::move(action.cdag));
            if (options.on_tick) options.on_tick(runner, grid, t);
        }
        if (!submitting && !runner.has_live_jobs()) break;
        // With nothing left to submit, jump straight to the next event.
        double until = t + dt;
        if (!submitting || !(t + dt < horizon)) {
            const auto next = grid.next_event_time();
            if (!next && !submitting) throw std::logic_error("live jobs but no pending grid events");
            if (next) until = std::max(until, *next);
        }
        for (const DagEvent& ev : grid.step(until)) {
            if (ev.kind == DagEvent::Kind::Started) {
                runner.mark_running(ev.dag, ev.time);
            } else {
                runner.handle_completion({ev.dag, ev.kind == DagEvent::Kind::Succeeded, ev.reason, ev.site, ev.time,
                                          ev.job_log});
            }
        }
        t = until;
        // Ticks stay on the dt grid while submission is possible.
        if (t < horizon) t = std::ceil(t / dt) * dt;
    }

    ScenarioResult result;
    result.seed = seed;
    result.stats = runner.stats();
    result.totals = metadb.totals();
    result.end_time_s = grid.clock();
    result.trace_digest = grid.trace_digest();
    result.trace = grid.trace();
    const auto completions = metadb.completions();
    result.completion_records = completions.size();
    for (const auto& c : completions) {
        if (!c.success) ++result.failure_reasons[c.failure_reason];
    }
    return result;
}

std::vector<ScenarioResult> run_sweep_serial(const Scenario& scenario, std::span<const std::uint64_t> seeds) {
    std::vector<ScenarioResult> out;
    out.reserve(seeds.size());
    for (std::uint64_t s : seeds) out.push_back(run_scenario(scenario, s));
    return out;
}

std::vector<ScenarioResult> run_sweep(const Scenario& scenario, std::span<const std::uint64_t> seeds) {
    std::vector<ScenarioResult> out(seeds.size());
    const auto n = static_cast<std::ptrdiff_t>(seeds.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = run_scenario(scenario, seeds[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical(vds_sweep_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::string result_to_json(const ScenarioResult& r) {
    json doc = json::parse(r.stats.to_json());
    doc["seed"] = r.seed;
    doc["end_time_s"] = r.end_time_s;
    doc["trace_digest"] = fmt::format("{:016x}", r.trace_digest);
    doc["events_produced"] = r.totals.events_produced;
    doc["completion_records"] = r.completion_records;
    doc["failure_reasons"] = r.failure_reasons;
    return doc.dump(2) + "\n";
}

}  // namespace vds
