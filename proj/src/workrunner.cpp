#include "vds/workrunner.hpp"

#include <charconv>
#include <set>

#include <json.hpp>

#include "vds/abstract_planner.hpp"
#include "vds/error.hpp"
#include "vds/text_io.hpp"

namespace vds {

std::string_view to_string(JobStatus status) {
    switch (status) {
        case JobStatus::Queued: return "Queued";
        case JobStatus::Concretizing: return "Concretizing";
        case JobStatus::Submitted: return "Submitted";
        case JobStatus::Running: return "Running";
        case JobStatus::Succeeded: return "Succeeded";
        case JobStatus::Failed: return "Failed";
    }
    return "Queued";
}

void validate(const SchedulerConfig& config) {
    if (!(config.tick_interval_s > 0.0)) throw ConfigError("tick_interval_s must be positive");
    if (config.retries < 0) throw ConfigError("retries must be >= 0");
    for (const auto& [site, wm] : config.sites) {
        if (wm.low < 0) throw ConfigError("site." + site + ".low must be >= 0");
        if (wm.high < 1) throw ConfigError("site." + site + ".high must be >= 1");
        if (!(wm.low < wm.high)) throw ConfigError("site " + site + ": low watermark must be below high");
    }
}

SchedulerConfig scheduler_config_from_pairs(const std::map<std::string, std::string>& pairs) {
    SchedulerConfig cfg;
    std::map<std::string, std::pair<std::optional<int>, std::optional<int>>> marks;
    auto to_int = [](const std::string& key, const std::string& value) {
        int v = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc{} || ptr != value.data() + value.size()) {
            throw ConfigError(key + ": expected an integer, got '" + value + "'");
        }
        return v;
    };
    for (const auto& [key, value] : pairs) {
        if (key == "tick_interval_s") {
            double v = 0;
            auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc{} || ptr != value.data() + value.size()) {
                throw ConfigError("tick_interval_s: expected a number, got '" + value + "'");
            }
            cfg.tick_interval_s = v;
        } else if (key == "retries") {
            cfg.retries = to_int(key, value);
        } else if (key.rfind("site.", 0) == 0) {
            const auto dot = key.rfind('.');
            const std::string site = key.substr(5, dot - 5);
            const std::string field = key.substr(dot + 1);
            if (dot <= 5 || site.empty()) throw ConfigError("malformed key " + key);
            if (field == "low") {
                marks[site].first = to_int(key, value);
            } else if (field == "high") {
                marks[site].second = to_int(key, value);
            } else {
                throw ConfigError("unknown site setting " + key);
            }
        } else {
            throw ConfigError("unknown setting " + key);
        }
    }
    for (const auto& [site, m] : marks) {
        if (!m.first || !m.second) throw ConfigError("site " + site + " needs both low and high watermarks");
        cfg.sites[site] = SiteWatermarks{*m.first, *m.second};
    }
    validate(cfg);
    return cfg;
}

SchedulerConfig parse_scheduler_config(std::string_view text) {
    std::map<std::string, std::string> pairs;
    std::size_t line_no = 0;
    for (std::string_view raw : split_lines(text)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(trim(line.substr(0, eq)));
        if (!pairs.emplace(key, std::string(trim(line.substr(eq + 1)))).second) {
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key " + key);
        }
    }
    return scheduler_config_from_pairs(pairs);
}

double SchedulerStats::failure_fraction() const {
    const auto done = finished_on_grid();
    return done == 0 ? 0.0 : static_cast<double>(failed - concretization_failed) / static_cast<double>(done);
}

std::string SchedulerStats::to_json() const {
    nlohmann::json doc = {{"enqueued", enqueued},
                          {"queued", queued},
                          {"concretizing", concretizing},
                          {"submitted", submitted},
                          {"running", running},
                          {"succeeded", succeeded},
                          {"failed", failed},
                          {"concretization_failed", concretization_failed},
                          {"failure_fraction", failure_fraction()}};
    doc["per_site"] = nlohmann::json::object();
    for (const auto& [site, c] : per_site) {
        doc["per_site"][site] = {{"live", c.live}, {"succeeded", c.succeeded}, {"failed", c.failed}};
    }
    return doc.dump(2) + "\n";
}

WorkRunner::WorkRunner(const VirtualDataCatalog& catalog, const ReplicaCatalog& rls, SchedulerConfig config,
                       ConcretePlanOptions plan_options, MetadataDb* metadb)
    : catalog_(catalog), rls_(rls), config_(std::move(config)), plan_options_(std::move(plan_options)), metadb_(metadb) {
    validate(config_);
    plan_options_.known_sites.clear();
    for (const auto& [site, wm] : config_.sites) plan_options_.known_sites.insert(site);
}

void WorkRunner::enqueue(const std::vector<std::string>& targets) {
    std::set<std::string_view> batch;
    for (const auto& t : targets) {
        if (!catalog_.find_derivation(t)) throw UnknownTarget("no derivation named " + t);
        if (records_.count(t) || !batch.insert(t).second) throw DuplicateTarget(t + " is already queued or tracked");
    }
    for (const auto& t : targets) {
        queue_.push_back(t);
        records_.emplace(t, JobRecord{t, JobStatus::Queued, {}, std::nullopt, std::nullopt, std::nullopt, 0});
    }
}

std::vector<SubmitAction> WorkRunner::tick(const GridView& grid, double now) {
    std::vector<SubmitAction> actions;
    for (const auto& [site, wm] : config_.sites) {
        const std::size_t running = grid.running_count(site);
        if (running >= static_cast<std::size_t>(wm.low)) continue;
        std::size_t submitted = 0;
        while (running + submitted <= static_cast<std::size_t>(wm.high) && !queue_.empty()) {
            const std::string target = std::move(queue_.front());
            queue_.pop_front();
            JobRecord& rec = records_.at(target);
            rec.status = JobStatus::Concretizing;
            ++rec.attempts;
            try {
                const AbstractDag dag = plan_abstract(catalog_, PlanRequest::derivation(target));
                ConcreteDag cdag = plan_concrete(dag, site, rls_, plan_options_);
                rec.status = JobStatus::Submitted;
                rec.site = site;
                rec.submit_time = now;
                rec.end_time.reset();
                rec.failure_reason.clear();
                ++live_;
                actions.push_back({target, site, std::move(cdag)});
                ++submitted;
            } catch (const Error& e) {
                rec.status = JobStatus::Failed;
                rec.failure_reason = ConcretizationFailed(target + ": " + e.what()).what();
                rec.end_time = now;
            }
        }
    }
    return actions;
}

JobRecord& WorkRunner::live_record(std::string_view dv_name) {
    auto it = records_.find(dv_name);
    if (it == records_.end()) throw UnknownJob("no job for " + std::string(dv_name));
    JobRecord& rec = it->second;
    if (rec.status != JobStatus::Submitted && rec.status != JobStatus::Running) {
        throw UnknownJob(std::string(dv_name) + " is not live (status " + std::string(to_string(rec.status)) + ")");
    }
    return rec;
}

void WorkRunner::mark_running(std::string_view dv_name, double /*time*/) {
    JobRecord& rec = live_record(dv_name);
    rec.status = JobStatus::Running;
}

void WorkRunner::handle_completion(const CompletionNotice& notice) {
    JobRecord& rec = live_record(notice.dv_name);
    if (notice.success && rec.status != JobStatus::Running) {
        throw std::logic_error(notice.dv_name + " reported success before it was running");
    }
    rec.end_time = notice.time;
    rec.status = notice.success ? JobStatus::Succeeded : JobStatus::Failed;
    rec.failure_reason = notice.success ? "" : notice.reason;
    --live_;

    if (metadb_) {
        CompletionRecord cr;
        if (!notice.job_log.empty()) {
            cr = parse_job_log(notice.job_log);
        } else {
            cr.dv_name = notice.dv_name;
            cr.success = notice.success;
            cr.failure_reason = rec.failure_reason;
            cr.start = rec.submit_time;
            cr.end = notice.time;
            cr.wall_seconds = rec.submit_time ? notice.time - *rec.submit_time : 0.0;
        }
        metadb_->write_completion(cr);
    }

    if (!notice.success && rec.attempts <= config_.retries) {
        rec.status = JobStatus::Queued;
        rec.site.reset();
        queue_.push_back(rec.dv_name);
    }
}

SchedulerStats WorkRunner::stats() const {
    SchedulerStats s;
    s.enqueued = records_.size();
    for (const auto& [site, wm] : config_.sites) s.per_site[site];
    for (const auto& [name, rec] : records_) {
        switch (rec.status) {
            case JobStatus::Queued: ++s.queued; break;
            case JobStatus::Concretizing: ++s.concretizing; break;
            case JobStatus::Submitted: ++s.submitted; break;
            case JobStatus::Running: ++s.running; break;
            case JobStatus::Succeeded: ++s.succeeded; break;
            case JobStatus::Failed: ++s.failed; break;
        }
        if (rec.status == JobStatus::Failed && !rec.site) ++s.concretization_failed;
        if (!rec.site) continue;
        SiteCounts& c = s.per_site[*rec.site];
        if (rec.status == JobStatus::Submitted || rec.status == JobStatus::Running) ++c.live;
        if (rec.status == JobStatus::Succeeded) ++c.succeeded;
        if (rec.status == JobStatus::Failed) ++c.failed;
    }
    return s;
}

const JobRecord& WorkRunner::record(std::string_view dv_name) const {
    auto it = records_.find(dv_name);
    if (it == records_.end()) throw UnknownJob("no job for " + std::string(dv_name));
    return it->second;
}

bool WorkRunner::has_live_jobs() const { return live_ > 0; }

}  // namespace vds
