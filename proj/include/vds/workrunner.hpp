#pragma once

// WorkRunner: keeps each grid site loaded between a low and a high watermark
// of live DAGs. Abstract DAG targets wait in a FIFO and are concretized only
// when a site has room for them.

#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vds/catalog.hpp"
#include "vds/concrete_planner.hpp"
#include "vds/grid_view.hpp"
#include "vds/production.hpp"
#include "vds/replica.hpp"

namespace vds {

struct SiteWatermarks {
    int low = 0;
    int high = 1;
};

struct SchedulerConfig {
    std::map<std::string, SiteWatermarks> sites;
    double tick_interval_s = 60.0;
    /// Resubmissions allowed per DAG after a failure.
    int retries = 0;
};

/// `key = value` lines: `site.<id>.low`, `site.<id>.high`, `tick_interval_s`,
/// `retries`; `#` comments. Every site needs both watermarks with low < high.
/// Throws ConfigError.
SchedulerConfig parse_scheduler_config(std::string_view text);
SchedulerConfig scheduler_config_from_pairs(const std::map<std::string, std::string>& pairs);
void validate(const SchedulerConfig& config);

enum class JobStatus { Queued, Concretizing, Submitted, Running, Succeeded, Failed };
std::string_view to_string(JobStatus status);

struct JobRecord {
    std::string dv_name;
    JobStatus status = JobStatus::Queued;
    std::string failure_reason;
    std::optional<std::string> site;
    std::optional<double> submit_time;
    std::optional<double> end_time;
    int attempts = 0;
};

struct SubmitAction {
    std::string target;
    std::string site;
    ConcreteDag cdag;
};

/// Terminal outcome of a submitted DAG as reported by the grid.
struct CompletionNotice {
    std::string dv_name;
    bool success = false;
    std::string reason;
    std::string site;
    double time = 0.0;
    /// DAG-level job log; when present it is parsed and written to the
    /// metadata db verbatim.
    std::string job_log;
};

struct SiteCounts {
    std::size_t live = 0;  // submitted or running
    std::size_t succeeded = 0;
    std::size_t failed = 0;

    friend bool operator==(const SiteCounts&, const SiteCounts&) = default;
};

struct SchedulerStats {
    std::size_t enqueued = 0;
    std::size_t queued = 0;
    std::size_t concretizing = 0;
    std::size_t submitted = 0;
    std::size_t running = 0;
    std::size_t succeeded = 0;
    std::size_t failed = 0;
    /// Concretization failures among `failed` (never reached the grid).
    std::size_t concretization_failed = 0;
    std::map<std::string, SiteCounts> per_site;

    /// DAGs that reached the grid and terminated.
    std::size_t finished_on_grid() const { return succeeded + failed - concretization_failed; }
    /// failed / finished_on_grid, 0 when nothing finished.
    double failure_fraction() const;
    std::string to_json() const;

    friend bool operator==(const SchedulerStats&, const SchedulerStats&) = default;
};

class WorkRunner {
public:
    /// `catalog` and `rls` must outlive the scheduler; `rls` is read at every
    /// concretization so it sees files registered since the last tick.
    /// `plan_options.known_sites` is overwritten with the configured sites.
    WorkRunner(const VirtualDataCatalog& catalog, const ReplicaCatalog& rls, SchedulerConfig config,
               ConcretePlanOptions plan_options, MetadataDb* metadb = nullptr);

    /// Throws UnknownTarget or DuplicateTarget; all-or-nothing.
    void enqueue(const std::vector<std::string>& targets);

    /// Visits sites in id order. A site whose live count is below its low
    /// watermark receives DAGs until live + new exceeds the high watermark or
    /// the queue runs dry.
    std::vector<SubmitAction> tick(const GridView& grid, double now);

    /// Submitted -> Running. Throws UnknownJob.
    void mark_running(std::string_view dv_name, double time);
    /// Throws UnknownJob for a DAG that is not live.
    void handle_completion(const CompletionNotice& notice);

    SchedulerStats stats() const;
    const JobRecord& record(std::string_view dv_name) const;
    std::size_t queue_length() const { return queue_.size(); }
    bool has_live_jobs() const;
    const SchedulerConfig& config() const { return config_; }

private:
    JobRecord& live_record(std::string_view dv_name);

    const VirtualDataCatalog& catalog_;
    const ReplicaCatalog& rls_;
    SchedulerConfig config_;
    ConcretePlanOptions plan_options_;
    MetadataDb* metadb_;
    std::deque<std::string> queue_;
    std::map<std::string, JobRecord, std::less<>> records_;
    std::size_t live_ = 0;
};

}  // namespace vds
