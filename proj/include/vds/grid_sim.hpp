#pragma once

// Deterministic discrete-event model of a multi-site grid running concrete
// DAGs. Each site has a fixed number of slots; every node of a DAG (execute
// or transfer) occupies one slot for its service time. Sites can lose
// write-back connectivity during scripted outage windows and can have
// running executions preempted at scripted instants.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "vds/concrete_planner.hpp"
#include "vds/grid_view.hpp"
#include "vds/production.hpp"
#include "vds/replica.hpp"

namespace vds {

struct ServiceTimes {
    double execute = 600.0;
    double stage_in = 30.0;
    double stage_out = 30.0;
    double register_file = 1.0;

    double of(NodeKind kind) const;
};

struct Outage {
    double start = 0.0;
    double end = 0.0;
};

struct SiteSpec {
    std::string site;
    int slots = 1;
    ServiceTimes exec_time_s;
    /// Evaluated once per Execute node.
    double per_job_failure_prob = 0.0;
    /// Disjoint, increasing windows during which write-backs fail.
    std::vector<Outage> outages;
    /// Instants at which the longest-running Execute at the site is killed.
    std::vector<double> preemptions;
};

enum class ServiceTimeMode { Deterministic, Exponential };

inline constexpr std::string_view kRngAlgorithm = "mt19937_64";

struct GridConfig {
    std::vector<SiteSpec> sites;
    std::uint64_t seed = 1;
    std::string rng = std::string(kRngAlgorithm);
    ServiceTimeMode service_time_mode = ServiceTimeMode::Deterministic;
    /// Mock output sizes reported in job logs.
    std::int64_t bytes_per_event = 1'200'000;
    std::int64_t log_bytes = 4096;
};

/// Throws ConfigError.
void validate(const GridConfig& config);
GridConfig parse_grid_config(std::string_view json_text);
std::string grid_config_to_json(const GridConfig& config);

using DagHandle = std::uint64_t;

struct DagEvent {
    enum class Kind { Started, Succeeded, Failed };
    Kind kind = Kind::Started;
    DagHandle handle = 0;
    std::string dag;
    std::string site;
    double time = 0.0;
    /// Failure reason: random_failure, site_outage, preempted, missing_input.
    std::string reason;
    /// DAG-level job log (production log format); empty for Started.
    std::string job_log;
};

/// Portable uniform draw in [0, 1) from the top 53 bits of a 64-bit word.
double unit_uniform(std::mt19937_64& rng);

class GridSimulator : public GridView {
public:
    /// Register nodes publish into `rls`, which must outlive the simulator.
    GridSimulator(GridConfig config, ReplicaCatalog& rls);

    /// Throws UnknownSite. Ready nodes start immediately at the current clock.
    DagHandle submit(ConcreteDag cdag);

    /// Processes every event with time <= until_s and advances the clock.
    std::vector<DagEvent> step(double until_s);

    std::size_t running_count(std::string_view site) const override;

    double clock() const { return clock_; }
    std::optional<double> next_event_time() const;
    /// No DAG is live.
    bool idle() const { return active_dags_ == 0; }
    std::size_t active_dags() const { return active_dags_; }

    /// `<time_s> <dag> <node> <kind> <outcome>` per event, in processing order.
    const std::vector<std::string>& trace() const { return trace_; }
    void set_record_trace(bool on) { record_trace_ = on; }
    /// FNV-1a over every trace line, maintained even when lines are not kept.
    std::uint64_t trace_digest() const { return digest_; }

    /// One production-format log per finished Execute node.
    const std::vector<std::string>& job_logs() const { return job_logs_; }

    bool site_has_file(std::string_view site, std::string_view path) const;
    /// Highest number of simultaneously busy slots seen at a site.
    int peak_busy(std::string_view site) const;
    int busy(std::string_view site) const;

private:
    enum class NodeState { Waiting, Ready, Running, Done, Cancelled };

    struct NodeRun {
        std::string id;
        ConcreteNode node;
        std::vector<std::size_t> children;
        int pending_parents = 0;
        NodeState state = NodeState::Waiting;
        double start = 0.0;
        double end = 0.0;
        std::string fail_reason;
    };

    struct DagRun {
        DagHandle handle = 0;
        std::string name;
        std::string target;
        std::size_t site = 0;
        std::vector<NodeRun> nodes;
        std::size_t remaining = 0;
        bool terminal = false;
        bool started = false;
        double submit_time = 0.0;
        double first_start = 0.0;
        std::map<std::string, std::int64_t> events_by_lfn;
        std::int64_t target_events = 0;
        std::map<std::string, OutputFileInfo> registered;
    };

    struct SiteRun {
        SiteSpec spec;
        int busy = 0;
        int peak_busy = 0;
        std::size_t live_dags = 0;
        std::deque<std::pair<DagHandle, std::size_t>> ready;
        /// Running Execute nodes ordered by (start, dag, node) for preemption.
        std::set<std::tuple<double, DagHandle, std::size_t>> running_exec;
        std::set<std::string, std::less<>> files;
    };

    struct Event {
        enum class Type { NodeFinish, Preempt };
        double time = 0.0;
        std::uint64_t seq = 0;
        Type type = Type::NodeFinish;
        DagHandle dag = 0;
        std::size_t node = 0;
        std::size_t site = 0;

        bool operator>(const Event& o) const { return std::tie(time, seq) > std::tie(o.time, o.seq); }
    };

    void schedule(Event e);
    void dispatch(std::size_t site);
    void start_node(DagRun& dag, std::size_t index);
    void finish_node(DagRun& dag, std::size_t index);
    void fail_dag(DagRun& dag, const std::string& reason);
    void succeed_dag(DagRun& dag);
    void preempt(std::size_t site);
    double service_time(NodeKind kind, const SiteRun& site);
    bool in_outage(const SiteRun& site, double start, double end) const;
    void log(const DagRun& dag, std::string_view node, std::string_view kind, std::string_view outcome);
    std::string dag_log(const DagRun& dag, bool success, const std::string& reason) const;

    GridConfig config_;
    ReplicaCatalog& rls_;
    std::mt19937_64 rng_;
    std::vector<SiteRun> sites_;
    std::map<std::string, std::size_t, std::less<>> site_index_;
    std::map<DagHandle, DagRun> dags_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    std::vector<DagEvent> pending_;
    std::vector<std::string> trace_;
    std::vector<std::string> job_logs_;
    double clock_ = 0.0;
    std::uint64_t seq_ = 0;
    DagHandle next_handle_ = 1;
    std::size_t active_dags_ = 0;
    bool record_trace_ = true;
    std::uint64_t digest_ = 1469598103934665603ULL;
};

}  // namespace vds
