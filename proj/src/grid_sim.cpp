#include "vds/grid_sim.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "vds/error.hpp"
#include "vds/production.hpp"

namespace vds {

using json = nlohmann::json;

double ServiceTimes::of(NodeKind kind) const {
    switch (kind) {
        case NodeKind::Execute: return execute;
        case NodeKind::StageIn: return stage_in;
        case NodeKind::StageOut: return stage_out;
        case NodeKind::Register: return register_file;
    }
    return execute;
}

double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void validate(const GridConfig& config) {
    if (config.rng != kRngAlgorithm) {
        throw ConfigError("unsupported rng '" + config.rng + "' (only " + std::string(kRngAlgorithm) + ")");
    }
    std::set<std::string> seen;
    for (const auto& s : config.sites) {
        if (s.site.empty()) throw ConfigError("site with empty id");
        if (!seen.insert(s.site).second) throw ConfigError("site " + s.site + " declared twice");
        if (s.slots < 1) throw ConfigError("site " + s.site + ": slots must be >= 1");
        if (!(s.per_job_failure_prob >= 0.0 && s.per_job_failure_prob <= 1.0)) {
            throw ConfigError("site " + s.site + ": failure_prob must lie in [0,1]");
        }
        for (NodeKind k : {NodeKind::Execute, NodeKind::StageIn, NodeKind::StageOut, NodeKind::Register}) {
            if (!(s.exec_time_s.of(k) >= 0.0)) throw ConfigError("site " + s.site + ": negative service time");
        }
        double last_end = -INFINITY;
        for (const auto& o : s.outages) {
            if (!(o.start < o.end)) throw ConfigError("site " + s.site + ": outage must have start < end");
            if (o.start < last_end) throw ConfigError("site " + s.site + ": outages must be disjoint and ordered");
            last_end = o.end;
        }
    }
    if (config.bytes_per_event < 0 || config.log_bytes < 0) throw ConfigError("negative output sizes");
}

GridConfig parse_grid_config(std::string_view json_text) {
    GridConfig cfg;
    try {
        const json doc = json::parse(json_text);
        cfg.seed = doc.value("seed", std::uint64_t{1});
        cfg.rng = doc.value("rng", std::string(kRngAlgorithm));
        const std::string mode = doc.value("service_time_mode", "deterministic");
        if (mode == "deterministic") {
            cfg.service_time_mode = ServiceTimeMode::Deterministic;
        } else if (mode == "exponential") {
            cfg.service_time_mode = ServiceTimeMode::Exponential;
        } else {
            throw ConfigError("service_time_mode must be deterministic or exponential");
        }
        cfg.bytes_per_event = doc.value("bytes_per_event", cfg.bytes_per_event);
        cfg.log_bytes = doc.value("log_bytes", cfg.log_bytes);
        for (const auto& s : doc.at("sites")) {
            SiteSpec spec;
            spec.site = s.at("id").get<std::string>();
            spec.slots = s.at("slots").get<int>();
            if (s.contains("exec_time_s")) {
                const auto& t = s.at("exec_time_s");
                spec.exec_time_s.execute = t.value("execute", spec.exec_time_s.execute);
                spec.exec_time_s.stage_in = t.value("stagein", spec.exec_time_s.stage_in);
                spec.exec_time_s.stage_out = t.value("stageout", spec.exec_time_s.stage_out);
                spec.exec_time_s.register_file = t.value("register", spec.exec_time_s.register_file);
            }
            spec.per_job_failure_prob = s.value("failure_prob", 0.0);
            for (const auto& o : s.value("outages", json::array())) {
                spec.outages.push_back({o.at(0).get<double>(), o.at(1).get<double>()});
            }
            spec.preemptions = s.value("preemptions", std::vector<double>{});
            cfg.sites.push_back(std::move(spec));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("grid config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

std::string grid_config_to_json(const GridConfig& cfg) {
    json doc;
    doc["seed"] = cfg.seed;
    doc["rng"] = cfg.rng;
    doc["service_time_mode"] = cfg.service_time_mode == ServiceTimeMode::Deterministic ? "deterministic" : "exponential";
    doc["bytes_per_event"] = cfg.bytes_per_event;
    doc["log_bytes"] = cfg.log_bytes;
    doc["sites"] = json::array();
    for (const auto& s : cfg.sites) {
        json outages = json::array();
        for (const auto& o : s.outages) outages.push_back({o.start, o.end});
        doc["sites"].push_back({{"id", s.site},
                                {"slots", s.slots},
                                {"exec_time_s",
                                 {{"execute", s.exec_time_s.execute},
                                  {"stagein", s.exec_time_s.stage_in},
                                  {"stageout", s.exec_time_s.stage_out},
                                  {"register", s.exec_time_s.register_file}}},
                                {"failure_prob", s.per_job_failure_prob},
                                {"outages", outages},
                                {"preemptions", s.preemptions}});
    }
    return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

namespace {

std::int64_t events_param(const ExecuteNode& exec) {
    auto it = exec.params.find("numevents");
    if (it == exec.params.end()) return 0;
    std::int64_t n = 0;
    const auto& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    return ec == std::errc{} && ptr == s.data() + s.size() ? n : 0;
}

bool ends_with(std::string_view s, std::string_view suffix) {
    return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

GridSimulator::GridSimulator(GridConfig config, ReplicaCatalog& rls)
    : config_(std::move(config)), rls_(rls), rng_(config_.seed) {
    validate(config_);
    for (const auto& spec : config_.sites) {
        site_index_.emplace(spec.site, sites_.size());
        SiteRun run;
        run.spec = spec;
        sites_.push_back(std::move(run));
    }
    for (std::size_t i = 0; i < sites_.size(); ++i) {
        for (double t : sites_[i].spec.preemptions) {
            Event e;
            e.time = t;
            e.type = Event::Type::Preempt;
            e.site = i;
            schedule(e);
        }
    }
}

void GridSimulator::schedule(Event e) {
    e.seq = seq_++;
    queue_.push(e);
}

DagHandle GridSimulator::submit(ConcreteDag cdag) {
    auto site_it = site_index_.find(cdag.site);
    if (site_it == site_index_.end()) throw UnknownSite("grid has no site " + cdag.site);

    const DagHandle handle = next_handle_++;
    DagRun& dag = dags_[handle];
    dag.handle = handle;
    dag.target = cdag.target;
    dag.name = cdag.target.empty() ? "dag" + std::to_string(handle) : cdag.target;
    dag.site = site_it->second;
    dag.submit_time = clock_;

    std::map<std::string, std::size_t> index;
    for (auto& [id, node] : cdag.nodes) {
        index.emplace(id, dag.nodes.size());
        if (const auto* exec = std::get_if<ExecuteNode>(&node)) {
            const auto n = events_param(*exec);
            for (const auto& lfn : exec->outputs) dag.events_by_lfn[lfn] = n;
            if (exec->dv == cdag.target) dag.target_events = n;
        }
        NodeRun run;
        run.id = id;
        run.node = std::move(node);
        dag.nodes.push_back(std::move(run));
    }
    for (const auto& [parent, child] : cdag.edges) {
        const std::size_t p = index.at(parent);
        const std::size_t c = index.at(child);
        dag.nodes[p].children.push_back(c);
        ++dag.nodes[c].pending_parents;
    }
    dag.remaining = dag.nodes.size();
    ++active_dags_;
    SiteRun& site = sites_[dag.site];
    ++site.live_dags;
    log(dag, "-", "DAG", "submitted");

    if (dag.nodes.empty()) {
        succeed_dag(dag);
        dags_.erase(handle);
        return handle;
    }
    for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
        if (dag.nodes[i].pending_parents == 0) {
            dag.nodes[i].state = NodeState::Ready;
            site.ready.emplace_back(handle, i);
        }
    }
    dispatch(dag.site);
    return handle;
}

std::vector<DagEvent> GridSimulator::step(double until_s) {
    while (!queue_.empty() && queue_.top().time <= until_s) {
        const Event e = queue_.top();
        queue_.pop();
        clock_ = std::max(clock_, e.time);
        if (e.type == Event::Type::Preempt) {
            preempt(e.site);
            continue;
        }
        auto it = dags_.find(e.dag);
        if (it == dags_.end()) continue;
        DagRun& dag = it->second;
        if (dag.terminal || dag.nodes[e.node].state != NodeState::Running) continue;
        finish_node(dag, e.node);
    }
    clock_ = std::max(clock_, until_s);
    std::vector<DagEvent> out;
    out.swap(pending_);
    return out;
}

std::optional<double> GridSimulator::next_event_time() const {
    if (queue_.empty()) return std::nullopt;
    return queue_.top().time;
}

std::size_t GridSimulator::running_count(std::string_view site) const {
    auto it = site_index_.find(site);
    if (it == site_index_.end()) throw UnknownSite("grid has no site " + std::string(site));
    return sites_[it->second].live_dags;
}

bool GridSimulator::site_has_file(std::string_view site, std::string_view path) const {
    auto it = site_index_.find(site);
    return it != site_index_.end() && sites_[it->second].files.count(path) > 0;
}

int GridSimulator::peak_busy(std::string_view site) const {
    auto it = site_index_.find(site);
    if (it == site_index_.end()) throw UnknownSite("grid has no site " + std::string(site));
    return sites_[it->second].peak_busy;
}

int GridSimulator::busy(std::string_view site) const {
    auto it = site_index_.find(site);
    if (it == site_index_.end()) throw UnknownSite("grid has no site " + std::string(site));
    return sites_[it->second].busy;
}

void GridSimulator::dispatch(std::size_t site_idx) {
    SiteRun& site = sites_[site_idx];
    while (site.busy < site.spec.slots && !site.ready.empty()) {
        const auto [handle, index] = site.ready.front();
        site.ready.pop_front();
        auto it = dags_.find(handle);
        if (it == dags_.end() || it->second.terminal) continue;
        if (it->second.nodes[index].state != NodeState::Ready) continue;
        start_node(it->second, index);
    }
}

double GridSimulator::service_time(NodeKind kind, const SiteRun& site) {
    const double mean = site.spec.exec_time_s.of(kind);
    if (config_.service_time_mode == ServiceTimeMode::Deterministic || mean <= 0.0) return mean;
    return -mean * std::log1p(-unit_uniform(rng_));
}

bool GridSimulator::in_outage(const SiteRun& site, double start, double end) const {
    for (const auto& o : site.spec.outages) {
        if (start < o.end && (end > o.start || start >= o.start)) return true;
    }
    return false;
}

void GridSimulator::start_node(DagRun& dag, std::size_t index) {
    SiteRun& site = sites_[dag.site];
    NodeRun& node = dag.nodes[index];
    const NodeKind kind = kind_of(node.node);
    node.state = NodeState::Running;
    node.start = clock_;
    ++site.busy;
    site.peak_busy = std::max(site.peak_busy, site.busy);

    double duration = service_time(kind, site);
    if (const auto* in = std::get_if<StageInNode>(&node.node); in && in->from.site == in->to_site) {
        duration = 0.0;  // replica already at the execution site
    }
    if (const auto* exec = std::get_if<ExecuteNode>(&node.node)) {
        const bool random_failure = unit_uniform(rng_) < site.spec.per_job_failure_prob;
        const bool inputs_present = std::all_of(exec->inputs.begin(), exec->inputs.end(),
                                                [&](const std::string& lfn) { return site.files.count(lfn) > 0; });
        if (!inputs_present) {
            node.fail_reason = "missing_input";
            duration = 0.0;
        } else if (random_failure) {
            node.fail_reason = "random_failure";
        }
        site.running_exec.emplace(clock_, dag.handle, index);
    } else if (kind == NodeKind::StageOut || kind == NodeKind::Register) {
        if (in_outage(site, clock_, clock_ + duration)) node.fail_reason = "site_outage";
    }
    node.end = clock_ + duration;

    if (!dag.started) {
        dag.started = true;
        dag.first_start = clock_;
        pending_.push_back({DagEvent::Kind::Started, dag.handle, dag.name, site.spec.site, clock_, {}, {}});
    }
    log(dag, node.id, to_string(kind), "start");

    Event e;
    e.time = node.end;
    e.type = Event::Type::NodeFinish;
    e.dag = dag.handle;
    e.node = index;
    schedule(e);
}

void GridSimulator::finish_node(DagRun& dag, std::size_t index) {
    SiteRun& site = sites_[dag.site];
    NodeRun& node = dag.nodes[index];
    const NodeKind kind = kind_of(node.node);
    --site.busy;
    node.state = NodeState::Done;
    if (kind == NodeKind::Execute) site.running_exec.erase({node.start, dag.handle, index});

    if (const auto* exec = std::get_if<ExecuteNode>(&node.node)) {
        CompletionRecord rec;
        rec.dv_name = exec->dv;
        rec.success = node.fail_reason.empty();
        rec.failure_reason = node.fail_reason;
        rec.produced_events = rec.success ? events_param(*exec) : 0;
        rec.wall_seconds = node.end - node.start;
        rec.start = node.start;
        rec.end = node.end;
        job_logs_.push_back(emit_job_log(rec));
    }

    if (!node.fail_reason.empty()) {
        log(dag, node.id, to_string(kind), "fail:" + node.fail_reason);
        const std::string reason = node.fail_reason;
        const DagHandle handle = dag.handle;
        fail_dag(dag, reason);
        dispatch(dag.site);
        dags_.erase(handle);
        return;
    }

    log(dag, node.id, to_string(kind), "success");
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, ExecuteNode>) {
                for (const auto& lfn : n.outputs) site.files.insert(lfn);
            } else if constexpr (std::is_same_v<T, StageInNode>) {
                if (auto it = site_index_.find(n.to_site); it != site_index_.end()) sites_[it->second].files.insert(n.lfn);
            } else if constexpr (std::is_same_v<T, StageOutNode>) {
                if (auto it = site_index_.find(n.to.site); it != site_index_.end()) {
                    sites_[it->second].files.insert(n.to.pfn);
                }
            } else {
                rls_.register_replica({n.lfn, n.site, n.pfn});
                const auto ev = dag.events_by_lfn.count(n.lfn) ? dag.events_by_lfn.at(n.lfn) : 0;
                const std::int64_t bytes = ends_with(n.lfn, ".log") ? config_.log_bytes : ev * config_.bytes_per_event;
                dag.registered[n.lfn] = OutputFileInfo{bytes, {n.site, n.pfn}};
            }
        },
        node.node);

    for (std::size_t child : node.children) {
        NodeRun& c = dag.nodes[child];
        if (--c.pending_parents == 0 && c.state == NodeState::Waiting) {
            c.state = NodeState::Ready;
            site.ready.emplace_back(dag.handle, child);
        }
    }
    if (--dag.remaining == 0) {
        const DagHandle handle = dag.handle;
        succeed_dag(dag);
        dispatch(dag.site);
        dags_.erase(handle);
        return;
    }
    dispatch(dag.site);
}

void GridSimulator::fail_dag(DagRun& dag, const std::string& reason) {
    SiteRun& site = sites_[dag.site];
    for (std::size_t i = 0; i < dag.nodes.size(); ++i) {
        NodeRun& n = dag.nodes[i];
        if (n.state == NodeState::Running) {
            --site.busy;
            if (kind_of(n.node) == NodeKind::Execute) site.running_exec.erase({n.start, dag.handle, i});
        }
        if (n.state == NodeState::Running || n.state == NodeState::Ready || n.state == NodeState::Waiting) {
            n.state = NodeState::Cancelled;
            log(dag, n.id, to_string(kind_of(n.node)), "cancel");
        }
    }
    dag.terminal = true;
    --active_dags_;
    --site.live_dags;
    log(dag, "-", "DAG", "fail:" + reason);
    pending_.push_back({DagEvent::Kind::Failed, dag.handle, dag.name, site.spec.site, clock_, reason,
                        dag_log(dag, false, reason)});
}

void GridSimulator::succeed_dag(DagRun& dag) {
    SiteRun& site = sites_[dag.site];
    dag.terminal = true;
    --active_dags_;
    --site.live_dags;
    log(dag, "-", "DAG", "success");
    pending_.push_back({DagEvent::Kind::Succeeded, dag.handle, dag.name, site.spec.site, clock_, {},
                        dag_log(dag, true, {})});
}

void GridSimulator::preempt(std::size_t site_idx) {
    SiteRun& site = sites_[site_idx];
    if (site.running_exec.empty()) {
        DagRun none;
        none.name = "-";
        log(none, "-", "PREEMPT", "idle:" + site.spec.site);
        return;
    }
    const auto [start, handle, index] = *site.running_exec.begin();
    DagRun& dag = dags_.at(handle);
    log(dag, dag.nodes[index].id, "EXEC", "preempted");
    fail_dag(dag, "preempted");
    dispatch(site_idx);
    dags_.erase(handle);
}

void GridSimulator::log(const DagRun& dag, std::string_view node, std::string_view kind, std::string_view outcome) {
    std::string line = fmt::format("{:.3f} {} {} {} {}", clock_, dag.name, node, kind, outcome);
    for (unsigned char c : line) {
        digest_ ^= c;
        digest_ *= 1099511628211ULL;
    }
    digest_ ^= '\n';
    digest_ *= 1099511628211ULL;
    if (record_trace_) trace_.push_back(std::move(line));
}

std::string GridSimulator::dag_log(const DagRun& dag, bool success, const std::string& reason) const {
    CompletionRecord rec;
    rec.dv_name = dag.name;
    rec.success = success;
    rec.failure_reason = reason;
    rec.produced_events = success ? dag.target_events : 0;
    rec.start = dag.started ? dag.first_start : dag.submit_time;
    rec.end = clock_;
    rec.wall_seconds = clock_ - *rec.start;
    if (success) rec.outputs = dag.registered;
    return emit_job_log(rec);
}

}  // namespace vds
