#include "vds/abstract_planner.hpp"

#include <algorithm>
#include <queue>

#include "vds/error.hpp"

namespace vds {

namespace {

class Traversal {
public:
    Traversal(const VirtualDataCatalog& catalog, AbstractDag& dag) : catalog_(catalog), dag_(dag) {}

    void visit(const std::string& dv) {
        if (on_path_.count(dv)) {
            auto start = std::find(path_.begin(), path_.end(), dv);
            std::vector<std::string> cycle(start, path_.end());
            cycle.push_back(dv);
            throw CycleDetected(std::move(cycle));
        }
        if (dag_.nodes.count(dv)) return;

        Binding binding = catalog_.bind(dv);
        path_.push_back(dv);
        on_path_.insert(dv);
        for (const auto& lfn : binding.inputs) {
            if (const Derivation* producer = catalog_.find_producer(lfn)) {
                dag_.edges.insert({producer->name, dv, lfn});
                visit(producer->name);
            } else {
                dag_.external_inputs.insert({lfn, dv});
            }
        }
        on_path_.erase(dv);
        path_.pop_back();
        dag_.nodes.emplace(dv, NodeIo{std::move(binding.inputs), std::move(binding.outputs), std::move(binding.params)});
    }

private:
    const VirtualDataCatalog& catalog_;
    AbstractDag& dag_;
    std::vector<std::string> path_;
    std::set<std::string> on_path_;
};

std::string resolve_target(const VirtualDataCatalog& catalog, const PlanRequest& request) {
    using Kind = PlanRequest::Kind;
    if (request.kind() != Kind::File && catalog.find_derivation(request.key())) return request.key();
    if (request.kind() != Kind::Derivation) {
        if (const Derivation* producer = catalog.find_producer(request.key())) return producer->name;
    }
    switch (request.kind()) {
        case Kind::Derivation: throw UnknownTarget("no derivation named " + request.key());
        case Kind::File: throw UnknownTarget("no derivation produces " + request.key());
        case Kind::Any: break;
    }
    throw UnknownTarget("'" + request.key() + "' is neither a derivation nor a producible file");
}

}  // namespace

AbstractDag plan_abstract(const VirtualDataCatalog& catalog, const PlanRequest& request) {
    AbstractDag dag;
    dag.target = resolve_target(catalog, request);
    Traversal(catalog, dag).visit(dag.target);
    return dag;
}

std::vector<std::string> topo_order(const AbstractDag& dag) {
    std::map<std::string, std::size_t> indegree;
    std::map<std::string, std::set<std::string>> children;
    for (const auto& [name, io] : dag.nodes) indegree[name];
    for (const auto& e : dag.edges) {
        // Several files may flow along one producer/consumer pair.
        if (children[e.producer].insert(e.consumer).second) ++indegree[e.consumer];
    }
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto& [name, deg] : indegree) {
        if (deg == 0) ready.push(name);
    }
    std::vector<std::string> order;
    order.reserve(indegree.size());
    while (!ready.empty()) {
        std::string next = ready.top();
        ready.pop();
        for (const auto& child : children[next]) {
            if (--indegree[child] == 0) ready.push(child);
        }
        order.push_back(std::move(next));
    }
    return order;
}

std::string export_abstract_dag(const AbstractDag& dag) {
    std::string out;
    auto flush = [&out](std::vector<std::string> lines) {
        std::sort(lines.begin(), lines.end());
        for (const auto& line : lines) out += line + "\n";
    };
    std::vector<std::string> lines;
    for (const auto& [name, io] : dag.nodes) lines.push_back("NODE " + name);
    flush(std::move(lines));
    lines = {};
    for (const auto& e : dag.edges) lines.push_back("EDGE " + e.producer + " " + e.consumer + " " + e.lfn);
    flush(std::move(lines));
    lines = {};
    for (const auto& x : dag.external_inputs) lines.push_back("EXT " + x.lfn + " " + x.consumer);
    flush(std::move(lines));
    out += "TARGET " + dag.target + "\n";
    return out;
}

}  // namespace vds
