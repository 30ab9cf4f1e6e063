#include "vds/concrete_planner.hpp"

#include <algorithm>
#include <deque>
#include <vector>

#include "vds/error.hpp"
#include "vds/text_io.hpp"

namespace vds {

NodeKind kind_of(const ConcreteNode& node) { return static_cast<NodeKind>(node.index()); }

std::string_view to_string(NodeKind kind) {
    switch (kind) {
        case NodeKind::Execute: return "EXEC";
        case NodeKind::StageIn: return "STAGEIN";
        case NodeKind::StageOut: return "STAGEOUT";
        case NodeKind::Register: return "REGISTER";
    }
    return "EXEC";
}

std::string execute_id(std::string_view dv) { return std::string(dv); }
std::string stage_in_id(std::string_view lfn) { return "in:" + std::string(lfn); }
std::string stage_out_id(std::string_view lfn) { return "out:" + std::string(lfn); }
std::string register_id(std::string_view lfn) { return "reg:" + std::string(lfn); }

AbstractDag prune(const AbstractDag& dag, const ReplicaCatalog& rls) {
    // A producer stays only while some live consumer still needs one of its
    // files that has no replica.
    std::map<std::string, std::vector<const DagEdge*>> in_edges;
    for (const auto& e : dag.edges) in_edges[e.consumer].push_back(&e);
    std::set<std::string> live{dag.target};
    std::deque<std::string> work{dag.target};
    while (!work.empty()) {
        const std::string node = work.front();
        work.pop_front();
        for (const DagEdge* e : in_edges[node]) {
            if (!rls.has_replica(e->lfn) && live.insert(e->producer).second) work.push_back(e->producer);
        }
    }

    AbstractDag out;
    out.target = dag.target;
    for (const auto& name : live) out.nodes.emplace(name, dag.nodes.at(name));
    for (const auto& x : dag.external_inputs) {
        if (live.count(x.consumer)) out.external_inputs.insert(x);
    }
    for (const auto& e : dag.edges) {
        if (!live.count(e.consumer)) continue;
        if (live.count(e.producer)) {
            out.edges.insert(e);
        } else {
            if (!rls.has_replica(e.lfn)) {
                throw UnsatisfiableInput(e.lfn + " needed by " + e.consumer + " lost its producer " + e.producer +
                                         " but has no replica");
            }
            out.external_inputs.insert({e.lfn, e.consumer});
        }
    }
    return out;
}

ReplicaLocation choose_source(const std::set<ReplicaLocation>& replicas, std::string_view exec_site,
                              std::string_view storage_site) {
    for (std::string_view preferred : {exec_site, storage_site}) {
        for (const auto& loc : replicas) {
            if (loc.site == preferred) return loc;
        }
    }
    return *replicas.begin();
}

ConcreteDag plan_concrete(const AbstractDag& dag, std::string_view site, const ReplicaCatalog& rls,
                          const ConcretePlanOptions& options) {
    if (!options.known_sites.empty() && !options.known_sites.count(std::string(site))) {
        throw UnknownSite("no execution site named " + std::string(site));
    }
    ConcreteDag cdag;
    cdag.site = site;
    cdag.target = dag.target;

    const AbstractDag pruned = prune(dag, rls);
    if (options.skip_existing_target) {
        const NodeIo& target_io = pruned.nodes.at(pruned.target);
        const bool done = !target_io.outputs.empty() &&
                          std::all_of(target_io.outputs.begin(), target_io.outputs.end(),
                                      [&](const std::string& lfn) { return rls.has_replica(lfn); });
        if (done) return cdag;
    }

    std::map<std::string, std::set<std::string>> consumers_of_external;
    for (const auto& x : pruned.external_inputs) consumers_of_external[x.lfn].insert(x.consumer);
    for (const auto& [lfn, consumers] : consumers_of_external) {
        const auto replicas = rls.lookup(lfn);
        if (replicas.empty()) {
            throw MissingReplica(lfn + " has no replica (needed by " + *consumers.begin() + ")");
        }
        const std::string id = stage_in_id(lfn);
        cdag.nodes.emplace(id, StageInNode{lfn, choose_source(replicas, site, options.storage.site), std::string(site)});
        for (const auto& consumer : consumers) cdag.edges.emplace(id, execute_id(consumer));
    }

    std::set<std::string> intermediates;
    for (const auto& e : pruned.edges) {
        intermediates.insert(e.lfn);
        cdag.edges.emplace(execute_id(e.producer), execute_id(e.consumer));
    }

    for (const auto& [name, io] : pruned.nodes) {
        cdag.nodes.emplace(execute_id(name), ExecuteNode{name, io.inputs, io.outputs, io.params});
        for (const auto& lfn : io.outputs) {
            if (!options.stage_intermediates && intermediates.count(lfn) && !options.keep.count(lfn)) continue;
            const std::string pfn = options.storage.prefix + "/" + lfn;
            cdag.nodes.emplace(stage_out_id(lfn),
                               StageOutNode{lfn, std::string(site), ReplicaLocation{options.storage.site, pfn}});
            cdag.nodes.emplace(register_id(lfn), RegisterNode{lfn, options.storage.site, pfn});
            cdag.edges.emplace(execute_id(name), stage_out_id(lfn));
            cdag.edges.emplace(stage_out_id(lfn), register_id(lfn));
        }
    }
    return cdag;
}

std::string emit_dag_file(const ConcreteDag& cdag) {
    std::string out = "SITE " + cdag.site + "\n";
    for (const auto& [id, node] : cdag.nodes) {
        out += "JOB " + id + " ";
        std::visit(
            [&](const auto& n) {
                using T = std::decay_t<decltype(n)>;
                if constexpr (std::is_same_v<T, ExecuteNode>) {
                    out += "EXEC " + n.dv;
                } else if constexpr (std::is_same_v<T, StageInNode>) {
                    out += "STAGEIN " + n.lfn + " FROM " + n.from.site + " " + n.from.pfn + " TO " + n.to_site;
                } else if constexpr (std::is_same_v<T, StageOutNode>) {
                    out += "STAGEOUT " + n.lfn + " FROM " + n.from_site + " TO " + n.to.site + " " + n.to.pfn;
                } else {
                    out += "REGISTER " + n.lfn + " " + n.site + " " + n.pfn;
                }
            },
            node);
        out += "\n";
    }
    for (const auto& [parent, child] : cdag.edges) out += "PARENT " + parent + " CHILD " + child + "\n";
    return out;
}

ConcreteDag parse_dag_file(std::string_view text) {
    ConcreteDag cdag;
    std::size_t line_no = 0;
    bool have_site = false;
    for (std::string_view raw : split_lines(text)) {
        ++line_no;
        const auto f = split_whitespace(raw);
        if (f.empty()) continue;
        auto s = [&](std::size_t i) { return std::string(f[i]); };
        auto bad = [&](const std::string& why) { return FormatError(line_no, why); };
        if (f[0] == "SITE") {
            if (f.size() != 2 || have_site) throw bad("malformed SITE line");
            cdag.site = s(1);
            have_site = true;
        } else if (f[0] == "JOB") {
            if (!have_site) throw bad("JOB before SITE");
            if (f.size() < 4) throw bad("truncated JOB line");
            ConcreteNode node;
            if (f[2] == "EXEC" && f.size() == 4) {
                node = ExecuteNode{s(3), {}, {}, {}};
            } else if (f[2] == "STAGEIN" && f.size() == 9 && f[4] == "FROM" && f[7] == "TO") {
                node = StageInNode{s(3), {s(5), s(6)}, s(8)};
            } else if (f[2] == "STAGEOUT" && f.size() == 9 && f[4] == "FROM" && f[6] == "TO") {
                node = StageOutNode{s(3), s(5), {s(7), s(8)}};
            } else if (f[2] == "REGISTER" && f.size() == 6) {
                node = RegisterNode{s(3), s(4), s(5)};
            } else {
                throw bad("unrecognised JOB line");
            }
            if (!cdag.nodes.emplace(s(1), std::move(node)).second) throw bad("duplicate job id " + s(1));
        } else if (f[0] == "PARENT") {
            if (f.size() != 4 || f[2] != "CHILD") throw bad("malformed PARENT line");
            if (!cdag.nodes.count(s(1)) || !cdag.nodes.count(s(3))) throw bad("PARENT/CHILD names an unknown job");
            cdag.edges.emplace(s(1), s(3));
        } else {
            throw bad("unknown directive " + s(0));
        }
    }
    if (!have_site) throw FormatError(line_no + 1, "missing SITE line");

    // Recover execute file sets from the adjacent stage nodes.
    for (const auto& [parent, child] : cdag.edges) {
        auto& p = cdag.nodes.at(parent);
        auto& c = cdag.nodes.at(child);
        if (auto* exec = std::get_if<ExecuteNode>(&c)) {
            if (const auto* in = std::get_if<StageInNode>(&p)) exec->inputs.insert(in->lfn);
        }
        if (auto* exec = std::get_if<ExecuteNode>(&p)) {
            if (const auto* out = std::get_if<StageOutNode>(&c)) exec->outputs.insert(out->lfn);
        }
    }
    return cdag;
}

std::set<std::string> parents_of(const ConcreteDag& cdag, std::string_view id) {
    std::set<std::string> out;
    for (const auto& [p, c] : cdag.edges) {
        if (c == id) out.insert(p);
    }
    return out;
}

std::set<std::string> children_of(const ConcreteDag& cdag, std::string_view id) {
    std::set<std::string> out;
    for (const auto& [p, c] : cdag.edges) {
        if (p == id) out.insert(c);
    }
    return out;
}

}  // namespace vds
