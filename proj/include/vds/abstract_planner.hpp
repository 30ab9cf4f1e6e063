#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vds/catalog.hpp"

namespace vds {

struct DagEdge {
    std::string producer;
    std::string consumer;
    std::string lfn;

    friend auto operator<=>(const DagEdge&, const DagEdge&) = default;
};

struct ExternalInput {
    std::string lfn;
    std::string consumer;

    friend auto operator<=>(const ExternalInput&, const ExternalInput&) = default;
};

/// Files and parameters of one derivation, captured when the plan was made.
struct NodeIo {
    std::set<std::string> inputs;
    std::set<std::string> outputs;
    std::map<std::string, std::string> params;

    friend bool operator==(const NodeIo&, const NodeIo&) = default;
};

/// Location- and existence-independent workflow for one requested product.
/// Node keys are derivation names.
struct AbstractDag {
    std::map<std::string, NodeIo> nodes;
    std::set<DagEdge> edges;
    std::set<ExternalInput> external_inputs;
    std::string target;

    bool contains(std::string_view dv) const { return nodes.find(std::string(dv)) != nodes.end(); }

    friend bool operator==(const AbstractDag&, const AbstractDag&) = default;
};

/// What the user asked to instantiate: a derivation, or the logical file it
/// produces.
class PlanRequest {
public:
    enum class Kind { Derivation, File, Any };

    static PlanRequest derivation(std::string name) { return {Kind::Derivation, std::move(name)}; }
    static PlanRequest file(std::string lfn) { return {Kind::File, std::move(lfn)}; }
    /// Derivation name first, then output LFN.
    static PlanRequest any(std::string key) { return {Kind::Any, std::move(key)}; }

    Kind kind() const { return kind_; }
    const std::string& key() const { return key_; }

private:
    PlanRequest(Kind kind, std::string key) : kind_(kind), key_(std::move(key)) {}
    Kind kind_;
    std::string key_;
};

/// Recursive producer traversal from the requested derivation. Replica
/// existence is never consulted; every producible input becomes an edge.
/// Throws UnknownTarget, UnknownTransformation, CycleDetected, and the binding
/// errors of any derivation it touches.
AbstractDag plan_abstract(const VirtualDataCatalog& catalog, const PlanRequest& request);

/// Producers before consumers; ties broken by smallest name.
std::vector<std::string> topo_order(const AbstractDag& dag);

/// NODE / EDGE / EXT / TARGET lines, each kind sorted.
std::string export_abstract_dag(const AbstractDag& dag);

}  // namespace vds
