#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

#include "vds/abstract_planner.hpp"
#include "vds/replica.hpp"

namespace vds {

/// Runs a derivation at the DAG's site. `inputs`/`outputs`/`params` are kept
/// in memory for the simulator; the submit file carries only the DV name.
struct ExecuteNode {
    std::string dv;
    std::set<std::string> inputs;
    std::set<std::string> outputs;
    std::map<std::string, std::string> params;

    friend bool operator==(const ExecuteNode&, const ExecuteNode&) = default;
};

struct StageInNode {
    std::string lfn;
    ReplicaLocation from;
    std::string to_site;

    friend bool operator==(const StageInNode&, const StageInNode&) = default;
};

struct StageOutNode {
    std::string lfn;
    std::string from_site;
    ReplicaLocation to;

    friend bool operator==(const StageOutNode&, const StageOutNode&) = default;
};

struct RegisterNode {
    std::string lfn;
    std::string site;
    std::string pfn;

    friend bool operator==(const RegisterNode&, const RegisterNode&) = default;
};

using ConcreteNode = std::variant<ExecuteNode, StageInNode, StageOutNode, RegisterNode>;

enum class NodeKind { Execute, StageIn, StageOut, Register };

NodeKind kind_of(const ConcreteNode& node);
std::string_view to_string(NodeKind kind);

/// A workflow fully resolved onto one execution site.
struct ConcreteDag {
    std::string site;
    /// Target of the abstract DAG this was planned from (not in the submit file).
    std::string target;
    std::map<std::string, ConcreteNode> nodes;
    std::set<std::pair<std::string, std::string>> edges;

    friend bool operator==(const ConcreteDag&, const ConcreteDag&) = default;
};

/// Where outputs are shipped and registered: pfn = prefix + "/" + lfn.
struct StorageElement {
    std::string site;
    std::string prefix;
};

struct ConcretePlanOptions {
    StorageElement storage;
    /// Drop the target too when all of its outputs already have replicas; the
    /// result then has no nodes.
    bool skip_existing_target = false;
    /// When false, files consumed by another Execute of the same DAG are only
    /// staged out if listed in `keep`.
    bool stage_intermediates = true;
    std::set<std::string> keep;
    /// Sites that may execute work. Empty accepts any site.
    std::set<std::string> known_sites;
};

// Node ids inside a concrete DAG.
std::string execute_id(std::string_view dv);
std::string stage_in_id(std::string_view lfn);
std::string stage_out_id(std::string_view lfn);
std::string register_id(std::string_view lfn);

/// Keeps the target plus every producer reachable backwards from it through
/// files that have no replica. A node whose outputs all have replicas is
/// therefore dropped, and so is one whose only needed outputs exist. Inputs
/// that lost their producer become external inputs. Throws UnsatisfiableInput if such an input has no
/// replica (an internal invariant; cannot happen for valid DAGs).
AbstractDag prune(const AbstractDag& dag, const ReplicaCatalog& rls);

/// Prunes, then decorates each surviving derivation with stage-in, stage-out
/// and register steps at `site`. Throws UnknownSite or MissingReplica.
ConcreteDag plan_concrete(const AbstractDag& dag, std::string_view site, const ReplicaCatalog& rls,
                          const ConcretePlanOptions& options);

/// Picks the replica a stage-in copies from: one already at the execution
/// site, else at the storage site, else the smallest site id.
ReplicaLocation choose_source(const std::set<ReplicaLocation>& replicas, std::string_view exec_site,
                              std::string_view storage_site);

/// Submit file: SITE line, JOB lines by id, then PARENT/CHILD lines.
std::string emit_dag_file(const ConcreteDag& cdag);
/// Inverse of emit_dag_file. Execute inputs/outputs are recovered from the
/// adjacent stage nodes; params and target are not stored. Throws FormatError.
ConcreteDag parse_dag_file(std::string_view text);

/// Parents of `id`, children of `id`.
std::set<std::string> parents_of(const ConcreteDag& cdag, std::string_view id);
std::set<std::string> children_of(const ConcreteDag& cdag, std::string_view id);

}  // namespace vds
