#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>

namespace vds {

/// A physical copy of a logical file: the site holding it and its path there.
struct ReplicaLocation {
    std::string site;
    std::string pfn;

    friend auto operator<=>(const ReplicaLocation&, const ReplicaLocation&) = default;
};

struct Replica {
    std::string lfn;
    std::string site;
    std::string pfn;
};

/// Logical-to-physical file index. Keys never map to an empty set.
///
/// Value type: copy it to take a snapshot that planning can read while the
/// original keeps changing.
class ReplicaCatalog {
public:
    /// Idempotent.
    void register_replica(const Replica& replica);
    /// Drops every replica of `lfn` held at `site`; no-op when absent.
    void unregister(std::string_view lfn, std::string_view site);

    /// Empty set for unknown files.
    std::set<ReplicaLocation> lookup(std::string_view lfn) const;
    bool has_replica(std::string_view lfn) const;

    std::size_t file_count() const { return entries_.size(); }
    std::size_t replica_count() const;
    const std::map<std::string, std::set<ReplicaLocation>, std::less<>>& entries() const { return entries_; }

    friend bool operator==(const ReplicaCatalog&, const ReplicaCatalog&) = default;

private:
    std::map<std::string, std::set<ReplicaLocation>, std::less<>> entries_;
};

/// One `<lfn> <site> <pfn>` line per replica, sorted.
std::string save_replicas_text(const ReplicaCatalog& rc);
/// Blank lines and `#` comments are skipped. Throws FormatError(line).
ReplicaCatalog load_replicas_text(std::string_view text);

void save_replicas(const ReplicaCatalog& rc, const std::filesystem::path& path);
ReplicaCatalog load_replicas(const std::filesystem::path& path);

}  // namespace vds
