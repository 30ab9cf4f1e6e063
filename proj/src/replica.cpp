#include "vds/replica.hpp"

#include "vds/error.hpp"
#include "vds/text_io.hpp"

namespace vds {

void ReplicaCatalog::register_replica(const Replica& replica) {
    auto it = entries_.find(replica.lfn);
    if (it == entries_.end()) it = entries_.emplace(replica.lfn, std::set<ReplicaLocation>{}).first;
    it->second.insert({replica.site, replica.pfn});
}

void ReplicaCatalog::unregister(std::string_view lfn, std::string_view site) {
    auto it = entries_.find(lfn);
    if (it == entries_.end()) return;
    std::erase_if(it->second, [&](const ReplicaLocation& loc) { return loc.site == site; });
    if (it->second.empty()) entries_.erase(it);
}

std::set<ReplicaLocation> ReplicaCatalog::lookup(std::string_view lfn) const {
    auto it = entries_.find(lfn);
    return it == entries_.end() ? std::set<ReplicaLocation>{} : it->second;
}

bool ReplicaCatalog::has_replica(std::string_view lfn) const { return entries_.find(lfn) != entries_.end(); }

std::size_t ReplicaCatalog::replica_count() const {
    std::size_t n = 0;
    for (const auto& [lfn, locs] : entries_) n += locs.size();
    return n;
}

std::string save_replicas_text(const ReplicaCatalog& rc) {
    std::string out;
    for (const auto& [lfn, locs] : rc.entries()) {
        for (const auto& loc : locs) out += lfn + " " + loc.site + " " + loc.pfn + "\n";
    }
    return out;
}

ReplicaCatalog load_replicas_text(std::string_view text) {
    ReplicaCatalog rc;
    std::size_t line_no = 0;
    for (std::string_view line : split_lines(text)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto fields = split_whitespace(line);
        if (fields.size() != 3) {
            throw FormatError(line_no, "expected '<lfn> <site> <pfn>', got " + std::to_string(fields.size()) + " fields");
        }
        rc.register_replica({std::string(fields[0]), std::string(fields[1]), std::string(fields[2])});
    }
    return rc;
}

void save_replicas(const ReplicaCatalog& rc, const std::filesystem::path& path) {
    write_file(path, save_replicas_text(rc));
}

ReplicaCatalog load_replicas(const std::filesystem::path& path) { return load_replicas_text(read_file(path)); }

}  // namespace vds
