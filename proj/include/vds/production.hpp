#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "vds/replica.hpp"
#include "vds/vdl.hpp"

namespace vds {

inline constexpr std::string_view kFortranSection = "FORTRAN_SECTION";
inline constexpr std::string_view kOrcaSection = "ORCA_SECTION";

/// A Monte Carlo production as stored in the metadata database.
struct ProductionRequest {
    std::string project;
    std::int64_t total_events = 0;
    std::int64_t events_per_job = 0;
    std::string kincard;
    std::string simcard;
    std::string geomfile;
    /// Either {FORTRAN_SECTION} or {FORTRAN_SECTION, ORCA_SECTION}.
    std::vector<std::string> pipeline{std::string(kFortranSection), std::string(kOrcaSection)};

    friend bool operator==(const ProductionRequest&, const ProductionRequest&) = default;
};

/// Throws InvalidRequest.
void validate(const ProductionRequest& request);

/// Snapshot of a request handed to the derivation generator.
struct JobDescription {
    ProductionRequest request;
    friend bool operator==(const JobDescription&, const JobDescription&) = default;
};

struct JobSplit {
    /// 1-based; doubles as the job's random seed.
    std::int64_t runnum = 0;
    std::int64_t numevents = 0;

    friend bool operator==(const JobSplit&, const JobSplit&) = default;
};

/// ceil(total / per_job) jobs; the last one carries the remainder.
std::vector<JobSplit> split_jobs(const JobDescription& jd);

struct GeneratedProduction {
    std::vector<Transformation> transformations;
    std::vector<Derivation> derivations;
    /// Final-stage derivation of each job, in runnum order: one DAG each.
    std::vector<std::string> targets;
};

Transformation fortran_section_transformation();
Transformation orca_section_transformation();

/// Logical file names of one job.
struct JobFiles {
    std::string fz;
    std::string fortran_log;
    std::string ntuple;
    std::string orca_log;
};
JobFiles job_files(std::string_view project, std::int64_t runnum);
std::string simulation_dv_name(std::string_view project, std::int64_t runnum);
std::string reconstruction_dv_name(std::string_view project, std::int64_t runnum);

/// Pure function of its arguments.
GeneratedProduction generate_derivations(const JobDescription& jd, const std::vector<JobSplit>& splits);

// ---------------------------------------------------------------------------
// Job logs and completion records

struct OutputFileInfo {
    std::int64_t bytes = 0;
    ReplicaLocation location;

    friend bool operator==(const OutputFileInfo&, const OutputFileInfo&) = default;
};

struct CompletionRecord {
    std::string dv_name;
    bool success = false;
    /// Empty on success.
    std::string failure_reason;
    std::map<std::string, OutputFileInfo> outputs;
    double wall_seconds = 0.0;
    std::int64_t produced_events = 0;
    std::optional<double> start;
    std::optional<double> end;
    /// Keys in the log that the parser did not recognise.
    int unknown_keys = 0;

    friend bool operator==(const CompletionRecord&, const CompletionRecord&) = default;
};

/// key=value lines. Throws LogFormatError(line); a missing mandatory key is
/// reported at the line after the last one.
CompletionRecord parse_job_log(std::string_view text);
std::string emit_job_log(const CompletionRecord& record);

// ---------------------------------------------------------------------------
// Metadata database

struct ProductionTotals {
    std::int64_t records = 0;
    std::int64_t succeeded = 0;
    std::int64_t failed = 0;
    std::int64_t events_produced = 0;

    /// succeeded / records, 0 when empty.
    double success_rate() const;
};

/// Production requests plus an append-only log of completion records.
/// Appends and reads may come from different threads.
class MetadataDb {
public:
    MetadataDb() = default;
    MetadataDb(const MetadataDb& other);
    MetadataDb& operator=(const MetadataDb& other);

    /// Validates, then inserts or replaces the request for its project.
    void put_request(const ProductionRequest& request);
    /// Throws UnknownProject.
    JobDescription read_request(std::string_view project) const;
    std::vector<std::string> projects() const;

    void write_completion(const CompletionRecord& record);
    std::vector<CompletionRecord> completions() const;
    ProductionTotals totals() const;

    std::string to_json() const;
    /// Throws FormatError.
    static MetadataDb from_json(std::string_view text);

    void save(const std::filesystem::path& path) const;
    static MetadataDb load(const std::filesystem::path& path);

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, ProductionRequest, std::less<>> requests_;
    std::vector<CompletionRecord> completions_;
};

}  // namespace vds
