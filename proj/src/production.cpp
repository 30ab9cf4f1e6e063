#include "vds/production.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <fmt/format.h>
#include <json.hpp>

#include "vds/error.hpp"
#include "vds/text_io.hpp"

namespace vds {

using json = nlohmann::json;

void validate(const ProductionRequest& r) {
    if (!is_identifier(r.project)) throw InvalidRequest("project '" + r.project + "' is not an identifier");
    if (r.total_events < 1) throw InvalidRequest("total_events must be >= 1");
    if (r.events_per_job < 1) throw InvalidRequest("events_per_job must be >= 1");
    for (const auto* lfn : {&r.kincard, &r.simcard, &r.geomfile}) {
        if (!is_logical_file_name(*lfn)) throw InvalidRequest("card/geometry file names must be nonempty, no whitespace");
    }
    const std::vector<std::string> one{std::string(kFortranSection)};
    const std::vector<std::string> two{std::string(kFortranSection), std::string(kOrcaSection)};
    if (r.pipeline != one && r.pipeline != two) {
        throw InvalidRequest("pipeline must be [FORTRAN_SECTION] or [FORTRAN_SECTION, ORCA_SECTION]");
    }
}

std::vector<JobSplit> split_jobs(const JobDescription& jd) {
    const auto total = jd.request.total_events;
    const auto per_job = jd.request.events_per_job;
    if (total < 1 || per_job < 1) return {};
    const std::int64_t jobs = (total + per_job - 1) / per_job;
    std::vector<JobSplit> out;
    out.reserve(static_cast<std::size_t>(jobs));
    for (std::int64_t run = 1; run <= jobs; ++run) {
        out.push_back({run, run < jobs ? per_job : total - per_job * (jobs - 1)});
    }
    return out;
}

Transformation fortran_section_transformation() {
    using C = ArgClass;
    Transformation tr;
    tr.name = std::string(kFortranSection);
    tr.formals = {{"runnum", C::None},   {"project", C::None}, {"numevents", C::None}, {"outfile", C::Output},
                  {"kincard", C::Input}, {"simcard", C::Input}, {"geomfile", C::Input}, {"logfile", C::Output}};
    tr.argument_template = {{C::None, "runnum"},    {C::None, "project"},   {C::None, "numevents"},
                            {C::Input, "kincard"},  {C::Input, "simcard"},  {C::Input, "geomfile"},
                            {C::Output, "logfile"}, {C::Output, "outfile"}};
    return tr;
}

Transformation orca_section_transformation() {
    using C = ArgClass;
    Transformation tr;
    tr.name = std::string(kOrcaSection);
    tr.formals = {{"runnum", C::None},  {"project", C::None}, {"numevents", C::None},
                  {"infile", C::Input}, {"ntuple", C::Output}, {"logfile", C::Output}};
    tr.argument_template = {{C::None, "runnum"},  {C::None, "project"},  {C::None, "numevents"},
                            {C::Input, "infile"}, {C::Output, "logfile"}, {C::Output, "ntuple"}};
    return tr;
}

JobFiles job_files(std::string_view project, std::int64_t runnum) {
    const std::string stem = std::string(project) + "_" + std::to_string(runnum);
    return {stem + ".fz", "fortran." + stem + ".log", stem + ".ntpl", "orca." + stem + ".log"};
}

namespace {

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

}  // namespace

std::string simulation_dv_name(std::string_view project, std::int64_t runnum) {
    return upper(project) + "_" + std::to_string(runnum) + "_SIMULATION";
}

std::string reconstruction_dv_name(std::string_view project, std::int64_t runnum) {
    return upper(project) + "_" + std::to_string(runnum) + "_RECONSTRUCTION";
}

GeneratedProduction generate_derivations(const JobDescription& jd, const std::vector<JobSplit>& splits) {
    const ProductionRequest& r = jd.request;
    const bool with_orca = r.pipeline.size() == 2;
    GeneratedProduction out;
    if (splits.empty()) return out;

    out.transformations.push_back(fortran_section_transformation());
    if (with_orca) out.transformations.push_back(orca_section_transformation());

    auto in = [](const std::string& lfn) { return ActualValue{FileRef{ArgClass::Input, lfn}}; };
    auto out_ref = [](const std::string& lfn) { return ActualValue{FileRef{ArgClass::Output, lfn}}; };
    auto lit = [](std::string v) { return ActualValue{Literal{std::move(v)}}; };

    for (const auto& split : splits) {
        const JobFiles files = job_files(r.project, split.runnum);
        Derivation sim;
        sim.name = simulation_dv_name(r.project, split.runnum);
        sim.transformation_name = std::string(kFortranSection);
        sim.actuals = {{"kincard", in(r.kincard)},
                       {"simcard", in(r.simcard)},
                       {"geomfile", in(r.geomfile)},
                       {"logfile", out_ref(files.fortran_log)},
                       {"numevents", lit(std::to_string(split.numevents))},
                       {"outfile", out_ref(files.fz)},
                       {"project", lit(r.project)},
                       {"runnum", lit(std::to_string(split.runnum))}};
        out.derivations.push_back(sim);
        if (!with_orca) {
            out.targets.push_back(sim.name);
            continue;
        }
        Derivation reco;
        reco.name = reconstruction_dv_name(r.project, split.runnum);
        reco.transformation_name = std::string(kOrcaSection);
        reco.actuals = {{"infile", in(files.fz)},
                        {"ntuple", out_ref(files.ntuple)},
                        {"logfile", out_ref(files.orca_log)},
                        {"numevents", lit(std::to_string(split.numevents))},
                        {"project", lit(r.project)},
                        {"runnum", lit(std::to_string(split.runnum))}};
        out.targets.push_back(reco.name);
        out.derivations.push_back(std::move(reco));
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
bool parse_number(std::string_view text, T& out) {
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

}  // namespace

CompletionRecord parse_job_log(std::string_view text) {
    CompletionRecord rec;
    bool have_dv = false;
    bool have_status = false;
    const auto lines = split_lines(text);
    std::size_t line_no = 0;
    for (std::string_view raw : lines) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw LogFormatError(line_no, "expected key=value");
        const std::string_view key = trim(line.substr(0, eq));
        const std::string_view value = trim(line.substr(eq + 1));
        auto bad = [&](const char* what) { return LogFormatError(line_no, std::string(what) + ": " + std::string(value)); };

        if (key == "dv") {
            if (value.empty()) throw bad("empty dv");
            rec.dv_name = value;
            have_dv = true;
        } else if (key == "status") {
            if (value == "success") {
                rec.success = true;
            } else if (value == "failure") {
                rec.success = false;
            } else {
                throw bad("status must be success or failure");
            }
            have_status = true;
        } else if (key == "reason") {
            rec.failure_reason = value;
        } else if (key == "events") {
            if (!parse_number(value, rec.produced_events)) throw bad("bad events");
        } else if (key == "wall_seconds") {
            if (!parse_number(value, rec.wall_seconds)) throw bad("bad wall_seconds");
        } else if (key == "start" || key == "end") {
            double t = 0;
            if (!parse_number(value, t)) throw bad("bad timestamp");
            (key == "start" ? rec.start : rec.end) = t;
        } else if (key == "outfile") {
            // <lfn>,<bytes>,<site>,<pfn>; the pfn may itself contain commas.
            const auto c1 = value.find(',');
            const auto c2 = c1 == std::string_view::npos ? c1 : value.find(',', c1 + 1);
            const auto c3 = c2 == std::string_view::npos ? c2 : value.find(',', c2 + 1);
            if (c3 == std::string_view::npos) throw bad("outfile needs lfn,bytes,site,pfn");
            OutputFileInfo info;
            if (!parse_number(value.substr(c1 + 1, c2 - c1 - 1), info.bytes)) throw bad("bad outfile size");
            info.location.site = value.substr(c2 + 1, c3 - c2 - 1);
            info.location.pfn = value.substr(c3 + 1);
            const std::string lfn(value.substr(0, c1));
            if (!is_logical_file_name(lfn) || info.location.site.empty() || info.location.pfn.empty()) {
                throw bad("outfile has an empty field");
            }
            rec.outputs[lfn] = std::move(info);
        } else {
            ++rec.unknown_keys;
        }
    }
    const std::size_t eof_line = lines.size() + 1;
    if (!have_dv) throw LogFormatError(eof_line, "missing mandatory key 'dv'");
    if (!have_status) throw LogFormatError(eof_line, "missing mandatory key 'status'");
    if (rec.success) {
        rec.failure_reason.clear();
    } else if (rec.failure_reason.empty()) {
        rec.failure_reason = "unspecified";
    }
    return rec;
}

std::string emit_job_log(const CompletionRecord& r) {
    std::string out = "dv=" + r.dv_name + "\n";
    out += std::string("status=") + (r.success ? "success" : "failure") + "\n";
    if (!r.success) out += "reason=" + r.failure_reason + "\n";
    out += fmt::format("events={}\n", r.produced_events);
    out += fmt::format("wall_seconds={}\n", r.wall_seconds);
    for (const auto& [lfn, info] : r.outputs) {
        out += fmt::format("outfile={},{},{},{}\n", lfn, info.bytes, info.location.site, info.location.pfn);
    }
    if (r.start) out += fmt::format("start={}\n", *r.start);
    if (r.end) out += fmt::format("end={}\n", *r.end);
    return out;
}

// ---------------------------------------------------------------------------

double ProductionTotals::success_rate() const {
    return records == 0 ? 0.0 : static_cast<double>(succeeded) / static_cast<double>(records);
}

MetadataDb::MetadataDb(const MetadataDb& other) {
    std::shared_lock lock(other.mutex_);
    requests_ = other.requests_;
    completions_ = other.completions_;
}

MetadataDb& MetadataDb::operator=(const MetadataDb& other) {
    if (this == &other) return *this;
    std::unique_lock mine(mutex_, std::defer_lock);
    std::shared_lock theirs(other.mutex_, std::defer_lock);
    std::lock(mine, theirs);
    requests_ = other.requests_;
    completions_ = other.completions_;
    return *this;
}

void MetadataDb::put_request(const ProductionRequest& request) {
    validate(request);
    std::unique_lock lock(mutex_);
    requests_[request.project] = request;
}

JobDescription MetadataDb::read_request(std::string_view project) const {
    std::shared_lock lock(mutex_);
    auto it = requests_.find(project);
    if (it == requests_.end()) throw UnknownProject("no production request for project " + std::string(project));
    return JobDescription{it->second};
}

std::vector<std::string> MetadataDb::projects() const {
    std::shared_lock lock(mutex_);
    std::vector<std::string> out;
    for (const auto& [name, r] : requests_) out.push_back(name);
    return out;
}

void MetadataDb::write_completion(const CompletionRecord& record) {
    std::unique_lock lock(mutex_);
    completions_.push_back(record);
}

std::vector<CompletionRecord> MetadataDb::completions() const {
    std::shared_lock lock(mutex_);
    return completions_;
}

ProductionTotals MetadataDb::totals() const {
    std::shared_lock lock(mutex_);
    ProductionTotals t;
    for (const auto& c : completions_) {
        ++t.records;
        if (c.success) {
            ++t.succeeded;
            t.events_produced += c.produced_events;
        } else {
            ++t.failed;
        }
    }
    return t;
}

std::string MetadataDb::to_json() const {
    std::shared_lock lock(mutex_);
    json doc;
    doc["requests"] = json::array();
    for (const auto& [name, r] : requests_) {
        doc["requests"].push_back({{"project", r.project},
                                   {"total_events", r.total_events},
                                   {"events_per_job", r.events_per_job},
                                   {"kincard", r.kincard},
                                   {"simcard", r.simcard},
                                   {"geomfile", r.geomfile},
                                   {"pipeline", r.pipeline}});
    }
    doc["completions"] = json::array();
    for (const auto& c : completions_) {
        json outputs = json::array();
        for (const auto& [lfn, info] : c.outputs) {
            outputs.push_back({{"lfn", lfn}, {"bytes", info.bytes}, {"site", info.location.site}, {"pfn", info.location.pfn}});
        }
        json rec = {{"dv", c.dv_name},
                    {"status", c.success ? "success" : "failure"},
                    {"reason", c.failure_reason},
                    {"events", c.produced_events},
                    {"wall_seconds", c.wall_seconds},
                    {"outputs", outputs}};
        if (c.start) rec["start"] = *c.start;
        if (c.end) rec["end"] = *c.end;
        doc["completions"].push_back(std::move(rec));
    }
    return doc.dump(2) + "\n";
}

MetadataDb MetadataDb::from_json(std::string_view text) {
    MetadataDb db;
    try {
        const json doc = json::parse(text);
        for (const auto& r : doc.value("requests", json::array())) {
            ProductionRequest req;
            req.project = r.at("project").get<std::string>();
            req.total_events = r.at("total_events").get<std::int64_t>();
            req.events_per_job = r.at("events_per_job").get<std::int64_t>();
            req.kincard = r.at("kincard").get<std::string>();
            req.simcard = r.at("simcard").get<std::string>();
            req.geomfile = r.at("geomfile").get<std::string>();
            if (r.contains("pipeline")) req.pipeline = r.at("pipeline").get<std::vector<std::string>>();
            validate(req);
            db.requests_[req.project] = std::move(req);
        }
        for (const auto& c : doc.value("completions", json::array())) {
            CompletionRecord rec;
            rec.dv_name = c.at("dv").get<std::string>();
            rec.success = c.at("status").get<std::string>() == "success";
            rec.failure_reason = c.value("reason", "");
            rec.produced_events = c.value("events", std::int64_t{0});
            rec.wall_seconds = c.value("wall_seconds", 0.0);
            if (c.contains("start")) rec.start = c.at("start").get<double>();
            if (c.contains("end")) rec.end = c.at("end").get<double>();
            for (const auto& o : c.value("outputs", json::array())) {
                rec.outputs[o.at("lfn").get<std::string>()] =
                    OutputFileInfo{o.at("bytes").get<std::int64_t>(),
                                   {o.at("site").get<std::string>(), o.at("pfn").get<std::string>()}};
            }
            db.completions_.push_back(std::move(rec));
        }
    } catch (const json::exception& e) {
        throw FormatError(0, std::string("metadata db: ") + e.what());
    } catch (const InvalidRequest& e) {
        throw FormatError(0, std::string("metadata db: ") + e.what());
    }
    return db;
}

void MetadataDb::save(const std::filesystem::path& path) const { write_file(path, to_json()); }

MetadataDb MetadataDb::load(const std::filesystem::path& path) { return from_json(read_file(path)); }

}  // namespace vds
