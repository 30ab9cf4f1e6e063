#include "vds/cli.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <filesystem>
#include <numeric>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>
#include <fmt/format.h>

#include "vds/abstract_planner.hpp"
#include "vds/catalog.hpp"
#include "vds/concrete_planner.hpp"
#include "vds/error.hpp"
#include "vds/production.hpp"
#include "vds/replica.hpp"
#include "vds/scenario.hpp"
#include "vds/text_io.hpp"
#include "vds/vdl.hpp"

namespace vds {

namespace {

namespace fs = std::filesystem;

struct CliConfig {
    std::string catalog = "vdc.txt";
    std::string rls = "rls.txt";
    std::string metadb = "metadb.json";
    std::string config;
    std::optional<std::uint64_t> seed;
    bool verbose = false;
};

// Exclusive advisory lock on `<path>.lock` for the lifetime of the object.
class FileLock {
public:
    explicit FileLock(const fs::path& path) {
        const std::string lock_path = path.string() + ".lock";
        fd_ = ::open(lock_path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) throw IoError("cannot open lock file " + lock_path);
        if (::flock(fd_, LOCK_EX) != 0) {
            ::close(fd_);
            throw IoError("cannot lock " + lock_path);
        }
    }
    ~FileLock() {
        ::flock(fd_, LOCK_UN);
        ::close(fd_);
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    int fd_ = -1;
};

// Write targets may not exist yet; read targets must.
VirtualDataCatalog catalog_for_update(const fs::path& p) {
    return fs::exists(p) ? load_catalog(p) : VirtualDataCatalog{};
}

MetadataDb metadb_for_update(const fs::path& p) { return fs::exists(p) ? MetadataDb::load(p) : MetadataDb{}; }

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
    } else {
        write_file(path, text);
    }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CliConfig cfg;
    CLI::App app{"Virtual data system: catalog, planners, production and grid simulation", "vds"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();
    app.add_option("--catalog", cfg.catalog, "virtual data catalog file");
    app.add_option("--rls", cfg.rls, "replica catalog file");
    app.add_option("--metadb", cfg.metadb, "production metadata database (JSON)");
    app.add_option("--config", cfg.config, "scheduler config (key = value), overrides the scenario's");
    app.add_option("--seed", cfg.seed, "simulation seed");
    app.add_flag("-v,--verbose", cfg.verbose);

    std::function<void()> action;

    // vdl
    auto* vdl = app.add_subcommand("vdl", "catalog manipulation");
    vdl->require_subcommand(1);
    std::string vdl_file;
    auto* vdl_insert = vdl->add_subcommand("insert", "insert a VDL file into the catalog");
    vdl_insert->add_option("file", vdl_file)->required();
    vdl_insert->callback([&] {
        action = [&] {
            const auto objects = parse_vdl(read_file(vdl_file));
            FileLock lock(cfg.catalog);
            VirtualDataCatalog vdc = catalog_for_update(cfg.catalog);
            for (const auto& o : objects) vdc.insert(o);
            save_catalog(vdc, cfg.catalog);
            out << objects.size() << " objects inserted\n";
        };
    });
    vdl->add_subcommand("list", "print object names")->callback([&] {
        action = [&] {
            const VirtualDataCatalog vdc = load_catalog(cfg.catalog);
            for (const auto& o : vdc.objects()) out << object_name(o) << "\n";
        };
    });
    std::string export_out;
    auto* vdl_export = vdl->add_subcommand("export", "dump the catalog as VDL");
    vdl_export->add_option("-o,--output", export_out);
    vdl_export->callback([&] {
        action = [&] {
            const VirtualDataCatalog vdc = load_catalog(cfg.catalog);
            write_output(serialize_vdl(vdc.objects()), export_out, out);
        };
    });

    // plan
    auto* plan = app.add_subcommand("plan", "abstract and concrete planning");
    plan->require_subcommand(1);
    std::string target, plan_out, site, storage_site = "storage", storage_prefix = "/store";
    bool skip_existing = false;
    auto* plan_abs = plan->add_subcommand("abstract", "abstract DAG for a derivation or file");
    plan_abs->add_option("target", target)->required();
    plan_abs->add_option("-o,--output", plan_out);
    plan_abs->callback([&] {
        action = [&] {
            const VirtualDataCatalog vdc = load_catalog(cfg.catalog);
            write_output(export_abstract_dag(plan_abstract(vdc, PlanRequest::any(target))), plan_out, out);
        };
    });
    auto* plan_con = plan->add_subcommand("concrete", "submit file for a derivation or file at a site");
    plan_con->add_option("target", target)->required();
    plan_con->add_option("--site", site)->required();
    plan_con->add_flag("--skip-existing-target", skip_existing);
    plan_con->add_option("--storage-site", storage_site);
    plan_con->add_option("--storage-prefix", storage_prefix);
    plan_con->add_option("-o,--output", plan_out);
    plan_con->callback([&] {
        action = [&] {
            const VirtualDataCatalog vdc = load_catalog(cfg.catalog);
            const ReplicaCatalog rls = fs::exists(cfg.rls) ? load_replicas(cfg.rls) : ReplicaCatalog{};
            ConcretePlanOptions opts;
            opts.storage = {storage_site, storage_prefix};
            opts.skip_existing_target = skip_existing;
            if (!cfg.config.empty()) {
                for (const auto& [id, wm] : parse_scheduler_config(read_file(cfg.config)).sites) opts.known_sites.insert(id);
            }
            const AbstractDag dag = plan_abstract(vdc, PlanRequest::any(target));
            write_output(emit_dag_file(plan_concrete(dag, site, rls, opts)), plan_out, out);
        };
    });

    // request add / produce
    auto* request = app.add_subcommand("request", "production requests in the metadata db");
    request->require_subcommand(1);
    ProductionRequest req;
    std::string pipeline = "fortran,orca";
    auto* req_add = request->add_subcommand("add", "insert or replace a production request");
    req_add->add_option("project", req.project)->required();
    req_add->add_option("--total-events", req.total_events)->required();
    req_add->add_option("--events-per-job", req.events_per_job)->required();
    req_add->add_option("--kincard", req.kincard)->required();
    req_add->add_option("--simcard", req.simcard)->required();
    req_add->add_option("--geomfile", req.geomfile)->required();
    req_add->add_option("--pipeline", pipeline)->check(CLI::IsMember({"fortran", "fortran,orca"}));
    req_add->callback([&] {
        action = [&] {
            req.pipeline = {std::string(kFortranSection)};
            if (pipeline == "fortran,orca") req.pipeline.emplace_back(kOrcaSection);
            FileLock lock(cfg.metadb);
            MetadataDb db = metadb_for_update(cfg.metadb);
            db.put_request(req);
            db.save(cfg.metadb);
            out << "request " << req.project << " stored\n";
        };
    });

    std::string project;
    auto* produce = app.add_subcommand("produce", "split a request into jobs and insert their derivations");
    produce->add_option("project", project)->required();
    produce->callback([&] {
        action = [&] {
            const JobDescription jd = MetadataDb::load(cfg.metadb).read_request(project);
            const auto splits = split_jobs(jd);
            const GeneratedProduction gp = generate_derivations(jd, splits);
            FileLock lock(cfg.catalog);
            VirtualDataCatalog vdc = catalog_for_update(cfg.catalog);
            for (const auto& tr : gp.transformations) vdc.insert(tr);
            for (const auto& dv : gp.derivations) vdc.insert(dv);
            save_catalog(vdc, cfg.catalog);
            out << splits.size() << " jobs generated\n";
        };
    });

    // simulate
    std::string scenario_path, stats_out, trace_out;
    int n_seeds = 1;
    auto* simulate = app.add_subcommand("simulate", "run a production scenario on the simulated grid");
    simulate->add_option("scenario", scenario_path)->required();
    simulate->add_option("--seeds", n_seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
    simulate->add_option("--stats-out", stats_out);
    simulate->add_option("--trace-out", trace_out);
    simulate->callback([&] {
        action = [&] {
            Scenario sc = parse_scenario(read_file(scenario_path));
            if (!cfg.config.empty()) {
                sc.scheduler = with_default_watermarks(parse_scheduler_config(read_file(cfg.config)), sc.grid);
            }
            const std::uint64_t first = cfg.seed.value_or(sc.grid.seed);
            if (n_seeds == 1) {
                RunOptions opts;
                opts.record_trace = !trace_out.empty();
                const ScenarioResult r = run_scenario(sc, first, opts);
                write_output(result_to_json(r), stats_out, out);
                if (!trace_out.empty()) {
                    std::string text;
                    for (const auto& line : r.trace) text += line + "\n";
                    write_file(trace_out, text);
                }
                return;
            }
            std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n_seeds));
            std::iota(seeds.begin(), seeds.end(), first);
            const auto results = run_sweep(sc, seeds);
            auto array = nlohmann::json::array();
            double sum = 0.0;
            for (const auto& r : results) {
                array.push_back(nlohmann::json::parse(result_to_json(r)));
                sum += r.failure_fraction();
            }
            const std::string text = array.dump(2) + "\n";
            write_output(text, stats_out, out);
            if (!stats_out.empty() || cfg.verbose) {
                out << fmt::format("mean failure fraction over {} seeds: {:.4f}\n", results.size(),
                                   sum / static_cast<double>(results.size()));
            }
        };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }
    try {
        if (action) action();
    } catch (const Error& e) {
        err << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace vds
