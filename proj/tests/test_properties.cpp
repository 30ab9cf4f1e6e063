// Randomized property checks. Each property runs kCases generated inputs
// from a fixed base seed; a failure message names the case seed.

#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"
#include "vds/abstract_planner.hpp"
#include "vds/concrete_planner.hpp"
#include "vds/error.hpp"
#include "vds/grid_sim.hpp"
#include "vds/production.hpp"
#include "vds/scenario.hpp"
#include "vds/workrunner.hpp"

using namespace vds;

namespace {

constexpr int kCases = 250;

std::mt19937_64 case_rng(std::uint64_t base, int i) { return std::mt19937_64(base * 1000003ULL + static_cast<std::uint64_t>(i)); }

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::string random_token(std::mt19937_64& rng, bool identifier) {
    static const std::string first = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
    static const std::string rest = first + "0123456789";
    static const std::string lfn_extra = ".-/+";
    std::string s(1, first[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(first.size()) - 1))]);
    const int n = uniform(rng, 0, 10);
    for (int i = 0; i < n; ++i) {
        const std::string& pool = identifier || uniform(rng, 0, 4) ? rest : lfn_extra;
        s += pool[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(pool.size()) - 1))];
    }
    return s;
}

std::string random_literal(std::mt19937_64& rng) {
    static const std::string chars = "abc XYZ 019 \"\\ _-.,;(){}#@$";
    std::string s;
    const int n = uniform(rng, 0, 12);
    for (int i = 0; i < n; ++i) s += chars[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(chars.size()) - 1))];
    return s;
}

struct FakeGrid : GridView {
    std::map<std::string, std::size_t, std::less<>> running;
    std::size_t running_count(std::string_view site) const override {
        auto it = running.find(site);
        return it == running.end() ? 0 : it->second;
    }
};

}  // namespace

TEST(Property, VdlRoundTrip) {
    for (int c = 0; c < kCases; ++c) {
        auto rng = case_rng(1, c);
        std::vector<VdlObject> objects;
        const int n = uniform(rng, 1, 4);
        for (int k = 0; k < n; ++k) {
            if (uniform(rng, 0, 1)) {
                Transformation tr;
                tr.name = random_token(rng, true) + std::to_string(k);
                const int nf = uniform(rng, 1, 5);
                for (int f = 0; f < nf; ++f) {
                    tr.formals.push_back({"f" + std::to_string(f), static_cast<ArgClass>(uniform(rng, 0, 2))});
                }
                for (const auto& f : tr.formals) {
                    if (uniform(rng, 0, 3)) tr.argument_template.push_back({f.cls, f.name});
                }
                objects.emplace_back(tr);
            } else {
                Derivation dv;
                dv.name = random_token(rng, true) + std::to_string(k);
                dv.transformation_name = random_token(rng, true);
                const int na = uniform(rng, 1, 6);
                for (int a = 0; a < na; ++a) {
                    const std::string formal = random_token(rng, true);
                    if (uniform(rng, 0, 1)) {
                        dv.actuals[formal] = Literal{random_literal(rng)};
                    } else {
                        dv.actuals[formal] =
                            FileRef{uniform(rng, 0, 1) ? ArgClass::Input : ArgClass::Output, random_token(rng, false)};
                    }
                }
                objects.emplace_back(dv);
            }
        }
        const auto text = serialize_vdl(objects);
        ASSERT_EQ(parse_vdl(text), objects) << "case " << c << "\n" << text;
    }
}

TEST(Property, SplitJobsConservesEvents) {
    for (int c = 0; c < kCases; ++c) {
        auto rng = case_rng(2, c);
        ProductionRequest r;
        r.total_events = std::uniform_int_distribution<std::int64_t>(1, 1'000'000)(rng);
        r.events_per_job = std::uniform_int_distribution<std::int64_t>(1, c % 2 ? 500 : 2'000'000)(rng);
        const auto splits = split_jobs({r});
        const auto expected_jobs = (r.total_events + r.events_per_job - 1) / r.events_per_job;
        ASSERT_EQ(static_cast<std::int64_t>(splits.size()), expected_jobs) << "case " << c;
        std::int64_t sum = 0;
        for (std::size_t i = 0; i < splits.size(); ++i) {
            ASSERT_EQ(splits[i].runnum, static_cast<std::int64_t>(i + 1));
            ASSERT_GE(splits[i].numevents, 1);
            ASSERT_LE(splits[i].numevents, r.events_per_job);
            if (i + 1 < splits.size()) ASSERT_EQ(splits[i].numevents, r.events_per_job);
            sum += splits[i].numevents;
        }
        ASSERT_EQ(sum, r.total_events) << "case " << c;
    }
}

TEST(Property, AbstractPlanMatchesTransitiveClosure) {
    for (int c = 0; c < kCases; ++c) {
        auto rng = case_rng(3, c);
        const auto rc = oracle::random_catalog(rng, 12);
        const std::string target = rc.dv_names[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(rc.dv_names.size()) - 1))];
        const auto dag = plan_abstract(rc.vdc, PlanRequest::derivation(target));

        std::set<std::string> nodes;
        for (const auto& [n, io] : dag.nodes) nodes.insert(n);
        ASSERT_EQ(nodes, oracle::closure_oracle(rc.vdc, target)) << "case " << c;

        std::vector<std::pair<std::string, std::string>> edges;
        for (const auto& e : dag.edges) {
            const Derivation& p = *rc.vdc.find_derivation(e.producer);
            const Derivation& q = *rc.vdc.find_derivation(e.consumer);
            ASSERT_TRUE(oracle::files_of(p, ArgClass::Output).count(e.lfn));
            ASSERT_TRUE(oracle::files_of(q, ArgClass::Input).count(e.lfn));
            edges.emplace_back(e.producer, e.consumer);
        }
        for (const auto& x : dag.external_inputs) ASSERT_EQ(rc.vdc.find_producer(x.lfn), nullptr);

        const auto order = topo_order(dag);
        ASSERT_TRUE(oracle::respects_edges(order, edges)) << "case " << c;
        if (nodes.size() <= 7) {
            const auto expected = oracle::smallest_topo_order_oracle({nodes.begin(), nodes.end()}, edges);
            ASSERT_TRUE(expected.has_value());
            ASSERT_EQ(order, *expected) << "case " << c;
        }
    }
}

TEST(Property, PruneIsIdempotentAndMinimal) {
    for (int c = 0; c < kCases; ++c) {
        auto rng = case_rng(4, c);
        const auto rc = oracle::random_catalog(rng, 10);
        const auto dag = plan_abstract(rc.vdc, PlanRequest::derivation(rc.dv_names.back()));
        ReplicaCatalog rls;
        for (const auto& [n, io] : dag.nodes) {
            for (const auto& lfn : io.outputs) {
                if (uniform(rng, 0, 2) == 0) rls.register_replica({lfn, "s", "/s/" + lfn});
            }
        }
        const auto pruned = prune(dag, rls);
        ASSERT_EQ(prune(pruned, rls), pruned) << "case " << c;

        std::set<std::string> kept;
        for (const auto& [n, io] : pruned.nodes) kept.insert(n);
        ASSERT_EQ(kept, oracle::minimal_set_oracle(dag, rls)) << "case " << c;

        for (const auto& [n, io] : pruned.nodes) {
            if (n == pruned.target) continue;
            const bool all_replicated =
                std::all_of(io.outputs.begin(), io.outputs.end(), [&](const auto& l) { return rls.has_replica(l); });
            ASSERT_FALSE(all_replicated) << "case " << c << " kept " << n;
        }
        // Every input of a kept node is either produced inside or external.
        for (const auto& [n, io] : pruned.nodes) {
            for (const auto& lfn : io.inputs) {
                const bool internal = std::any_of(pruned.edges.begin(), pruned.edges.end(),
                                                  [&](const DagEdge& e) { return e.consumer == n && e.lfn == lfn; });
                const bool external = pruned.external_inputs.count({lfn, n}) > 0;
                ASSERT_TRUE(internal != external) << "case " << c;
            }
        }
    }
}

TEST(Property, WatermarkSafetyAndLiveness) {
    for (int c = 0; c < kCases; ++c) {
        auto rng = case_rng(5, c);
        ProductionRequest r;
        r.project = "w";
        r.total_events = uniform(rng, 1, 40);
        r.events_per_job = 1;
        r.kincard = "k";
        r.simcard = "s";
        r.geomfile = "g";
        r.pipeline = {std::string(kFortranSection)};
        const JobDescription jd{r};
        const auto gp = generate_derivations(jd, split_jobs(jd));
        VirtualDataCatalog vdc;
        for (const auto& tr : gp.transformations) vdc.insert(tr);
        for (const auto& dv : gp.derivations) vdc.insert(dv);
        ReplicaCatalog rls;
        for (const char* f : {"k", "s", "g"}) rls.register_replica({f, "se", std::string("/") + f});

        SchedulerConfig cfg;
        FakeGrid grid;
        const int n_sites = uniform(rng, 1, 4);
        for (int s = 0; s < n_sites; ++s) {
            const std::string id = "site" + std::to_string(uniform(rng, 0, 9));
            const int low = uniform(rng, 0, 6);
            cfg.sites[id] = {low, low + uniform(rng, 1, 6)};
            grid.running[id] = static_cast<std::size_t>(uniform(rng, 0, 12));
        }
        ConcretePlanOptions opts;
        opts.storage = {"se", "/se"};
        WorkRunner wr(vdc, rls, cfg, opts);
        wr.enqueue(gp.targets);

        const auto actions = wr.tick(grid, 0);
        std::map<std::string, std::size_t> got;
        for (const auto& a : actions) ++got[a.site];

        std::size_t queue = gp.targets.size();
        for (const auto& [site, wm] : cfg.sites) {
            const std::size_t running = grid.running[site];
            const std::size_t expected = oracle::watermark_oracle(running, wm.low, wm.high, queue);
            ASSERT_EQ(got[site], expected) << "case " << c << " site " << site;
            queue -= expected;
            // Safety: only starved sites receive work.
            if (got[site] > 0) ASSERT_LT(running, static_cast<std::size_t>(wm.low));
            // Liveness, for sites that started below low.
            if (running < static_cast<std::size_t>(wm.low)) {
                ASSERT_TRUE(running + got[site] > static_cast<std::size_t>(wm.high) || wr.queue_length() == 0)
                    << "case " << c;
            }
        }
        ASSERT_EQ(wr.queue_length(), queue);
        // FIFO: actions are the queue prefix.
        for (std::size_t i = 0; i < actions.size(); ++i) ASSERT_EQ(actions[i].target, gp.targets[i]);
    }
}

TEST(Property, SimulatorDeterminism) {
    for (int c = 0; c < kCases; ++c) {
        auto rng = case_rng(6, c);
        GridConfig cfg;
        cfg.seed = rng();
        cfg.service_time_mode = uniform(rng, 0, 1) ? ServiceTimeMode::Exponential : ServiceTimeMode::Deterministic;
        const int n_sites = uniform(rng, 1, 3);
        for (int s = 0; s < n_sites; ++s) {
            SiteSpec spec;
            spec.site = "s" + std::to_string(s);
            spec.slots = uniform(rng, 1, 4);
            spec.per_job_failure_prob = uniform(rng, 0, 3) * 0.1;
            if (uniform(rng, 0, 1)) spec.outages.push_back({static_cast<double>(uniform(rng, 0, 2000)), 2500.0});
            if (uniform(rng, 0, 1)) spec.preemptions.push_back(uniform(rng, 0, 3000));
            cfg.sites.push_back(spec);
        }
        const auto rc = oracle::random_catalog(rng, 6);
        std::vector<std::pair<std::string, std::string>> jobs;  // (target, site)
        const int n_jobs = uniform(rng, 1, 6);
        for (int j = 0; j < n_jobs; ++j) {
            jobs.emplace_back(rc.dv_names[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(rc.dv_names.size()) - 1))],
                              "s" + std::to_string(uniform(rng, 0, n_sites - 1)));
        }

        auto run = [&] {
            ReplicaCatalog rls;
            for (int e = 0; e < 5; ++e) {
                const std::string lfn = "ext" + std::to_string(e) + ".dat";
                rls.register_replica({lfn, "se", "/se/" + lfn});
            }
            GridSimulator sim(cfg, rls);
            ConcretePlanOptions opts;
            opts.storage = {"se", "/se"};
            std::vector<std::string> events;
            for (const auto& [target, site] : jobs) {
                sim.submit(plan_concrete(plan_abstract(rc.vdc, PlanRequest::derivation(target)), site, rls, opts));
                for (const auto& e : sim.step(sim.clock() + 100)) events.push_back(e.dag + e.reason);
            }
            while (auto t = sim.next_event_time()) {
                for (const auto& e : sim.step(*t)) events.push_back(e.dag + e.reason);
            }
            for (const auto& s : cfg.sites) EXPECT_LE(sim.peak_busy(s.site), s.slots);
            return std::make_tuple(sim.trace(), sim.trace_digest(), events, save_replicas_text(rls));
        };
        ASSERT_EQ(run(), run()) << "case " << c;
    }
}

TEST(Property, DagCountConservationEveryTick) {
    for (int c = 0; c < kCases; ++c) {
        auto rng = case_rng(7, c);
        Scenario sc;
        sc.production.project = "cons";
        sc.production.total_events = uniform(rng, 0, 30);
        sc.production.events_per_job = uniform(rng, 1, 3);
        sc.production.kincard = "k";
        sc.production.simcard = "s";
        sc.production.geomfile = "g";
        if (uniform(rng, 0, 1)) sc.production.pipeline = {std::string(kFortranSection)};
        sc.grid.service_time_mode = ServiceTimeMode::Exponential;
        const int n_sites = uniform(rng, 1, 3);
        for (int s = 0; s < n_sites; ++s) {
            SiteSpec spec;
            spec.site = "s" + std::to_string(s);
            spec.slots = uniform(rng, 1, 4);
            spec.per_job_failure_prob = uniform(rng, 0, 2) * 0.1;
            spec.exec_time_s.execute = uniform(rng, 30, 600);
            if (uniform(rng, 0, 2) == 0) spec.outages.push_back({600.0, 1800.0});
            if (uniform(rng, 0, 2) == 0) spec.preemptions.push_back(uniform(rng, 0, 2000));
            sc.grid.sites.push_back(spec);
        }
        sc.scheduler = with_default_watermarks({}, sc.grid);
        sc.scheduler.tick_interval_s = uniform(rng, 10, 120);
        if (uniform(rng, 0, 2) == 0) sc.submit_horizon_s = uniform(rng, 0, 3000);

        std::size_t ticks = 0;
        RunOptions opts;
        opts.on_tick = [&](const WorkRunner& wr, const GridSimulator& grid, double) {
            ++ticks;
            const auto st = wr.stats();
            ASSERT_EQ(st.queued + st.concretizing + st.submitted + st.running + st.succeeded + st.failed, st.enqueued);
            ASSERT_EQ(st.queued, wr.queue_length());
            std::size_t live = 0;
            for (const auto& [site, counts] : st.per_site) {
                ASSERT_EQ(counts.live, grid.running_count(site)) << "case " << c;
                live += counts.live;
            }
            ASSERT_EQ(live, grid.active_dags());
        };
        const auto r = run_scenario(sc, rng(), opts);
        const auto& st = r.stats;
        ASSERT_EQ(st.queued + st.succeeded + st.failed, st.enqueued) << "case " << c;
        ASSERT_EQ(st.submitted + st.running + st.concretizing, 0u);
        ASSERT_EQ(r.completion_records, st.finished_on_grid());
        if (st.enqueued > 0 && !sc.submit_horizon_s) ASSERT_GT(ticks, 0u);
    }
}
