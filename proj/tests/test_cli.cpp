#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "support/oracles.hpp"
#include "vds/cli.hpp"
#include "vds/text_io.hpp"

using namespace vds;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("vds_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(std::vector<std::string> args) {
        std::vector<std::string> full{"--catalog", path("vdc.txt"), "--rls", path("rls.txt"), "--metadb",
                                      path("metadb.json")};
        full.insert(full.end(), args.begin(), args.end());
        out_.str("");
        err_.str("");
        return run_cli(full, out_, err_);
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }
    std::string out() const { return out_.str(); }
    std::string err() const { return err_.str(); }

    fs::path dir_;
    std::ostringstream out_, err_;
};

std::size_t count_lines(const std::string& text, const std::string& prefix) {
    std::size_t n = 0;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) n += line.rfind(prefix, 0) == 0;
    return n;
}

}  // namespace

TEST_F(Cli, InsertListing) {
    EXPECT_EQ(run({"vdl", "insert", VDS_TEST_DATA_DIR "/cms_fortran_section.vdl"}), 0);
    EXPECT_EQ(out(), "2 objects inserted\n");
    EXPECT_EQ(run({"vdl", "list"}), 0);
    EXPECT_EQ(out(), "FORTRAN_SECTION\nEG02_BIGJETS_1_SIMULATION\n");
    EXPECT_EQ(run({"vdl", "export"}), 0);
    EXPECT_EQ(parse_vdl(out()), parse_vdl(read_file(VDS_TEST_DATA_DIR "/cms_fortran_section.vdl")));
}

TEST_F(Cli, ListEmptyCatalog) {
    write_file(path("empty.vdl"), "# nothing\n");
    ASSERT_EQ(run({"vdl", "insert", path("empty.vdl")}), 0);
    EXPECT_EQ(run({"vdl", "list"}), 0);
    EXPECT_EQ(out(), "");
}

TEST_F(Cli, ListMissingCatalogIsError) {
    EXPECT_EQ(run({"vdl", "list"}), 1);
    EXPECT_NE(err().find("IoError"), std::string::npos);
}

TEST_F(Cli, ConflictNamesBothDerivations) {
    write_file(path("two.vdl"), oracle::kTwoStageVdl);
    ASSERT_EQ(run({"vdl", "insert", path("two.vdl")}), 0);
    write_file(path("rival.vdl"), R"(DV RIVAL->ORCA_SECTION( runnum="9", infile=@{input:"x"},
                                        ntuple=@{output:"eg02_BigJets_1.ntpl"} );)");
    EXPECT_EQ(run({"vdl", "insert", path("rival.vdl")}), 1);
    EXPECT_NE(err().find("ConflictingProducer"), std::string::npos);
    EXPECT_NE(err().find("EG02_BIGJETS_1_RECONSTRUCTION"), std::string::npos);
    EXPECT_NE(err().find("RIVAL"), std::string::npos);
    // Nothing was written.
    run({"vdl", "list"});
    EXPECT_EQ(out().find("RIVAL"), std::string::npos);
}

TEST_F(Cli, SyntaxErrorIsPositioned) {
    write_file(path("bad.vdl"), "TR T(input a)");
    EXPECT_EQ(run({"vdl", "insert", path("bad.vdl")}), 1);
    EXPECT_EQ(err(), "SyntaxError: 1:14: expected '{', found end of input\n");
}

TEST_F(Cli, PlanAbstractAndConcrete) {
    write_file(path("two.vdl"), oracle::kTwoStageVdl);
    ASSERT_EQ(run({"vdl", "insert", path("two.vdl")}), 0);
    ASSERT_EQ(run({"plan", "abstract", oracle::kOrcaDv}), 0);
    EXPECT_EQ(count_lines(out(), "NODE "), 2u);
    EXPECT_EQ(count_lines(out(), "EDGE "), 1u);

    EXPECT_EQ(run({"plan", "concrete", oracle::kOrcaDv, "--site", "ufl"}), 1);
    EXPECT_NE(err().find("MissingReplica"), std::string::npos);

    write_file(path("rls.txt"), save_replicas_text(oracle::card_replicas()));
    ASSERT_EQ(run({"plan", "concrete", oracle::kOrcaDv, "--site", "ufl"}), 0);
    EXPECT_EQ(count_lines(out(), "JOB "), 11u);
    EXPECT_NE(out().find("EXEC EG02_BIGJETS_1_SIMULATION"), std::string::npos);

    auto rls = oracle::card_replicas();
    rls.register_replica({"eg02_BigJets_1.fz", "storage", "/store/eg02_BigJets_1.fz"});
    write_file(path("rls.txt"), save_replicas_text(rls));
    ASSERT_EQ(run({"plan", "concrete", oracle::kOrcaDv, "--site", "ufl", "-o", path("plan.dag")}), 0);
    const auto text = read_file(path("plan.dag"));
    EXPECT_EQ(text.find("EXEC EG02_BIGJETS_1_SIMULATION"), std::string::npos);
    EXPECT_NE(text.find("STAGEIN eg02_BigJets_1.fz"), std::string::npos);

    write_file(path("sched.conf"), "site.ufl.low = 1\nsite.ufl.high = 2\n");
    EXPECT_EQ(run({"--config", path("sched.conf"), "plan", "concrete", oracle::kOrcaDv, "--site", "anl"}), 1);
    EXPECT_EQ(err().rfind("UnknownSite: ", 0), 0u);
    EXPECT_EQ(run({"--config", path("sched.conf"), "plan", "concrete", oracle::kOrcaDv, "--site", "ufl"}), 0);
}

TEST_F(Cli, MissingGeometryReplica) {
    write_file(path("two.vdl"), oracle::kTwoStageVdl);
    ASSERT_EQ(run({"vdl", "insert", path("two.vdl")}), 0);
    auto rls = oracle::card_replicas();
    rls.unregister("cms125.rz", "storage");
    write_file(path("rls.txt"), save_replicas_text(rls));
    EXPECT_EQ(run({"plan", "concrete", oracle::kOrcaDv, "--site", "ufl"}), 1);
    EXPECT_NE(err().find("MissingReplica: cms125.rz"), std::string::npos);
}

TEST_F(Cli, UnknownTarget) {
    write_file(path("two.vdl"), oracle::kTwoStageVdl);
    ASSERT_EQ(run({"vdl", "insert", path("two.vdl")}), 0);
    EXPECT_EQ(run({"plan", "abstract", "NOPE"}), 1);
    EXPECT_EQ(err().rfind("UnknownTarget: ", 0), 0u);
}

TEST_F(Cli, ProduceSplitsAndIsIdempotent) {
    ASSERT_EQ(run({"request", "add", "eg02_BigJets", "--total-events", "150000", "--events-per-job", "250",
                   "--kincard", "eg02_BigJets_Id_252.txt", "--simcard", "STANDARD_125_Id_42.txt", "--geomfile",
                   "cms125.rz"}),
              0);
    ASSERT_EQ(run({"produce", "eg02_BigJets"}), 0);
    EXPECT_EQ(out(), "600 jobs generated\n");
    const auto first = read_file(path("vdc.txt"));
    ASSERT_EQ(run({"produce", "eg02_BigJets"}), 0);
    EXPECT_EQ(read_file(path("vdc.txt")), first);
}

TEST_F(Cli, ProduceOneEvent) {
    ASSERT_EQ(run({"request", "add", "single", "--total-events", "1", "--events-per-job", "250", "--kincard", "k",
                   "--simcard", "s", "--geomfile", "g", "--pipeline", "fortran"}),
              0);
    ASSERT_EQ(run({"produce", "single"}), 0);
    EXPECT_EQ(out(), "1 jobs generated\n");
}

TEST_F(Cli, ProduceUnknownProject) {
    write_file(path("metadb.json"), R"({"requests": [], "completions": []})");
    EXPECT_EQ(run({"produce", "nope"}), 1);
    EXPECT_EQ(err().rfind("UnknownProject: ", 0), 0u);
}

TEST_F(Cli, SimulateSmallScenario) {
    write_file(path("sc.json"), R"({
      "production": {"project": "p", "total_events": 6, "events_per_job": 2, "kincard": "k", "simcard": "s",
                     "geomfile": "g"},
      "grid": {"sites": [{"id": "x", "slots": 4}]}
    })");
    ASSERT_EQ(run({"--seed", "5", "simulate", path("sc.json"), "--trace-out", path("trace.txt"), "--stats-out",
                   path("stats.json")}),
              0);
    EXPECT_NE(read_file(path("stats.json")).find("\"succeeded\": 3"), std::string::npos);
    const auto trace = read_file(path("trace.txt"));
    EXPECT_NE(trace.find("DAG success"), std::string::npos);

    ASSERT_EQ(run({"simulate", path("sc.json"), "--seeds", "3"}), 0);
    EXPECT_EQ(count_lines(out(), "  {"), 3u);
}

TEST_F(Cli, SimulateConfigErrors) {
    write_file(path("bad.json"), R"({"grid": {"sites": []}})");
    EXPECT_EQ(run({"simulate", path("bad.json")}), 1);
    EXPECT_EQ(err().rfind("ConfigError: ", 0), 0u);
}

TEST_F(Cli, UsageErrors) {
    EXPECT_EQ(run({}), 2);
    EXPECT_EQ(run({"plan", "concrete", "X"}), 2);
    EXPECT_EQ(run({"--help"}), 0);
}
