#include <gtest/gtest.h>

#include <filesystem>

#include "support/oracles.hpp"
#include "vds/catalog.hpp"
#include "vds/error.hpp"
#include "vds/text_io.hpp"

using namespace vds;
namespace fs = std::filesystem;

TEST(Catalog, InsertAndLookup) {
    const auto vdc = oracle::two_stage_catalog();
    EXPECT_EQ(vdc.size(), 4u);
    ASSERT_NE(vdc.find_transformation("ORCA_SECTION"), nullptr);
    ASSERT_NE(vdc.find_producer("eg02_BigJets_1.fz"), nullptr);
    EXPECT_EQ(vdc.find_producer("eg02_BigJets_1.fz")->name, oracle::kFortranDv);
    EXPECT_EQ(vdc.find_producer("cms125.rz"), nullptr);
    EXPECT_EQ(vdc.find_derivation("nope"), nullptr);
}

TEST(Catalog, IdenticalReinsertIsNoOp) {
    auto vdc = oracle::two_stage_catalog();
    const auto before = vdc;
    for (const auto& o : parse_vdl(oracle::kTwoStageVdl)) vdc.insert(o);
    EXPECT_EQ(vdc, before);
}

TEST(Catalog, ConflictingProducerNamesBoth) {
    auto vdc = oracle::two_stage_catalog();
    Derivation rival{"RIVAL", "ORCA_SECTION",
                     {{"runnum", Literal{"2"}},
                      {"infile", FileRef{ArgClass::Input, "x"}},
                      {"ntuple", FileRef{ArgClass::Output, "eg02_BigJets_1.ntpl"}}}};
    try {
        vdc.insert(rival);
        FAIL();
    } catch (const ConflictingProducer& e) {
        EXPECT_EQ(e.lfn(), "eg02_BigJets_1.ntpl");
        EXPECT_EQ(e.existing(), oracle::kOrcaDv);
        EXPECT_EQ(e.incoming(), "RIVAL");
    }
    EXPECT_EQ(vdc.find_derivation("RIVAL"), nullptr);
}

TEST(Catalog, SameNameDifferentContentRejected) {
    auto vdc = oracle::two_stage_catalog();
    Transformation tr = *vdc.find_transformation("ORCA_SECTION");
    tr.argument_template.pop_back();
    EXPECT_THROW(vdc.insert(tr), DuplicateName);
}

TEST(Catalog, DeferredBindingAllowsDvBeforeTr) {
    VirtualDataCatalog vdc;
    const auto objs = parse_vdl(oracle::kTwoStageVdl);
    for (auto it = objs.rbegin(); it != objs.rend(); ++it) vdc.insert(*it);
    EXPECT_EQ(vdc, oracle::two_stage_catalog());
    EXPECT_EQ(vdc.bind(oracle::kOrcaDv).outputs, std::set<std::string>{"eg02_BigJets_1.ntpl"});
}

TEST(Catalog, BindUnknownTransformation) {
    VirtualDataCatalog vdc;
    vdc.insert(parse_vdl(R"(DV D->MISSING( a="1" );)")[0]);
    EXPECT_THROW(vdc.bind("D"), UnknownTransformation);
}

TEST(Catalog, TextRoundTrip) {
    const auto vdc = oracle::two_stage_catalog();
    const auto text = save_catalog_text(vdc);
    EXPECT_EQ(text.rfind(kCatalogFormatHeader, 0), 0u);
    EXPECT_EQ(load_catalog_text(text), vdc);
    EXPECT_EQ(load_catalog_text(save_catalog_text(VirtualDataCatalog{})), VirtualDataCatalog{});
}

TEST(Catalog, LoadErrorsCarryLine) {
    try {
        load_catalog_text("TR T(input a) { argument = ${input:a}; }");
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.line(), 1u);
    }
    try {
        load_catalog_text(std::string(kCatalogFormatHeader) + "\n\nTR T(input a) {\n argument = ${input:b}; }\n");
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.line(), 4u);
    }
}

TEST(Catalog, FileRoundTrip) {
    const fs::path p = fs::temp_directory_path() / "vds_catalog_roundtrip.txt";
    const auto vdc = oracle::two_stage_catalog();
    save_catalog(vdc, p);
    EXPECT_EQ(load_catalog(p), vdc);
    fs::remove(p);
    EXPECT_THROW(load_catalog(p), IoError);
}
