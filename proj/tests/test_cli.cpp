// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "modalprobe/table.hpp"
#include "support.hpp"

using namespace modalprobe;
using modalprobe::testing::read_bytes;
using modalprobe::testing::TempDir;
using json = nlohmann::json;

namespace {

struct Run {
    int status = 0;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    Run r;
    r.status = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

double accuracy_of(const Table& t, const std::string& method) {
    for (const auto& row : t.rows) {
        if (row[1] == method) return std::stod(row[2]);
    }
    FAIL("no row for " << method);
    return -1.0;
}

}  // namespace

TEST_CASE("synth, cv, classify and human chain end to end") {
    TempDir dir;
    const std::string data = (dir / "data").string();
    Run r = cli({"synth", "--out", data, "--per-category", "50", "--layers", "4", "--dim", "16",
                 "--planted-layer", "2", "--reference-sentences", "200", "--seed", "4"});
    REQUIRE(r.status == 0);
    for (const char* name : {"archive/manifest.json", "stimuli.tsv", "truth.json", "responses.tsv",
                             "ratings.tsv", "reference/manifest.json", "run.json"}) {
        CHECK(std::filesystem::exists(dir.path() / "data" / name));
    }
    const std::string archive = data + "/archive";
    const std::string stimuli = data + "/stimuli.tsv";

    r = cli({"cv", "--archive", archive, "--stimuli", stimuli, "--out", (dir / "cv").string()});
    REQUIRE(r.status == 0);
    const Table summary = read_table(dir / "cv" / "cv_summary.tsv");
    CHECK(summary.rows.size() == 6);
    for (const auto& row : summary.rows) CHECK(row[2] == "2");

    r = cli({"classify", "--archive", archive, "--stimuli", stimuli, "--pair", "probable:impossible",
             "--method", "all", "--reference", data + "/reference", "--out", (dir / "classify").string()});
    REQUIRE(r.status == 0);
    const Table cls = read_table(dir / "classify" / "classify.tsv");
    CHECK(accuracy_of(cls, "diffvec") == 1.0);
    CHECK(accuracy_of(cls, "random") <= accuracy_of(cls, "diffvec"));
    CHECK(accuracy_of(cls, "pc") <= accuracy_of(cls, "diffvec"));
    CHECK(std::filesystem::exists(dir.path() / "classify" / "reference_directions" / "manifest.json"));

    r = cli({"human", "--archive", archive, "--stimuli", stimuli, "--responses", data + "/responses.tsv",
             "--out", (dir / "human").string()});
    REQUIRE(r.status == 0);
    const json metrics = json::parse(read_bytes(dir.path() / "human" / "metrics.json"));
    CHECK(metrics["pearson_nminus1"].get<double>() >= 0.99);
    CHECK(metrics["n"].get<int>() == 200);

    r = cli({"classify", "--archive", archive, "--stimuli", stimuli, "--method", "pc", "--out",
             (dir / "pc").string()});
    CHECK(r.status == 2);
    CHECK(r.err.rfind("error E_USAGE: ", 0) == 0);

    const json manifest = json::parse(read_bytes(dir.path() / "human" / "run.json"));
    CHECK(manifest["subcommand"] == "human");
    CHECK(manifest["tool"] == "modalprobe");
    CHECK(manifest["outputs"].size() >= 3);
}

TEST_CASE("usage errors exit 2 with help text") {
    Run r = cli({"bogus"});
    CHECK(r.status == 2);
    CHECK(r.err.find("Usage") != std::string::npos);
    CHECK(r.err.find("error E_USAGE: ") != std::string::npos);

    r = cli({});
    CHECK(r.status == 2);
}

TEST_CASE("runtime failures exit 1 with one error line") {
    TempDir dir;
    const Run r = cli({"cv", "--archive", (dir / "missing").string(), "--stimuli", (dir / "s.tsv").string(),
                       "--out", (dir / "o").string()});
    CHECK(r.status == 1);
    CHECK(r.err.rfind("error E_", 0) == 0);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("help and version exit 0") {
    CHECK(cli({"--help"}).status == 0);
    const Run v = cli({"--version"});
    CHECK(v.status == 0);
    CHECK_FALSE(v.out.empty());
}
