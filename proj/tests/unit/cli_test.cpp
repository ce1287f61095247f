#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "vizex/cli.hpp"
#include "vizex/io.hpp"
#include "vizex/synth.hpp"

using namespace vizex;
using nlohmann::json;
using testing::TempDir;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

constexpr const char* kPaperQuery = "SELECT * FROM Video WHERE metrics = 0 BECAUSE kpi_1 OR kpi_2";

}  // namespace

TEST_SUITE("cli") {
    TEST_CASE("usage errors exit 2") {
        CHECK(cli({}).code == 2);
        CHECK(cli({"frobnicate"}).code == 2);
        CHECK(cli({"scan", "--project", "x"}).code == 2);
        CHECK(cli({"eval", "--project", "x", "--grid", "0"}).code == 2);
        CHECK(cli({"--help"}).code == 0);
    }

    TEST_CASE("query syntax errors exit 2 with a position") {
        TempDir dir;
        const auto r = cli({"query", "--project", dir.path().string(), "SELECT"});
        CHECK(r.code == 2);
        CHECK(r.err.find("SYNTAX_ERROR") != std::string::npos);
        CHECK(r.err.find("line 1, col 7") != std::string::npos);
    }

    TEST_CASE("engine errors exit 1") {
        TempDir dir;
        CHECK(cli({"ingest", "--project", (dir.path() / "missing").string()}).code == 1);
        write_file(dir.path() / "spec.json", R"({"frame_count": -4})");
        const auto r = cli({"synth", "--spec", (dir.path() / "spec.json").string(), "--out", (dir.path() / "o").string()});
        CHECK(r.code == 1);
        CHECK(r.err.find("INVALID_SPEC") != std::string::npos);
    }

    TEST_CASE("synth, ingest, kpi, eval, scan and query on one project") {
        TempDir dir;
        const auto root = dir.path() / "scene";
        auto spec = lighting_scenario(2);
        spec.frame_count = 300;
        spec.events[0].frame = 150;
        write_file(dir.path() / "spec.json", spec_to_json(spec).dump());
        REQUIRE(cli({"synth", "--spec", (dir.path() / "spec.json").string(), "--out", root.string()}).code == 0);

        const auto ingest = cli({"ingest", "--project", root.string()});
        REQUIRE(ingest.code == 0);
        CHECK(json::parse(ingest.out)["frame_count"] == 300);

        REQUIRE(cli({"kpi", "--project", root.string(), "--name", "luminosity"}).code == 0);
        CHECK(read_file(root / "series" / "luminosity.csv").rfind("frame,value\n0,", 0) == 0);
        CHECK(json::parse(read_file(root / "series" / "luminosity.meta.json"))["definition"]["lambda"] == "luminosity");

        REQUIRE(cli({"eval", "--project", root.string()}).code == 0);
        CHECK(fs::exists(root / "series" / "count_error.csv"));
        CHECK(json::parse(read_file(root / "results" / "heatmap.json")).contains("undercount"));

        const auto flat = cli({"scan", "--project", root.string(), "--series", "edge_fraction", "--bandwidth", "20", "--n-sims", "100"});
        REQUIRE(flat.code == 0);
        CHECK(json::parse(flat.out)["discontinuities"].empty());
        const auto step = cli({"scan", "--project", root.string(), "--series", "luminosity", "--bandwidth", "20", "--n-sims", "100"});
        REQUIRE(step.code == 0);
        const auto found = json::parse(step.out)["discontinuities"];
        REQUIRE(found.size() >= 1);
        CHECK(std::abs(found[0]["cutpoint"].get<int>() - 150) <= 2);

        const auto q = cli({"query", "--project", root.string(), "--n-sims", "200", kPaperQuery});
        REQUIRE(q.code == 0);
        CHECK(q.out.find("wrote results/query_") != std::string::npos);
        const auto q2 = cli({"query", "--project", root.string(), "--n-sims", "200", "SELECT * FROM v WHERE metrics = 0 BECAUSE nope"});
        CHECK(q2.code == 1);
        CHECK(q2.err.find("UNKNOWN_KPI") != std::string::npos);
    }

    TEST_CASE("baseline on train and test projects") {
        TempDir dir;
        auto a = zoned_scenario(1), b = zoned_scenario(2);
        a.frame_count = b.frame_count = 100;
        write_scenario(a, dir.path() / "a");
        write_scenario(b, dir.path() / "b");
        const auto r = cli({"baseline", "--train", (dir.path() / "a").string(), "--test", (dir.path() / "b").string(), "--stride", "5",
                            "--out", (dir.path() / "report.json").string()});
        REQUIRE(r.code == 0);
        const auto j = json::parse(read_file(dir.path() / "report.json"));
        CHECK(j["train_rows"] == 20);
        CHECK(j["test_rows"] == 20);
        CHECK(cli({"baseline"}).code == 1);
    }
}
