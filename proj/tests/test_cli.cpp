#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

std::string cli() {
    const char* p = std::getenv("PSQ_CLI");
    return p ? p : "psq";
}

fs::path scratch() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "psq_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = cli() + " " + args + " > " + (scratch() / "stdout.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_config(const std::string& name, const std::string& text) {
    const auto p = scratch() / name;
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("validate reports assumptions") {
    const auto good = write_config("good.json", R"j({"family": {"service": {"kind": "exponential", "rate": 1}}})j");
    CHECK(run("validate --config " + good.string()) == 0);
    const auto out = nlohmann::json::parse(slurp(scratch() / "stdout.txt"));
    CHECK(out.at("all_passed") == true);

    const auto heavy = write_config("heavy.json", R"j({"family": {
        "arrival": {"kind": "exponential", "rate": 0.6666666666666666},
        "service": {"kind": "pareto", "shape": 3, "x_min": 1}}})j");
    CHECK(run("validate --config " + heavy.string()) == 1);
}

TEST_CASE("configuration errors exit with code 2") {
    CHECK(run("validate --config " + (scratch() / "missing.json").string()) == 2);
    const auto bad = write_config("bad.json", R"j({"horizon": 0.5})j");
    CHECK(run("collapse --config " + bad.string()) == 2);
    CHECK(run("validate") == 2);
    CHECK(run("frobnicate --config x") == 2);
    CHECK(run("") == 2);
}

TEST_CASE("help exits cleanly") { CHECK(run("--help") == 0); }

TEST_CASE("simulate writes the path files") {
    const auto out = scratch() / "sim";
    const auto cfg = write_config("sim.json", R"j({"r_list": [5], "horizon": 1.5, "grid_points": 30,
        "initial": "manifold(1)"})j");
    REQUIRE(run("simulate --config " + cfg.string() + " --out " + out.string()) == 0);
    CHECK(slurp(out / "path.csv").rfind("t,Z,W,S\n", 0) == 0);
    CHECK(slurp(out / "path_atoms.csv").rfind("t,location,weight\n", 0) == 0);
    CHECK(fs::file_size(out / "path.bin") > 0);
}

TEST_CASE("collapse runs, honours seed and workers, and is deterministic") {
    const auto cfg = write_config("collapse.json", R"j({"r_list": [4, 8], "horizon": 1.5, "grid_points": 20,
        "replications": 5, "bootstrap_resamples": 100})j");
    const auto a = scratch() / "ca", b = scratch() / "cb";
    const int rc = run("collapse --config " + cfg.string() + " --seed 9 --workers 2 --out " + a.string());
    CHECK((rc == 0 || rc == 1));
    const auto summary = nlohmann::json::parse(slurp(a / "summary.json"));
    CHECK(summary.at("seed") == 9);
    CHECK(summary.at("all_passed") == (rc == 0));
    REQUIRE(run("collapse --config " + cfg.string() + " --seed 9 --workers 1 --out " + b.string()) == rc);
    CHECK(slurp(a / "collapse.csv") == slurp(b / "collapse.csv"));
}

TEST_CASE("steady rejects a zero drift as a configuration error") {
    const auto cfg = write_config("steady0.json", R"j({"suites": ["steady"]})j");
    CHECK(run("steady --config " + cfg.string()) == 2);
}

TEST_CASE("fluid writes the solved path and the comparison report") {
    const auto out = scratch() / "fluid";
    const auto cfg = write_config("fluid.json", R"j({"r_list": [5, 20], "initial": "manifold(1)",
        "fluid_shifts": 3, "fluid_grid_points": 6})j");
    const int rc = run("fluid --config " + cfg.string() + " --out " + out.string());
    CHECK((rc == 0 || rc == 1));
    CHECK(slurp(out / "fluid_path.csv").rfind("t,S,Z,workload\n", 0) == 0);
    CHECK(fs::exists(out / "fluid.csv"));
    CHECK(fs::exists(out / "summary.json"));
}
