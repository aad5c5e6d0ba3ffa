#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "ia/construct3.hpp"
#include "ia/json_io.hpp"
#include "ia/verify.hpp"

namespace fs = std::filesystem;
using namespace ia;

namespace {

const std::string kBin = IA_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("ia_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args, const std::string& stdout_file = "") {
    std::string cmd = kBin + " " + args;
    if (!stdout_file.empty()) cmd += " > " + stdout_file;
    cmd += " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("gen-channels writes a loadable channel file") {
    TempDir tmp;
    const auto ch_file = tmp.file("ch.json");
    REQUIRE(run("gen-channels --K 3 --M 2 --N 2 --d 1 --seed 7 --out " + ch_file) == 0);
    const ChannelSet ch = channels_from_json(load_json(ch_file));
    REQUIRE(ch.spec.K == 3);
    REQUIRE(ch.cross.size() == 6);
    REQUIRE(ch.direct.size() == 3);
    REQUIRE(ch.seed.value() == 7);

    // deterministic: regenerating with the same seed gives the same file
    const auto ch2_file = tmp.file("ch2.json");
    REQUIRE(run("gen-channels --K 3 --M 2 --N 2 --d 1 --seed 7 --out " + ch2_file) == 0);
    REQUIRE(slurp(ch_file) == slurp(ch2_file));
}

TEST_CASE("feasibility emits a JSON verdict") {
    TempDir tmp;
    const auto out = tmp.file("verdict.json");
    REQUIRE(run("feasibility --K 3 --M 2 --N 2 --d 1", out) == 0);
    const Json v = load_json(out);
    REQUIRE(v.at("overall").at("status") == "Feasible");
    REQUIRE(v.at("overall").at("dimension") == 0);

    REQUIRE(run("feasibility --K 3 --M 4 --N 8 --d 3 --all-path-bounds", out) == 0);
    const Json w = load_json(out);
    REQUIRE(w.at("overall").at("status") == "Infeasible");
    REQUIRE(w.at("counting").at("status") == "NecessaryConditionsPassOnly");
    REQUIRE(!w.at("path_bound_violations").empty());

    // spec file input
    const auto spec_file = tmp.file("spec.json");
    save_json(spec_file, spec_to_json(ProblemSpec::make_symmetric(4, 5, 5, 2)));
    REQUIRE(run("feasibility --spec " + spec_file, out) == 0);
    REQUIRE(load_json(out).at("fully_symmetric").at("status") == "Feasible");
}

TEST_CASE("solve/verify round trip exits 0 on feasible instances") {
    TempDir tmp;
    struct Case {
        int M, N, d;
        const char* method;
    };
    for (const Case c : {Case{2, 2, 1, "eigen"}, Case{2, 3, 1, "paths"}, Case{3, 5, 2, "paths"},
                         Case{5, 3, 2, "paths"}, Case{4, 4, 2, "eigen"}}) {
        const auto ch_file = tmp.file("ch.json");
        const auto s_file = tmp.file("s.json");
        REQUIRE(run("gen-channels --K 3 --M " + std::to_string(c.M) + " --N " +
                    std::to_string(c.N) + " --d " + std::to_string(c.d) + " --seed 5 --out " +
                    ch_file) == 0);
        REQUIRE(run(std::string("solve --channels ") + ch_file + " --method " + c.method +
                    " --out " + s_file) == 0);
        REQUIRE(run("verify --channels " + ch_file + " --strategy " + s_file) == 0);
    }
}

TEST_CASE("verify exits nonzero on a broken strategy") {
    TempDir tmp;
    const auto ch_file = tmp.file("ch.json");
    const auto s_file = tmp.file("s.json");
    REQUIRE(run("gen-channels --K 3 --M 2 --N 2 --d 1 --seed 9 --out " + ch_file) == 0);

    const ChannelSet ch = channels_from_json(load_json(ch_file));
    ComplexGaussianStream g(1);
    Strategy s;
    for (int i = 0; i < 3; ++i) {
        s.U.push_back(g.matrix(2, 1));
        s.V.push_back(g.matrix(2, 1));
    }
    save_json(s_file, strategy_to_json(s));
    REQUIRE(run("verify --channels " + ch_file + " --strategy " + s_file) == 2);
}

TEST_CASE("count prints Table-I values") {
    TempDir tmp;
    const auto out = tmp.file("count.txt");
    REQUIRE(run("count --K 3 --d 2 --N 4", out) == 0);
    REQUIRE(slurp(out) == "6\n");
    REQUIRE(run("count --K 4 --d 2 --N 5 --json", out) == 0);
    REQUIRE(load_json(out).at("count") == "3700");
    // dimension mismatch is a domain error
    REQUIRE(run("count --K 3 --d 1 --N 5", out) == 3);
}

TEST_CASE("witness subcommand verifies") {
    TempDir tmp;
    const auto out = tmp.file("w.json");
    REQUIRE(run("witness --K 4 --d 2 --N 5", out) == 0);
    const Json w = load_json(out);
    REQUIRE(w.at("verified") == true);
    REQUIRE(w.at("choices").size() == 12);
}

TEST_CASE("newton solve and enumerate") {
    TempDir tmp;
    const auto ch_file = tmp.file("ch.json");
    REQUIRE(run("gen-channels --K 3 --M 2 --N 2 --d 1 --seed 3 --out " + ch_file) == 0);

    const auto out = tmp.file("solve.json");
    REQUIRE(run("solve --channels " + ch_file + " --method newton --restarts 50", out) == 0);
    REQUIRE(load_json(out).at("newton").at("success") == true);

    const auto enum_out = tmp.file("enum.json");
    REQUIRE(run("enumerate --channels " + ch_file + " --attempts 100", enum_out) == 0);
    REQUIRE(load_json(enum_out).at("distinct") == 2);

    // infeasible: newton fails with exit 2
    const auto bad_file = tmp.file("bad.json");
    REQUIRE(run("gen-channels --K 3 --M 4 --N 8 --d 3 --seed 3 --out " + bad_file) == 0);
    REQUIRE(run("solve --channels " + bad_file + " --method newton --restarts 10", out) == 2);
}

TEST_CASE("dof matches the alignment-gain sequence") {
    TempDir tmp;
    const auto out = tmp.file("dof.json");
    for (auto [N, total] : std::vector<std::pair<int, int>>{{1, 1}, {2, 3}, {3, 5}}) {
        REQUIRE(run("dof --K 5 --N " + std::to_string(N) + " --json", out) == 0);
        REQUIRE(load_json(out).at("best_subset").at("total") == total);
    }
}

TEST_CASE("region-map marks the boundary examples") {
    TempDir tmp;
    const auto out = tmp.file("map.json");
    REQUIRE(run("region-map --d 2 --max-M 12 --max-N 12 --json", out) == 0);
    const Json map = load_json(out);
    bool f35 = false;
    for (const auto& cell : map.at("cells"))
        if (cell.at("M") == 3 && cell.at("N") == 5) f35 = cell.at("feasible");
    REQUIRE(f35);

    REQUIRE(run("region-map --d 3 --max-M 12 --max-N 12 --json", out) == 0);
    const Json map3 = load_json(out);
    bool f48 = true;
    for (const auto& cell : map3.at("cells"))
        if (cell.at("M") == 4 && cell.at("N") == 8) f48 = cell.at("feasible");
    REQUIRE(!f48);
}

TEST_CASE("usage errors exit nonzero") {
    REQUIRE(run("solve --method eigen") != 0);            // missing --channels
    REQUIRE(run("count --K 3 --d 2") != 0);               // missing --N
    REQUIRE(run("no-such-command") != 0);
}
