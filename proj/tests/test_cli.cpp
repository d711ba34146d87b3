#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
};

CliResult run(const std::string& args) {
    const std::string cmd = std::string(GAUSSLDT_CLI) + " " + args + " 2>/dev/null";
    CliResult r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string cfg(const char* name) { return (fs::path(GAUSSLDT_CONFIG_DIR) / name).string(); }

fs::path write_temp(const char* name, const std::string& text) {
    const fs::path p = fs::temp_directory_path() / name;
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST(Cli, ThetaAtZero) {
    const CliResult r = run("theta --config " + cfg("single_two_baths.json") + " --s-grid 0:0:1");
    ASSERT_EQ(r.code, 0);
    std::istringstream in(r.out);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    EXPECT_EQ(header, "s,theta,solvable,closed_loop_margin");
    EXPECT_EQ(row.substr(0, 6), "0,0,1,");
}

TEST(Cli, OutputIsDeterministic) {
    const std::string args = "theta --config " + cfg("rw_chain_10.json") + " --s-grid -0.2:0.4:13 --threads 3";
    const CliResult a = run(args), b = run(args);
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    const CliResult c = run("theta --config " + cfg("rw_chain_10.json") + " --s-grid -0.2:0.4:13 --threads 1");
    EXPECT_EQ(a.out, c.out);
}

TEST(Cli, Validate) {
    const CliResult ok = run("validate --config " + cfg("xx_pair.json"));
    EXPECT_EQ(ok.code, 0);
    const auto bad = write_temp("gaussldt_cli_bad.json",
                                R"({"oscillators": [{}], "couplings": [{"i": 0, "j": 0, "kind": "rw", "g": 1}]})");
    EXPECT_EQ(run("validate --config " + bad.string()).code, 2);
    fs::remove(bad);
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("theta").code, 2);
    EXPECT_EQ(run("theta --config " + cfg("single_two_baths.json") + " --no-such-flag").code, 2);
    EXPECT_EQ(run("theta --config " + cfg("single_two_baths.json") + " --bath missing").code, 2);
    EXPECT_EQ(run("theta --config " + cfg("single_two_baths.json") + " --s-grid 7:9:5").code, 4);
    const auto unstable = write_temp("gaussldt_cli_unstable.json", R"({
        "oscillators": [{}, {}, {}],
        "couplings": [{"i": 0, "j": 1, "kind": "opo", "g": 0.1}, {"i": 1, "j": 2, "kind": "opo", "g": 0.1}],
        "baths": [{"oscillator": 0, "label": "1", "gamma": 0.1, "T": 1}, {"oscillator": 2, "label": "2", "gamma": 0.1, "T": 2}]
    })");
    EXPECT_EQ(run("theta --config " + unstable.string()).code, 3);
    fs::remove(unstable);
    EXPECT_EQ(run("oracle-compare --config " + cfg("rw_chain_10.json")).code, 5);
    EXPECT_EQ(run("oracle-compare --config " + cfg("driven_single.json")).code, 2);
}

TEST(Cli, SweepAndCumulants) {
    const CliResult sw = run("ft-sweep --config " + cfg("single_two_baths.json") + " --param T1 --values 0.5,1");
    ASSERT_EQ(sw.code, 0);
    EXPECT_EQ(sw.out.substr(0, sw.out.find('\n')), "param_value,s_min,s_candidate,sym,holds,analytic");
    EXPECT_EQ(std::count(sw.out.begin(), sw.out.end(), '\n'), 3);
    const CliResult cu = run("cumulants --config " + cfg("single_two_baths.json") + " --order 2");
    EXPECT_EQ(cu.code, 0);
    EXPECT_FALSE(cu.out.empty());
}
