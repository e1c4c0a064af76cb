#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "splitinf");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = splitinf::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> data_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (!line.empty() && line[0] != '#') lines.push_back(line);
    return lines;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "splitinf_cli_tests";
    fs::create_directories(dir);
    return dir / name;
}

fs::path setting_a_csv() {
    const fs::path p = scratch("setting_a.csv");
    const Outcome o = run_cli({"simulate", "--setting", "A", "--n", "200", "--p", "10", "--seed", "3", "--out", p.string()});
    REQUIRE(o.code == 0);
    return p;
}

} // namespace

TEST_SUITE("cli") {
    TEST_CASE("usage errors exit with code 2") {
        const fs::path data = setting_a_csv();
        CHECK(run_cli({"fit", "--input", data.string(), "--alpha", "1.5"}).code == 2);
        CHECK(run_cli({"fit", "--input", data.string(), "--param", "phi", "--method", "boot"}).code == 2);
        CHECK(run_cli({"fit", "--input", (scratch("missing.csv")).string()}).code == 2);
        CHECK(run_cli({"bogus"}).code == 2);
        CHECK(run_cli({}).code == 2);
        CHECK(run_cli({"coverage", "--tau", "3"}).code == 2);
    }

    TEST_CASE("help exits cleanly") {
        const Outcome o = run_cli({"--help"});
        CHECK(o.code == 0);
        CHECK(o.out.find("fit") != std::string::npos);
    }

    TEST_CASE("fit emits one row per selected coordinate and parameter") {
        const fs::path data = setting_a_csv();
        const std::string before = slurp(data);
        const fs::path out = scratch("fit.csv");
        const Outcome o = run_cli({"fit", "--input", data.string(), "--selector", "topk", "--k", "3", "--param", "beta,gamma",
                                   "--method", "boot", "--boot-reps", "300", "--seed", "5", "--out", out.string()});
        REQUIRE(o.code == 0);
        const auto lines = data_lines(slurp(out));
        REQUIRE(lines.size() == 7);
        CHECK(lines[0] == "parameter,index,estimate,lower,upper,level,method");
        CHECK(std::count_if(lines.begin(), lines.end(), [](const std::string& l) { return l.rfind("beta,", 0) == 0; }) == 3);
        CHECK(std::count_if(lines.begin(), lines.end(), [](const std::string& l) { return l.rfind("gamma,", 0) == 0; }) == 3);
        CHECK(slurp(data) == before);
        CHECK(slurp(out).find("# seed=5") != std::string::npos);
    }

    TEST_CASE("fit is byte-identical across reruns and thread counts") {
        const fs::path data = setting_a_csv();
        const fs::path a = scratch("fit_t1.csv");
        const fs::path b = scratch("fit_t8.csv");
        const std::vector<std::pair<std::string, std::string>> requests{
            {"beta", "normal,boot,image"}, {"gamma", "normal,boot"}, {"phi", "median"}, {"rho", "normal"}};
        for (const auto& [param, method] : requests) {
            CAPTURE(param);
            const std::vector<std::string> common{"fit", "--input", data.string(), "--param", param, "--method", method,
                                                  "--boot-reps", "300", "--seed", "9"};
            auto args_a = common;
            args_a.insert(args_a.end(), {"--threads", "1", "--out", a.string()});
            auto args_b = common;
            args_b.insert(args_b.end(), {"--threads", "8", "--out", b.string()});
            REQUIRE(run_cli(args_a).code == 0);
            REQUIRE(run_cli(args_b).code == 0);
            CHECK(slurp(a) == slurp(b));
            REQUIRE(run_cli(args_a).code == 0);
            CHECK(slurp(a) == slurp(b));
        }
    }

    TEST_CASE("config file values apply and flags win") {
        const fs::path data = setting_a_csv();
        const fs::path cfg = scratch("fit.ini");
        std::ofstream(cfg) << "[fit]\nalpha=0.2\nk=2\nparam=beta\nmethod=normal\n";
        const Outcome from_cfg = run_cli({"--config", cfg.string(), "fit", "--input", data.string(), "--seed", "1"});
        REQUIRE(from_cfg.code == 0);
        const auto rows = data_lines(from_cfg.out);
        REQUIRE(rows.size() == 3);
        CHECK(rows[1].find(",0.8,") != std::string::npos);
        const Outcome flag_wins =
            run_cli({"--config", cfg.string(), "fit", "--input", data.string(), "--seed", "1", "--alpha", "0.05"});
        REQUIRE(flag_wins.code == 0);
        CHECK(data_lines(flag_wins.out)[1].find(",0.95,") != std::string::npos);
    }

    TEST_CASE("coverage smoke run") {
        const auto start = std::chrono::steady_clock::now();
        const Outcome o = run_cli({"coverage", "--setting", "B", "--n", "100", "--p", "20", "--reps", "2", "--param", "beta,gamma",
                                   "--method", "normal,boot", "--boot-reps", "200", "--seed", "4"});
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        REQUIRE(o.code == 0);
        const auto lines = data_lines(o.out);
        CHECK(lines[0] == "setting,n,p,parameter,method,level,reps,joint_coverage,mean_width,mc_se");
        CHECK(lines.size() == 1 + 4);
        CHECK(secs < 60.0);
    }

    TEST_CASE("manymeans default gap grid") {
        const Outcome o = run_cli({"manymeans", "--D", "50", "--n", "10", "--reps", "200", "--seed", "2"});
        REQUIRE(o.code == 0);
        const auto lines = data_lines(o.out);
        CHECK(lines[0] == "gap,risk_split,risk_nonsplit,mc_se,reps");
        CHECK(lines.size() == 1 + 13);
    }

    TEST_CASE("simulate is reproducible from the seed") {
        const Outcome a = run_cli({"simulate", "--setting", "C", "--n", "20", "--p", "6", "--seed", "11"});
        const Outcome b = run_cli({"simulate", "--setting", "C", "--n", "20", "--p", "6", "--seed", "11"});
        REQUIRE(a.code == 0);
        CHECK(a.out == b.out);
        CHECK(data_lines(a.out).size() == 21);
    }
}
