#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "varfit/varfit.hpp"

// Spawns the installed CLI binary (path injected by the build) and checks the
// command surface: routing, file outputs, and exit codes
// (0 ok, 1 usage, 2 data error, 3 numeric precondition).

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const std::string out_path = "cli_stdout.tmp";
    const std::string cmd = std::string(VARFIT_CLI) + " " + args + " > " + out_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream f(out_path);
    std::stringstream ss;
    ss << f.rdbuf();
    r.out = ss.str();
    return r;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path);
    f << content;
}

std::string synthetic_csv(std::size_t n) {
    std::ostringstream os;
    os << "x,y\n";
    std::mt19937_64 eng(2020);
    std::normal_distribution<double> z(0.0, 0.5);
    for (std::size_t i = 1; i <= n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n);
        os << x << ',' << 5.0 * x + z(eng) << '\n';
    }
    return os.str();
}

}  // namespace

TEST_CASE("cli: estimate matches the library on an equally spaced file") {
    const std::string csv = synthetic_csv(100);
    write_file("cli_data.csv", csv);

    const RunResult r = run_cli(
        "estimate --input cli_data.csv --response y --method tw --bandwidth sqrt --json");
    INFO(r.out);
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);

    // recompute through the library
    std::istringstream in(csv);
    const varfit::DatasetFile ds = varfit::read_dataset_csv(in);
    const varfit::Sample1D sample =
        varfit::make_equally_spaced_sample(ds.data[0], ds.data[1]);
    const varfit::VarianceEstimate want = varfit::lag_regression(sample, 10);
    REQUIRE(j.at("value").get<double>() == want.value);
    REQUIRE(j.at("method").get<std::string>() == "tw-wls");
    REQUIRE(j.at("bandwidth").get<double>() == 10.0);
    REQUIRE(j.contains("df"));
}

TEST_CASE("cli: estimate with ci and estimated kurtosis") {
    write_file("cli_data.csv", synthetic_csv(200));
    const RunResult r = run_cli(
        "estimate --input cli_data.csv --response y --method rice --alpha 0.05 "
        "--gamma4 estimate --json");
    INFO(r.out);
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j.contains("ci"));
    REQUIRE(j.at("ci").at("lo").get<double>() > 0.0);
    REQUIRE(j.at("ci").at("lo").get<double>() < j.at("ci").at("hi").get<double>());
}

TEST_CASE("cli: general method on a multi-covariate file with rescaling") {
    std::ostringstream os;
    os << "t1,lat,lon,ph\n";
    std::mt19937_64 eng(8);
    std::normal_distribution<double> z(0.0, 0.2);
    for (int i = 0; i < 60; ++i) {
        const double t1 = static_cast<double>(eng() % 1000) / 100.0;
        const double lat = 30.0 + static_cast<double>(eng() % 500) / 100.0;
        const double lon = -85.0 + static_cast<double>(eng() % 500) / 100.0;
        os << t1 << ',' << lat << ',' << lon << ',' << 6.0 + z(eng) << '\n';
    }
    write_file("cli_lakes.csv", os.str());
    const RunResult r = run_cli(
        "estimate --input cli_lakes.csv --response ph --covariates t1,lat,lon "
        "--method general --rescale --bandwidth 0.5 --json");
    INFO(r.out);
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j.at("method").get<std::string>() == "general");
    REQUIRE(j.at("value").get<double>() >= 0.0);
}

TEST_CASE("cli: tw on an irregular design is refused, general accepts it") {
    std::ostringstream os;
    os << "x,y\n0.01,1\n0.5,2\n0.52,1\n0.9,3\n0.95,2\n";
    write_file("cli_irregular.csv", os.str());
    const RunResult tw =
        run_cli("estimate --input cli_irregular.csv --response y --method tw");
    REQUIRE(tw.exit_code == 3);
    const RunResult gen = run_cli(
        "estimate --input cli_irregular.csv --response y --method general --bandwidth 1.0");
    INFO(gen.out);
    REQUIRE(gen.exit_code == 0);
}

TEST_CASE("cli: exit codes") {
    // usage: reps must be positive
    REQUIRE(run_cli("simulate --cell 30,1,g1,tw,sqrt --reps 0").exit_code == 1);
    // usage: unknown flag
    REQUIRE(run_cli("estimate --nope").exit_code == 1);
    // data error: missing file
    REQUIRE(run_cli("estimate --input does_not_exist.csv --response y").exit_code == 2);
    // precondition: fixed-window bandwidth below 3
    write_file("cli_data.csv", synthetic_csv(50));
    REQUIRE(
        run_cli("estimate --input cli_data.csv --response y --method ms --bandwidth 2")
            .exit_code == 3);
    // precondition: gamma4 must exceed 1
    REQUIRE(run_cli("analyze --n 100 --gamma4 1").exit_code == 3);
    // help exits cleanly
    REQUIRE(run_cli("--help").exit_code == 0);
}

TEST_CASE("cli: simulate cell with histogram export") {
    const RunResult r = run_cli(
        "simulate --cell 30,0.25,g3,ms,sqrt --reps 200 --seed 9 --out cli_cell.csv "
        "--histogram --bins 16 --json");
    INFO(r.out);
    REQUIRE(r.exit_code == 0);

    std::ifstream hist("cli_cell.csv.hist.csv");
    REQUIRE(hist.good());
    std::string header;
    std::getline(hist, header);
    REQUIRE(header == "bin_lo,bin_hi,count");
    std::size_t lines = 0, total = 0;
    bool has_negative_bin = false;
    std::string line;
    while (std::getline(hist, line)) {
        ++lines;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = line.rfind(',');
        if (std::stod(line.substr(0, c1)) < 0.0) has_negative_bin = true;
        total += std::stoul(line.substr(c2 + 1));
    }
    REQUIRE(lines == 16);
    REQUIRE(total == 200);
    REQUIRE(has_negative_bin);  // this setting produces negative raw estimates

    std::ifstream jf("cli_cell.csv.json");
    REQUIRE(jf.good());
    nlohmann::json j;
    jf >> j;
    const auto rep = j.get<varfit::SimReport>();
    REQUIRE(rep.reps == 200);
    REQUIRE(rep.estimates.size() == 200);
}

TEST_CASE("cli: simulate table1 at smoke scale") {
    const RunResult r =
        run_cli("simulate --table1 --reps 100 --seed 4 --out cli_table1.csv");
    INFO(r.out);
    REQUIRE(r.exit_code == 0);
    std::ifstream f("cli_table1.csv");
    REQUIRE(f.good());
    std::size_t lines = 0;
    std::string line;
    while (std::getline(f, line)) ++lines;
    REQUIRE(lines == 1 + 18 * 4);  // header + 72 cells
}

TEST_CASE("cli: analyze emits the documented quantities") {
    const RunResult r = run_cli(
        "analyze --n 1000 --sigma2 1 --gamma4 3 --method ms --bandwidth 66 --optimal-L "
        "--identities");
    INFO(r.out);
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j.at("optimal_L").get<std::size_t>() == 66);
    REQUIRE(j.at("exact").contains("mse"));
    REQUIRE(j.at("df").get<double>() > 0.0);
    REQUIRE(j.contains("asymptotic_mse"));
    REQUIRE(j.at("identities").contains("b_sum"));
    const double ratio = j.at("optimal_mse").at("ratio_second_order").get<double>();
    REQUIRE(ratio > 7.0);
    REQUIRE(ratio < 7.5);
}

TEST_CASE("cli: matrix dump") {
    const RunResult r = run_cli("matrix --type ms --n 8 --bandwidth 3 --out cli_m.csv");
    REQUIRE(r.exit_code == 0);
    std::ifstream f("cli_m.csv");
    REQUIRE(f.good());
    std::string header;
    std::getline(f, header);
    REQUIRE(header == "i,j,value");
}
