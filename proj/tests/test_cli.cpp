#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <sys/wait.h>

namespace {

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunResult run_cli(const std::string& args, const std::string& env = "") {
    const std::string out_path = "ppikit_cli_out.tmp";
    const std::string err_path = "ppikit_cli_err.tmp";
    std::string cmd = env + " " + std::string(PPIKIT_CLI_PATH) + " " + args + " > " +
                      out_path + " 2> " + err_path;
    int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    std::remove(out_path.c_str());
    std::remove(err_path.c_str());
    return r;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path);
    out << contents;
}

const char* kFixtureCsv =
    "id,x1,y,s,yhat\n"
    "0,0.5,2.0,1,1.8\n"
    "1,-0.5,1.0,1,1.2\n"
    "2,0.25,,0,1.6\n"
    "3,1.0,,0,2.4\n";

const char* kScenarioJson = R"({
  "dgp": {"n": 200, "p": 1, "beta": [0.0, 1.0], "noise_sd": 1.0,
          "covariate_corr": 0.0, "nonlinearity": 0.0},
  "mechanism": {"kind": "mnar", "quantile": 0.8, "multiplier": 10.0, "target_pi": 0.2},
  "scenario": {
    "regime": {"kind": "holdout", "n_external": 100},
    "learner": {"kind": "ridge", "penalty": 1.0},
    "methods": ["classical", "ppi"],
    "target": "mean",
    "mc": {"reps": 8, "seed": 42, "ci_level": 0.9}
  }
})";

} // namespace

TEST_CASE("estimate subcommand emits the documented json") {
    write_file("ppikit_cli_fixture.csv", kFixtureCsv);
    auto r = run_cli("estimate --method ppipp --target mean --level 0.90 "
                     "--input ppikit_cli_fixture.csv");
    CHECK(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["schema_version"] == 1);
    CHECK(j["method"] == "PPIpp");
    CHECK(j.contains("lambda"));
    CHECK(j["theta"].size() == 1);
    CHECK(j["se"].size() == 1);
    CHECK(j["ci_level"] == 0.90);
    CHECK(j["ci_lower"].size() == 1);
    CHECK(j["ci_upper"].size() == 1);
    CHECK(j["n_l"] == 2);
    CHECK(j["n_u"] == 2);
    std::remove("ppikit_cli_fixture.csv");
}

TEST_CASE("estimate classical and fixed-lambda paths") {
    write_file("ppikit_cli_fixture.csv", kFixtureCsv);
    auto cc = run_cli("estimate --method classical --target mean "
                      "--input ppikit_cli_fixture.csv");
    CHECK(cc.exit_code == 0);
    auto jc = nlohmann::json::parse(cc.out);
    CHECK(jc["method"] == "Classical");
    CHECK(jc["theta"][0] == 1.5);

    auto fixed = run_cli("estimate --method ppipp --target mean --lambda 0 "
                         "--input ppikit_cli_fixture.csv");
    auto jf = nlohmann::json::parse(fixed.out);
    CHECK(jf["lambda"] == 0.0);
    CHECK(jf["theta"][0] == 1.5);
    std::remove("ppikit_cli_fixture.csv");
}

TEST_CASE("diagnose prints json to stdout and a table to stderr") {
    write_file("ppikit_cli_fixture.csv", kFixtureCsv);
    auto r = run_cli("diagnose --input ppikit_cli_fixture.csv --pretrained "
                     "--energy-perms 19");
    CHECK(r.exit_code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j.contains("flags"));
    CHECK(j.contains("recommendation"));
    CHECK(j["missingness"]["n_l"] == 2);
    CHECK(r.err.find("recommended variant") != std::string::npos);
    std::remove("ppikit_cli_fixture.csv");
}

TEST_CASE("simulate writes the coverage csv and a summary") {
    write_file("ppikit_cli_scenario.json", kScenarioJson);
    auto r = run_cli("simulate --config ppikit_cli_scenario.json --out "
                     "ppikit_cli_table.csv --jobs 2");
    CHECK(r.exit_code == 0);
    std::string csv = slurp("ppikit_cli_table.csv");
    CHECK(csv.rfind("method,coefficient,coverage,mean_width,mean_bias,reps\n", 0) == 0);
    CHECK(csv.find(",8\n") != std::string::npos); // reps column from config
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["reps"] == 8);
    CHECK(j["seed"] == 42);

    // Determinism across worker counts (CSV bytes).
    auto r1 = run_cli("simulate --config ppikit_cli_scenario.json --out "
                      "ppikit_cli_t1.csv --jobs 1");
    auto r8 = run_cli("simulate --config ppikit_cli_scenario.json --out "
                      "ppikit_cli_t8.csv --jobs 8");
    CHECK(r1.exit_code == 0);
    CHECK(r8.exit_code == 0);
    CHECK(slurp("ppikit_cli_t1.csv") == slurp("ppikit_cli_t8.csv"));

    std::remove("ppikit_cli_scenario.json");
    std::remove("ppikit_cli_table.csv");
    std::remove("ppikit_cli_t1.csv");
    std::remove("ppikit_cli_t8.csv");
}

TEST_CASE("scalar and avx2 kernel backends give identical simulate output") {
    write_file("ppikit_cli_scenario.json", kScenarioJson);
    auto scalar = run_cli("simulate --config ppikit_cli_scenario.json --out "
                          "ppikit_cli_scalar.csv --jobs 2",
                          "PPIKIT_KERNELS=scalar");
    auto vec = run_cli("simulate --config ppikit_cli_scenario.json --out "
                       "ppikit_cli_auto.csv --jobs 2",
                       "PPIKIT_KERNELS=auto");
    CHECK(scalar.exit_code == 0);
    CHECK(vec.exit_code == 0);
    CHECK(slurp("ppikit_cli_scalar.csv") == slurp("ppikit_cli_auto.csv"));
    std::remove("ppikit_cli_scenario.json");
    std::remove("ppikit_cli_scalar.csv");
    std::remove("ppikit_cli_auto.csv");
}

TEST_CASE("seed precedence: flag over env over config") {
    write_file("ppikit_cli_scenario.json", kScenarioJson);
    auto env_only = run_cli("simulate --config ppikit_cli_scenario.json --out "
                            "ppikit_cli_env.csv",
                            "PPIKIT_SEED=123");
    auto j_env = nlohmann::json::parse(env_only.out);
    CHECK(j_env["seed"] == 123);

    auto flag_wins = run_cli("simulate --config ppikit_cli_scenario.json --out "
                             "ppikit_cli_flag.csv --seed 7",
                             "PPIKIT_SEED=123");
    auto j_flag = nlohmann::json::parse(flag_wins.out);
    CHECK(j_flag["seed"] == 7);

    std::remove("ppikit_cli_scenario.json");
    std::remove("ppikit_cli_env.csv");
    std::remove("ppikit_cli_flag.csv");
}

TEST_CASE("audit log writes one json line per replication") {
    write_file("ppikit_cli_scenario.json", kScenarioJson);
    auto r = run_cli("simulate --config ppikit_cli_scenario.json --out "
                     "ppikit_cli_table.csv --audit ppikit_cli_audit.jsonl");
    CHECK(r.exit_code == 0);
    std::ifstream audit("ppikit_cli_audit.jsonl");
    std::string line;
    int lines = 0;
    while (std::getline(audit, line)) {
        auto j = nlohmann::json::parse(line);
        CHECK(j["rep"] == lines);
        CHECK(j.contains("methods"));
        ++lines;
    }
    CHECK(lines == 8);
    std::remove("ppikit_cli_scenario.json");
    std::remove("ppikit_cli_table.csv");
    std::remove("ppikit_cli_audit.jsonl");
}

TEST_CASE("usage and data errors use distinct exit codes") {
    auto usage = run_cli("estimate --no-such-flag");
    CHECK(usage.exit_code == 1);

    auto missing = run_cli("estimate --method classical --input does_not_exist.csv");
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("IoError") != std::string::npos);

    auto no_sub = run_cli("");
    CHECK(no_sub.exit_code == 1);

    auto version = run_cli("version");
    CHECK(version.exit_code == 0);
    CHECK(version.out.find("ppikit") != std::string::npos);
    CHECK(version.out.find("schema_version") != std::string::npos);
}
