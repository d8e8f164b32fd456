#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "entromon/persistence.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kCli = ENTROMON_CLI_PATH;

struct RunResult {
    int exit_code = -1;
    std::string stdout_text;
};

RunResult run(const std::string& args, const fs::path& dir) {
    const fs::path out = dir / "stdout.txt";
    const std::string command =
        std::string(kCli) + " " + args + " > " + out.string() + " 2> " + (dir / "stderr.txt").string();
    const int status = std::system(command.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    result.stdout_text = ss.str();
    return result;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) ++n;
    return n;
}

} // namespace

TEST_CASE("cli: simulate writes trajectory plus ground-truth sidecar, deterministically") {
    const fs::path dir = fresh_dir("entromon_cli_sim");
    const RunResult first =
        run("simulate base_llm --k 100 --seed 7 --out " + (dir / "a").string(), dir);
    CHECK(first.exit_code == 0);

    const fs::path traj = dir / "a" / "base_llm_k100_seed7.jsonl";
    const fs::path truth = dir / "a" / "base_llm_k100_seed7.truth.jsonl";
    REQUIRE(fs::exists(traj));
    REQUIRE(fs::exists(truth));
    CHECK(line_count(traj) == 1000);
    CHECK(line_count(truth) == 1000);

    // Sidecar carries the analytic trajectory.
    {
        std::ifstream in(truth);
        std::string line;
        std::getline(in, line);
        const json j = json::parse(line);
        CHECK(j.at("step") == 0);
        CHECK(j.at("entropy_nats").get<double>() == 0.32);
    }

    const RunResult second =
        run("simulate base_llm --k 100 --seed 7 --out " + (dir / "b").string(), dir);
    CHECK(second.exit_code == 0);
    CHECK(slurp(traj) == slurp(dir / "b" / "base_llm_k100_seed7.jsonl"));
    CHECK(slurp(truth) == slurp(dir / "b" / "base_llm_k100_seed7.truth.jsonl"));

    CHECK(run("simulate no_such_preset --out " + dir.string(), dir).exit_code == 2);

    // k = 1 is degenerate but legal: every step is a delta distribution.
    const RunResult k1 = run("simulate constant_low --k 1 --seed 3 --out " + dir.string(), dir);
    CHECK(k1.exit_code == 0);
    const entromon::Trajectory t =
        entromon::read_trajectory_jsonl(dir / "constant_low_k1_seed3.jsonl");
    for (const entromon::EntropySample& s : t.samples) CHECK(s.entropy_nats == 0.0);
}

TEST_CASE("cli: simulate from a custom scenario file") {
    const fs::path dir = fresh_dir("entromon_cli_spec");
    {
        std::ofstream out(dir / "scenario.json");
        out << R"({"name":"mini","s0":0.2,"sigma":0.001,"gamma":0.0,"horizon":50,"seed":1})";
    }
    const RunResult ok = run(
        "simulate --spec " + (dir / "scenario.json").string() + " --k 10 --seed 2 --out " +
            dir.string(),
        dir);
    CHECK(ok.exit_code == 0);
    CHECK(fs::exists(dir / "mini_k10_seed2.jsonl"));

    {
        std::ofstream out(dir / "bad.json");
        out << R"({"name":"x","sigma":-1})";
    }
    CHECK(run("simulate --spec " + (dir / "bad.json").string(), dir).exit_code == 2);
}

TEST_CASE("cli: measure over a prompts file with simulated endpoints") {
    const fs::path dir = fresh_dir("entromon_cli_measure");
    {
        std::ofstream out(dir / "prompts.txt");
        out << "one\ntwo\nthree\n";
    }
    {
        std::ofstream out(dir / "config.json");
        out << R"({"endpoints": {"generate": {"url": "sim://base_llm?seed=11"}},
                   "sampling": {"k": 50}})";
    }

    const RunResult ok = run("measure --prompts " + (dir / "prompts.txt").string() +
                                 " --config " + (dir / "config.json").string() + " --out " +
                                 dir.string(),
                             dir);
    CHECK(ok.exit_code == 0);
    CHECK(ok.stdout_text.find("mean") != std::string::npos);
    const fs::path traj = dir / "measure_base_llm.jsonl";
    REQUIRE(fs::exists(traj));
    CHECK(line_count(traj) == 3);

    // Missing prompts file: usage error.
    CHECK(run("measure --prompts /no/such/file --out " + dir.string(), dir).exit_code == 2);

    // Failure rate beyond the 5% tolerance: upstream failure.
    {
        std::ofstream out(dir / "flaky.json");
        out << R"({"endpoints": {"generate": {"url": "sim://base_llm?seed=11&fail_every=2"}},
                   "sampling": {"k": 20}})";
    }
    const RunResult flaky = run("measure --prompts " + (dir / "prompts.txt").string() +
                                    " --config " + (dir / "flaky.json").string() + " --out " +
                                    dir.string(),
                                dir);
    CHECK(flaky.exit_code == 3);

    // Unknown config key: config error.
    {
        std::ofstream out(dir / "bad.json");
        out << R"({"samplings": {"k": 20}})";
    }
    CHECK(run("measure --prompts " + (dir / "prompts.txt").string() + " --config " +
                  (dir / "bad.json").string(),
              dir)
              .exit_code == 2);
}

TEST_CASE("cli: analyze produces the drift table and stable exit codes") {
    const fs::path dir = fresh_dir("entromon_cli_analyze");
    REQUIRE(run("simulate base_llm --k 100 --seed 21 --out " + dir.string(), dir).exit_code == 0);
    REQUIRE(run("simulate tuned_llm --k 100 --seed 22 --out " + dir.string(), dir).exit_code == 0);
    const std::string base = (dir / "base_llm_k100_seed21.jsonl").string();
    const std::string tuned = (dir / "tuned_llm_k100_seed22.jsonl").string();

    const RunResult ok =
        run("analyze --base " + base + " --tuned " + tuned + " --out " + dir.string(), dir);
    CHECK(ok.exit_code == 0);
    CHECK(ok.stdout_text.find("sigma") != std::string::npos);
    CHECK(ok.stdout_text.find("gamma_eff") != std::string::npos);
    CHECK(ok.stdout_text.find("stability:") != std::string::npos);
    REQUIRE(fs::exists(dir / "analyze.csv"));

    // Recovered sigma lands in the Table-1 band.
    double sigma = 0.0, gamma = 0.0;
    {
        std::ifstream csv(dir / "analyze.csv");
        std::string line;
        while (std::getline(csv, line)) {
            if (line.rfind("sigma,", 0) == 0) sigma = std::stod(line.substr(6));
            if (line.rfind("gamma_eff,", 0) == 0) gamma = std::stod(line.substr(10));
        }
    }
    CHECK(std::abs(sigma - 0.013) < 0.002);
    CHECK(std::abs(gamma - 0.013) < 0.002);

    // A file against itself: gamma exactly zero, KL exactly zero.
    const RunResult self =
        run("analyze --base " + base + " --tuned " + base + " --out " + dir.string(), dir);
    CHECK(self.exit_code == 0);
    {
        std::ifstream csv(dir / "analyze.csv");
        std::string line;
        while (std::getline(csv, line)) {
            if (line.rfind("gamma_eff,", 0) == 0) {
                CHECK(std::stod(line.substr(10)) == 0.0);
            }
            if (line.rfind("kl_final_window,", 0) == 0) {
                CHECK(std::stod(line.substr(16)) == 0.0);
            }
        }
    }

    // Single-record trajectory surfaces InsufficientData as exit 2.
    {
        std::ofstream out(dir / "one.jsonl");
        out << json{{"step", 0},
                    {"entropy_nats", 0.0},
                    {"probs", {1.0, 0.0, 0.0, 0.0, 0.0}},
                    {"k_used", 1},
                    {"prompt_id", "p"},
                    {"model_id", "m"},
                    {"ts", 0.0}}
                   .dump()
            << "\n";
    }
    CHECK(run("analyze --base " + (dir / "one.jsonl").string() + " --tuned " + tuned, dir)
              .exit_code == 2);

    // Unparseable trajectory: exit 2.
    {
        std::ofstream out(dir / "garbage.jsonl");
        out << "not json\n";
    }
    CHECK(run("analyze --base " + (dir / "garbage.jsonl").string() + " --tuned " + tuned, dir)
              .exit_code == 2);
}

TEST_CASE("cli: sweep emits a csv over k values") {
    const fs::path dir = fresh_dir("entromon_cli_sweep");
    const RunResult ok = run(
        "sweep --preset constant_low --k 50,100 --reps 2 --steps 40 --seed 5 --out " +
            dir.string(),
        dir);
    CHECK(ok.exit_code == 0);
    REQUIRE(fs::exists(dir / "sweep.csv"));

    std::ifstream csv(dir / "sweep.csv");
    std::string line;
    std::vector<std::string> data_lines;
    bool saw_header = false;
    while (std::getline(csv, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            CHECK(line == "k,noise,mean_entropy,std_entropy,n_reps");
            saw_header = true;
            continue;
        }
        data_lines.push_back(line);
    }
    CHECK(data_lines.size() == 2); // two k values, one noise setting

    // Empty k list is a usage error.
    CHECK(run("sweep --preset constant_low --k , --reps 1", dir).exit_code == 2);

    // Single rep: std column reported as absent.
    const RunResult single = run(
        "sweep --preset constant_low --k 50 --reps 1 --steps 20 --seed 5 --out " + dir.string(),
        dir);
    CHECK(single.exit_code == 0);
    std::ifstream csv2(dir / "sweep.csv");
    std::string row;
    while (std::getline(csv2, row)) {
        if (!row.empty() && row[0] != '#' && row[0] != 'k') break;
    }
    // k,noise,mean,<empty>,n
    CHECK(row.find(",,1") != std::string::npos);
}

TEST_CASE("cli: monitor over simulator streams") {
    const fs::path dir = fresh_dir("entromon_cli_monitor");

    // Flat tuned preset: the alert file stays empty.
    {
        std::ofstream out(dir / "tuned.json");
        out << R"({"endpoints": {"generate": {"url": "sim://tuned_llm?seed=31"}},
                   "monitor": {"k": 100}})";
    }
    const RunResult quiet = run("monitor --steps 300 --config " + (dir / "tuned.json").string() +
                                    " --out " + (dir / "quiet").string(),
                                dir);
    CHECK(quiet.exit_code == 0);
    CHECK(fs::exists(dir / "quiet" / "alerts.jsonl"));
    CHECK(line_count(dir / "quiet" / "alerts.jsonl") == 0);
    CHECK(line_count(dir / "quiet" / "monitor_trajectory.jsonl") == 300);

    // Drifting base preset: window_drift alerts appear.
    {
        std::ofstream out(dir / "base.json");
        out << R"({"endpoints": {"generate": {"url": "sim://base_llm?seed=32"}},
                   "monitor": {"k": 100}})";
    }
    const RunResult loud = run("monitor --steps 300 --config " + (dir / "base.json").string() +
                                   " --out " + (dir / "loud").string(),
                               dir);
    CHECK(loud.exit_code == 0);
    const fs::path alerts = dir / "loud" / "alerts.jsonl";
    REQUIRE(fs::exists(alerts));
    REQUIRE(line_count(alerts) > 0);
    bool saw_window_drift = false;
    std::ifstream in(alerts);
    std::string line;
    while (std::getline(in, line)) {
        if (json::parse(line).at("kind") == "window_drift") saw_window_drift = true;
    }
    CHECK(saw_window_drift);

    // Determinism: the same transcript yields byte-identical alerts.
    const RunResult again = run("monitor --steps 300 --config " + (dir / "base.json").string() +
                                    " --out " + (dir / "loud2").string(),
                                dir);
    CHECK(again.exit_code == 0);
    CHECK(slurp(alerts) == slurp(dir / "loud2" / "alerts.jsonl"));
}

TEST_CASE("cli: monitor shuts down cleanly on SIGINT") {
    const fs::path dir = fresh_dir("entromon_cli_sigint");
    {
        std::ofstream out(dir / "config.json");
        out << R"({"endpoints": {"generate": {"url": "sim://constant_low?seed=33"}},
                   "monitor": {"k": 100}})";
    }
    // timeout(1) delivers SIGINT after one second; --preserve-status
    // propagates the tool's own exit code, which must be 0 after a
    // graceful shutdown.
    const std::string command = "timeout --preserve-status -s INT 1 " + std::string(kCli) +
                                " monitor --steps 2000000 --config " +
                                (dir / "config.json").string() + " --out " + dir.string() +
                                " > " + (dir / "out.txt").string() + " 2>/dev/null";
    const int status = std::system(command.c_str());
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(fs::exists(dir / "monitor_trajectory.jsonl"));
    CHECK(line_count(dir / "monitor_trajectory.jsonl") > 0);
    CHECK(slurp(dir / "out.txt").find("interrupted") != std::string::npos);
}

TEST_CASE("cli: report emits per-step plot data") {
    const fs::path dir = fresh_dir("entromon_cli_report");
    REQUIRE(run("simulate constant_low --k 50 --seed 41 --out " + dir.string(), dir).exit_code ==
            0);
    REQUIRE(run("simulate constant_low --k 50 --seed 42 --out " + dir.string(), dir).exit_code ==
            0);

    const RunResult ok = run("report --traj " + (dir / "constant_low_k50_seed41.jsonl").string() +
                                 " --traj " + (dir / "constant_low_k50_seed42.jsonl").string() +
                                 " --out " + dir.string(),
                             dir);
    CHECK(ok.exit_code == 0);
    REQUIRE(fs::exists(dir / "report_timeseries.csv"));
    std::ifstream csv(dir / "report_timeseries.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "step,mean_entropy,std_entropy,n");
    std::string first;
    std::getline(csv, first);
    CHECK(first.substr(first.size() - 2) == ",2"); // two trajectories per step
}

TEST_CASE("cli: config reference and help") {
    const fs::path dir = fresh_dir("entromon_cli_help");
    const RunResult ref = run("--config-reference", dir);
    CHECK(ref.exit_code == 0);
    CHECK(ref.stdout_text.find("monitor.epsilon") != std::string::npos);

    const RunResult help = run("--help", dir);
    CHECK(help.exit_code == 0);
    for (const char* sub : {"measure", "monitor", "simulate", "analyze", "sweep", "report"}) {
        INFO(sub);
        CHECK(help.stdout_text.find(sub) != std::string::npos);
    }

    CHECK(run("frobnicate", dir).exit_code == 2);
}
