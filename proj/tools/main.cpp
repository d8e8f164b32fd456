// entromon: measure, simulate, monitor and analyze ethical-entropy
// dynamics of black-box text-generation systems.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "entromon/client_factory.hpp"
#include "entromon/config.hpp"
#include "entromon/entromon.hpp"
#include "entromon/http.hpp"

namespace fs = std::filesystem;
using namespace entromon;

namespace {

std::atomic<bool> g_interrupted{false};

void handle_signal(int) { g_interrupted = true; }

struct GlobalOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
};

Config load_effective_config(const GlobalOptions& opts) {
    Config cfg = opts.config_path.empty() ? Config{} : load_config(opts.config_path);
    if (opts.seed) cfg.sampling.seed = opts.seed;
    return cfg;
}

fs::path ensure_out_dir(const GlobalOptions& opts, const Config& cfg) {
    fs::path dir = opts.out_dir != "." ? fs::path(opts.out_dir)
                                       : fs::path(cfg.persistence.output_dir);
    if (dir.empty()) dir = ".";
    fs::create_directories(dir);
    return dir;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty()) out.push_back(std::stoi(cell));
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty()) out.push_back(std::stod(cell));
    }
    return out;
}

ScenarioSpec scenario_from_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario parse error: " + std::string(e.what()));
    }
    for (const auto& [key, value] : j.items()) {
        static const std::set<std::string> known{"name", "s0", "sigma", "gamma",
                                                 "s_max", "horizon", "seed"};
        if (known.count(key) == 0) throw ConfigError("unknown scenario key: " + key);
    }
    ScenarioSpec spec;
    try {
        spec.name = j.value("name", std::string("custom"));
        spec.s0 = j.value("s0", 0.0);
        spec.sigma = j.value("sigma", 0.0);
        spec.gamma = j.value("gamma", 0.0);
        spec.s_max = j.value("s_max", -1.0);
        spec.horizon = j.value("horizon", 1000);
        spec.seed = j.value("seed", 0);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario field error: " + std::string(e.what()));
    }
    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------
// measure

int cmd_measure(const GlobalOptions& opts, const std::string& prompts_path,
                const std::string& model_id_override) {
    const Config cfg = load_effective_config(opts);
    const std::vector<std::string> prompts = read_prompts_file(prompts_path);
    if (prompts.empty()) throw ConfigError("prompts file has no prompts: " + prompts_path);

    OwnedModelClient model = make_model_client(cfg.generate, cfg.sampling.seed);
    OwnedClassifierClient classifier = make_classifier_client(cfg.classify, cfg.sampling.seed);

    const SuiteResult suite =
        run_prompt_suite(model.get(), prompts, classifier.get(), cfg.sampling);

    const std::string model_id =
        model_id_override.empty() ? model.get().model_id() : model_id_override;
    const fs::path dir = ensure_out_dir(opts, cfg);
    const fs::path out_path = dir / ("measure_" + model_id + ".jsonl");

    JsonlWriter writer(out_path, cfg.persistence.rotation_bytes);
    double sum = 0.0;
    double min_s = std::numeric_limits<double>::infinity();
    double max_s = -std::numeric_limits<double>::infinity();
    for (EntropySample sample : suite.samples) {
        sample.model_id = model_id;
        writer.write(record_to_json(sample));
        sum += sample.entropy_nats;
        min_s = std::min(min_s, sample.entropy_nats);
        max_s = std::max(max_s, sample.entropy_nats);
    }
    writer.flush();

    std::cout << "measured " << suite.samples.size() << "/" << prompts.size() << " prompts ("
              << suite.failures.size() << " failed)\n";
    if (!suite.samples.empty()) {
        std::cout << "entropy nats: mean " << sum / suite.samples.size() << ", min " << min_s
                  << ", max " << max_s << "\n";
    }
    for (const SuiteFailure& f : suite.failures) {
        std::cerr << "prompt " << f.prompt_index << " failed: " << f.message << "\n";
    }
    std::cout << "trajectory: " << out_path.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const GlobalOptions& opts, const std::string& preset_name,
                 const std::string& spec_file, int k_override) {
    const Config cfg = load_effective_config(opts);
    ScenarioSpec spec;
    if (!spec_file.empty()) {
        spec = scenario_from_json_file(spec_file);
    } else if (!preset_name.empty()) {
        spec = preset(preset_name);
    } else {
        throw ConfigError("simulate needs a preset name or --spec file");
    }
    const int k = k_override > 0 ? k_override : cfg.sampling.k;
    const std::uint64_t seed = opts.seed.value_or(cfg.sampling.seed.value_or(spec.seed));

    const Trajectory traj = run_scenario(spec, k, seed);

    const fs::path dir = ensure_out_dir(opts, cfg);
    std::ostringstream stem;
    stem << spec.name << "_k" << k << "_seed" << seed;
    const fs::path traj_path = dir / (stem.str() + ".jsonl");
    const fs::path truth_path = dir / (stem.str() + ".truth.jsonl");

    write_trajectory_jsonl(traj_path, traj);
    {
        std::ofstream truth(truth_path, std::ios::trunc);
        if (!truth) throw Error("cannot open for write: " + truth_path.string());
        for (int step = 0; step < spec.horizon; ++step) {
            truth << nlohmann::json{{"step", step},
                                    {"entropy_nats", ground_truth_entropy(spec, step)}}
                         .dump()
                  << "\n";
        }
    }
    std::cout << "trajectory: " << traj_path.string() << "\n"
              << "ground truth: " << truth_path.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// monitor

int cmd_monitor(const GlobalOptions& opts, const std::string& prompts_path, int steps,
                const std::string& webhook_url, const std::string& retrain_url,
                bool stderr_alerts) {
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);

    const Config cfg = load_effective_config(opts);

    std::vector<std::string> file_prompts;
    if (!prompts_path.empty()) {
        file_prompts = read_prompts_file(prompts_path);
        steps = static_cast<int>(file_prompts.size());
    }
    if (steps <= 0) throw ConfigError("monitor has no prompt stream");

    MonitorConfig mon = cfg.monitor;
    mon.seed = cfg.sampling.seed;

    OwnedModelClient model = make_model_client(cfg.generate, cfg.sampling.seed);
    OwnedClassifierClient classifier = make_classifier_client(cfg.classify, cfg.sampling.seed);

    const fs::path dir = ensure_out_dir(opts, cfg);
    JsonlFileSink alert_sink((dir / "alerts.jsonl").string());
    StderrSink stderr_sink;
    std::optional<WebhookSink> webhook_sink;
    std::vector<AlertSink*> sinks{&alert_sink};
    if (stderr_alerts) sinks.push_back(&stderr_sink);
    if (!webhook_url.empty()) {
        webhook_sink.emplace(webhook_url);
        sinks.push_back(&*webhook_sink);
    }

    StreamMonitor monitor(model.get(), classifier.get(), mon, sinks);
    if (!retrain_url.empty()) monitor.register_retrain_trigger(make_webhook_trigger(retrain_url));

    JsonlWriter trajectory(dir / "monitor_trajectory.jsonl", cfg.persistence.rotation_bytes);

    std::size_t alerts = 0;
    std::size_t processed = 0;
    for (int i = 0; i < steps; ++i) {
        if (g_interrupted) break;
        const std::string prompt = file_prompts.empty()
            ? "step-" + std::to_string(i)
            : file_prompts[static_cast<std::size_t>(i)];
        const MonitorStepResult result = monitor.step(prompt);
        if (result.sample) {
            trajectory.write(record_to_json(*result.sample));
            ++processed;
        } else if (processed == 0) {
            // Endpoint unreachable from the very first prompt: fatal.
            throw ClientError("monitor could not reach endpoints: " +
                              monitor.issues().back().message);
        }
        if (result.alert) ++alerts;
    }
    trajectory.flush();

    std::cout << "processed " << processed << " prompts, " << alerts << " alerts, "
              << monitor.issues().size() << " issues\n"
              << "alerts: " << (dir / "alerts.jsonl").string() << "\n"
              << "trajectory: " << (dir / "monitor_trajectory.jsonl").string() << "\n";
    if (g_interrupted) std::cout << "interrupted; partial trajectory persisted\n";
    return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct SideSummary {
    double rate = 0.0;
    double rate_stderr = 0.0;
    std::vector<double> final_means;     // per file
    std::vector<double> final_entropies; // pooled final-window values
    std::array<double, 5> final_probs{}; // pooled final-window mean distribution
};

std::size_t final_window_size(std::size_t n) {
    return std::min(n, std::max<std::size_t>(n / 10, 20));
}

SideSummary summarize_side(const std::vector<std::string>& files, DriftMethod method,
                           std::optional<int> window, bool trim) {
    SideSummary out;
    std::vector<double> rates;
    double single_stderr = 0.0;
    for (const std::string& file : files) {
        const Trajectory traj = read_trajectory_jsonl(file);
        const Trajectory fitted = trim ? truncate_at_saturation(traj) : traj;
        const RateEstimate rate = drift_rate(fitted, method, window);
        rates.push_back(rate.value);
        single_stderr = rate.stderr_;

        const std::size_t w = final_window_size(traj.samples.size());
        double mean = 0.0;
        for (std::size_t i = traj.samples.size() - w; i < traj.samples.size(); ++i) {
            const EntropySample& s = traj.samples[i];
            out.final_entropies.push_back(s.entropy_nats);
            mean += s.entropy_nats;
            for (std::size_t g = 0; g < 5; ++g) out.final_probs[g] += s.dist.at(g);
        }
        out.final_means.push_back(mean / static_cast<double>(w));
    }

    double sum = 0.0;
    for (double r : rates) sum += r;
    out.rate = sum / static_cast<double>(rates.size());
    if (rates.size() >= 2) {
        double var = 0.0;
        for (double r : rates) var += (r - out.rate) * (r - out.rate);
        out.rate_stderr = std::sqrt(var / static_cast<double>(rates.size() - 1));
    } else {
        out.rate_stderr = single_stderr;
    }

    double mass = 0.0;
    for (double p : out.final_probs) mass += p;
    for (double& p : out.final_probs) p /= mass;
    return out;
}

int cmd_analyze(const GlobalOptions& opts, const std::vector<std::string>& base_files,
                const std::vector<std::string>& tuned_files, const std::string& method_name,
                std::optional<int> window, bool paired, bool pooled, bool no_trim) {
    const Config cfg = load_effective_config(opts);
    const DriftMethod method =
        method_name == "fd" ? DriftMethod::finite_difference : DriftMethod::ols_slope;

    const SideSummary base = summarize_side(base_files, method, window, !no_trim);
    const SideSummary tuned = summarize_side(tuned_files, method, window, !no_trim);

    const DriftEstimate est =
        make_drift_estimate(base.rate, base.rate_stderr, tuned.rate, tuned.rate_stderr);
    const Stability verdict = stability_check(est.gamma_eff, est.sigma, cfg.monitor.epsilon);

    const GoalDistribution base_dist = GoalDistribution::normalized(base.final_probs);
    const GoalDistribution tuned_dist = GoalDistribution::normalized(tuned.final_probs);
    double kl = 0.0;
    bool kl_smoothed = false;
    try {
        kl = distribution_shift(base_dist, tuned_dist);
    } catch (const SupportMismatchError&) {
        kl = kl_divergence_smoothed(tuned_dist, base_dist);
        kl_smoothed = true;
    }

    // One value per trial when several files are supplied, otherwise the
    // final-window per-step entropies.
    const bool per_trial = base.final_means.size() >= 2 && tuned.final_means.size() >= 2;
    const std::vector<double>& sample_a = per_trial ? tuned.final_means : tuned.final_entropies;
    const std::vector<double>& sample_b = per_trial ? base.final_means : base.final_entropies;
    const TTestKind kind = paired ? TTestKind::paired : TTestKind::independent;
    const TestResult test = t_test(sample_a, sample_b, kind, 1, pooled);
    const std::string test_label =
        paired ? "paired" : (pooled ? "pooled independent" : "welch independent");

    double tuned_final = 0.0;
    for (double m : tuned.final_means) tuned_final += m;
    tuned_final /= static_cast<double>(tuned.final_means.size());

    std::ostringstream table;
    table << std::fixed << std::setprecision(6);
    table << "metric                 value      stderr\n"
          << "sigma       nats/step  " << est.sigma << "   " << est.sigma_stderr << "\n"
          << "dS/dt       nats/step  " << est.ds_dt << "   " << est.ds_dt_stderr << "\n"
          << "gamma_eff   nats/step  " << est.gamma_eff << "   " << est.gamma_stderr << "\n"
          << "stability: " << to_string(verdict) << " (epsilon " << cfg.monitor.epsilon << ")\n"
          << "KL(tuned||base), final window: " << kl << " nats"
          << (kl_smoothed ? " (smoothed: supports differ)" : "") << "\n"
          << "t-test (" << test_label << ", tuned vs base final window): t=" << test.statistic
          << " dof=" << test.dof << " p=" << std::scientific << test.p_value << std::fixed;
    if (test.effect_size_d) table << " d=" << *test.effect_size_d;
    table << "\n"
          << "thresholds: S_final(tuned) " << tuned_final
          << (tuned_final <= cfg.thresholds.s_max ? " <= " : " > ") << "s_max "
          << cfg.thresholds.s_max << "; gamma_eff "
          << (est.gamma_eff >= cfg.thresholds.gamma_min ? ">= " : "< ") << "gamma_min "
          << cfg.thresholds.gamma_min << "\n";

    std::cout << table.str();

    const fs::path dir = ensure_out_dir(opts, cfg);
    std::ofstream csv(dir / "analyze.csv", std::ios::trunc);
    csv << "metric,value,stderr\n"
        << std::setprecision(12) << "sigma," << est.sigma << "," << est.sigma_stderr << "\n"
        << "ds_dt," << est.ds_dt << "," << est.ds_dt_stderr << "\n"
        << "gamma_eff," << est.gamma_eff << "," << est.gamma_stderr << "\n"
        << "kl_final_window," << kl << ",\n"
        << "t_statistic," << test.statistic << ",\n"
        << "t_p_value," << test.p_value << ",\n";
    if (test.effect_size_d) csv << "cohens_d," << *test.effect_size_d << ",\n";
    csv << "stability," << to_string(verdict) << ",\n";
    std::cout << "report: " << (dir / "analyze.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// sweep

int cmd_sweep(const GlobalOptions& opts, const std::string& preset_name,
              const std::string& k_csv, const std::string& noise_csv, int reps, int steps) {
    const Config cfg = load_effective_config(opts);
    const std::vector<int> k_values = parse_int_list(k_csv);
    if (k_values.empty()) throw ConfigError("sweep needs a non-empty --k list");
    std::vector<double> noise_values = parse_double_list(noise_csv);
    if (noise_values.empty()) noise_values.push_back(0.0);
    if (reps < 1) throw ConfigError("sweep needs --reps >= 1");

    const ScenarioSpec spec = preset(preset_name);
    const int n_steps = steps > 0 ? std::min(steps, spec.horizon) : std::min(200, spec.horizon);
    const std::uint64_t base_seed = opts.seed.value_or(cfg.sampling.seed.value_or(1000));

    const fs::path dir = ensure_out_dir(opts, cfg);
    std::ofstream csv(dir / "sweep.csv", std::ios::trunc);
    // The noise column is the simulator-side label-noise rate standing in
    // for generation temperature (the simulator produces no text).
    csv << "# preset=" << preset_name << " reps=" << reps << " steps=" << n_steps << "\n";
    csv << "# noise = label-noise rate, the simulator analog of sampling temperature\n";
    csv << "k,noise,mean_entropy,std_entropy,n_reps\n";
    csv << std::setprecision(10);

    std::cout << "k      noise    mean_S     std_S\n";
    for (int k : k_values) {
        for (double noise : noise_values) {
            std::vector<double> rep_means;
            for (int rep = 0; rep < reps; ++rep) {
                SimulatedModelClient model(spec, base_seed + static_cast<std::uint64_t>(rep));
                SimulatedClassifierClient exact;
                LabelNoiseClassifier classifier(
                    exact, noise, base_seed + 7777 + static_cast<std::uint64_t>(rep));
                SamplingConfig sampling;
                sampling.k = k;
                sampling.temperature = cfg.sampling.temperature;
                double sum = 0.0;
                for (int i = 0; i < n_steps; ++i) {
                    sum += estimate_entropy(model, "step-" + std::to_string(i), classifier,
                                            sampling)
                               .entropy_nats;
                }
                rep_means.push_back(sum / n_steps);
            }
            double mean = 0.0;
            for (double m : rep_means) mean += m;
            mean /= static_cast<double>(rep_means.size());
            std::optional<double> sd;
            if (rep_means.size() >= 2) {
                double var = 0.0;
                for (double m : rep_means) var += (m - mean) * (m - mean);
                sd = std::sqrt(var / static_cast<double>(rep_means.size() - 1));
            }
            csv << k << "," << noise << "," << mean << "," << (sd ? std::to_string(*sd) : "")
                << "," << reps << "\n";
            std::cout << std::left << std::setw(7) << k << std::setw(9) << noise << std::setw(11)
                      << std::setprecision(4) << mean << (sd ? std::to_string(*sd) : "-") << "\n";
        }
    }
    std::cout << "sweep: " << (dir / "sweep.csv").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const GlobalOptions& opts, const std::vector<std::string>& traj_files) {
    const Config cfg = load_effective_config(opts);
    std::map<std::int64_t, std::vector<double>> by_step;
    std::vector<std::string> model_ids;
    for (const std::string& file : traj_files) {
        const Trajectory traj = read_trajectory_jsonl(file);
        if (traj.samples.empty()) throw ParseError("empty trajectory: " + file);
        model_ids.push_back(traj.model_id);
        for (const EntropySample& s : traj.samples) {
            by_step[s.step].push_back(s.entropy_nats);
        }
    }

    const fs::path dir = ensure_out_dir(opts, cfg);
    std::ofstream csv(dir / "report_timeseries.csv", std::ios::trunc);
    csv << "step,mean_entropy,std_entropy,n\n" << std::setprecision(10);
    double first_mean = 0.0, last_mean = 0.0;
    for (const auto& [step, values] : by_step) {
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double sd = 0.0;
        if (values.size() >= 2) {
            double var = 0.0;
            for (double v : values) var += (v - mean) * (v - mean);
            sd = std::sqrt(var / static_cast<double>(values.size() - 1));
        }
        csv << step << "," << mean << "," << sd << "," << values.size() << "\n";
        if (step == by_step.begin()->first) first_mean = mean;
        last_mean = mean;
    }

    std::cout << "trajectories: " << traj_files.size() << " (model_id " << model_ids.front()
              << ")\n"
              << "steps: " << by_step.size() << ", S_start " << std::setprecision(4) << first_mean
              << " nats, S_end " << last_mean << " nats\n"
              << "timeseries: " << (dir / "report_timeseries.csv").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ethical-entropy measurement, simulation and drift monitoring"};
    app.require_subcommand(0, 1);
    app.fallthrough(); // global --config/--out/--seed work after a subcommand

    GlobalOptions opts;
    bool show_reference = false;
    app.add_option("--config", opts.config_path, "JSON config file");
    app.add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    std::uint64_t seed_value = 0;
    CLI::Option* seed_opt = app.add_option("--seed", seed_value, "seed override");
    app.add_flag("--config-reference", show_reference, "print all config keys with defaults");

    // measure
    auto* measure = app.add_subcommand("measure", "estimate entropy over a prompt suite");
    std::string prompts_path;
    std::string model_id_override;
    measure->add_option("--prompts", prompts_path, "prompt file, one per line")->required();
    measure->add_option("--model-id", model_id_override, "model id recorded in output");

    // monitor
    auto* monitor = app.add_subcommand("monitor", "stream prompts through the drift monitor");
    std::string monitor_prompts;
    int monitor_steps = 0;
    std::string webhook_url;
    std::string retrain_url;
    bool stderr_alerts = false;
    monitor->add_option("--prompts", monitor_prompts, "prompt file to stream");
    monitor->add_option("--steps", monitor_steps, "synthetic prompt count (without --prompts)");
    monitor->add_option("--webhook", webhook_url, "alert webhook URL");
    monitor->add_option("--retrain-webhook", retrain_url, "retrain trigger webhook URL");
    monitor->add_flag("--stderr-alerts", stderr_alerts, "also log alerts to stderr");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "run a ground-truth scenario");
    std::string preset_name;
    std::string spec_file;
    int k_override = 0;
    simulate->add_option("preset", preset_name, "builtin preset name");
    simulate->add_option("--spec", spec_file, "scenario JSON file");
    simulate->add_option("--k", k_override, "samples per step");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "drift, alignment work and shift report");
    std::vector<std::string> base_files;
    std::vector<std::string> tuned_files;
    std::string method_name = "ols";
    int window = 0;
    bool paired = false;
    bool pooled = false;
    bool no_trim = false;
    analyze->add_option("--base", base_files, "baseline trajectory file(s)")->required();
    analyze->add_option("--tuned", tuned_files, "tuned trajectory file(s)")->required();
    analyze->add_option("--method", method_name, "ols | fd")->check(CLI::IsMember({"ols", "fd"}));
    analyze->add_option("--window", window, "trailing window for rate estimation");
    analyze->add_flag("--paired", paired, "paired t-test instead of independent");
    analyze->add_flag("--pooled", pooled, "pooled-variance independent t-test");
    analyze->add_flag("--no-trim", no_trim, "keep saturated tail when fitting drift");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "sensitivity of measured entropy to k and noise");
    std::string sweep_preset = "constant_low";
    std::string k_csv;
    std::string noise_csv;
    int reps = 5;
    int sweep_steps = 0;
    sweep->add_option("--preset", sweep_preset, "scenario preset")->capture_default_str();
    sweep->add_option("--k", k_csv, "comma-separated k values")->required();
    sweep->add_option("--noise", noise_csv, "comma-separated label-noise rates (default 0)");
    sweep->add_option("--reps", reps, "repetitions per cell")->capture_default_str();
    sweep->add_option("--steps", sweep_steps, "steps per repetition");

    // report
    auto* report = app.add_subcommand("report", "plot-ready time series from trajectories");
    std::vector<std::string> traj_files;
    report->add_option("--traj", traj_files, "trajectory file(s)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (*seed_opt) opts.seed = seed_value;

    try {
        if (show_reference) {
            std::cout << config_reference();
            return 0;
        }
        if (measure->parsed()) return cmd_measure(opts, prompts_path, model_id_override);
        if (monitor->parsed()) {
            return cmd_monitor(opts, monitor_prompts, monitor_steps, webhook_url, retrain_url,
                               stderr_alerts);
        }
        if (simulate->parsed()) return cmd_simulate(opts, preset_name, spec_file, k_override);
        if (analyze->parsed()) {
            return cmd_analyze(opts, base_files, tuned_files, method_name,
                               window > 0 ? std::optional<int>(window) : std::nullopt, paired,
                               pooled, no_trim);
        }
        if (sweep->parsed()) {
            return cmd_sweep(opts, sweep_preset, k_csv, noise_csv, reps, sweep_steps);
        }
        if (report->parsed()) return cmd_report(opts, traj_files);
        std::cout << app.help();
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const OutOfRangeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ClientError& e) {
        std::cerr << "client error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
