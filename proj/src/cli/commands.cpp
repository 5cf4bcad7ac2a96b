#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>
#include <omp.h>

#include "ntnpred/checkpoint.hpp"
#include "ntnpred/cli.hpp"
#include "ntnpred/config.hpp"
#include "ntnpred/errors.hpp"
#include "ntnpred/harness.hpp"
#include "ntnpred/io.hpp"
#include "ntnpred/report.hpp"

namespace ntnpred {

namespace fs = std::filesystem;

namespace {

struct Common {
    int threads = 0;
    std::string out_dir;
    bool quiet = false;
};

std::string default_out_dir() {
    const char* env = std::getenv(kOutputDirEnv);
    return env && *env ? env : "ntnpred_out";
}

void apply_threads(const Common& c) {
    if (c.threads > 0) omp_set_num_threads(c.threads);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string config;
    int epochs = -1;
    long long batch = -1;
    int steps = -1;
    long long seed = -1;
    std::string checkpoint;
};

int cmd_train(const TrainArgs& a, const Common& c) {
    const auto t0 = std::chrono::steady_clock::now();
    RunManifest man;
    man.command = "train";
    man.started_utc = utc_timestamp();

    TrainConfig cfg = a.config.empty() ? TrainConfig{} : train_config_from(load_config(a.config));
    if (a.epochs >= 0) cfg.max_epochs = a.epochs;
    if (a.batch > 0) cfg.batch_size = static_cast<std::size_t>(a.batch);
    if (a.steps > 0) cfg.steps_per_epoch = a.steps;
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    cfg.validate();
    man.config = to_json(cfg);
    man.seeds = {{"master", cfg.seed}};

    const fs::path out(c.out_dir);
    const fs::path ckpt_path = a.checkpoint.empty() ? out / "model.ckpt" : fs::path(a.checkpoint);
    const fs::path log_path = out / "train_log.csv";

    PredictorModel model(cfg.seed, cfg.flip);
    Adam opt;
    std::vector<EpochLog> history;
    auto on_epoch = [&](const EpochLog& l) {
        history.push_back(l);
        if (!c.quiet && (l.epoch % 10 == 0))
            std::cerr << "epoch " << l.epoch << "  lr " << l.lr << "  train " << to_db(l.train_loss) << " dB  val "
                      << to_db(l.val_nmse) << " dB\n";
    };

    TrainResult res;
    try {
        res = train(model, opt, cfg, on_epoch);
    } catch (const TrainingDiverged& e) {
        // Keep what is needed to diagnose the blow-up, then fail.
        const fs::path snap = out / "diverged.ckpt";
        save_checkpoint(snap, make_checkpoint(model, &opt, static_cast<std::uint64_t>(std::max(e.epoch, 0)),
                                              {{"diverged", true}, {"message", e.what()}}));
        write_file_atomic(log_path, training_log_csv(history));
        man.artifacts = {snap, fs::path(snap.string() + ".json"), log_path};
        man.warnings.push_back(e.what());
        man.wall_time_s = seconds_since(t0);
        man.write(out / "train_manifest.json");
        throw;
    }

    const nlohmann::json meta{{"best_epoch", res.best_epoch},
                              {"best_val_nmse", res.best_val_nmse},
                              {"initial_val_nmse", res.initial_val_nmse},
                              {"epochs_run", res.epochs_run},
                              {"early_stopped", res.early_stopped},
                              {"channel_profile", cfg.channel_profile},
                              {"ue_speed_kmh", cfg.ue_speed_kmh},
                              {"data_mod_order", cfg.data_mod_order}};
    save_checkpoint(ckpt_path, make_checkpoint(model, &opt, static_cast<std::uint64_t>(res.epochs_run), meta));
    write_file_atomic(log_path, training_log_csv(res.history));
    man.artifacts = {ckpt_path, fs::path(ckpt_path.string() + ".json"), log_path};
    man.wall_time_s = seconds_since(t0);
    man.write(out / "train_manifest.json");
    if (!c.quiet)
        std::cerr << "best epoch " << res.best_epoch << ", val NMSE " << to_db(res.best_val_nmse) << " dB, "
                  << res.epochs_run << " epochs" << (res.early_stopped ? " (early stop)" : "") << "\n";
    std::cout << ckpt_path.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string config;
    std::string checkpoint;
    std::string axis = "ebn0";
    std::string values;
    std::string ebn0 = "0:12:1";
    long long iterations = -1;
    long long min_block_errors = -1;
    long long seed = -1;
    bool perfect_csi = false;
    std::string train_ckpt_a, train_ckpt_c;
    std::vector<std::string> train_ckpts;  // LABEL=PATH
    std::string csv_name = "metrics.csv";
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != ' ') {
            cur += ch;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string format_value(double v) { return format_double(v); }

int cmd_eval(const EvalArgs& a, const Common& c) {
    const auto t0 = std::chrono::steady_clock::now();
    RunManifest man;
    man.command = "eval";
    man.started_utc = utc_timestamp();

    ScenarioConfig base = a.config.empty() ? ScenarioConfig{} : scenario_config_from(load_config(a.config));
    if (!a.checkpoint.empty()) base.checkpoint = fs::path(a.checkpoint);
    if (a.iterations > 0) base.max_iterations = static_cast<std::uint64_t>(a.iterations);
    if (a.min_block_errors >= 0) base.min_block_errors = static_cast<std::uint64_t>(a.min_block_errors);
    if (a.seed >= 0) base.seed = static_cast<std::uint64_t>(a.seed);
    if (a.perfect_csi) base.perfect_csi = true;
    base.validate();
    const SweepAxis axis = sweep_axis_from_string(a.axis);

    // Training checkpoints for the mismatch grid, in label order.
    std::vector<std::pair<std::string, fs::path>> trained;
    if (!a.train_ckpt_a.empty()) trained.emplace_back("NTN-TDL-A", a.train_ckpt_a);
    if (!a.train_ckpt_c.empty()) trained.emplace_back("NTN-TDL-C", a.train_ckpt_c);
    for (const auto& s : a.train_ckpts) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
            throw ConfigError("--train-ckpt expects LABEL=PATH, got '" + s + "'");
        trained.emplace_back(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!trained.empty() && axis != SweepAxis::ChannelModel)
        throw ConfigError("training checkpoints per curve require --axis channel");

    auto load_model = [](const fs::path& p) {
        return std::make_unique<PredictorModel>(model_from_checkpoint(load_checkpoint(p)));
    };
    std::unique_ptr<PredictorModel> model;
    if (base.checkpoint) model = load_model(*base.checkpoint);

    std::vector<MetricsRecord> records;
    auto progress = [&](const MetricsRecord& r) {
        if (!c.quiet)
            std::cerr << r.label << "  Eb/N0 " << r.eb_n0_db << " dB  BLER_e " << r.bler_e << "  BLER_p " << r.bler_p
                      << "  TP_e " << r.tp_e_bps / 1e3 << " kbps  TP_p " << r.tp_p_bps / 1e3 << " kbps  ("
                      << r.iterations_run << " it)\n";
    };
    auto run_series = [&](const ScenarioConfig& cfg, const PredictorModel* m, const std::string& label,
                          const std::vector<double>& ebn0) {
        std::vector<std::string> vals;
        for (double v : ebn0) vals.push_back(format_value(v));
        for (auto& r : sweep(cfg, SweepAxis::EbN0, vals, m)) {
            r.label = label;
            progress(r);
            records.push_back(std::move(r));
        }
    };

    const std::string default_label = base.perfect_csi ? "perfect CSI" : model ? "prediction" : "persistence";
    nlohmann::json series_j = nlohmann::json::array();
    if (axis == SweepAxis::EbN0) {
        run_series(base, model.get(), default_label, parse_number_list(a.values.empty() ? a.ebn0 : a.values));
    } else {
        const auto ebn0 = parse_number_list(a.ebn0);
        std::vector<std::string> vals;
        if (axis == SweepAxis::ChannelModel)
            vals = a.values.empty() ? std::vector<std::string>{"NTN-TDL-A", "NTN-TDL-C"} : split_list(a.values);
        else
            for (double v : parse_number_list(a.values.empty() ? (axis == SweepAxis::ModOrder ? "4,16,64" : "5")
                                                               : a.values))
                vals.push_back(format_value(v));
        for (const auto& v : vals) {
            ScenarioConfig cfg = base;
            std::string label;
            switch (axis) {
                case SweepAxis::UeSpeed:
                    cfg.ue_speed_kmh = std::stod(v);
                    label = v + " km/h";
                    break;
                case SweepAxis::ModOrder:
                    cfg.data_mod_order = std::stoi(v);
                    label = (v == "4" ? std::string("QPSK") : v + "-QAM");
                    break;
                default:
                    cfg.channel_profile = v;
                    label = v;
                    break;
            }
            if (trained.empty()) {
                run_series(cfg, model.get(), label, ebn0);
                continue;
            }
            for (const auto& [train_label, path] : trained) {
                const auto m = load_model(path);
                run_series(cfg, m.get(), v + " (" + train_label + ")", ebn0);
            }
        }
    }

    const fs::path out(c.out_dir);
    const fs::path csv = out / a.csv_name;
    write_file_atomic(csv, metrics_csv(records));
    man.artifacts.push_back(csv);
    for (const auto& p : write_metric_plots(out / "plots", records)) man.artifacts.push_back(p);

    man.config = to_json(base);
    man.config["axis"] = std::string(to_string(axis));
    man.config["values"] = a.values;
    man.config["ebn0"] = a.ebn0;
    for (const auto& [l, p] : trained) man.config["training_checkpoints"][l] = p.generic_string();
    man.seeds = {{"master", base.seed}};
    for (const auto& r : records)
        for (const auto& w : r.warnings)
            if (std::find(man.warnings.begin(), man.warnings.end(), w) == man.warnings.end()) man.warnings.push_back(w);
    for (const auto& w : man.warnings) std::cerr << "warning: " << w << "\n";
    man.wall_time_s = seconds_since(t0);
    man.write(out / "eval_manifest.json");
    std::cout << csv.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct ComplexityArgs {
    bool default_arch = false;
    std::string arch;
    std::string checkpoint;
    bool assert_paper = false;
    std::string json_out;
};

int cmd_complexity(const ComplexityArgs& a, const Common& c) {
    const auto t0 = std::chrono::steady_clock::now();
    RunManifest man;
    man.command = "complexity";
    man.started_utc = utc_timestamp();

    ComplexityReport rep;
    if (!a.arch.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(a.arch));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(a.arch + ": " + e.what());
        }
        const auto [arch, shapes] = architecture_from_json(j);
        rep = complexity_report(arch, shapes);
        man.config = {{"arch", a.arch}};
    } else if (!a.checkpoint.empty()) {
        rep = complexity_report(model_from_checkpoint(load_checkpoint(a.checkpoint)));
        man.config = {{"checkpoint", a.checkpoint}};
    } else {
        rep = complexity_report(default_architecture(), default_layer_inputs());
        man.config = {{"default_arch", true}};
    }

    std::cout << rep.table();
    const fs::path json_path = a.json_out.empty() ? fs::path(c.out_dir) / "complexity.json" : fs::path(a.json_out);
    write_file_atomic(json_path, rep.to_json().dump(2) + "\n");
    man.artifacts.push_back(json_path);
    man.wall_time_s = seconds_since(t0);
    man.write(fs::path(c.out_dir) / "complexity_manifest.json");

    if (a.assert_paper &&
        (rep.total_multiplications != kPaperMultiplications || rep.trainable_params != kPaperParameters)) {
        std::cerr << "complexity mismatch: expected " << kPaperMultiplications << " multiplications and "
                  << kPaperParameters << " parameters\n";
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Uplink OFDM link simulator with a CNN-LSTM channel predictor", "ntnpred"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    common.out_dir = default_out_dir();
    app.add_option("--threads", common.threads, "Worker threads (0 = OpenMP default; 1 = bit-reproducible)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--out", common.out_dir,
                   std::string("Output directory (default: $") + kOutputDirEnv + " or ./ntnpred_out)");
    app.add_flag("--quiet", common.quiet, "Suppress progress output");

    TrainArgs ta;
    auto* train_cmd = app.add_subcommand("train", "Train the predictor and write a checkpoint");
    train_cmd->add_option("--config", ta.config, "Config file with [train] and [train.lr_schedule] sections")
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--epochs", ta.epochs, "Override train.max_epochs")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--batch", ta.batch, "Override train.batch_size")->check(CLI::PositiveNumber);
    train_cmd->add_option("--steps", ta.steps, "Override train.steps_per_epoch")->check(CLI::PositiveNumber);
    train_cmd->add_option("--seed", ta.seed, "Override train.seed")->check(CLI::NonNegativeNumber);
    train_cmd->add_option("--checkpoint", ta.checkpoint, "Checkpoint path (default: <out>/model.ckpt)");

    EvalArgs ea;
    auto* eval_cmd = app.add_subcommand("eval", "Monte Carlo link evaluation and plots");
    eval_cmd->add_option("--config", ea.config, "Config file with a [scenario] section")->check(CLI::ExistingFile);
    eval_cmd->add_option("--checkpoint", ea.checkpoint, "Predictor checkpoint (persistence fallback when absent)");
    eval_cmd->add_option("--axis", ea.axis, "Sweep axis: ebn0, speed, channel or mod")
        ->check(CLI::IsMember({"ebn0", "speed", "channel", "mod"}));
    eval_cmd->add_option("--values", ea.values,
                         "Axis values: start:stop:step or a comma list (profile names for --axis channel)");
    eval_cmd->add_option("--ebn0", ea.ebn0, "Eb/N0 grid in dB for every curve")->capture_default_str();
    eval_cmd->add_option("--iterations", ea.iterations, "Override scenario.max_iterations")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--min-block-errors", ea.min_block_errors, "Override scenario.min_block_errors")
        ->check(CLI::NonNegativeNumber);
    eval_cmd->add_option("--seed", ea.seed, "Override scenario.seed")->check(CLI::NonNegativeNumber);
    eval_cmd->add_flag("--perfect-csi", ea.perfect_csi, "Equalize both branches with the true channel");
    eval_cmd->add_option("--train-ckpt-a", ea.train_ckpt_a, "Checkpoint trained on NTN-TDL-A (channel grid)");
    eval_cmd->add_option("--train-ckpt-c", ea.train_ckpt_c, "Checkpoint trained on NTN-TDL-C (channel grid)");
    eval_cmd->add_option("--train-ckpt", ea.train_ckpts, "Extra training checkpoint as LABEL=PATH (repeatable)");
    eval_cmd->add_option("--csv", ea.csv_name, "CSV file name inside the output directory")->capture_default_str();

    ComplexityArgs ca;
    auto* cx_cmd = app.add_subcommand("complexity", "Multiplications and parameters per layer");
    cx_cmd->add_flag("--default-arch", ca.default_arch, "Use the built-in seven-layer architecture (default)");
    cx_cmd->add_option("--arch", ca.arch, "Architecture JSON file")->check(CLI::ExistingFile);
    cx_cmd->add_option("--checkpoint", ca.checkpoint, "Architecture from a checkpoint");
    cx_cmd->add_flag("--assert-paper", ca.assert_paper, "Exit 1 unless totals are 156576 and 5806");
    cx_cmd->add_option("--json", ca.json_out, "JSON output path (default: <out>/complexity.json)");

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    try {
        apply_threads(common);
        if (*train_cmd) return cmd_train(ta, common);
        if (*eval_cmd) return cmd_eval(ea, common);
        if (*cx_cmd) {
            if (ca.default_arch + !ca.arch.empty() + !ca.checkpoint.empty() > 1)
                throw ConfigError("choose one of --default-arch, --arch, --checkpoint");
            return cmd_complexity(ca, common);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const CheckpointMismatch& e) {
        std::cerr << "checkpoint mismatch: " << e.what() << "\n";
        return kExitCheckpoint;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}

int run_cli(int argc, char** argv) { return run_cli(std::vector<std::string>(argv, argv + argc)); }

}  // namespace ntnpred
