// SPDX-License-Identifier: Apache-2.0
// wdmlab CLI: simulate | train | evaluate | sweep | complexity | align | import
#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>

#include "wdmlab/harness.hpp"

using namespace wdmlab;

namespace {

std::string out_path(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    return (std::filesystem::path(dir) / name).string();
}

Seed point_seed_for(const harness::ExperimentConfig& cfg, double power) {
    for (size_t i = 0; i < cfg.powers_dbm.size(); ++i)
        if (std::abs(cfg.powers_dbm[i] - power) < 1e-9) return derive_seed(cfg.seed, uint32_t(i));
    return derive_seed(cfg.seed, 0);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"wdmlab: coherent WDM transmission laboratory"};
    app.require_subcommand(1);

    std::string config_path, preset = "desk", out_dir = ".";
    long long seed_override = -1;
    int jobs = 1;
    app.add_option("--config", config_path, "experiment config (JSON)");
    app.add_option("--seed", seed_override, "override config seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--preset", preset, "scale preset")
        ->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

    double power = std::numeric_limits<double>::quiet_NaN();
    int m_channels = 1;
    std::string cap_a, cap_b, import_path;
    analysis::AlignConfig acfg;

    auto* sim = app.add_subcommand("simulate", "propagate one sweep point, export captures");
    sim->add_option("--power", power, "launch power dBm (default: first sweep power)");

    auto* trn = app.add_subcommand("train", "train a bi-VRNN equalizer at one power");
    trn->add_option("--power", power, "launch power dBm");
    trn->add_option("-m,--channels", m_channels, "input channels (odd)");

    auto* evl = app.add_subcommand("evaluate", "score configured equalizers at one power");
    evl->add_option("--power", power, "launch power dBm");

    auto* swp = app.add_subcommand("sweep", "full power sweep, CSV + manifest out");

    auto* cpx = app.add_subcommand("complexity", "multiplications-per-symbol tables");

    auto* aln = app.add_subcommand("align", "brute-force inter-lane alignment");
    aln->add_option("a", cap_a, "capture A")->required();
    aln->add_option("b", cap_b, "capture B")->required();
    aln->add_option("--radius", acfg.search_radius, "max |shift| searched");
    aln->add_option("--coarse", acfg.coarse_step, "coarse stage step");
    aln->add_option("--fine", acfg.fine_step, "fine stage step");
    aln->add_option("--threshold", acfg.dip_threshold, "dip depth for a detection");

    auto* imp = app.add_subcommand("import", "parse and summarize a capture");
    imp->add_option("path", import_path, "capture file")->required();

    // global flags may appear after the verb
    for (auto* sc : {sim, trn, evl, swp, cpx, aln, imp}) sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*aln) {
            const harness::Capture a = harness::import_capture(cap_a);
            const harness::Capture b = harness::import_capture(cap_b);
            acfg.jobs = jobs;
            const auto run = harness::run_align(a, b, acfg);
            harness::write_file(out_path(out_dir, "align.csv"), run.csv);
            if (run.result.found)
                std::printf("alignment found: shift=%d value=%.6g dip=%.3f\n",
                            run.result.best_shift, run.result.best_value,
                            run.result.dip_depth);
            else
                std::printf("no alignment found (dip=%.3f)\n", run.result.dip_depth);
            return 0;
        }
        if (*imp) {
            const harness::Capture cap = harness::import_capture(import_path);
            std::printf("capture: %zu lanes x %zu symbols, %.6g Bd, %s\n", cap.lanes.size(),
                        cap.lanes.empty() ? size_t(0) : cap.lanes[0].size(), cap.baud_hz,
                        cap.constellation.c_str());
            for (size_t i = 0; i < cap.lanes.size(); ++i)
                std::printf("  lane %zu mean power %.6g\n", i,
                            sigkit::mean_power(cap.lanes[i]));
            return 0;
        }

        harness::ExperimentConfig cfg = config_path.empty()
                                            ? harness::preset_config(preset)
                                            : harness::load_config(config_path);
        if (seed_override >= 0) cfg.seed = Seed(seed_override);
        cfg.validate();
        const double p = std::isnan(power) ? cfg.powers_dbm.front() : power;
        const Seed ps = point_seed_for(cfg, p);

        if (*sim) {
            const auto pt = harness::simulate_point(cfg, p, ps, false);
            const int ch = cfg.central_channel();
            harness::Capture rx, txc;
            rx.lanes = pt.fde_lanes[size_t(ch)];
            rx.baud_hz = cfg.txspec.baud;
            rx.constellation = cfg.constellation;
            txc.lanes = pt.tx_lanes[size_t(ch)];
            txc.baud_hz = cfg.txspec.baud;
            txc.constellation = cfg.constellation;
            harness::export_capture(rx, out_path(out_dir, "rx_central.csv"));
            harness::export_capture(txc, out_path(out_dir, "tx_central.csv"));
            std::printf("simulated %.3g dBm, central channel %d, %zu symbols/lane\n", p, ch,
                        rx.lanes[0].size());
        } else if (*trn) {
            const auto pt = harness::simulate_point(cfg, p, ps, false);
            const auto ev = harness::run_bivrnn(cfg, pt, m_channels, ps);
            char name[64];
            std::snprintf(name, sizeof name, "bivrnn_%dch.json", m_channels);
            rnn::save_checkpoint(ev.trained.model, cfg.train, cfg.window,
                                 out_path(out_dir, name));
            std::string loss = "epoch,train_mse,val_mse\n";
            char buf[96];
            for (size_t e = 0; e < ev.trained.train_mse.size(); ++e) {
                std::snprintf(buf, sizeof buf, "%zu,%.10g,%.10g\n", e,
                              ev.trained.train_mse[e], ev.trained.val_mse[e]);
                loss += buf;
            }
            std::snprintf(name, sizeof name, "loss_%dch.csv", m_channels);
            harness::write_file(out_path(out_dir, name), loss);
            std::printf("trained %d-ch model: best epoch %d, val mse %.6g\n", m_channels,
                        ev.trained.best_epoch,
                        ev.trained.val_mse[size_t(ev.trained.best_epoch)]);
        } else if (*evl) {
            const bool want_dbp = std::find(cfg.equalizers.begin(), cfg.equalizers.end(),
                                            "dbp") != cfg.equalizers.end();
            const auto pt = harness::simulate_point(cfg, p, ps, want_dbp);
            const auto rows = harness::evaluate_point(cfg, pt, ps);
            const std::string csv = harness::rows_to_csv(rows);
            harness::write_file(out_path(out_dir, "results.csv"), csv);
            std::fputs(csv.c_str(), stdout);
        } else if (*swp) {
            const auto res = harness::run_sweep(cfg, jobs);
            harness::write_file(out_path(out_dir, "sweep.csv"),
                                harness::rows_to_csv(res.rows));
            harness::write_file(out_path(out_dir, "manifest.json"),
                                res.manifest.dump(2) + "\n");
            for (const auto& pt : res.manifest["points"])
                std::printf("%+.3g dBm: %s\n", pt["power_dbm"].get<double>(),
                            pt["status"].get<std::string>().c_str());
        } else if (*cpx) {
            const auto rows = harness::run_complexity(cfg);
            const std::string csv = harness::complexity_to_csv(rows);
            harness::write_file(out_path(out_dir, "complexity.csv"), csv);
            std::fputs(csv.c_str(), stdout);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
