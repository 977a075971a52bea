// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "wdmlab/harness.hpp"
#include "wdmlab/rng.hpp"

using namespace wdmlab;
namespace fs = std::filesystem;

namespace {

harness::Capture small_capture(Seed seed, size_t lanes, size_t n) {
    Rng rng(seed);
    harness::Capture cap;
    cap.baud_hz = 16e9;
    cap.constellation = "16qam";
    cap.lanes.assign(lanes, SymbolStream());
    for (auto& lane : cap.lanes) {
        lane.reserve(n);
        for (size_t k = 0; k < n; ++k) lane.emplace_back(rng.gaussian(), rng.gaussian());
    }
    return cap;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(bool(in));
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

/// Shared test scale: one channel, two short spans, three tiny splits. The
/// point is to exercise every code path of the sweep, not the physics.
harness::ExperimentConfig tiny_config() {
    harness::ExperimentConfig cfg = harness::preset_config("desk");
    cfg.grid.n_channels = 1;
    cfg.link.n_spans = 2;
    cfg.ssfm.step_km = 0.5;
    cfg.powers_dbm = {0.0, 2.0};
    cfg.equalizers = {"none", "linreg", "bivrnn-1ch"};
    cfg.train.epochs = 2;
    cfg.train.batch_words = 4;
    cfg.n_train = 200;
    cfg.n_val = 100;
    cfg.n_test = 200;
    cfg.seed = 77;
    return cfg;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(WDMLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return (rc >> 8) & 0xff;
}

}  // namespace

TEST_CASE("capture export/import round trip is bit exact") {
    const auto cap = small_capture(42, 3, 157);
    const std::string path = "cap_roundtrip.csv";
    harness::export_capture(cap, path);
    const auto back = harness::import_capture(path);
    std::remove(path.c_str());

    CHECK(back.lanes.size() == cap.lanes.size());
    CHECK(back.baud_hz == cap.baud_hz);
    CHECK(back.constellation == cap.constellation);
    for (size_t l = 0; l < cap.lanes.size(); ++l) {
        REQUIRE(back.lanes[l].size() == cap.lanes[l].size());
        for (size_t k = 0; k < cap.lanes[l].size(); ++k) {
            CHECK(back.lanes[l][k].real() == cap.lanes[l][k].real());
            CHECK(back.lanes[l][k].imag() == cap.lanes[l][k].imag());
        }
    }
}

TEST_CASE("export_capture validates its input") {
    harness::Capture cap;
    CHECK_THROWS_AS(harness::export_capture(cap, "never.csv"), ConfigError);

    cap = small_capture(1, 2, 8);
    cap.lanes[1].pop_back();
    CHECK_THROWS_AS(harness::export_capture(cap, "never.csv"), ConfigError);

    cap = small_capture(1, 1, 8);
    cap.baud_hz = 0.0;
    CHECK_THROWS_AS(harness::export_capture(cap, "never.csv"), ConfigError);

    cap = small_capture(1, 1, 8);
    cap.constellation.clear();
    CHECK_THROWS_AS(harness::export_capture(cap, "never.csv"), ConfigError);
}

TEST_CASE("import_capture rejects corrupt files with ParseError") {
    const std::string path = "cap_corrupt.csv";
    auto write = [&](const std::string& text) {
        std::ofstream out(path, std::ios::binary);
        out << text;
    };
    const std::string header = "#wdm-capture v1; lanes=2; baud=16e9; constellation=qpsk\n";

    write("");
    CHECK_THROWS_AS(harness::import_capture(path), ParseError);

    write("#something-else v1; lanes=1; baud=1; constellation=qpsk\n0,1,2\n");
    CHECK_THROWS_AS(harness::import_capture(path), ParseError);

    write("#wdm-capture v1; baud=16e9; constellation=qpsk\n0,1,2\n");
    CHECK_THROWS_AS(harness::import_capture(path), ParseError);

    write("#wdm-capture v1; lanes=0; baud=16e9; constellation=qpsk\n0,1,2\n");
    CHECK_THROWS_AS(harness::import_capture(path), ParseError);

    write("#wdm-capture v1; lanes=1; baud=-4; constellation=qpsk\n0,1,2\n");
    CHECK_THROWS_AS(harness::import_capture(path), ParseError);

    // index out of order
    write(header + "0,1,2,3,4\n2,1,2,3,4\n");
    CHECK_THROWS_AS(harness::import_capture(path), ParseError);

    // truncated row: second lane lost its Q column
    write(header + "0,1,2,3,4\n1,1,2,3\n");
    CHECK_THROWS_AS(harness::import_capture(path), ParseError);

    // trailing garbage after the last lane
    write(header + "0,1,2,3,4,zzz\n");
    CHECK_THROWS_AS(harness::import_capture(path), ParseError);

    // header only, no rows
    write(header);
    CHECK_THROWS_AS(harness::import_capture(path), ParseError);

    std::remove(path.c_str());
    CHECK_THROWS_AS(harness::import_capture("no_such_capture_file.csv"), ParseError);
}

TEST_CASE("config json round trip preserves the hash") {
    for (const char* name : {"desk", "paper"}) {
        const auto cfg = harness::preset_config(name);
        const auto back = harness::config_from_json(harness::config_to_json(cfg));
        CHECK(harness::config_hash(back) == harness::config_hash(cfg));
    }

    auto cfg = harness::preset_config("desk");
    const std::string h0 = harness::config_hash(cfg);
    cfg.txspec.rolloff = 0.2;
    CHECK(harness::config_hash(cfg) != h0);

    CHECK_THROWS_AS(harness::preset_config("pocket"), ConfigError);
}

TEST_CASE("load_config applies overrides on top of the preset") {
    const std::string path = "cfg_override.json";
    {
        std::ofstream out(path);
        out << R"({"preset": "desk",
                   "tx": {"constellation": "16qam"},
                   "sweep": {"powers_dbm": [1.5], "equalizers": ["none"]},
                   "rnn": {"batch_words": 8, "epochs": 3},
                   "splits": {"train": 300, "val": 100, "test": 200},
                   "seed": 99})";
    }
    const auto cfg = harness::load_config(path);
    std::remove(path.c_str());
    CHECK(cfg.constellation == "16qam");
    CHECK(cfg.powers_dbm == std::vector<double>{1.5});
    CHECK(cfg.equalizers == std::vector<std::string>{"none"});
    CHECK(cfg.train.batch_words == 8);
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.n_train == 300);
    CHECK(cfg.seed == 99);
    // untouched fields keep the preset values
    CHECK(cfg.grid.n_channels == 3);
    CHECK(cfg.link.n_spans == 8);

    CHECK_THROWS_AS(harness::load_config("no_such_config.json"), ConfigError);

    {
        std::ofstream out(path);
        out << "{ not json";
    }
    CHECK_THROWS_AS(harness::load_config(path), ParseError);
    std::remove(path.c_str());

    nlohmann::json bad;
    bad["sweep"]["powers_dbm"] = "three";
    CHECK_THROWS_AS(harness::config_from_json(bad), ParseError);

    nlohmann::json vnext;
    vnext["schema_version"] = 2;
    CHECK_THROWS_AS(harness::config_from_json(vnext), ConfigError);
}

TEST_CASE("validate rejects out-of-contract configs") {
    auto base = harness::preset_config("desk");
    base.validate();  // sanity: the preset itself is fine

    auto expect_reject = [&](auto&& mutate) {
        auto cfg = base;
        mutate(cfg);
        CHECK_THROWS_AS(cfg.validate(), ConfigError);
    };
    expect_reject([](auto& c) { c.constellation = "qam1024"; });
    expect_reject([](auto& c) { c.n_pol = 3; });
    expect_reject([](auto& c) { c.txspec.rolloff = 0.0; });
    expect_reject([](auto& c) { c.txspec.filter_span = 17; });
    expect_reject([](auto& c) { c.grid.n_channels = 2; });
    expect_reject([](auto& c) { c.link.n_spans = 0; });
    expect_reject([](auto& c) { c.ssfm.step_km = 0.0; });
    expect_reject([](auto& c) { c.powers_dbm.clear(); });
    expect_reject([](auto& c) { c.window.window_len = 50; });
    expect_reject([](auto& c) { c.window.edge_discard = 30; });
    expect_reject([](auto& c) { c.train.epochs = 0; });
    expect_reject([](auto& c) { c.train.batch_words = 0; });
    expect_reject([](auto& c) { c.dbp.sps = 1; });
    expect_reject([](auto& c) { c.n_train = 10; });
    expect_reject([](auto& c) { c.equalizers = {"fourier"}; });
    expect_reject([](auto& c) { c.equalizers = {"bivrnn-2ch"}; });
    expect_reject([](auto& c) { c.equalizers = {"bivrnn-5ch"}; });  // wider than the grid
}

TEST_CASE("tiny sweep is reproducible and thread-count invariant") {
    const auto cfg = tiny_config();
    const auto r1 = harness::run_sweep(cfg, 1);
    const auto r2 = harness::run_sweep(cfg, 1);
    const auto r4 = harness::run_sweep(cfg, 2);

    REQUIRE_FALSE(r1.rows.empty());
    const std::string csv1 = harness::rows_to_csv(r1.rows);
    CHECK(csv1 == harness::rows_to_csv(r2.rows));
    CHECK(csv1 == harness::rows_to_csv(r4.rows));
    CHECK(r1.manifest["config_hash"] == r2.manifest["config_hash"]);
    for (const auto& pt : r1.manifest["points"])
        CHECK(pt["status"].get<std::string>() == "ok");

    // none/linreg/bivrnn-1ch on one channel, two pols and two powers
    CHECK(r1.rows.size() == 12);
    // the central window drops edge symbols, so never more bits than "none"
    CHECK(r1.manifest["central_channel"].get<int>() == 0);
}

TEST_CASE("sweep isolates a failing point and keeps the rest") {
    auto cfg = tiny_config();
    cfg.equalizers = {"none"};
    cfg.powers_dbm = {0.0, std::nan("")};
    const auto res = harness::run_sweep(cfg, 1);

    REQUIRE(res.manifest["points"].size() == 2);
    CHECK(res.manifest["points"][0]["status"].get<std::string>() == "ok");
    CHECK(res.manifest["points"][1]["status"].get<std::string>() == "error");
    CHECK_FALSE(res.manifest["points"][1]["error"].get<std::string>().empty());
    // rows only from the surviving point
    CHECK(res.rows.size() == 2);
    for (const auto& row : res.rows) CHECK(row.power_dbm == 0.0);
}

TEST_CASE("result and complexity CSV formats are stable") {
    harness::ResultRow row;
    row.power_dbm = 2.0;
    row.equalizer = "none";
    row.channel = 1;
    row.pol = 'y';
    row.ber = 0.00125;
    row.evm_db = -17.25;
    row.n_bits = 120000;
    CHECK(harness::rows_to_csv({row}) ==
          "power_dbm,equalizer,channel,pol,ber,evm_db,n_bits\n"
          "2,none,1,y,0.00125,-17.25,120000\n");

    const auto rows = harness::run_complexity(harness::preset_config("desk"));
    bool saw_m3 = false, saw_fde = false, saw_dbp = false;
    for (const auto& r : rows) {
        if (r.kind == "bivrnn" && r.m == 3 && r.n_pol == 2 && r.h == 18) {
            CHECK(r.value == 313.0);
            saw_m3 = true;
        }
        if (r.kind == "fde") {
            CHECK(r.value == 81.0);
            saw_fde = true;
        }
        if (r.kind == "dbp_per_bit") {
            CHECK(std::abs(r.value - 1943.964758) < 1e-5);
            saw_dbp = true;
        }
    }
    CHECK(saw_m3);
    CHECK(saw_fde);
    CHECK(saw_dbp);
    const std::string csv = harness::complexity_to_csv(rows);
    CHECK(csv.rfind("kind,", 0) == 0);
}

TEST_CASE("run_align recovers a planted offset between captures") {
    const auto& c = sigkit::Constellation::qam16();
    const size_t n = 8000;
    const int delay = 97;
    auto a0 = sigkit::prng_symbols(5, n, c);
    auto b_true = sigkit::prng_symbols(6, n, c);

    std::vector<double> p(n), smeared(n, 0.0);
    for (size_t k = 0; k < n; ++k) p[k] = std::norm(b_true[k]);
    for (size_t k = 0; k < n; ++k)
        for (int j = -3; j <= 3; ++j)
            smeared[k] += (4.0 - std::abs(j)) / 16.0 * p[(k + n + size_t(j + int(n))) % n];
    double mean_p = 0.0;
    for (double v : smeared) mean_p += v;
    mean_p /= double(n);

    harness::Capture a, b;
    a.baud_hz = b.baud_hz = 16e9;
    a.constellation = b.constellation = "16qam";
    a.lanes.assign(1, SymbolStream(n));
    b.lanes.assign(1, SymbolStream(n));
    for (size_t k = 0; k < n; ++k) {
        a.lanes[0][k] = a0[k] * std::polar(1.0, 0.15 * (smeared[k] - mean_p));
        b.lanes[0][k] = b_true[(k + n - size_t(delay)) % n];
    }

    analysis::AlignConfig acfg;
    acfg.search_radius = 300;
    const auto run = harness::run_align(a, b, acfg);
    CHECK(run.result.found);
    CHECK(run.result.best_shift == delay);
    CHECK(run.csv.rfind("shift,ber\n", 0) == 0);

    harness::Capture empty;
    CHECK_THROWS_AS(harness::run_align(empty, b, acfg), ConfigError);
}

TEST_CASE("cli maps error classes to exit codes") {
    const fs::path dir = "cli_exit_codes";
    fs::create_directories(dir);

    // 2: config errors (missing file, bad schema value)
    CHECK(run_cli("sweep --config no_such_file.json") == 2);
    {
        std::ofstream out(dir / "bad_equalizer.json");
        out << R"({"preset": "desk", "sweep": {"equalizers": ["fourier"]}})";
    }
    CHECK(run_cli("sweep --config " + (dir / "bad_equalizer.json").string()) == 2);

    // 4: parse errors (malformed JSON, malformed capture)
    {
        std::ofstream out(dir / "broken.json");
        out << "{ nope";
    }
    CHECK(run_cli("sweep --config " + (dir / "broken.json").string()) == 4);
    {
        std::ofstream out(dir / "broken_capture.csv");
        out << "#not-a-capture\n0,1,2\n";
    }
    CHECK(run_cli("import " + (dir / "broken_capture.csv").string()) == 4);

    // 0: success paths
    CHECK(run_cli("complexity --out " + (dir / "cpx").string()) == 0);
    CHECK(fs::exists(dir / "cpx" / "complexity.csv"));
    {
        const auto cap = small_capture(3, 2, 16);
        harness::export_capture(cap, (dir / "ok_capture.csv").string());
    }
    CHECK(run_cli("import " + (dir / "ok_capture.csv").string()) == 0);

    fs::remove_all(dir);
}

TEST_CASE("cli surfaces a numeric blow-up as exit code 3") {
    const fs::path dir = "cli_numeric";
    fs::create_directories(dir);
    {
        // An absurd learning rate drives the loss to infinity on epoch two.
        nlohmann::json j;
        j["preset"] = "desk";
        j["tx"] = {{"n_channels", 1}};
        j["link"] = {{"n_spans", 2}, {"step_km", 0.5}};
        j["sweep"] = {{"powers_dbm", {2.0}}, {"equalizers", {"bivrnn-1ch"}}};
        j["rnn"] = {{"epochs", 2}, {"batch_words", 4}, {"lr", 1e300}};
        j["splits"] = {{"train", 200}, {"val", 100}, {"test", 200}};
        std::ofstream out(dir / "diverge.json");
        out << j.dump();
    }
    CHECK(run_cli("evaluate --config " + (dir / "diverge.json").string() + " --out " +
                  (dir / "out").string()) == 3);
    fs::remove_all(dir);
}
