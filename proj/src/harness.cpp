// SPDX-License-Identifier: Apache-2.0
#include "wdmlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace wdmlab::harness {

int ExperimentConfig::sim_sps() const {
    if (txspec.sps_sim > 0) return txspec.sps_sim;
    return tx::auto_sps(grid, txspec.baud, txspec.rolloff);
}

namespace {

int bivrnn_m(const std::string& name) {
    // bivrnn-<m>ch
    if (name.rfind("bivrnn-", 0) != 0 || name.size() < 9) return -1;
    const std::string mid = name.substr(7, name.size() - 9);
    if (name.substr(name.size() - 2) != "ch" || mid.empty()) return -1;
    for (char ch : mid)
        if (!std::isdigit(static_cast<unsigned char>(ch))) return -1;
    return std::stoi(mid);
}

}  // namespace

void ExperimentConfig::validate() const {
    sigkit::Constellation::by_name(constellation);
    if (n_pol != 1 && n_pol != 2) throw ConfigError("config: n_pol must be 1 or 2");
    if (txspec.baud <= 0.0) throw ConfigError("config: baud must be positive");
    if (txspec.rolloff < 1e-3 || txspec.rolloff > 1.0)
        throw ConfigError("config: rolloff out of range [1e-3, 1]");
    if (txspec.filter_span < 16 || txspec.filter_span % 2 != 0)
        throw ConfigError("config: filter_span must be even and >= 16");
    if (grid.n_channels < 1 || grid.n_channels % 2 == 0)
        throw ConfigError("config: n_channels must be odd");
    if (grid.n_channels > 1 && grid.spacing_hz <= 0.0)
        throw ConfigError("config: spacing must be positive");
    if (link.fiber.alpha_db_km < 0.0) throw ConfigError("config: alpha must be >= 0");
    if (link.fiber.length_km <= 0.0) throw ConfigError("config: span length must be positive");
    if (link.n_spans < 1) throw ConfigError("config: n_spans must be >= 1");
    if (ssfm.step_km <= 0.0) throw ConfigError("config: step_km must be positive");
    if (powers_dbm.empty()) throw ConfigError("config: sweep needs at least one power");
    if (window.window_len < 1 || window.window_len % 2 == 0 || window.l_eff() < 1)
        throw ConfigError("config: bad window spec");
    if (hidden_1ch < 1 || hidden_mch < 1) throw ConfigError("config: hidden units must be >= 1");
    if (train.epochs < 1 || train.batch_words == 0)
        throw ConfigError("config: bad training config");
    if (dbp.steps_per_span < 1 || dbp.sps < 2 || dbp.n_channels_backprop < 1 ||
        dbp.n_channels_backprop % 2 == 0 || dbp.n_channels_backprop > grid.n_channels)
        throw ConfigError("config: bad dbp config");
    const size_t min_split = size_t(window.window_len);
    if (n_train < min_split || n_val < min_split || n_test < min_split)
        throw ConfigError("config: splits must each cover at least one window");
    for (const auto& eq : equalizers) {
        if (eq == "none" || eq == "linreg" || eq == "dbp") continue;
        const int m = bivrnn_m(eq);
        if (m < 1 || m % 2 == 0 || m > grid.n_channels)
            throw ConfigError("config: unknown equalizer '" + eq + "'");
    }
}

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig cfg;
    if (name == "desk") {
        cfg.preset = "desk";
        cfg.constellation = "16qam";
        cfg.txspec.baud = 16e9;
        cfg.txspec.rolloff = 0.1;
        cfg.txspec.filter_span = 32;
        cfg.txspec.sps_sim = 0;
        cfg.grid.n_channels = 3;
        cfg.grid.spacing_hz = 20e9;
        cfg.link.fiber = {0.2, -20.0, 1.3, 50.0};
        cfg.link.n_spans = 8;
        cfg.link.nf_db = 5.0;
        cfg.ssfm.step_km = 0.1;
        cfg.powers_dbm = {0.0, 2.0, 4.0, 6.0};
        cfg.equalizers = {"none", "linreg", "bivrnn-1ch", "bivrnn-3ch"};
        cfg.window = {51, 5};
        cfg.hidden_1ch = 16;
        cfg.hidden_mch = 18;
        // 731 train words / 8 per batch keeps Adam fed with enough steps to
        // converge inside the pinned 200 epochs.
        cfg.train.batch_words = 8;
        cfg.train.epochs = 200;
        cfg.dbp = {20, 4, 1};
        cfg.n_train = 30000;
        cfg.n_val = 10000;
        cfg.n_test = 30000;
    } else if (name == "paper") {
        cfg.preset = "paper";
        cfg.constellation = "qam16";
        cfg.txspec.baud = 64e9;
        cfg.txspec.rolloff = 0.1;
        cfg.txspec.filter_span = 32;
        cfg.txspec.sps_sim = 0;
        cfg.grid.n_channels = 9;
        cfg.grid.spacing_hz = 75e9;
        cfg.link.fiber = {0.2, -20.0, 1.3, 50.0};
        cfg.link.n_spans = 24;
        cfg.link.nf_db = 5.0;
        cfg.ssfm.step_km = 0.1;
        cfg.powers_dbm = {-8.0, -6.0, -4.0, -2.0, 0.0};
        cfg.equalizers = {"none", "linreg", "bivrnn-1ch", "bivrnn-3ch", "dbp"};
        cfg.window = {51, 5};
        cfg.hidden_1ch = 16;
        cfg.hidden_mch = 18;
        cfg.train.batch_words = 512;
        cfg.train.epochs = 2000;
        cfg.dbp = {20, 4, 3};
        cfg.n_train = 100000;
        cfg.n_val = 50000;
        cfg.n_test = 100000;
    } else {
        throw ConfigError("preset_config: unknown preset '" + name + "'");
    }
    return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = cfg.schema_version;
    j["preset"] = cfg.preset;
    j["tx"] = {{"constellation", cfg.constellation}, {"n_pol", cfg.n_pol},
               {"baud_hz", cfg.txspec.baud},         {"rolloff", cfg.txspec.rolloff},
               {"filter_span", cfg.txspec.filter_span}, {"sps_sim", cfg.txspec.sps_sim},
               {"n_channels", cfg.grid.n_channels},  {"spacing_hz", cfg.grid.spacing_hz}};
    j["link"] = {{"alpha_db_km", cfg.link.fiber.alpha_db_km},
                 {"beta2_ps2_km", cfg.link.fiber.beta2_ps2_km},
                 {"gamma_w_km", cfg.link.fiber.gamma_w_km},
                 {"span_km", cfg.link.fiber.length_km},
                 {"n_spans", cfg.link.n_spans},
                 {"nf_db", cfg.link.nf_db},
                 {"center_wavelength_nm", cfg.link.center_wavelength_nm},
                 {"step_km", cfg.ssfm.step_km},
                 {"noiseless", cfg.noiseless}};
    j["sweep"] = {{"powers_dbm", cfg.powers_dbm}, {"equalizers", cfg.equalizers}};
    j["rnn"] = {{"window_len", cfg.window.window_len},
                {"edge_discard", cfg.window.edge_discard},
                {"hidden_1ch", cfg.hidden_1ch},
                {"hidden_mch", cfg.hidden_mch},
                {"epochs", cfg.train.epochs},
                {"batch_words", cfg.train.batch_words},
                {"lr", cfg.train.lr},
                {"beta1", cfg.train.beta1},
                {"beta2", cfg.train.beta2},
                {"eps", cfg.train.eps},
                {"clip_norm", cfg.train.clip_norm}};
    j["dbp"] = {{"steps_per_span", cfg.dbp.steps_per_span}, {"sps", cfg.dbp.sps},
                {"n_channels_backprop", cfg.dbp.n_channels_backprop}};
    j["splits"] = {{"train", cfg.n_train}, {"val", cfg.n_val}, {"test", cfg.n_test}};
    j["seed"] = cfg.seed;
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    try {
        ExperimentConfig cfg = preset_config(j.value("preset", "desk"));
        if (j.contains("schema_version") && j["schema_version"].get<int>() != 1)
            throw ConfigError("config: unsupported schema_version");
        if (j.contains("tx")) {
            const auto& t = j["tx"];
            cfg.constellation = t.value("constellation", cfg.constellation);
            cfg.n_pol = t.value("n_pol", cfg.n_pol);
            cfg.txspec.baud = t.value("baud_hz", cfg.txspec.baud);
            cfg.txspec.rolloff = t.value("rolloff", cfg.txspec.rolloff);
            cfg.txspec.filter_span = t.value("filter_span", cfg.txspec.filter_span);
            cfg.txspec.sps_sim = t.value("sps_sim", cfg.txspec.sps_sim);
            cfg.grid.n_channels = t.value("n_channels", cfg.grid.n_channels);
            cfg.grid.spacing_hz = t.value("spacing_hz", cfg.grid.spacing_hz);
        }
        if (j.contains("link")) {
            const auto& l = j["link"];
            cfg.link.fiber.alpha_db_km = l.value("alpha_db_km", cfg.link.fiber.alpha_db_km);
            cfg.link.fiber.beta2_ps2_km = l.value("beta2_ps2_km", cfg.link.fiber.beta2_ps2_km);
            cfg.link.fiber.gamma_w_km = l.value("gamma_w_km", cfg.link.fiber.gamma_w_km);
            cfg.link.fiber.length_km = l.value("span_km", cfg.link.fiber.length_km);
            cfg.link.n_spans = l.value("n_spans", cfg.link.n_spans);
            cfg.link.nf_db = l.value("nf_db", cfg.link.nf_db);
            cfg.link.center_wavelength_nm =
                l.value("center_wavelength_nm", cfg.link.center_wavelength_nm);
            cfg.ssfm.step_km = l.value("step_km", cfg.ssfm.step_km);
            cfg.noiseless = l.value("noiseless", cfg.noiseless);
        }
        if (j.contains("sweep")) {
            const auto& s = j["sweep"];
            if (s.contains("powers_dbm"))
                cfg.powers_dbm = s["powers_dbm"].get<std::vector<double>>();
            if (s.contains("equalizers"))
                cfg.equalizers = s["equalizers"].get<std::vector<std::string>>();
        }
        if (j.contains("rnn")) {
            const auto& r = j["rnn"];
            cfg.window.window_len = r.value("window_len", cfg.window.window_len);
            cfg.window.edge_discard = r.value("edge_discard", cfg.window.edge_discard);
            cfg.hidden_1ch = r.value("hidden_1ch", cfg.hidden_1ch);
            cfg.hidden_mch = r.value("hidden_mch", cfg.hidden_mch);
            cfg.train.epochs = r.value("epochs", cfg.train.epochs);
            cfg.train.batch_words = r.value("batch_words", cfg.train.batch_words);
            cfg.train.lr = r.value("lr", cfg.train.lr);
            cfg.train.beta1 = r.value("beta1", cfg.train.beta1);
            cfg.train.beta2 = r.value("beta2", cfg.train.beta2);
            cfg.train.eps = r.value("eps", cfg.train.eps);
            cfg.train.clip_norm = r.value("clip_norm", cfg.train.clip_norm);
        }
        if (j.contains("dbp")) {
            const auto& d = j["dbp"];
            cfg.dbp.steps_per_span = d.value("steps_per_span", cfg.dbp.steps_per_span);
            cfg.dbp.sps = d.value("sps", cfg.dbp.sps);
            cfg.dbp.n_channels_backprop =
                d.value("n_channels_backprop", cfg.dbp.n_channels_backprop);
        }
        if (j.contains("splits")) {
            const auto& s = j["splits"];
            cfg.n_train = s.value("train", cfg.n_train);
            cfg.n_val = s.value("val", cfg.n_val);
            cfg.n_test = s.value("test", cfg.n_test);
        }
        cfg.seed = j.value("seed", cfg.seed);
        cfg.validate();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("load_config: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("config: " + path + ": " + e.what());
    }
    return config_from_json(j);
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string dump = config_to_json(cfg).dump();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

SymbolStream slice(const SymbolStream& s, size_t a, size_t b) {
    return SymbolStream(s.begin() + long(a), s.begin() + long(b));
}

/// Complex least-squares scale against the training prefix: ideal gain and
/// carrier-phase recovery in one constant.
void condition_lane(SymbolStream& stream, const SymbolStream& ref, size_t n_train) {
    const size_t n = std::min(n_train, std::min(stream.size(), ref.size()));
    cd num(0.0, 0.0);
    double den = 0.0;
    for (size_t k = 0; k < n; ++k) {
        num += std::conj(stream[k]) * ref[k];
        den += std::norm(stream[k]);
    }
    if (den <= 0.0) throw NumericError("condition_lane: dead stream");
    const cd a = num / den;
    for (auto& v : stream) v *= a;
}

std::vector<int> centered_channels(int n_channels, int m) {
    std::vector<int> out;
    const int first = (n_channels - m) / 2;
    for (int i = 0; i < m; ++i) out.push_back(first + i);
    return out;
}

}  // namespace

SimPoint simulate_point(const ExperimentConfig& cfg, double power_dbm, Seed point_seed,
                        bool want_dbp) {
    cfg.validate();
    const auto c = sigkit::Constellation::by_name(cfg.constellation);
    const size_t n_sym = cfg.n_symbols();
    tx::TxSpec t = cfg.txspec;
    t.sps_sim = cfg.sim_sps();

    SimPoint pt;
    pt.power_dbm = power_dbm;
    pt.tx_lanes.resize(size_t(cfg.grid.n_channels));
    pt.fde_lanes.resize(size_t(cfg.grid.n_channels));
    pt.dbp_lanes.resize(size_t(cfg.grid.n_channels));

    std::vector<DualPolField> channels(size_t(cfg.grid.n_channels));
    for (int ch = 0; ch < cfg.grid.n_channels; ++ch) {
        auto& lanes = pt.tx_lanes[size_t(ch)];
        for (int pol = 0; pol < cfg.n_pol; ++pol) {
            const uint32_t lane_index = uint32_t(ch) * uint32_t(cfg.n_pol) + uint32_t(pol);
            lanes.push_back(sigkit::prng_symbols(lane_seed(cfg.seed, lane_index), n_sym, c));
        }
        DualPolField& f = channels[size_t(ch)];
        ComplexSeq shaped_x = tx::pulse_shape(lanes[0], t);
        f.pol_x = shaped_x;
        if (cfg.n_pol == 2) {
            f.pol_y = tx::pulse_shape(lanes[1], t);
        } else {
            f.pol_y.sample_rate_hz = shaped_x.sample_rate_hz;
            f.pol_y.samples.assign(shaped_x.samples.size(), cd(0.0, 0.0));
        }
    }

    std::vector<double> powers(size_t(cfg.grid.n_channels), power_dbm);
    DualPolField field = tx::wdm_mux(channels, cfg.grid, powers);
    fiber::propagate_link(field, cfg.link, cfg.ssfm, derive_seed(point_seed, 0xA5Eu),
                          cfg.noiseless);

    dsp::RxChain rx;
    rx.baud = cfg.txspec.baud;
    rx.rolloff = cfg.txspec.rolloff;
    rx.filter_span = cfg.txspec.filter_span;
    rx.target_sps = 2;

    // FDE path feeds the neural equalizers and the linear baselines.
    const DualPolField comp = dsp::fde(field, cfg.link.total_beta2_ps2());
    for (int ch = 0; ch < cfg.grid.n_channels; ++ch) {
        const DualPolField sel = dsp::channel_select(comp, cfg.grid.offset_of(ch), rx);
        auto [sx, sy] = dsp::matched_downsample(sel, rx, 0);
        auto& lanes = pt.fde_lanes[size_t(ch)];
        lanes.push_back(std::move(sx));
        if (cfg.n_pol == 2) lanes.push_back(std::move(sy));
        for (int pol = 0; pol < cfg.n_pol; ++pol)
            condition_lane(lanes[size_t(pol)], pt.tx_lanes[size_t(ch)][size_t(pol)],
                           cfg.n_train);
    }

    if (want_dbp) {
        const DualPolField bp_in =
            dsp::resample_for_dbp(field, cfg.grid.spacing_hz, cfg.txspec.baud, cfg.dbp);
        const DualPolField bp = dsp::dbp(bp_in, cfg.link, cfg.dbp);
        const int ch = cfg.central_channel();
        const DualPolField sel = dsp::channel_select(bp, cfg.grid.offset_of(ch), rx);
        auto [sx, sy] = dsp::matched_downsample(sel, rx, 0);
        auto& lanes = pt.dbp_lanes[size_t(ch)];
        lanes.push_back(std::move(sx));
        if (cfg.n_pol == 2) lanes.push_back(std::move(sy));
        dsp::AdaptiveEqConfig eq;
        eq.n_taps = 21;
        eq.step_size = 1e-3;
        for (int pol = 0; pol < cfg.n_pol; ++pol) {
            auto& lane = lanes[size_t(pol)];
            const auto& ref = pt.tx_lanes[size_t(ch)][size_t(pol)];
            condition_lane(lane, ref, cfg.n_train);
            lane = dsp::adaptive_equalize(lane, slice(ref, 0, cfg.n_train), eq);
            condition_lane(lane, ref, cfg.n_train);
        }
    }
    return pt;
}

BivrnnEval run_bivrnn(const ExperimentConfig& cfg, const SimPoint& point, int m,
                      Seed point_seed) {
    if (m < 1 || m % 2 == 0 || m > cfg.grid.n_channels)
        throw ConfigError("run_bivrnn: m must be odd and fit the grid");
    const auto chans = centered_channels(cfg.grid.n_channels, m);
    const size_t a_tr = 0, b_tr = cfg.n_train;
    const size_t a_va = cfg.n_train, b_va = cfg.n_train + cfg.n_val;
    const size_t a_te = b_va, b_te = cfg.n_symbols();

    BivrnnEval ev;
    ev.channels = chans;
    std::vector<SymbolStream> in_tr, tg_tr, in_va, tg_va, in_te;
    for (int ch : chans) {
        for (int pol = 0; pol < cfg.n_pol; ++pol) {
            const auto& rx = point.fde_lanes[size_t(ch)][size_t(pol)];
            const auto& tx_ref = point.tx_lanes[size_t(ch)][size_t(pol)];
            in_tr.push_back(slice(rx, a_tr, b_tr));
            tg_tr.push_back(slice(tx_ref, a_tr, b_tr));
            in_va.push_back(slice(rx, a_va, b_va));
            tg_va.push_back(slice(tx_ref, a_va, b_va));
            in_te.push_back(slice(rx, a_te, b_te));
            ev.test_tx.push_back(slice(tx_ref, a_te, b_te));
        }
    }
    const rnn::Dataset ds_tr = rnn::make_windows(in_tr, tg_tr, cfg.window);
    const rnn::Dataset ds_va = rnn::make_windows(in_va, tg_va, cfg.window);
    ev.test_ds = rnn::make_windows(in_te, ev.test_tx, cfg.window);

    const int f = 2 * cfg.n_pol * m;
    const int hidden = m == 1 ? cfg.hidden_1ch : cfg.hidden_mch;
    rnn::BiVrnnModel init =
        rnn::init_model(hidden, f, f, derive_seed(point_seed, 0x100u + uint32_t(m)));
    rnn::TrainConfig tc = cfg.train;
    tc.seed = derive_seed(point_seed, 0x200u + uint32_t(m));
    ev.trained = rnn::train(init, ds_tr, ds_va, tc);

    const rnn::Inference inf = rnn::infer_symbols(ev.trained.model, ev.test_ds);
    ev.pred_lanes = inf.lanes;
    ev.ref_lanes.assign(inf.lanes.size(), SymbolStream());
    for (size_t lane = 0; lane < inf.lanes.size(); ++lane) {
        ev.ref_lanes[lane].reserve(inf.symbol_index.size());
        for (size_t i = 0; i < inf.symbol_index.size(); ++i)
            ev.ref_lanes[lane].push_back(ev.test_tx[lane][inf.symbol_index[i]]);
    }
    return ev;
}

namespace {

ResultRow make_row(const ExperimentConfig& cfg, double power_dbm, const std::string& eq,
                   int channel, int pol, const SymbolStream& pred, const SymbolStream& ref) {
    const auto c = sigkit::Constellation::by_name(cfg.constellation);
    const auto rep = analysis::ber_count(pred, ref, c);
    ResultRow row;
    row.power_dbm = power_dbm;
    row.equalizer = eq;
    row.channel = channel;
    row.pol = pol == 0 ? 'x' : 'y';
    row.ber = rep.ber;
    row.evm_db = analysis::evm_db(pred, ref);
    row.n_bits = rep.bits;
    return row;
}

}  // namespace

std::vector<ResultRow> evaluate_point(const ExperimentConfig& cfg, const SimPoint& point,
                                      Seed point_seed) {
    const size_t a_te = cfg.n_train + cfg.n_val;
    const size_t b_te = cfg.n_symbols();
    std::vector<ResultRow> rows;

    for (const auto& eq : cfg.equalizers) {
        if (eq == "none") {
            for (int ch = 0; ch < cfg.grid.n_channels; ++ch)
                for (int pol = 0; pol < cfg.n_pol; ++pol)
                    rows.push_back(make_row(
                        cfg, point.power_dbm, eq, ch, pol,
                        slice(point.fde_lanes[size_t(ch)][size_t(pol)], a_te, b_te),
                        slice(point.tx_lanes[size_t(ch)][size_t(pol)], a_te, b_te)));
        } else if (eq == "linreg") {
            std::vector<SymbolStream> in_tr, tg_tr, in_te, tg_te;
            for (int ch = 0; ch < cfg.grid.n_channels; ++ch)
                for (int pol = 0; pol < cfg.n_pol; ++pol) {
                    const auto& rx = point.fde_lanes[size_t(ch)][size_t(pol)];
                    const auto& tx_ref = point.tx_lanes[size_t(ch)][size_t(pol)];
                    in_tr.push_back(slice(rx, 0, cfg.n_train));
                    tg_tr.push_back(slice(tx_ref, 0, cfg.n_train));
                    in_te.push_back(slice(rx, a_te, b_te));
                    tg_te.push_back(slice(tx_ref, a_te, b_te));
                }
            const auto model = dsp::linreg_fit(in_tr, tg_tr, cfg.window.window_len);
            const auto out = dsp::linreg_apply(model, in_te);
            const size_t c0 = size_t(cfg.window.half());
            size_t lane = 0;
            for (int ch = 0; ch < cfg.grid.n_channels; ++ch)
                for (int pol = 0; pol < cfg.n_pol; ++pol, ++lane)
                    rows.push_back(make_row(cfg, point.power_dbm, eq, ch, pol, out[lane],
                                            slice(tg_te[lane], c0, c0 + out[lane].size())));
        } else if (eq == "dbp") {
            const int ch = cfg.central_channel();
            if (point.dbp_lanes[size_t(ch)].empty())
                throw ConfigError("evaluate_point: dbp requested but not simulated");
            for (int pol = 0; pol < cfg.n_pol; ++pol)
                rows.push_back(
                    make_row(cfg, point.power_dbm, eq, ch, pol,
                             slice(point.dbp_lanes[size_t(ch)][size_t(pol)], a_te, b_te),
                             slice(point.tx_lanes[size_t(ch)][size_t(pol)], a_te, b_te)));
        } else {
            const int m = bivrnn_m(eq);
            const BivrnnEval ev = run_bivrnn(cfg, point, m, point_seed);
            size_t lane = 0;
            for (int ch : ev.channels)
                for (int pol = 0; pol < cfg.n_pol; ++pol, ++lane)
                    rows.push_back(make_row(cfg, point.power_dbm, eq, ch, pol,
                                            ev.pred_lanes[lane], ev.ref_lanes[lane]));
        }
    }
    return rows;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows) {
    std::string out = "power_dbm,equalizer,channel,pol,ber,evm_db,n_bits\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.10g,%s,%d,%c,%.10g,%.10g,%zu\n", r.power_dbm,
                      r.equalizer.c_str(), r.channel, r.pol, r.ber, r.evm_db, r.n_bits);
        out += buf;
    }
    return out;
}

SweepResult run_sweep(const ExperimentConfig& cfg, int jobs) {
    cfg.validate();
    const bool want_dbp =
        std::find(cfg.equalizers.begin(), cfg.equalizers.end(), "dbp") != cfg.equalizers.end();
    const size_t n_points = cfg.powers_dbm.size();

    std::vector<std::vector<ResultRow>> per_point(n_points);
    std::vector<std::string> errors(n_points);
    std::vector<double> timing_ms(n_points, 0.0);

    auto run_one = [&](size_t i) {
        const auto t0 = std::chrono::steady_clock::now();
        try {
            const Seed point_seed = derive_seed(cfg.seed, uint32_t(i));
            const SimPoint pt =
                simulate_point(cfg, cfg.powers_dbm[i], point_seed, want_dbp);
            per_point[i] = evaluate_point(cfg, pt, point_seed);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
        timing_ms[i] =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
    };

    const int n_threads = std::max(1, std::min<int>(jobs, int(n_points)));
    if (n_threads == 1) {
        for (size_t i = 0; i < n_points; ++i) run_one(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back([&]() {
                for (size_t i = next.fetch_add(1); i < n_points; i = next.fetch_add(1))
                    run_one(i);
            });
        for (auto& th : pool) th.join();
    }

    SweepResult res;
    nlohmann::json points = nlohmann::json::array();
    for (size_t i = 0; i < n_points; ++i) {
        nlohmann::json p;
        p["power_dbm"] = cfg.powers_dbm[i];
        p["seed"] = derive_seed(cfg.seed, uint32_t(i));
        p["elapsed_ms"] = timing_ms[i];
        if (errors[i].empty()) {
            p["status"] = "ok";
            for (auto& row : per_point[i]) res.rows.push_back(row);
        } else {
            p["status"] = "error";
            p["error"] = errors[i];
        }
        points.push_back(p);
    }
    res.manifest["tool"] = "wdmlab";
    res.manifest["schema_version"] = 1;
    res.manifest["config"] = config_to_json(cfg);
    res.manifest["config_hash"] = config_hash(cfg);
    res.manifest["central_channel"] = cfg.central_channel();
    res.manifest["sim_sps"] = cfg.sim_sps();
    res.manifest["points"] = points;
    return res;
}

std::vector<ComplexityRow> run_complexity(const ExperimentConfig& cfg) {
    std::vector<ComplexityRow> rows;
    const int l = cfg.window.window_len;
    const int l_eff = cfg.window.l_eff();
    const std::vector<int> hs = {12, 14, 16, 18, 20, 22, 24};

    for (int n_pol : {2, 1}) {
        for (int m : (n_pol == 2 ? std::vector<int>{1, 3, 5} : std::vector<int>{1, 3})) {
            for (int h : hs) {
                analysis::ComplexityInputs inp;
                inp.f = 2 * n_pol * m;
                inp.h = h;
                inp.y = inp.f;
                inp.l = l;
                inp.l_eff = l_eff;
                const auto cost = analysis::bivrnn_mults(inp);
                ComplexityRow row;
                row.kind = "bivrnn";
                row.m = m;
                row.n_pol = n_pol;
                row.h = h;
                row.f = inp.f;
                row.y = inp.y;
                row.l = l;
                row.l_eff = l_eff;
                row.value = double(cost.mps);
                rows.push_back(row);
            }
        }
    }

    analysis::ComplexityInputs ref;
    ref.n_fft = 256;
    ref.n_d = 30;
    ref.n_s = 2;
    ref.m_order = 4;
    ref.n_stpsp = 20;
    ref.n_spans = 2;

    ComplexityRow fde_row;
    fde_row.kind = "fde";
    fde_row.n_fft = ref.n_fft;
    fde_row.n_d = ref.n_d;
    fde_row.n_s = ref.n_s;
    fde_row.value = double(analysis::fde_complexity(ref));
    rows.push_back(fde_row);

    const auto dbp_cost = analysis::dbp_complexity(ref);
    ComplexityRow dbp_bit;
    dbp_bit.kind = "dbp_per_bit";
    dbp_bit.n_fft = ref.n_fft;
    dbp_bit.n_d = ref.n_d;
    dbp_bit.n_s = ref.n_s;
    dbp_bit.m_order = ref.m_order;
    dbp_bit.n_stpsp = ref.n_stpsp;
    dbp_bit.n_spans = ref.n_spans;
    dbp_bit.value = dbp_cost.per_bit;
    rows.push_back(dbp_bit);
    ComplexityRow dbp_sym = dbp_bit;
    dbp_sym.kind = "dbp_per_symbol";
    dbp_sym.value = dbp_cost.per_symbol;
    rows.push_back(dbp_sym);
    return rows;
}

std::string complexity_to_csv(const std::vector<ComplexityRow>& rows) {
    std::string out =
        "kind,m,n_pol,h,f,y,l,l_eff,n_fft,n_d,n_s,m_order,n_stpsp,n_spans,value\n";
    char buf[200];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%d,%d,%d,%d,%d,%d,%d,%d,%d,%.10g\n",
                      r.kind.c_str(), r.m, r.n_pol, r.h, r.f, r.y, r.l, r.l_eff, r.n_fft,
                      r.n_d, r.n_s, r.m_order, r.n_stpsp, r.n_spans, r.value);
        out += buf;
    }
    return out;
}

AlignRun run_align(const Capture& a, const Capture& b, const analysis::AlignConfig& cfg) {
    if (a.lanes.empty() || b.lanes.empty()) throw ConfigError("run_align: empty captures");
    const auto c = sigkit::Constellation::by_name(a.constellation);
    AlignRun out;
    out.result = analysis::align_search(a.lanes, b.lanes, cfg, analysis::xpm_surrogate(c));
    out.csv = "shift,ber\n";
    char buf[64];
    for (const auto& [s, v] : out.result.ber_map) {
        std::snprintf(buf, sizeof buf, "%d,%.10g\n", s, v);
        out.csv += buf;
    }
    return out;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw ConfigError("write_file: cannot write " + path);
    out << content;
    if (!out) throw ConfigError("write_file: write failed for " + path);
}

}  // namespace wdmlab::harness
