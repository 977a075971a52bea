// SPDX-License-Identifier: Apache-2.0
#ifndef WDMLAB_HARNESS_HPP
#define WDMLAB_HARNESS_HPP

#include <json.hpp>
#include <string>
#include <vector>

#include "wdmlab/analysis.hpp"
#include "wdmlab/capture.hpp"
#include "wdmlab/dsp.hpp"
#include "wdmlab/fiber.hpp"
#include "wdmlab/rnn.hpp"
#include "wdmlab/sigkit.hpp"
#include "wdmlab/tx.hpp"

namespace wdmlab::harness {

struct ExperimentConfig {
    int schema_version = 1;
    std::string preset = "desk";

    std::string constellation = "qpsk";
    int n_pol = 2;
    tx::TxSpec txspec;
    tx::WdmGrid grid;

    fiber::LinkSpec link;
    fiber::SsfmConfig ssfm;
    bool noiseless = false;

    std::vector<double> powers_dbm;
    std::vector<std::string> equalizers;

    rnn::WindowSpec window;
    int hidden_1ch = 16;
    int hidden_mch = 18;
    rnn::TrainConfig train;

    dsp::DbpConfig dbp;

    size_t n_train = 30000;
    size_t n_val = 10000;
    size_t n_test = 30000;
    Seed seed = 1;

    size_t n_symbols() const { return n_train + n_val + n_test; }
    int central_channel() const { return (grid.n_channels - 1) / 2; }
    int sim_sps() const;
    void validate() const;
};

ExperimentConfig preset_config(const std::string& name);  // desk | paper
ExperimentConfig load_config(const std::string& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
std::string config_hash(const ExperimentConfig& cfg);

/// One transmitted + received sweep point. Lane order everywhere: channels
/// ascending by frequency, pol x before y.
struct SimPoint {
    double power_dbm = 0.0;
    std::vector<std::vector<SymbolStream>> tx_lanes;   // [channel][pol]
    std::vector<std::vector<SymbolStream>> fde_lanes;  // [channel][pol], conditioned
    std::vector<std::vector<SymbolStream>> dbp_lanes;  // [channel][pol]; empty if unused
};

/// Generate, propagate and receive one launch power. The FDE path feeds the
/// NN equalizers; the DBP path (when requested) runs the full-field inverse
/// plus a 21-tap trained LMS. Lane conditioning is a single complex
/// least-squares scale fit on the training split (ideal carrier sync).
SimPoint simulate_point(const ExperimentConfig& cfg, double power_dbm, Seed point_seed,
                        bool want_dbp);

/// Trained bi-VRNN equalizer for an m-channel group plus everything needed to
/// score it: central-window predictions, matching references and the raw test
/// dataset (for full-window scoring experiments).
struct BivrnnEval {
    std::vector<int> channels;  // grid indices covered, ascending
    rnn::TrainResult trained;
    rnn::Dataset test_ds;
    std::vector<SymbolStream> test_tx;     // [lane] transmit refs over the test split
    std::vector<SymbolStream> pred_lanes;  // [lane] central-window predictions
    std::vector<SymbolStream> ref_lanes;   // [lane] refs aligned with pred_lanes
};

BivrnnEval run_bivrnn(const ExperimentConfig& cfg, const SimPoint& point, int m,
                      Seed point_seed);

struct ResultRow {
    double power_dbm = 0.0;
    std::string equalizer;
    int channel = 0;
    char pol = 'x';
    double ber = 0.0;
    double evm_db = 0.0;
    size_t n_bits = 0;
};

/// Run every configured equalizer against a simulated point; BER and EVM are
/// computed on the held-out test split only.
std::vector<ResultRow> evaluate_point(const ExperimentConfig& cfg, const SimPoint& point,
                                      Seed point_seed);

std::string rows_to_csv(const std::vector<ResultRow>& rows);

struct SweepResult {
    std::vector<ResultRow> rows;
    nlohmann::json manifest;
};

SweepResult run_sweep(const ExperimentConfig& cfg, int jobs = 1);

struct ComplexityRow {
    std::string kind;  // bivrnn | fde | dbp_per_bit | dbp_per_symbol
    int m = 0, n_pol = 0, h = 0, f = 0, y = 0, l = 0, l_eff = 0;
    int n_fft = 0, n_d = 0, n_s = 0, m_order = 0, n_stpsp = 0, n_spans = 0;
    double value = 0.0;  // mps or per-bit multiplications
};

std::vector<ComplexityRow> run_complexity(const ExperimentConfig& cfg);
std::string complexity_to_csv(const std::vector<ComplexityRow>& rows);

struct AlignRun {
    analysis::AlignmentResult result;
    std::string csv;  // shift, ber
};

AlignRun run_align(const Capture& a, const Capture& b, const analysis::AlignConfig& cfg);

void write_file(const std::string& path, const std::string& content);

}  // namespace wdmlab::harness

#endif
