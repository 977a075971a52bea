// SPDX-License-Identifier: Apache-2.0
#ifndef WDMLAB_RNN_HPP
#define WDMLAB_RNN_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "wdmlab/rng.hpp"
#include "wdmlab/types.hpp"

namespace wdmlab::rnn {

struct WindowSpec {
    int window_len = 51;   // odd
    int edge_discard = 5;  // symbols dropped per side at inference

    int half() const { return (window_len - 1) / 2; }
    int l_eff() const { return window_len - 2 * edge_discard; }
};

/// Windowed dataset: word w covers symbols [w*stride, w*stride + L) of the
/// source lanes, inputs and targets stored row-major as [word][time][feature].
/// Feature order per time step: lanes in their given order, I before Q.
struct Dataset {
    int window_len = 0;
    int edge_discard = 0;
    int stride = 0;
    int n_features = 0;  // F = 2 * lane count (inputs)
    int n_outputs = 0;   // y = 2 * lane count (targets)
    size_t n_words = 0;
    std::vector<double> inputs;
    std::vector<double> targets;

    const double* word_in(size_t w) const {
        return inputs.data() + w * size_t(window_len) * size_t(n_features);
    }
    const double* word_target(size_t w) const {
        return targets.data() + w * size_t(window_len) * size_t(n_outputs);
    }
    size_t word_start(size_t w) const { return w * size_t(stride); }
};

/// Tile the lanes with stride l_eff so every symbol that can be centered is
/// the central symbol of exactly one word; trailing symbols that cannot fill
/// a word are dropped. A stride override of 1 gives the sliding windows used
/// by the linear-regression baseline.
Dataset make_windows(const std::vector<SymbolStream>& in_lanes,
                     const std::vector<SymbolStream>& target_lanes, const WindowSpec& spec,
                     int stride_override = 0);

struct BiVrnnModel {
    int hidden = 0;      // H per direction
    int n_features = 0;  // F
    int n_outputs = 0;   // y
    Eigen::MatrixXd w_fwd, u_fwd;  // H x H, H x F
    Eigen::MatrixXd w_bwd, u_bwd;
    Eigen::MatrixXd head_w;  // y x 2H; rows 2j, 2j+1 belong to head j (I, Q)
    Eigen::VectorXd head_b;  // y
};

/// Glorot-uniform input and head weights, orthogonal recurrent weights, zero
/// biases. Draw order: w_fwd, u_fwd, w_bwd, u_bwd, head_w.
BiVrnnModel init_model(int hidden, int n_features, int n_outputs, Seed seed);

/// Run one word through the bidirectional recurrence; returns L x y outputs.
/// h_t = tanh(W h_{t-1} + U x_t) forward, mirrored backward with its own
/// weights; each head reads the concatenated [h_fwd; h_bwd] of its time step.
Eigen::MatrixXd forward(const BiVrnnModel& model, const double* word, int window_len);

double mse_loss(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

struct Gradients {
    Eigen::MatrixXd w_fwd, u_fwd, w_bwd, u_bwd, head_w;
    Eigen::VectorXd head_b;
};

/// Exact reverse-mode gradients of mse_loss(forward(word), target) for one
/// word.
Gradients bptt_gradients(const BiVrnnModel& model, const double* word, const double* target,
                         int window_len);

struct TrainConfig {
    size_t batch_words = 128;
    int epochs = 200;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 0.0;  // 0 disables clipping
    Seed seed = 1;
};

struct TrainResult {
    BiVrnnModel model;  // best-validation parameters
    std::vector<double> train_mse;
    std::vector<double> val_mse;
    int best_epoch = 0;
};

/// Minibatch Adam with deterministic shuffling; keeps the parameters of the
/// epoch with the lowest validation MSE.
TrainResult train(const BiVrnnModel& init, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg);

struct Inference {
    std::vector<SymbolStream> lanes;    // y/2 complex lanes
    std::vector<size_t> symbol_index;   // source symbol index per output position
};

/// Keep only the central l_eff outputs of each word and stitch the lanes back
/// together; with the tiling stride every covered symbol appears exactly once.
Inference infer_symbols(const BiVrnnModel& model, const Dataset& ds);

/// Keep all window_len outputs per word (overlapping coverage near word
/// boundaries); used to compare edge vs central detection quality.
Inference infer_full(const BiVrnnModel& model, const Dataset& ds);

/// JSON checkpoint with dimensions, weights and training manifest. Doubles
/// round-trip bit-exactly.
void save_checkpoint(const BiVrnnModel& model, const TrainConfig& cfg, const WindowSpec& spec,
                     const std::string& path);
struct Checkpoint {
    BiVrnnModel model;
    TrainConfig cfg;
    WindowSpec spec;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace wdmlab::rnn

#endif
