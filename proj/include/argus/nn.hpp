#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "argus/rng.hpp"

namespace argus::nn {

// Gate parameter triple for one GRU layer. Weight rows index hidden units:
// w* are (hidden, input), u* are (hidden, hidden).
struct GruLayerParams {
    Eigen::MatrixXd wz, uz;
    Eigen::MatrixXd wr, ur;
    Eigen::MatrixXd wn, un;
    Eigen::VectorXd bz, br, bn;

    int input_dim() const { return static_cast<int>(wz.cols()); }
    int hidden_dim() const { return static_cast<int>(wz.rows()); }
    std::int64_t parameter_count() const;
};

// One step of the standard GRU cell:
//   z = sigmoid(Wz x + Uz h + bz)
//   r = sigmoid(Wr x + Ur h + br)
//   n = tanh(Wn x + Un (r .* h) + bn)
//   h' = (1 - z) .* n + z .* h
Eigen::VectorXd gru_cell_forward(const GruLayerParams& params,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& h);

enum class Variant { Recurrent, Dense };

enum class StopReason { MaxEpochs, EarlyStop };

struct TrainingMeta {
    int epochs_run = 0;
    double final_train_loss = std::numeric_limits<double>::quiet_NaN();
    double final_val_loss = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
};

// Sequence-to-sequence autoencoder. The recurrent variant stacks two GRU
// layers in the encoder (n_devices -> hidden_large -> hidden_small), repeats
// the final bottleneck state across all timesteps as the decoder input, runs
// two decoder GRU layers (hidden_small -> hidden_small -> hidden_large) and
// projects each timestep back to n_devices with a linear map. The dense variant
// applies the same hidden sizes to the flattened window.
struct AutoencoderModel {
    Variant variant = Variant::Recurrent;
    int n_devices = 0;
    int window_len = 0;
    int hidden_large = 256;
    int hidden_small = 64;
    double dropout_rate = 0.3;
    std::uint64_t catalog_hash = 0;
    TrainingMeta meta;

    // Recurrent parameters.
    GruLayerParams enc1, enc2, dec1, dec2;
    Eigen::MatrixXd proj_w; // (n_devices, hidden_large)
    Eigen::VectorXd proj_b;

    // Dense parameters: flattened l*n -> large -> small -> small -> large -> l*n.
    std::vector<Eigen::MatrixXd> dense_w;
    std::vector<Eigen::VectorXd> dense_b;

    std::int64_t parameter_count() const;

    // Flat views over every trainable parameter, fixed order.
    std::vector<double*> param_blocks();
    std::vector<const double*> param_blocks() const;
    std::vector<std::int64_t> param_block_sizes() const;
};

struct TrainConfig {
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    double lr_start = 1e-3;
    double lr_floor = 1e-6;
    double lr_decay_factor = 0.1;
    std::vector<int> lr_milestones{5000, 15000, 25000};
    double dropout = 0.3;
    int max_epochs = 35000;
    int batch_size = 64;
    int early_stop_patience = 50;
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;
    Variant variant = Variant::Recurrent;
    int hidden_large = 256;
    int hidden_small = 64;
    int window_len = 16;

    // Reduced profile for tight compute budgets.
    static TrainConfig desk_scale() {
        TrainConfig cfg;
        cfg.hidden_large = 32;
        cfg.hidden_small = 8;
        cfg.max_epochs = 2000;
        return cfg;
    }
};

struct TrainReport {
    std::vector<double> train_loss; // one entry per epoch run
    std::vector<double> val_loss;
    StopReason stop_reason = StopReason::MaxEpochs;
    int best_epoch = -1;
    double wall_time_sec = 0.0;
};

// Seeded parameter initialization: every weight matrix uniform in
// +-1/sqrt(hidden_dim of its layer), biases zero.
AutoencoderModel init_autoencoder(int n_devices, const TrainConfig& config);

// Runs the full window through the model. train_mode enables dropout, fed
// from `rng`; inference is deterministic and ignores rng.
Eigen::MatrixXd autoencoder_forward(const AutoencoderModel& model,
                                    const Eigen::MatrixXd& window,
                                    bool train_mode, Rng* rng = nullptr);

double mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

struct TrainOutput {
    AutoencoderModel model;
    TrainReport report;
};

// Minimizes reconstruction MSE with Adam over milestone-decayed learning
// rates; early-stops on validation loss and returns the best-validation
// parameters. Fully deterministic given config.seed.
TrainOutput train_autoencoder(const std::vector<Eigen::MatrixXd>& windows,
                              const TrainConfig& config);

// Anomaly score = reconstruction MSE at inference.
double score_window(const AutoencoderModel& model, const Eigen::MatrixXd& window);

// Batched scoring; entry i equals score_window on windows[i] up to
// floating-point reassociation (<= 1e-12).
Eigen::VectorXd score_windows(const AutoencoderModel& model,
                              const std::vector<Eigen::MatrixXd>& windows);

struct GradCheckReport {
    bool pass = false;
    double max_rel_error = 0.0;
    int checked = 0;
    std::string worst_block;
};

// Compares analytic gradients with central finite differences on a random
// subset of parameters.
GradCheckReport numeric_gradient_check(AutoencoderModel& model,
                                       const Eigen::MatrixXd& window,
                                       double eps, double tol,
                                       int check_count, std::uint64_t seed);

// Gradient of the reconstruction loss wrt every parameter, laid out in
// param_blocks order. Exposed for the finite-difference oracle and tests.
Eigen::VectorXd loss_gradient(const AutoencoderModel& model,
                              const std::vector<Eigen::MatrixXd>& windows,
                              double* loss_out = nullptr);

void save_model(const AutoencoderModel& model, std::ostream& out);
AutoencoderModel load_model(std::istream& in);
void save_model_file(const AutoencoderModel& model, const std::string& path);
AutoencoderModel load_model_file(const std::string& path);

} // namespace argus::nn
