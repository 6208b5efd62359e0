#include "argus/nn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

#include "argus/error.hpp"

namespace argus::nn {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MatrixXd sigmoid(const MatrixXd& a) {
    return (1.0 / (1.0 + (-a.array()).exp())).matrix();
}

// Per-timestep cache of one GRU layer over a batch. Row b of every matrix
// belongs to window b of the batch.
struct GruCache {
    std::vector<MatrixXd> x;  // layer input
    std::vector<MatrixXd> z, r, n, rh;
    std::vector<MatrixXd> h;  // layer output
};

void gru_forward_sequence(const GruLayerParams& p,
                          const std::vector<MatrixXd>& inputs,
                          GruCache* cache) {
    const int steps = static_cast<int>(inputs.size());
    const Eigen::Index batch = inputs.front().rows();
    const Eigen::Index hidden = p.wz.rows();

    cache->x = inputs;
    cache->z.resize(steps);
    cache->r.resize(steps);
    cache->n.resize(steps);
    cache->rh.resize(steps);
    cache->h.resize(steps);

    MatrixXd h_prev = MatrixXd::Zero(batch, hidden);
    for (int t = 0; t < steps; ++t) {
        const MatrixXd& x = inputs[t];
        MatrixXd az = x * p.wz.transpose() + h_prev * p.uz.transpose();
        az.rowwise() += p.bz.transpose();
        MatrixXd ar = x * p.wr.transpose() + h_prev * p.ur.transpose();
        ar.rowwise() += p.br.transpose();
        cache->z[t] = sigmoid(az);
        cache->r[t] = sigmoid(ar);
        cache->rh[t] = cache->r[t].cwiseProduct(h_prev);
        MatrixXd an = x * p.wn.transpose() + cache->rh[t] * p.un.transpose();
        an.rowwise() += p.bn.transpose();
        cache->n[t] = an.array().tanh().matrix();
        cache->h[t] = (1.0 - cache->z[t].array()).matrix().cwiseProduct(cache->n[t]) +
                      cache->z[t].cwiseProduct(h_prev);
        h_prev = cache->h[t];
    }
}

// Backpropagation through time within one layer. d_outputs[t] is the loss
// gradient wrt the layer output at step t; returns gradients wrt inputs and
// accumulates parameter gradients into `g`.
std::vector<MatrixXd> gru_backward_sequence(const GruLayerParams& p,
                                            const GruCache& cache,
                                            const std::vector<MatrixXd>& d_outputs,
                                            GruLayerParams* g) {
    const int steps = static_cast<int>(cache.x.size());
    const Eigen::Index batch = cache.x.front().rows();
    const Eigen::Index hidden = p.wz.rows();

    std::vector<MatrixXd> d_inputs(steps);
    MatrixXd d_carry = MatrixXd::Zero(batch, hidden);
    const MatrixXd h0 = MatrixXd::Zero(batch, hidden);

    for (int t = steps - 1; t >= 0; --t) {
        const MatrixXd& h_prev = t > 0 ? cache.h[t - 1] : h0;
        const MatrixXd dh = d_outputs[t] + d_carry;

        const MatrixXd& z = cache.z[t];
        const MatrixXd& r = cache.r[t];
        const MatrixXd& n = cache.n[t];

        const MatrixXd dz = dh.cwiseProduct(h_prev - n);
        const MatrixXd dn = dh.cwiseProduct((1.0 - z.array()).matrix());
        const MatrixXd dan = dn.cwiseProduct((1.0 - n.array().square()).matrix());
        const MatrixXd drh = dan * p.un;
        const MatrixXd dr = drh.cwiseProduct(h_prev);
        const MatrixXd daz = dz.cwiseProduct(z.cwiseProduct((1.0 - z.array()).matrix()));
        const MatrixXd dar = dr.cwiseProduct(r.cwiseProduct((1.0 - r.array()).matrix()));

        g->wz.noalias() += daz.transpose() * cache.x[t];
        g->uz.noalias() += daz.transpose() * h_prev;
        g->bz.noalias() += daz.colwise().sum().transpose();
        g->wr.noalias() += dar.transpose() * cache.x[t];
        g->ur.noalias() += dar.transpose() * h_prev;
        g->br.noalias() += dar.colwise().sum().transpose();
        g->wn.noalias() += dan.transpose() * cache.x[t];
        g->un.noalias() += dan.transpose() * cache.rh[t];
        g->bn.noalias() += dan.colwise().sum().transpose();

        d_inputs[t] = daz * p.wz + dar * p.wr + dan * p.wn;
        d_carry = dh.cwiseProduct(z) + drh.cwiseProduct(r) + daz * p.uz + dar * p.ur;
    }
    return d_inputs;
}

struct AeCache {
    GruCache enc1, enc2, dec1, dec2;
    std::vector<MatrixXd> mask_enc, mask_dec; // dropout masks, empty at inference
    // Dense variant: pre-dropout tanh activations t1/t3, layer inputs a*.
    MatrixXd flat_in, t1, a1, a2, t3, a3, a4;
    MatrixXd dmask1, dmask3;
};

MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng* rng) {
    MatrixXd mask(rows, cols);
    const double scale = 1.0 / (1.0 - rate);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            mask(i, j) = rng->uniform() < rate ? 0.0 : scale;
    return mask;
}

// Forward over a batch of windows in timestep-major layout: inputs[t] is
// (batch, n_devices). Returns outputs in the same layout.
std::vector<MatrixXd> forward_recurrent(const AutoencoderModel& m,
                                        const std::vector<MatrixXd>& inputs,
                                        bool train_mode, Rng* rng,
                                        AeCache* cache) {
    const int steps = static_cast<int>(inputs.size());
    const Eigen::Index batch = inputs.front().rows();
    const bool dropout = train_mode && m.dropout_rate > 0.0;

    gru_forward_sequence(m.enc1, inputs, &cache->enc1);

    std::vector<MatrixXd> h1 = cache->enc1.h;
    if (dropout) {
        cache->mask_enc.resize(steps);
        for (int t = 0; t < steps; ++t) {
            cache->mask_enc[t] = dropout_mask(batch, m.hidden_large, m.dropout_rate, rng);
            h1[t] = h1[t].cwiseProduct(cache->mask_enc[t]);
        }
    }
    gru_forward_sequence(m.enc2, h1, &cache->enc2);

    const MatrixXd& bottleneck = cache->enc2.h.back();
    std::vector<MatrixXd> repeated(steps, bottleneck);
    gru_forward_sequence(m.dec1, repeated, &cache->dec1);

    std::vector<MatrixXd> d1 = cache->dec1.h;
    if (dropout) {
        cache->mask_dec.resize(steps);
        for (int t = 0; t < steps; ++t) {
            cache->mask_dec[t] = dropout_mask(batch, m.hidden_small, m.dropout_rate, rng);
            d1[t] = d1[t].cwiseProduct(cache->mask_dec[t]);
        }
    }
    gru_forward_sequence(m.dec2, d1, &cache->dec2);

    std::vector<MatrixXd> outputs(steps);
    for (int t = 0; t < steps; ++t) {
        outputs[t] = cache->dec2.h[t] * m.proj_w.transpose();
        outputs[t].rowwise() += m.proj_b.transpose();
    }
    return outputs;
}

// Backward pass matching forward_recurrent; d_outputs is the loss gradient
// wrt the projected outputs. Parameter gradients accumulate into `g`.
void backward_recurrent(const AutoencoderModel& m, const AeCache& cache,
                        const std::vector<MatrixXd>& d_outputs,
                        AutoencoderModel* g) {
    const int steps = static_cast<int>(d_outputs.size());
    const Eigen::Index batch = d_outputs.front().rows();
    const bool dropout = !cache.mask_enc.empty();

    std::vector<MatrixXd> d_dec2(steps);
    for (int t = 0; t < steps; ++t) {
        g->proj_w.noalias() += d_outputs[t].transpose() * cache.dec2.h[t];
        g->proj_b.noalias() += d_outputs[t].colwise().sum().transpose();
        d_dec2[t] = d_outputs[t] * m.proj_w;
    }

    std::vector<MatrixXd> d_d1 = gru_backward_sequence(m.dec2, cache.dec2, d_dec2, &g->dec2);
    if (dropout)
        for (int t = 0; t < steps; ++t) d_d1[t] = d_d1[t].cwiseProduct(cache.mask_dec[t]);

    std::vector<MatrixXd> d_repeated =
        gru_backward_sequence(m.dec1, cache.dec1, d_d1, &g->dec1);

    MatrixXd d_bottleneck = MatrixXd::Zero(batch, m.hidden_small);
    for (const auto& d : d_repeated) d_bottleneck += d;

    std::vector<MatrixXd> d_enc2_out(steps, MatrixXd::Zero(batch, m.hidden_small));
    d_enc2_out.back() = d_bottleneck;
    std::vector<MatrixXd> d_h1 =
        gru_backward_sequence(m.enc2, cache.enc2, d_enc2_out, &g->enc2);
    if (dropout)
        for (int t = 0; t < steps; ++t) d_h1[t] = d_h1[t].cwiseProduct(cache.mask_enc[t]);

    gru_backward_sequence(m.enc1, cache.enc1, d_h1, &g->enc1);
}

MatrixXd forward_dense(const AutoencoderModel& m, const MatrixXd& flat,
                       bool train_mode, Rng* rng, AeCache* cache) {
    const bool dropout = train_mode && m.dropout_rate > 0.0;
    auto layer = [&](const MatrixXd& in, int i) {
        MatrixXd a = in * m.dense_w[i].transpose();
        a.rowwise() += m.dense_b[i].transpose();
        return MatrixXd(a.array().tanh().matrix());
    };
    cache->flat_in = flat;
    cache->t1 = layer(flat, 0);
    if (dropout) {
        cache->dmask1 = dropout_mask(cache->t1.rows(), cache->t1.cols(), m.dropout_rate, rng);
        cache->a1 = cache->t1.cwiseProduct(cache->dmask1);
    } else {
        cache->a1 = cache->t1;
    }
    cache->a2 = layer(cache->a1, 1);
    cache->t3 = layer(cache->a2, 2);
    if (dropout) {
        cache->dmask3 = dropout_mask(cache->t3.rows(), cache->t3.cols(), m.dropout_rate, rng);
        cache->a3 = cache->t3.cwiseProduct(cache->dmask3);
    } else {
        cache->a3 = cache->t3;
    }
    cache->a4 = layer(cache->a3, 3);
    MatrixXd out = cache->a4 * m.dense_w[4].transpose();
    out.rowwise() += m.dense_b[4].transpose();
    return out;
}

void backward_dense(const AutoencoderModel& m, const AeCache& cache,
                    const MatrixXd& d_out, AutoencoderModel* g) {
    const bool dropout = cache.dmask1.size() > 0;

    g->dense_w[4].noalias() += d_out.transpose() * cache.a4;
    g->dense_b[4].noalias() += d_out.colwise().sum().transpose();
    MatrixXd d_a4 = d_out * m.dense_w[4];

    MatrixXd d_p4 = d_a4.cwiseProduct((1.0 - cache.a4.array().square()).matrix());
    g->dense_w[3].noalias() += d_p4.transpose() * cache.a3;
    g->dense_b[3].noalias() += d_p4.colwise().sum().transpose();
    MatrixXd d_a3 = d_p4 * m.dense_w[3];

    MatrixXd d_t3 = dropout ? MatrixXd(d_a3.cwiseProduct(cache.dmask3)) : d_a3;
    MatrixXd d_p3 = d_t3.cwiseProduct((1.0 - cache.t3.array().square()).matrix());
    g->dense_w[2].noalias() += d_p3.transpose() * cache.a2;
    g->dense_b[2].noalias() += d_p3.colwise().sum().transpose();
    MatrixXd d_a2 = d_p3 * m.dense_w[2];

    MatrixXd d_p2 = d_a2.cwiseProduct((1.0 - cache.a2.array().square()).matrix());
    g->dense_w[1].noalias() += d_p2.transpose() * cache.a1;
    g->dense_b[1].noalias() += d_p2.colwise().sum().transpose();
    MatrixXd d_a1 = d_p2 * m.dense_w[1];

    MatrixXd d_t1 = dropout ? MatrixXd(d_a1.cwiseProduct(cache.dmask1)) : d_a1;
    MatrixXd d_p1 = d_t1.cwiseProduct((1.0 - cache.t1.array().square()).matrix());
    g->dense_w[0].noalias() += d_p1.transpose() * cache.flat_in;
    g->dense_b[0].noalias() += d_p1.colwise().sum().transpose();
}

std::vector<MatrixXd> to_timestep_major(const AutoencoderModel& m,
                                        const std::vector<const MatrixXd*>& windows) {
    const int steps = m.window_len;
    std::vector<MatrixXd> x(steps, MatrixXd(windows.size(), m.n_devices));
    for (std::size_t b = 0; b < windows.size(); ++b) {
        const MatrixXd& w = *windows[b];
        if (w.rows() != steps || w.cols() != m.n_devices)
            throw Error("window shape (" + std::to_string(w.rows()) + "," +
                        std::to_string(w.cols()) + ") does not match model (" +
                        std::to_string(steps) + "," + std::to_string(m.n_devices) + ")");
        for (int t = 0; t < steps; ++t) x[t].row(static_cast<Eigen::Index>(b)) = w.row(t);
    }
    return x;
}

MatrixXd flatten_windows(const AutoencoderModel& m,
                         const std::vector<const MatrixXd*>& windows) {
    const Eigen::Index flat = static_cast<Eigen::Index>(m.window_len) * m.n_devices;
    MatrixXd out(windows.size(), flat);
    for (std::size_t b = 0; b < windows.size(); ++b) {
        const MatrixXd& w = *windows[b];
        if (w.rows() != m.window_len || w.cols() != m.n_devices)
            throw Error("window shape does not match model");
        for (int t = 0; t < m.window_len; ++t)
            out.block(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(t) * m.n_devices, 1,
                      m.n_devices) = w.row(t);
    }
    return out;
}

// Batched loss + gradient. Returns mean squared error over all cells of the
// batch; fills per-window errors when requested.
double batch_forward(const AutoencoderModel& m,
                     const std::vector<const MatrixXd*>& windows, bool train_mode,
                     Rng* rng, AeCache* cache, VectorXd* per_window,
                     AutoencoderModel* grads) {
    const Eigen::Index batch = static_cast<Eigen::Index>(windows.size());
    const double denom = static_cast<double>(batch) * m.window_len * m.n_devices;
    double total = 0.0;
    VectorXd per = VectorXd::Zero(batch);

    if (m.variant == Variant::Recurrent) {
        const auto x = to_timestep_major(m, windows);
        const auto y = forward_recurrent(m, x, train_mode, rng, cache);
        std::vector<MatrixXd> d_out;
        if (grads) d_out.resize(x.size());
        for (std::size_t t = 0; t < x.size(); ++t) {
            const MatrixXd diff = y[t] - x[t];
            per += diff.array().square().matrix().rowwise().sum();
            if (grads) d_out[t] = (2.0 / denom) * diff;
        }
        if (grads) backward_recurrent(m, *cache, d_out, grads);
    } else {
        const MatrixXd flat = flatten_windows(m, windows);
        const MatrixXd y = forward_dense(m, flat, train_mode, rng, cache);
        const MatrixXd diff = y - flat;
        per = diff.array().square().matrix().rowwise().sum();
        if (grads) {
            const MatrixXd d_out = (2.0 / denom) * diff;
            backward_dense(m, *cache, d_out, grads);
        }
    }
    total = per.sum() / denom;
    if (per_window) {
        const double cells = static_cast<double>(m.window_len) * m.n_devices;
        *per_window = per / cells;
    }
    return total;
}

GruLayerParams make_gru(int input_dim, int hidden_dim, Rng* rng) {
    auto mat = [&](int rows, int cols) {
        MatrixXd w(rows, cols);
        const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
        if (rng)
            for (Eigen::Index i = 0; i < w.rows(); ++i)
                for (Eigen::Index j = 0; j < w.cols(); ++j)
                    w(i, j) = rng->uniform(-bound, bound);
        else
            w.setZero();
        return w;
    };
    GruLayerParams p;
    p.wz = mat(hidden_dim, input_dim);
    p.uz = mat(hidden_dim, hidden_dim);
    p.wr = mat(hidden_dim, input_dim);
    p.ur = mat(hidden_dim, hidden_dim);
    p.wn = mat(hidden_dim, input_dim);
    p.un = mat(hidden_dim, hidden_dim);
    p.bz = VectorXd::Zero(hidden_dim);
    p.br = VectorXd::Zero(hidden_dim);
    p.bn = VectorXd::Zero(hidden_dim);
    return p;
}

AutoencoderModel zero_clone(const AutoencoderModel& m) {
    AutoencoderModel g = m;
    auto blocks = g.param_blocks();
    auto sizes = g.param_block_sizes();
    for (std::size_t i = 0; i < blocks.size(); ++i)
        std::fill(blocks[i], blocks[i] + sizes[i], 0.0);
    return g;
}

std::vector<std::string> param_block_names(const AutoencoderModel& m) {
    std::vector<std::string> names;
    if (m.variant == Variant::Recurrent) {
        for (const char* layer : {"enc1", "enc2", "dec1", "dec2"})
            for (const char* part : {"wz", "uz", "wr", "ur", "wn", "un", "bz", "br", "bn"})
                names.push_back(std::string(layer) + "." + part);
        names.push_back("proj_w");
        names.push_back("proj_b");
    } else {
        for (int i = 0; i < 5; ++i) {
            names.push_back("dense_w" + std::to_string(i));
            names.push_back("dense_b" + std::to_string(i));
        }
    }
    return names;
}

} // namespace

std::int64_t GruLayerParams::parameter_count() const {
    return wz.size() + uz.size() + wr.size() + ur.size() + wn.size() + un.size() +
           bz.size() + br.size() + bn.size();
}

Eigen::VectorXd gru_cell_forward(const GruLayerParams& params,
                                 const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& h) {
    if (x.size() != params.wz.cols() || h.size() != params.wz.rows())
        throw Error("gru_cell_forward: shape mismatch");
    const VectorXd z =
        (1.0 / (1.0 + (-(params.wz * x + params.uz * h + params.bz)).array().exp())).matrix();
    const VectorXd r =
        (1.0 / (1.0 + (-(params.wr * x + params.ur * h + params.br)).array().exp())).matrix();
    const VectorXd n =
        (params.wn * x + params.un * r.cwiseProduct(h) + params.bn).array().tanh().matrix();
    return (1.0 - z.array()).matrix().cwiseProduct(n) + z.cwiseProduct(h);
}

std::int64_t AutoencoderModel::parameter_count() const {
    std::int64_t total = 0;
    for (const auto s : param_block_sizes()) total += s;
    return total;
}

std::vector<double*> AutoencoderModel::param_blocks() {
    std::vector<double*> blocks;
    if (variant == Variant::Recurrent) {
        for (GruLayerParams* layer : {&enc1, &enc2, &dec1, &dec2}) {
            blocks.push_back(layer->wz.data());
            blocks.push_back(layer->uz.data());
            blocks.push_back(layer->wr.data());
            blocks.push_back(layer->ur.data());
            blocks.push_back(layer->wn.data());
            blocks.push_back(layer->un.data());
            blocks.push_back(layer->bz.data());
            blocks.push_back(layer->br.data());
            blocks.push_back(layer->bn.data());
        }
        blocks.push_back(proj_w.data());
        blocks.push_back(proj_b.data());
    } else {
        for (std::size_t i = 0; i < dense_w.size(); ++i) {
            blocks.push_back(dense_w[i].data());
            blocks.push_back(dense_b[i].data());
        }
    }
    return blocks;
}

std::vector<const double*> AutoencoderModel::param_blocks() const {
    auto blocks = const_cast<AutoencoderModel*>(this)->param_blocks();
    return {blocks.begin(), blocks.end()};
}

std::vector<std::int64_t> AutoencoderModel::param_block_sizes() const {
    std::vector<std::int64_t> sizes;
    if (variant == Variant::Recurrent) {
        for (const GruLayerParams* layer : {&enc1, &enc2, &dec1, &dec2}) {
            sizes.push_back(layer->wz.size());
            sizes.push_back(layer->uz.size());
            sizes.push_back(layer->wr.size());
            sizes.push_back(layer->ur.size());
            sizes.push_back(layer->wn.size());
            sizes.push_back(layer->un.size());
            sizes.push_back(layer->bz.size());
            sizes.push_back(layer->br.size());
            sizes.push_back(layer->bn.size());
        }
        sizes.push_back(proj_w.size());
        sizes.push_back(proj_b.size());
    } else {
        for (std::size_t i = 0; i < dense_w.size(); ++i) {
            sizes.push_back(dense_w[i].size());
            sizes.push_back(dense_b[i].size());
        }
    }
    return sizes;
}

AutoencoderModel init_autoencoder(int n_devices, const TrainConfig& config) {
    if (n_devices < 1) throw Error("init_autoencoder: need at least one device");
    AutoencoderModel m;
    m.variant = config.variant;
    m.n_devices = n_devices;
    m.window_len = config.window_len;
    m.hidden_large = config.hidden_large;
    m.hidden_small = config.hidden_small;
    m.dropout_rate = config.dropout;
    m.meta.seed = config.seed;

    Rng rng(config.seed);
    if (m.variant == Variant::Recurrent) {
        m.enc1 = make_gru(n_devices, m.hidden_large, &rng);
        m.enc2 = make_gru(m.hidden_large, m.hidden_small, &rng);
        m.dec1 = make_gru(m.hidden_small, m.hidden_small, &rng);
        m.dec2 = make_gru(m.hidden_small, m.hidden_large, &rng);
        const double bound = 1.0 / std::sqrt(static_cast<double>(m.hidden_large));
        m.proj_w.resize(n_devices, m.hidden_large);
        for (Eigen::Index i = 0; i < m.proj_w.rows(); ++i)
            for (Eigen::Index j = 0; j < m.proj_w.cols(); ++j)
                m.proj_w(i, j) = rng.uniform(-bound, bound);
        m.proj_b = VectorXd::Zero(n_devices);
    } else {
        const int flat = m.window_len * n_devices;
        const int dims[6] = {flat, m.hidden_large, m.hidden_small, m.hidden_small,
                             m.hidden_large, flat};
        m.dense_w.resize(5);
        m.dense_b.resize(5);
        for (int i = 0; i < 5; ++i) {
            const int rows = dims[i + 1];
            const int cols = dims[i];
            const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
            m.dense_w[i].resize(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r)
                for (Eigen::Index c = 0; c < cols; ++c)
                    m.dense_w[i](r, c) = rng.uniform(-bound, bound);
            m.dense_b[i] = VectorXd::Zero(rows);
        }
    }
    return m;
}

Eigen::MatrixXd autoencoder_forward(const AutoencoderModel& model,
                                    const Eigen::MatrixXd& window,
                                    bool train_mode, Rng* rng) {
    if (train_mode && model.dropout_rate > 0.0 && rng == nullptr)
        throw Error("autoencoder_forward: train mode requires an rng");
    AeCache cache;
    std::vector<const MatrixXd*> one{&window};
    if (model.variant == Variant::Recurrent) {
        const auto x = to_timestep_major(model, one);
        const auto y = forward_recurrent(model, x, train_mode, rng, &cache);
        MatrixXd out(model.window_len, model.n_devices);
        for (int t = 0; t < model.window_len; ++t) out.row(t) = y[t].row(0);
        return out;
    }
    const MatrixXd flat = flatten_windows(model, one);
    const MatrixXd y = forward_dense(model, flat, train_mode, rng, &cache);
    MatrixXd out(model.window_len, model.n_devices);
    for (int t = 0; t < model.window_len; ++t)
        out.row(t) = y.block(0, static_cast<Eigen::Index>(t) * model.n_devices, 1, model.n_devices);
    return out;
}

double mse(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error("mse: shape mismatch");
    return (a - b).array().square().mean();
}

double score_window(const AutoencoderModel& model, const Eigen::MatrixXd& window) {
    return mse(autoencoder_forward(model, window, false), window);
}

Eigen::VectorXd score_windows(const AutoencoderModel& model,
                              const std::vector<Eigen::MatrixXd>& windows) {
    VectorXd scores(windows.size());
    constexpr std::size_t kChunk = 256;
    AeCache cache;
    for (std::size_t start = 0; start < windows.size(); start += kChunk) {
        const std::size_t end = std::min(windows.size(), start + kChunk);
        std::vector<const MatrixXd*> chunk;
        chunk.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) chunk.push_back(&windows[i]);
        VectorXd per;
        batch_forward(model, chunk, false, nullptr, &cache, &per, nullptr);
        scores.segment(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(end - start)) = per;
    }
    return scores;
}

Eigen::VectorXd loss_gradient(const AutoencoderModel& model,
                              const std::vector<Eigen::MatrixXd>& windows,
                              double* loss_out) {
    AutoencoderModel grads = zero_clone(model);
    AeCache cache;
    std::vector<const MatrixXd*> ptrs;
    ptrs.reserve(windows.size());
    for (const auto& w : windows) ptrs.push_back(&w);
    const double loss = batch_forward(model, ptrs, false, nullptr, &cache, nullptr, &grads);
    if (loss_out) *loss_out = loss;

    const auto blocks = grads.param_blocks();
    const auto sizes = grads.param_block_sizes();
    Eigen::VectorXd flat(grads.parameter_count());
    std::int64_t offset = 0;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        std::memcpy(flat.data() + offset, blocks[i], sizeof(double) * sizes[i]);
        offset += sizes[i];
    }
    return flat;
}

TrainOutput train_autoencoder(const std::vector<Eigen::MatrixXd>& windows,
                              const TrainConfig& config) {
    if (windows.empty()) throw Error("train_autoencoder: zero windows");
    if (config.batch_size < 1) throw Error("train_autoencoder: batch_size must be >= 1");
    if (config.lr_start < config.lr_floor || config.lr_floor <= 0.0)
        throw Error("train_autoencoder: require lr_start >= lr_floor > 0");
    if (config.dropout < 0.0 || config.dropout >= 1.0)
        throw Error("train_autoencoder: dropout must be in [0,1)");

    const auto start_time = std::chrono::steady_clock::now();
    const int n_devices = static_cast<int>(windows.front().cols());

    AutoencoderModel model = init_autoencoder(n_devices, config);

    // Chronological split: the last fraction of windows validates.
    const std::size_t n = windows.size();
    std::size_t n_val = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * config.validation_fraction));
    if (n_val >= n) n_val = n - 1;
    const std::size_t n_train = n - n_val;

    std::vector<const MatrixXd*> val_ptrs;
    for (std::size_t i = n_train; i < n; ++i) val_ptrs.push_back(&windows[i]);

    Rng rng(config.seed ^ 0x5eedf00dULL);
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);

    // Adam state over the flat parameter vector.
    const std::int64_t n_params = model.parameter_count();
    VectorXd adam_m = VectorXd::Zero(n_params);
    VectorXd adam_v = VectorXd::Zero(n_params);
    std::int64_t adam_t = 0;

    AutoencoderModel grads = zero_clone(model);
    const auto grad_blocks_sizes = grads.param_block_sizes();

    TrainReport report;
    double best_val = std::numeric_limits<double>::infinity();
    AutoencoderModel best_model = model;
    int epochs_since_best = 0;
    AeCache cache;

    auto eval_loss = [&](const std::vector<const MatrixXd*>& ptrs) {
        if (ptrs.empty()) return std::numeric_limits<double>::quiet_NaN();
        double total = 0.0;
        constexpr std::size_t kChunk = 256;
        for (std::size_t s = 0; s < ptrs.size(); s += kChunk) {
            const std::size_t e = std::min(ptrs.size(), s + kChunk);
            std::vector<const MatrixXd*> chunk(ptrs.begin() + s, ptrs.begin() + e);
            total += batch_forward(model, chunk, false, nullptr, &cache, nullptr, nullptr) *
                     static_cast<double>(e - s);
        }
        return total / static_cast<double>(ptrs.size());
    };

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        // Milestone learning-rate decay, floored.
        double lr = config.lr_start;
        for (const int milestone : config.lr_milestones)
            if (epoch > milestone) lr *= config.lr_decay_factor;
        lr = std::max(lr, config.lr_floor);

        // Fisher-Yates shuffle from the training rng.
        for (std::size_t i = n_train; i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.below(i));
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss = 0.0;
        for (std::size_t s = 0; s < n_train; s += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t e =
                std::min(n_train, s + static_cast<std::size_t>(config.batch_size));
            std::vector<const MatrixXd*> batch;
            batch.reserve(e - s);
            for (std::size_t i = s; i < e; ++i) batch.push_back(&windows[order[i]]);

            auto gb = grads.param_blocks();
            for (std::size_t i = 0; i < gb.size(); ++i)
                std::fill(gb[i], gb[i] + grad_blocks_sizes[i], 0.0);

            const double loss =
                batch_forward(model, batch, true, &rng, &cache, nullptr, &grads);
            epoch_loss += loss * static_cast<double>(e - s);
            if (!std::isfinite(loss))
                throw Error("train_autoencoder: non-finite loss at epoch " +
                            std::to_string(epoch));

            // Adam update.
            ++adam_t;
            const double bc1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(adam_t));
            const double bc2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(adam_t));
            auto mb = model.param_blocks();
            std::int64_t off = 0;
            for (std::size_t i = 0; i < mb.size(); ++i) {
                double* w = mb[i];
                const double* gp = gb[i];
                for (std::int64_t k = 0; k < grad_blocks_sizes[i]; ++k) {
                    const double gval = gp[k];
                    double& mval = adam_m[off + k];
                    double& vval = adam_v[off + k];
                    mval = config.adam_beta1 * mval + (1.0 - config.adam_beta1) * gval;
                    vval = config.adam_beta2 * vval + (1.0 - config.adam_beta2) * gval * gval;
                    w[k] -= lr * (mval / bc1) / (std::sqrt(vval / bc2) + config.adam_eps);
                }
                off += grad_blocks_sizes[i];
            }
        }
        epoch_loss /= static_cast<double>(n_train);

        const double val = val_ptrs.empty() ? epoch_loss : eval_loss(val_ptrs);
        report.train_loss.push_back(epoch_loss);
        report.val_loss.push_back(val);

        if (val < best_val) {
            best_val = val;
            best_model = model;
            report.best_epoch = epoch;
            epochs_since_best = 0;
        } else {
            ++epochs_since_best;
            if (epochs_since_best >= config.early_stop_patience) {
                report.stop_reason = StopReason::EarlyStop;
                break;
            }
        }
    }
    if (report.stop_reason != StopReason::EarlyStop) report.stop_reason = StopReason::MaxEpochs;

    best_model.meta.epochs_run = static_cast<int>(report.train_loss.size());
    best_model.meta.final_train_loss = report.train_loss.back();
    best_model.meta.final_val_loss = report.val_loss.back();
    best_model.meta.seed = config.seed;
    report.wall_time_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();

    return {std::move(best_model), std::move(report)};
}

GradCheckReport numeric_gradient_check(AutoencoderModel& model,
                                       const Eigen::MatrixXd& window,
                                       double eps, double tol,
                                       int check_count, std::uint64_t seed) {
    GradCheckReport report;
    std::vector<Eigen::MatrixXd> one{window};
    const Eigen::VectorXd analytic = loss_gradient(model, one);

    const auto blocks = model.param_blocks();
    const auto sizes = model.param_block_sizes();
    const auto names = param_block_names(model);
    const std::int64_t total = model.parameter_count();

    std::vector<std::int64_t> chosen;
    if (check_count >= total) {
        chosen.resize(total);
        std::iota(chosen.begin(), chosen.end(), 0);
    } else {
        Rng rng(seed);
        std::unordered_set<std::int64_t> seen;
        while (static_cast<int>(chosen.size()) < check_count) {
            const auto idx = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(total)));
            if (seen.insert(idx).second) chosen.push_back(idx);
        }
    }

    auto locate = [&](std::int64_t flat_idx) {
        std::size_t block = 0;
        while (flat_idx >= sizes[block]) {
            flat_idx -= sizes[block];
            ++block;
        }
        return std::pair<std::size_t, std::int64_t>(block, flat_idx);
    };
    auto loss_at = [&]() { return score_window(model, window); };

    double max_rel = 0.0;
    std::string worst;
    for (const auto flat_idx : chosen) {
        const auto [block, off] = locate(flat_idx);
        double& param = blocks[block][off];
        const double saved = param;
        param = saved + eps;
        const double plus = loss_at();
        param = saved - eps;
        const double minus = loss_at();
        param = saved;
        const double numeric = (plus - minus) / (2.0 * eps);
        const double a = analytic[flat_idx];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        const double rel = std::abs(a - numeric) / denom;
        if (rel > max_rel) {
            max_rel = rel;
            worst = names[block];
        }
    }
    report.max_rel_error = max_rel;
    report.checked = static_cast<int>(chosen.size());
    report.pass = max_rel <= tol;
    report.worst_block = worst;
    return report;
}

namespace {

constexpr char kMagic[8] = {'A', 'R', 'G', 'U', 'S', 'A', 'E', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw Error("model stream truncated");
    return v;
}

} // namespace

void save_model(const AutoencoderModel& model, std::ostream& out) {
    out.write(kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, 1); // version
    write_pod<std::uint8_t>(out, model.variant == Variant::Recurrent ? 0 : 1);
    write_pod<std::int32_t>(out, model.n_devices);
    write_pod<std::int32_t>(out, model.window_len);
    write_pod<std::int32_t>(out, model.hidden_large);
    write_pod<std::int32_t>(out, model.hidden_small);
    write_pod<double>(out, model.dropout_rate);
    write_pod<std::uint64_t>(out, model.catalog_hash);
    write_pod<std::int32_t>(out, model.meta.epochs_run);
    write_pod<double>(out, model.meta.final_train_loss);
    write_pod<double>(out, model.meta.final_val_loss);
    write_pod<std::uint64_t>(out, model.meta.seed);

    const auto blocks = model.param_blocks();
    const auto sizes = model.param_block_sizes();
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(blocks.size()));
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        write_pod<std::int64_t>(out, sizes[i]);
        out.write(reinterpret_cast<const char*>(blocks[i]),
                  static_cast<std::streamsize>(sizeof(double) * sizes[i]));
    }
    if (!out) throw Error("model write failed");
}

AutoencoderModel load_model(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw Error("not a model file");
    const auto version = read_pod<std::uint32_t>(in);
    if (version != 1) throw Error("unsupported model version " + std::to_string(version));

    TrainConfig shape_cfg;
    const auto variant_code = read_pod<std::uint8_t>(in);
    shape_cfg.variant = variant_code == 0 ? Variant::Recurrent : Variant::Dense;
    const auto n_devices = read_pod<std::int32_t>(in);
    shape_cfg.window_len = read_pod<std::int32_t>(in);
    shape_cfg.hidden_large = read_pod<std::int32_t>(in);
    shape_cfg.hidden_small = read_pod<std::int32_t>(in);
    shape_cfg.dropout = read_pod<double>(in);
    if (n_devices < 1 || shape_cfg.window_len < 1 || shape_cfg.hidden_large < 1 ||
        shape_cfg.hidden_small < 1)
        throw Error("model file has invalid dimensions");

    AutoencoderModel model = init_autoencoder(n_devices, shape_cfg);
    model.catalog_hash = read_pod<std::uint64_t>(in);
    model.meta.epochs_run = read_pod<std::int32_t>(in);
    model.meta.final_train_loss = read_pod<double>(in);
    model.meta.final_val_loss = read_pod<double>(in);
    model.meta.seed = read_pod<std::uint64_t>(in);

    const auto block_count = read_pod<std::uint32_t>(in);
    auto blocks = model.param_blocks();
    const auto sizes = model.param_block_sizes();
    if (block_count != blocks.size()) throw Error("model file block count mismatch");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto stored = read_pod<std::int64_t>(in);
        if (stored != sizes[i]) throw Error("model file block size mismatch");
        in.read(reinterpret_cast<char*>(blocks[i]),
                static_cast<std::streamsize>(sizeof(double) * sizes[i]));
        if (!in) throw Error("model stream truncated");
    }
    return model;
}

void save_model_file(const AutoencoderModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file '" + path + "'");
    save_model(model, out);
}

AutoencoderModel load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file '" + path + "'");
    return load_model(in);
}

} // namespace argus::nn
