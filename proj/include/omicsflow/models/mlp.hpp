#ifndef OMICSFLOW_MODELS_MLP_HPP
#define OMICSFLOW_MODELS_MLP_HPP

#include "../core/random.hpp"
#include "l1_logistic.hpp"
#include "spec.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace omicsflow {

enum class MlpLoss {
    /// Mean binary cross-entropy on the output logit; targets in {0, 1}.
    logistic,
    /// Weighted mean squared error `(1/N) sum w_i (t_i - f(x_i))^2`.
    squared
};

/**
 * @brief Fully connected network with equal-width tanh hidden layers and one linear output.
 *
 * All weights and biases live in one flat parameter vector so that gradients can be checked
 * coordinate by coordinate against finite differences.
 * Layer `l` maps `sizes[l]` inputs to `sizes[l+1]` outputs with a row-major weight block followed by its bias block.
 */
class Mlp {
public:
    std::vector<std::size_t> sizes;
    std::vector<double> params;
    double l2 = 0;

    Mlp() = default;

    Mlp(std::size_t n_inputs, std::size_t n_hidden_layers, std::size_t width, std::uint64_t seed, double l2_penalty = 0) : l2(l2_penalty) {
        sizes.push_back(n_inputs);
        for (std::size_t h = 0; h < n_hidden_layers; ++h) {
            sizes.push_back(width);
        }
        sizes.push_back(1);

        std::size_t total = 0;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            total += sizes[l] * sizes[l + 1] + sizes[l + 1];
        }
        params.assign(total, 0.0);

        // Glorot-uniform weights, zero biases.
        Rng rng(derive_seed(seed, 0x6d6c70));
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
            const double limit = std::sqrt(6.0 / static_cast<double>(sizes[l] + sizes[l + 1]));
            for (std::size_t k = 0; k < sizes[l] * sizes[l + 1]; ++k) {
                params[off + k] = (2 * uniform01(rng) - 1) * limit;
            }
            off += sizes[l] * sizes[l + 1] + sizes[l + 1];
        }
    }

    std::size_t n_layers() const { return sizes.size() - 1; }

    std::size_t weight_offset(std::size_t layer) const {
        std::size_t off = 0;
        for (std::size_t l = 0; l < layer; ++l) {
            off += sizes[l] * sizes[l + 1] + sizes[l + 1];
        }
        return off;
    }

    double forward(std::span<const double> x) const {
        std::vector<double> cur(x.begin(), x.end()), next;
        std::size_t off = 0;
        for (std::size_t l = 0; l < n_layers(); ++l) {
            const std::size_t in = sizes[l], out = sizes[l + 1];
            next.assign(out, 0.0);
            for (std::size_t o = 0; o < out; ++o) {
                double s = params[off + in * out + o];
                for (std::size_t i = 0; i < in; ++i) {
                    s += params[off + o * in + i] * cur[i];
                }
                next[o] = l + 1 < n_layers() ? std::tanh(s) : s;
            }
            off += in * out + out;
            cur.swap(next);
        }
        return cur[0];
    }

    /**
     * Loss over the rows in `rows` (all rows when empty) and its gradient with respect to `params`,
     * including the L2 penalty `l2/2 * |W|^2` on weights (not biases).
     */
    double loss_and_gradient(const Matrix& x, std::span<const double> targets, std::span<const double> weights, MlpLoss kind,
                             std::vector<double>& grad, std::span<const std::size_t> rows = {}) const {
        grad.assign(params.size(), 0.0);
        const std::size_t n = rows.empty() ? x.rows() : rows.size();
        const double nd = static_cast<double>(n);
        std::vector<std::vector<double>> act(sizes.size());
        std::vector<double> delta, prev_delta;
        double loss = 0;

        for (std::size_t b = 0; b < n; ++b) {
            const std::size_t r = rows.empty() ? b : rows[b];
            auto xr = x.row(r);
            act[0].assign(xr.begin(), xr.end());
            std::size_t off = 0;
            for (std::size_t l = 0; l < n_layers(); ++l) {
                const std::size_t in = sizes[l], out = sizes[l + 1];
                act[l + 1].assign(out, 0.0);
                for (std::size_t o = 0; o < out; ++o) {
                    double s = params[off + in * out + o];
                    for (std::size_t i = 0; i < in; ++i) {
                        s += params[off + o * in + i] * act[l][i];
                    }
                    act[l + 1][o] = l + 1 < n_layers() ? std::tanh(s) : s;
                }
                off += in * out + out;
            }

            const double f = act.back()[0];
            const double w = weights.empty() ? 1.0 : weights[r];
            double dout = 0;
            if (kind == MlpLoss::logistic) {
                const double t = targets[r];
                loss += detail::log1p_exp(f) - t * f;
                dout = (detail::sigmoid(f) - t) / nd;
            } else {
                const double e = f - targets[r];
                loss += w * e * e;
                dout = 2 * w * e / nd;
            }

            delta.assign(1, dout);
            for (std::size_t l = n_layers(); l-- > 0;) {
                const std::size_t in = sizes[l], out = sizes[l + 1];
                const std::size_t woff = weight_offset(l);
                for (std::size_t o = 0; o < out; ++o) {
                    grad[woff + in * out + o] += delta[o];
                    for (std::size_t i = 0; i < in; ++i) {
                        grad[woff + o * in + i] += delta[o] * act[l][i];
                    }
                }
                if (l == 0) {
                    break;
                }
                prev_delta.assign(in, 0.0);
                for (std::size_t i = 0; i < in; ++i) {
                    double s = 0;
                    for (std::size_t o = 0; o < out; ++o) {
                        s += params[woff + o * in + i] * delta[o];
                    }
                    const double a = act[l][i];
                    prev_delta[i] = s * (1 - a * a);
                }
                delta.swap(prev_delta);
            }
        }
        loss /= nd;

        if (l2 > 0) {
            for (std::size_t l = 0; l < n_layers(); ++l) {
                const std::size_t woff = weight_offset(l), nw = sizes[l] * sizes[l + 1];
                for (std::size_t k = 0; k < nw; ++k) {
                    loss += 0.5 * l2 * params[woff + k] * params[woff + k];
                    grad[woff + k] += l2 * params[woff + k];
                }
            }
        }
        return loss;
    }

    double loss(const Matrix& x, std::span<const double> targets, std::span<const double> weights, MlpLoss kind) const {
        std::vector<double> g;
        return loss_and_gradient(x, targets, weights, kind, g);
    }

    /**
     * Mini-batch training with Adam. Returns the full-data loss after each epoch.
     */
    std::vector<double> train(const Matrix& x, std::span<const double> targets, std::span<const double> weights, MlpLoss kind,
                              std::size_t epochs, double learning_rate, std::size_t batch_size, std::uint64_t seed) {
        constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
        std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0), grad;
        std::vector<std::size_t> order(x.rows());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(seed, 0x7472616e));
        std::vector<double> history;
        long long step = 0;
        batch_size = std::max<std::size_t>(1, std::min(batch_size, x.rows()));

        for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
            shuffle_in_place(order, rng);
            for (std::size_t start = 0; start < order.size(); start += batch_size) {
                const std::size_t end = std::min(order.size(), start + batch_size);
                std::span<const std::size_t> batch(order.data() + start, end - start);
                loss_and_gradient(x, targets, weights, kind, grad, batch);
                ++step;
                const double c1 = 1 - std::pow(beta1, static_cast<double>(step));
                const double c2 = 1 - std::pow(beta2, static_cast<double>(step));
                for (std::size_t k = 0; k < params.size(); ++k) {
                    m[k] = beta1 * m[k] + (1 - beta1) * grad[k];
                    v[k] = beta2 * v[k] + (1 - beta2) * grad[k] * grad[k];
                    params[k] -= learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
                }
            }
            history.push_back(loss(x, targets, weights, kind));
        }
        return history;
    }
};

/**
 * Largest relative discrepancy between the analytic gradient and central finite differences over every parameter.
 * Relative error is `|a - n| / max(|a|, |n|, floor)`; the floor keeps parameters with near-zero gradient from
 * dominating through round-off.
 */
inline double mlp_gradient_check(const Mlp& net, const Matrix& x, std::span<const double> targets, std::span<const double> weights,
                                 MlpLoss kind, double h = 1e-5, double floor = 1e-6) {
    std::vector<double> analytic;
    net.loss_and_gradient(x, targets, weights, kind, analytic);
    Mlp probe = net;
    double worst = 0;
    for (std::size_t k = 0; k < net.params.size(); ++k) {
        const double orig = probe.params[k];
        probe.params[k] = orig + h;
        const double up = probe.loss(x, targets, weights, kind);
        probe.params[k] = orig - h;
        const double down = probe.loss(x, targets, weights, kind);
        probe.params[k] = orig;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), floor});
        worst = std::max(worst, std::abs(analytic[k] - numeric) / denom);
    }
    return worst;
}

/**
 * @brief "Rectangle" MLP classifier: every hidden layer has the same width; logistic loss; score = output logit.
 */
class RectangleMlp {
public:
    Standardizer standardizer;
    Mlp net;
    std::vector<double> loss_history;

    static RectangleMlp fit(const Matrix& raw, const std::vector<int>& y, const ModelSpec& spec) {
        check_binary_labels(y, raw.rows());
        RectangleMlp model;
        model.standardizer = Standardizer::fit(raw);
        const Matrix x = model.standardizer.apply(raw);
        model.net = Mlp(x.cols(), static_cast<std::size_t>(spec.get("n_hidden_layers")), static_cast<std::size_t>(spec.get("width")),
                        spec.seed, spec.get("l2"));
        std::vector<double> t(y.begin(), y.end());
        model.loss_history = model.net.train(x, t, {}, MlpLoss::logistic, static_cast<std::size_t>(spec.get("epochs")),
                                             spec.get("learning_rate"), static_cast<std::size_t>(spec.get("batch_size")), spec.seed);
        return model;
    }

    std::vector<double> scores(const Matrix& raw) const {
        const Matrix x = standardizer.apply(raw);
        std::vector<double> out(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            out[r] = net.forward(x.row(r));
        }
        return out;
    }
};

/**
 * @brief MLP regressor of observed survival time.
 *
 * Minimizes `(1/N) sum w_i (C_i - f(x_i))^2` with `w_i = 1` for observed deaths and `censor_weight` for censored patients.
 * Targets are centred and scaled internally, which rescales the loss by a constant without moving its minimizer.
 * The score is the predicted time: longer predicted survival ranks as class 1.
 */
class MlpRegressor {
public:
    Standardizer standardizer;
    Mlp net;
    double target_mean = 0;
    double target_scale = 1;
    std::vector<double> loss_history;

    static MlpRegressor fit(const Matrix& raw, const std::vector<double>& times, const std::vector<double>& weights, const ModelSpec& spec) {
        if (times.size() != raw.rows() || (!weights.empty() && weights.size() != raw.rows())) {
            throw DataError("regressor: feature rows and target length differ");
        }
        if (raw.rows() < 2) {
            throw DataError("at least 2 samples are required to fit a model");
        }
        MlpRegressor model;
        model.standardizer = Standardizer::fit(raw);
        const Matrix x = model.standardizer.apply(raw);
        model.target_mean = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
        double ss = 0;
        for (double t : times) {
            ss += (t - model.target_mean) * (t - model.target_mean);
        }
        const double sd = std::sqrt(ss / static_cast<double>(times.size()));
        model.target_scale = sd > 1e-12 ? sd : 1.0;
        std::vector<double> t(times.size());
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = (times[i] - model.target_mean) / model.target_scale;
        }

        model.net = Mlp(x.cols(), static_cast<std::size_t>(spec.get("n_hidden_layers")), static_cast<std::size_t>(spec.get("width")),
                        spec.seed, spec.get("l2"));
        model.loss_history = model.net.train(x, t, weights, MlpLoss::squared, static_cast<std::size_t>(spec.get("epochs")),
                                             spec.get("learning_rate"), static_cast<std::size_t>(spec.get("batch_size")), spec.seed);
        return model;
    }

    std::vector<double> predict(const Matrix& raw) const {
        const Matrix x = standardizer.apply(raw);
        std::vector<double> out(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            out[r] = target_mean + target_scale * net.forward(x.row(r));
        }
        return out;
    }

    std::vector<double> scores(const Matrix& raw) const { return predict(raw); }
};

inline void to_json(nlohmann::json& j, const Mlp& m) {
    j = nlohmann::json{{"sizes", m.sizes}, {"params", m.params}, {"l2", m.l2}};
}

inline void from_json(const nlohmann::json& j, Mlp& m) {
    j.at("sizes").get_to(m.sizes);
    j.at("params").get_to(m.params);
    j.at("l2").get_to(m.l2);
}

inline void to_json(nlohmann::json& j, const RectangleMlp& m) {
    j = nlohmann::json{{"standardizer", m.standardizer}, {"net", m.net}};
}

inline void from_json(const nlohmann::json& j, RectangleMlp& m) {
    j.at("standardizer").get_to(m.standardizer);
    j.at("net").get_to(m.net);
}

inline void to_json(nlohmann::json& j, const MlpRegressor& m) {
    j = nlohmann::json{{"standardizer", m.standardizer}, {"net", m.net}, {"target_mean", m.target_mean}, {"target_scale", m.target_scale}};
}

inline void from_json(const nlohmann::json& j, MlpRegressor& m) {
    j.at("standardizer").get_to(m.standardizer);
    j.at("net").get_to(m.net);
    j.at("target_mean").get_to(m.target_mean);
    j.at("target_scale").get_to(m.target_scale);
}

}

#endif
