#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "strangeres/errors.hpp"
#include "strangeres/linalg.hpp"
#include "strangeres/rng.hpp"

namespace sr {

// Monomial features up to a fixed total degree, bias included.
struct FeatureMap {
    enum class Kind { linear, polynomial } kind = Kind::linear;
    std::size_t input_dim = 0;
    std::size_t degree = 1;
    // exponent tuples, one per feature; the first is the bias (all zeros)
    std::vector<std::vector<std::size_t>> monomials;

    static FeatureMap linear(std::size_t n) { return make(Kind::linear, n, 1); }
    static FeatureMap polynomial(std::size_t n, std::size_t degree) {
        if (degree < 1) throw std::invalid_argument("FeatureMap: degree must be >= 1");
        return make(Kind::polynomial, n, degree);
    }

    std::size_t feature_dim() const { return monomials.size(); }

    Vector features(const Vector& x) const {
        if (x.size() != input_dim) throw DimensionError("FeatureMap: input dim mismatch");
        Vector f(monomials.size(), 1.0);
        for (std::size_t j = 0; j < monomials.size(); ++j)
            for (std::size_t i = 0; i < input_dim; ++i)
                for (std::size_t e = 0; e < monomials[j][i]; ++e) f[j] *= x[i];
        return f;
    }

  private:
    static FeatureMap make(Kind kind, std::size_t n, std::size_t degree) {
        FeatureMap fm;
        fm.kind = kind;
        fm.input_dim = n;
        fm.degree = degree;
        std::vector<std::size_t> expo(n, 0);
        fm.enumerate(expo, 0, degree);
        return fm;
    }
    void enumerate(std::vector<std::size_t>& expo, std::size_t var, std::size_t budget) {
        if (var == input_dim) {
            monomials.push_back(expo);
            return;
        }
        for (std::size_t e = 0; e <= budget; ++e) {
            expo[var] = e;
            enumerate(expo, var + 1, budget - e);
        }
        expo[var] = 0;
    }
};

struct RidgeModel {
    FeatureMap fm;
    Vector weights;
    double lambda = 0.0;
};

struct RidgeFit {
    RidgeModel model;
    double train_mse = 0.0;
};

namespace detail {

// Cholesky solve of a symmetric positive definite system.
inline Vector cholesky_solve(Matrix G, Vector b) {
    const std::size_t n = b.size();
    for (std::size_t k = 0; k < n; ++k) {
        double d = G(k, k);
        for (std::size_t j = 0; j < k; ++j) d -= G(k, j) * G(k, j);
        if (!(d > 0.0)) throw std::runtime_error("cholesky_solve: matrix not positive definite");
        G(k, k) = std::sqrt(d);
        for (std::size_t i = k + 1; i < n; ++i) {
            double s = G(i, k);
            for (std::size_t j = 0; j < k; ++j) s -= G(i, j) * G(k, j);
            G(i, k) = s / G(k, k);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        double s = b[i];
        for (std::size_t j = 0; j < i; ++j) s -= G(i, j) * b[j];
        b[i] = s / G(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= G(j, i) * b[j];
        b[i] = s / G(i, i);
    }
    return b;
}

}  // namespace detail

// Normal-equation ridge: (Phi^T Phi + lambda I) w = Phi^T y.
inline RidgeFit fit_ridge(const std::vector<Vector>& states, const std::vector<double>& targets,
                          const FeatureMap& fm, double lambda) {
    if (states.size() != targets.size()) throw DimensionError("fit_ridge: sample count mismatch");
    if (lambda < 0.0) throw std::invalid_argument("fit_ridge: lambda must be >= 0");
    const std::size_t D = fm.feature_dim();
    if (states.size() < D) throw std::invalid_argument("fit_ridge: need at least D samples");

    Matrix G(D, D);
    Vector b(D, 0.0);
    for (std::size_t t = 0; t < states.size(); ++t) {
        const Vector f = fm.features(states[t]);
        for (std::size_t i = 0; i < D; ++i) {
            b[i] += f[i] * targets[t];
            const double fi = f[i];
            for (std::size_t j = i; j < D; ++j) G(i, j) += fi * f[j];
        }
    }
    for (std::size_t i = 0; i < D; ++i) {
        G(i, i) += lambda;
        for (std::size_t j = 0; j < i; ++j) G(i, j) = G(j, i);
    }

    RidgeFit fit;
    fit.model.fm = fm;
    fit.model.lambda = lambda;
    try {
        fit.model.weights = detail::cholesky_solve(G, b);
    } catch (const std::runtime_error&) {
        throw std::runtime_error("fit_ridge: singular normal equations; try lambda > 0");
    }
    double mse = 0.0;
    for (std::size_t t = 0; t < states.size(); ++t) {
        const double e = dot(fit.model.weights, fm.features(states[t])) - targets[t];
        mse += e * e;
    }
    fit.train_mse = mse / static_cast<double>(states.size());
    return fit;
}

inline double predict(const RidgeModel& model, const Vector& state) {
    return dot(model.weights, model.fm.features(state));
}

// Fully connected net with scaled logistic hidden activations
//   sigma(s) = (z_max - z_min) / (1 + e^{-s}) + z_min
// and an affine output layer.
struct MlpModel {
    std::vector<std::size_t> sizes;  // input, hidden..., output(=1)
    std::vector<Matrix> W;           // W[l]: sizes[l+1] x sizes[l]
    std::vector<Vector> b;
    double z_min = 0.0, z_max = 1.0;

    static MlpModel make(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                         double z_min, double z_max) {
        MlpModel m;
        m.sizes.push_back(input_dim);
        for (auto h : hidden) m.sizes.push_back(h);
        m.sizes.push_back(1);
        m.z_min = z_min;
        m.z_max = z_max;
        for (std::size_t l = 0; l + 1 < m.sizes.size(); ++l) {
            m.W.emplace_back(m.sizes[l + 1], m.sizes[l]);
            m.b.emplace_back(m.sizes[l + 1], 0.0);
        }
        return m;
    }

    void randomize(Rng& rng) {
        for (std::size_t l = 0; l < W.size(); ++l) {
            const double s = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
            for (auto& w : W[l].data()) w = rng.gaussian(0.0, s);
            for (auto& v : b[l]) v = 0.0;
        }
    }

    double activation(double s) const { return (z_max - z_min) / (1.0 + std::exp(-s)) + z_min; }
    double activation_deriv(double s) const {
        const double e = std::exp(-s);
        const double d = 1.0 + e;
        return (z_max - z_min) * e / (d * d);
    }

    // Forward pass keeping pre-activations; needed by backprop.
    double forward(const Vector& x, std::vector<Vector>* pre = nullptr,
                   std::vector<Vector>* act = nullptr) const {
        Vector a = x;
        if (act) act->assign(1, a);
        if (pre) pre->clear();
        for (std::size_t l = 0; l < W.size(); ++l) {
            Vector z = mat_vec(W[l], a);
            for (std::size_t i = 0; i < z.size(); ++i) z[i] += b[l][i];
            if (pre) pre->push_back(z);
            if (l + 1 < W.size()) {
                a.resize(z.size());
                for (std::size_t i = 0; i < z.size(); ++i) a[i] = activation(z[i]);
            } else {
                a = z;
            }
            if (act) act->push_back(a);
        }
        return a[0];
    }
};

inline double predict(const MlpModel& model, const Vector& state) { return model.forward(state); }

struct TrainConfig {
    std::vector<double> learning_rates = {5e-3, 3e-3, 1e-3, 9e-4, 7e-4, 5e-4, 5e-5, 3e-5};
    std::size_t epochs_per_stage = 200;
    std::size_t batch_size = 0;  // 0 = full batch
    std::size_t patience = 50;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::uint64_t seed = 0;
};

struct EpochRecord {
    std::size_t stage = 0, epoch = 0;
    double train_mse = 0.0, val_mse = 0.0;
};

struct MlpFit {
    MlpModel model;
    double best_val_mse = 0.0;
    std::vector<EpochRecord> history;
};

namespace detail {

struct MlpGrads {
    std::vector<Matrix> W;
    std::vector<Vector> b;
    explicit MlpGrads(const MlpModel& m) {
        for (std::size_t l = 0; l < m.W.size(); ++l) {
            W.emplace_back(m.W[l].rows(), m.W[l].cols());
            b.emplace_back(m.b[l].size(), 0.0);
        }
    }
    void zero() {
        for (auto& g : W) std::fill(g.data().begin(), g.data().end(), 0.0);
        for (auto& g : b) std::fill(g.begin(), g.end(), 0.0);
    }
};

// Accumulates d(0.5 (yhat - y)^2)/dtheta for one sample.
inline double backprop_accumulate(const MlpModel& m, const Vector& x, double y, MlpGrads& g) {
    std::vector<Vector> pre, act;
    const double yhat = m.forward(x, &pre, &act);
    const std::size_t L = m.W.size();
    Vector delta{yhat - y};
    for (std::size_t l = L; l-- > 0;) {
        for (std::size_t i = 0; i < delta.size(); ++i) {
            g.b[l][i] += delta[i];
            for (std::size_t j = 0; j < act[l].size(); ++j) g.W[l](i, j) += delta[i] * act[l][j];
        }
        if (l == 0) break;
        Vector nd(m.sizes[l], 0.0);
        for (std::size_t j = 0; j < nd.size(); ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < delta.size(); ++i) s += m.W[l](i, j) * delta[i];
            nd[j] = s * m.activation_deriv(pre[l - 1][j]);
        }
        delta = std::move(nd);
    }
    return 0.5 * (yhat - y) * (yhat - y);
}

inline double mse_on(const MlpModel& m, const std::vector<Vector>& xs,
                     const std::vector<double>& ys, std::size_t begin, std::size_t end) {
    double s = 0.0;
    for (std::size_t t = begin; t < end; ++t) {
        const double e = m.forward(xs[t]) - ys[t];
        s += e * e;
    }
    return s / static_cast<double>(end - begin);
}

}  // namespace detail

// Staged Adam, one stage per learning rate, early-stopped on a chronological
// 10% tail validation split. Returns the best-validation weights.
inline MlpFit fit_mlp(const std::vector<Vector>& states, const std::vector<double>& targets,
                      MlpModel arch, const TrainConfig& cfg, Rng& rng) {
    if (states.size() != targets.size()) throw DimensionError("fit_mlp: sample count mismatch");
    const std::size_t n = states.size();
    const std::size_t n_val = std::max<std::size_t>(1, n / 10);
    const std::size_t n_train = n - n_val;
    const std::size_t batch = cfg.batch_size == 0 ? n_train : std::min(cfg.batch_size, n_train);
    for (std::size_t i = 1; i < cfg.learning_rates.size(); ++i)
        if (cfg.learning_rates[i] > cfg.learning_rates[i - 1])
            throw std::invalid_argument("fit_mlp: learning rates must be non-increasing");

    MlpModel model = arch;
    model.randomize(rng);

    detail::MlpGrads grads(model), m1(model), m2(model);
    std::size_t adam_t = 0;

    MlpFit fit;
    fit.best_val_mse = detail::mse_on(model, states, targets, n_train, n);
    fit.model = model;

    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

    for (std::size_t stage = 0; stage < cfg.learning_rates.size(); ++stage) {
        const double lr = cfg.learning_rates[stage];
        std::size_t since_best = 0;
        for (std::size_t epoch = 0; epoch < cfg.epochs_per_stage; ++epoch) {
            // deterministic shuffle
            for (std::size_t i = n_train; i > 1; --i)
                std::swap(order[i - 1], order[rng.next_u64() % i]);

            double train_loss = 0.0;
            for (std::size_t start = 0; start < n_train; start += batch) {
                const std::size_t stop = std::min(start + batch, n_train);
                grads.zero();
                for (std::size_t k = start; k < stop; ++k)
                    train_loss += detail::backprop_accumulate(model, states[order[k]],
                                                              targets[order[k]], grads);
                const double inv = 1.0 / static_cast<double>(stop - start);
                ++adam_t;
                const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam_t));
                const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam_t));
                for (std::size_t l = 0; l < model.W.size(); ++l) {
                    auto step = [&](double& w, double& mm, double& vv, double gr) {
                        gr *= inv;
                        mm = cfg.beta1 * mm + (1.0 - cfg.beta1) * gr;
                        vv = cfg.beta2 * vv + (1.0 - cfg.beta2) * gr * gr;
                        w -= lr * (mm / bc1) / (std::sqrt(vv / bc2) + cfg.eps);
                    };
                    for (std::size_t i = 0; i < model.W[l].data().size(); ++i)
                        step(model.W[l].data()[i], m1.W[l].data()[i], m2.W[l].data()[i],
                             grads.W[l].data()[i]);
                    for (std::size_t i = 0; i < model.b[l].size(); ++i)
                        step(model.b[l][i], m1.b[l][i], m2.b[l][i], grads.b[l][i]);
                }
            }
            const double train_mse = 2.0 * train_loss / static_cast<double>(n_train);
            if (!std::isfinite(train_mse))
                throw std::runtime_error("fit_mlp: divergent loss at stage " +
                                         std::to_string(stage) + " epoch " + std::to_string(epoch));
            const double val_mse = detail::mse_on(model, states, targets, n_train, n);
            fit.history.push_back({stage, epoch, train_mse, val_mse});
            if (val_mse < fit.best_val_mse) {
                fit.best_val_mse = val_mse;
                fit.model = model;
                since_best = 0;
            } else if (++since_best > cfg.patience) {
                break;
            }
        }
    }
    return fit;
}

// Max relative error between backprop and central finite differences over
// a small batch; exercised per layer.
inline double mlp_gradient_check(const MlpModel& model, const std::vector<Vector>& xs,
                                 const std::vector<double>& ys, double eps = 1e-6) {
    detail::MlpGrads grads(model);
    for (std::size_t k = 0; k < xs.size(); ++k)
        detail::backprop_accumulate(model, xs[k], ys[k], grads);

    auto loss = [&](const MlpModel& m) {
        double s = 0.0;
        for (std::size_t k = 0; k < xs.size(); ++k) {
            const double e = m.forward(xs[k]) - ys[k];
            s += 0.5 * e * e;
        }
        return s;
    };

    double worst = 0.0;
    MlpModel probe = model;
    auto check = [&](double& w, double analytic) {
        const double orig = w;
        w = orig + eps;
        const double lp = loss(probe);
        w = orig - eps;
        const double lm = loss(probe);
        w = orig;
        const double fd = (lp - lm) / (2.0 * eps);
        const double denom = std::max({std::abs(fd), std::abs(analytic), 1e-8});
        worst = std::max(worst, std::abs(fd - analytic) / denom);
    };
    for (std::size_t l = 0; l < probe.W.size(); ++l) {
        for (std::size_t i = 0; i < probe.W[l].data().size(); ++i)
            check(probe.W[l].data()[i], grads.W[l].data()[i]);
        for (std::size_t i = 0; i < probe.b[l].size(); ++i) check(probe.b[l][i], grads.b[l][i]);
    }
    return worst;
}

// series + IID N(0, variance) samples.
inline std::vector<double> add_noise(const std::vector<double>& series, double variance, Rng& rng) {
    if (variance < 0.0) throw std::invalid_argument("add_noise: variance must be >= 0");
    std::vector<double> out = series;
    if (variance == 0.0) return out;
    const double sd = std::sqrt(variance);
    for (double& x : out) x += rng.gaussian(0.0, sd);
    return out;
}

}  // namespace sr
