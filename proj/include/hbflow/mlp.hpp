#pragma once

#include <cmath>
#include <memory>
#include <random>
#include <stdexcept>

#include "hbflow/problem.hpp"

namespace hbflow {

/// One-hidden-layer tanh network on a synthetic regression set, for the
/// directional-smoothness experiment. The gradient is analytic (backprop);
/// hvp and t3 fall back to the finite-difference oracle, which is all the
/// smoothness diagnostic needs.
struct MlpSpec {
    int input_dim = 4;
    int hidden = 24;
    int samples = 128;
    double init_scale = 1.0;   // multiplies the 1/sqrt(fan-in) layer scales
    double target_scale = 1.0;
    double noise = 0.1;
    std::uint64_t seed = 0;
};

namespace detail {

struct MlpData {
    Mat X;   // samples x input_dim
    Vec y;   // samples
    int in = 0, hidden = 0, n = 0;

    int param_count() const { return hidden * in + hidden + hidden + 1; }
};

// Layout: [W1 (hidden x in, row major) | b1 | w2 | b2].
inline double mlp_loss(const MlpData& d, const Vec& theta) {
    const int hi = d.hidden, in = d.in;
    double acc = 0.0;
    for (int s = 0; s < d.n; ++s) {
        double f = theta[hi * in + hi + hi];  // b2
        for (int h = 0; h < hi; ++h) {
            double z = theta[hi * in + h];  // b1[h]
            for (int i = 0; i < in; ++i) z += theta[h * in + i] * d.X(s, i);
            f += theta[hi * in + hi + h] * std::tanh(z);
        }
        const double e = f - d.y[s];
        acc += e * e;
    }
    return acc / (2.0 * d.n);
}

inline Vec mlp_grad(const MlpData& d, const Vec& theta) {
    const int hi = d.hidden, in = d.in;
    Vec g = Vec::Zero(theta.size());
    Vec a(hi), z(hi);
    for (int s = 0; s < d.n; ++s) {
        double f = theta[hi * in + hi + hi];
        for (int h = 0; h < hi; ++h) {
            double zz = theta[hi * in + h];
            for (int i = 0; i < in; ++i) zz += theta[h * in + i] * d.X(s, i);
            z[h] = zz;
            a[h] = std::tanh(zz);
            f += theta[hi * in + hi + h] * a[h];
        }
        const double e = (f - d.y[s]) / d.n;
        g[hi * in + hi + hi] += e;  // b2
        for (int h = 0; h < hi; ++h) {
            g[hi * in + hi + h] += e * a[h];  // w2
            const double delta = e * theta[hi * in + hi + h] * (1.0 - a[h] * a[h]);
            g[hi * in + h] += delta;  // b1
            for (int i = 0; i < in; ++i) g[h * in + i] += delta * d.X(s, i);
        }
    }
    return g;
}

}  // namespace detail

/// Synthetic teacher data plus the network as a Problem, with a deterministic
/// initial point exposed through make_mlp_initial_point.
inline Problem make_mlp_problem(const MlpSpec& spec) {
    if (spec.input_dim < 1 || spec.hidden < 1 || spec.hidden > 64 || spec.samples < 2)
        throw std::invalid_argument("mlp: bad spec (hidden must be in [1,64])");
    auto data = std::make_shared<detail::MlpData>();
    data->in = spec.input_dim;
    data->hidden = spec.hidden;
    data->n = spec.samples;
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    data->X.resize(spec.samples, spec.input_dim);
    for (int s = 0; s < spec.samples; ++s)
        for (int i = 0; i < spec.input_dim; ++i) data->X(s, i) = gauss(rng);
    // Teacher: a random quadratic-plus-linear map with label noise, so the
    // network cannot interpolate and the loss keeps pushing curvature up.
    Vec lin(spec.input_dim), quad(spec.input_dim);
    for (int i = 0; i < spec.input_dim; ++i) lin[i] = gauss(rng);
    for (int i = 0; i < spec.input_dim; ++i) quad[i] = gauss(rng);
    data->y.resize(spec.samples);
    for (int s = 0; s < spec.samples; ++s) {
        double t = 0.0;
        for (int i = 0; i < spec.input_dim; ++i) {
            t += lin[i] * data->X(s, i);
            t += 0.5 * quad[i] * data->X(s, i) * data->X(s, i);
        }
        data->y[s] = spec.target_scale * t + spec.noise * gauss(rng);
    }

    Problem p;
    p.dim = data->param_count();
    p.label = "mlp";
    p.value_fn = [data](const Vec& th) { return detail::mlp_loss(*data, th); };
    p.grad_fn = [data](const Vec& th) { return detail::mlp_grad(*data, th); };
    p.hvp_fn = [data, p_dim = p.dim](const Vec& th, const Vec& v) {
        const double norm = v.norm();
        if (norm == 0.0) return Vec(Vec::Zero(p_dim));
        const double h = fd_default_step(th);
        const Vec unit = v / norm;
        return Vec((detail::mlp_grad(*data, Vec(th + h * unit)) -
                    detail::mlp_grad(*data, Vec(th - h * unit))) *
                   (norm / (2.0 * h)));
    };
    p.t3_fn = [hvp_fn = p.hvp_fn, p_dim = p.dim](const Vec& th, const Vec& u, const Vec& v) {
        const double norm = u.norm();
        if (norm == 0.0) return Vec(Vec::Zero(p_dim));
        const double h = field_jvp_default_step(th);
        const Vec unit = u / norm;
        return Vec((hvp_fn(Vec(th + h * unit), v) - hvp_fn(Vec(th - h * unit), v)) *
                   (norm / (2.0 * h)));
    };
    return p;
}

inline Vec make_mlp_initial_point(const MlpSpec& spec) {
    // Separate stream from the data so changing the init does not reshuffle
    // the dataset.
    std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int params = spec.hidden * spec.input_dim + 2 * spec.hidden + 1;
    Vec theta(params);
    const double s1 = spec.init_scale / std::sqrt(static_cast<double>(spec.input_dim));
    const double s2 = spec.init_scale / std::sqrt(static_cast<double>(spec.hidden));
    int pos = 0;
    for (int h = 0; h < spec.hidden; ++h)
        for (int i = 0; i < spec.input_dim; ++i) theta[pos++] = s1 * gauss(rng);
    for (int h = 0; h < spec.hidden; ++h) theta[pos++] = 0.0;            // b1
    for (int h = 0; h < spec.hidden; ++h) theta[pos++] = s2 * gauss(rng);  // w2
    theta[pos++] = 0.0;                                                  // b2
    return theta;
}

}  // namespace hbflow
