#pragma once

#include "dnr/common.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace dnr {

/// First/second-moment accumulators for one parameter block.
struct AdamMoments {
    Mat m, v;
    void init(int rows, int cols) {
        m = Mat::Zero(rows, cols);
        v = Mat::Zero(rows, cols);
    }
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

namespace detail {
inline void adam_update(Mat& param, const Mat& grad, AdamMoments& st, const AdamConfig& cfg,
                        int t) {
    st.m = cfg.beta1 * st.m + (1.0 - cfg.beta1) * grad;
    st.v = cfg.beta2 * st.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    double bc1 = 1.0 - std::pow(cfg.beta1, t);
    double bc2 = 1.0 - std::pow(cfg.beta2, t);
    Mat mhat = st.m / bc1;
    Mat vhat = st.v / bc2;
    param -= cfg.lr * mhat.cwiseQuotient(vhat.cwiseSqrt() + Mat::Constant(vhat.rows(), vhat.cols(), cfg.eps));
}
}  // namespace detail

/// Affine layer, batch rows: y = x W + 1 b'. He-initialized weights.
struct DenseLayer {
    Mat w;   // in x out
    Mat b;   // 1 x out
    Mat gw, gb;
    AdamMoments mw, mb;
    Mat x_cache;

    DenseLayer(int in, int out, std::mt19937_64& rng) {
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in));
        w = Mat::Zero(in, out);
        for (int i = 0; i < in; ++i)
            for (int j = 0; j < out; ++j) w(i, j) = dist(rng);
        b = Mat::Zero(1, out);
        gw = Mat::Zero(in, out);
        gb = Mat::Zero(1, out);
        mw.init(in, out);
        mb.init(1, out);
    }

    Mat forward(const Mat& x, bool training) {
        if (training) x_cache = x;
        return (x * w).rowwise() + b.row(0);
    }
    Mat backward(const Mat& gy) {
        gw += x_cache.transpose() * gy;
        gb.row(0) += gy.colwise().sum();
        return gy * w.transpose();
    }
};

/// Per-feature batch normalization with running statistics for evaluation.
struct BatchNorm {
    Mat gamma, beta;          // 1 x width
    Mat ggamma, gbeta;
    AdamMoments mg, mb;
    Mat run_mean, run_var;    // running statistics, updated in training mode
    double momentum = 0.1;
    double eps = 1e-5;

    Mat xhat_cache;
    Mat inv_std_cache;        // 1 x width

    explicit BatchNorm(int width) {
        gamma = Mat::Ones(1, width);
        beta = Mat::Zero(1, width);
        ggamma = Mat::Zero(1, width);
        gbeta = Mat::Zero(1, width);
        mg.init(1, width);
        mb.init(1, width);
        run_mean = Mat::Zero(1, width);
        run_var = Mat::Ones(1, width);
    }

    Mat forward(const Mat& x, bool training) {
        const int nb = static_cast<int>(x.rows());
        if (training) {
            if (nb < 2) throw BatchTooSmall("batch norm needs at least 2 samples in training");
            Mat mean = x.colwise().mean();
            Mat centered = x.rowwise() - mean.row(0);
            Mat var = centered.cwiseProduct(centered).colwise().mean();
            run_mean = (1.0 - momentum) * run_mean + momentum * mean;
            run_var = (1.0 - momentum) * run_var + momentum * var;
            inv_std_cache = (var.array() + eps).rsqrt().matrix();
            xhat_cache = centered.array().rowwise() * inv_std_cache.row(0).array();
            return (xhat_cache.array().rowwise() * gamma.row(0).array()).matrix().rowwise() +
                   beta.row(0);
        }
        Mat inv_std = (run_var.array() + eps).rsqrt().matrix();
        Mat xhat = (x.rowwise() - run_mean.row(0)).array().rowwise() * inv_std.row(0).array();
        return (xhat.array().rowwise() * gamma.row(0).array()).matrix().rowwise() + beta.row(0);
    }

    Mat backward(const Mat& gy) {
        const double nb = static_cast<double>(gy.rows());
        ggamma.row(0) += gy.cwiseProduct(xhat_cache).colwise().sum();
        gbeta.row(0) += gy.colwise().sum();
        Mat gxhat = gy.array().rowwise() * gamma.row(0).array();
        Mat sum_g = gxhat.colwise().sum();
        Mat sum_gx = gxhat.cwiseProduct(xhat_cache).colwise().sum();
        Mat gx = (gxhat * nb).rowwise() - sum_g.row(0);
        gx -= (xhat_cache.array().rowwise() * sum_gx.row(0).array()).matrix();
        gx = (gx / nb).array().rowwise() * inv_std_cache.row(0).array();
        return gx;
    }
};

struct ReluLayer {
    Mat mask;
    Mat forward(const Mat& x, bool training) {
        Mat y = x.cwiseMax(0.0);
        if (training) mask = (x.array() > 0.0).cast<double>().matrix();
        return y;
    }
    Mat backward(const Mat& gy) { return gy.cwiseProduct(mask); }
};

/// Two hidden blocks (affine, batch norm, ReLU) and an affine output head.
class Mlp {
  public:
    Mlp(int in, int hidden, int out, std::mt19937_64& rng)
        : d1_(in, hidden, rng), bn1_(hidden), d2_(hidden, hidden, rng), bn2_(hidden),
          d3_(hidden, out, rng) {}

    Mat forward(const Mat& x, bool training) {
        Mat h = r1_.forward(bn1_.forward(d1_.forward(x, training), training), training);
        h = r2_.forward(bn2_.forward(d2_.forward(h, training), training), training);
        return d3_.forward(h, training);
    }

    Mat backward(const Mat& gy) {
        Mat g = d3_.backward(gy);
        g = d2_.backward(bn2_.backward(r2_.backward(g)));
        return d1_.backward(bn1_.backward(r1_.backward(g)));
    }

    void zero_grad() {
        d1_.gw.setZero(); d1_.gb.setZero();
        d2_.gw.setZero(); d2_.gb.setZero();
        d3_.gw.setZero(); d3_.gb.setZero();
        bn1_.ggamma.setZero(); bn1_.gbeta.setZero();
        bn2_.ggamma.setZero(); bn2_.gbeta.setZero();
    }

    void adam_step(const AdamConfig& cfg) {
        ++t_;
        detail::adam_update(d1_.w, d1_.gw, d1_.mw, cfg, t_);
        detail::adam_update(d1_.b, d1_.gb, d1_.mb, cfg, t_);
        detail::adam_update(bn1_.gamma, bn1_.ggamma, bn1_.mg, cfg, t_);
        detail::adam_update(bn1_.beta, bn1_.gbeta, bn1_.mb, cfg, t_);
        detail::adam_update(d2_.w, d2_.gw, d2_.mw, cfg, t_);
        detail::adam_update(d2_.b, d2_.gb, d2_.mb, cfg, t_);
        detail::adam_update(bn2_.gamma, bn2_.ggamma, bn2_.mg, cfg, t_);
        detail::adam_update(bn2_.beta, bn2_.gbeta, bn2_.mb, cfg, t_);
        detail::adam_update(d3_.w, d3_.gw, d3_.mw, cfg, t_);
        detail::adam_update(d3_.b, d3_.gb, d3_.mb, cfg, t_);
    }

    /// Visits every persistent tensor, for checkpoint serialization.
    void visit_params(const std::function<void(const std::string&, Mat&)>& fn) {
        fn("d1.w", d1_.w); fn("d1.b", d1_.b);
        fn("bn1.gamma", bn1_.gamma); fn("bn1.beta", bn1_.beta);
        fn("bn1.run_mean", bn1_.run_mean); fn("bn1.run_var", bn1_.run_var);
        fn("d2.w", d2_.w); fn("d2.b", d2_.b);
        fn("bn2.gamma", bn2_.gamma); fn("bn2.beta", bn2_.beta);
        fn("bn2.run_mean", bn2_.run_mean); fn("bn2.run_var", bn2_.run_var);
        fn("d3.w", d3_.w); fn("d3.b", d3_.b);
    }

    /// Visits the gradient tensors of the trainable parameters, in the same
    /// order visit_params yields them (running stats have no gradient and
    /// are skipped by name there).
    void visit_grads(const std::function<void(const std::string&, Mat&)>& fn) {
        fn("d1.w", d1_.gw); fn("d1.b", d1_.gb);
        fn("bn1.gamma", bn1_.ggamma); fn("bn1.beta", bn1_.gbeta);
        fn("d2.w", d2_.gw); fn("d2.b", d2_.gb);
        fn("bn2.gamma", bn2_.ggamma); fn("bn2.beta", bn2_.gbeta);
        fn("d3.w", d3_.gw); fn("d3.b", d3_.gb);
    }

    int step_count() const { return t_; }
    void set_step_count(int t) { t_ = t; }

  private:
    DenseLayer d1_;
    BatchNorm bn1_;
    ReluLayer r1_;
    DenseLayer d2_;
    BatchNorm bn2_;
    ReluLayer r2_;
    DenseLayer d3_;
    int t_ = 0;
};

}  // namespace dnr
