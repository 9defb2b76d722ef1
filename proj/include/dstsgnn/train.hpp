#pragma once

// Mini-batch Adam training with early stopping on validation MAE, and split evaluation.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <thread>
#include <vector>

#include "dstsgnn/data.hpp"
#include "dstsgnn/errors.hpp"
#include "dstsgnn/model.hpp"

namespace dstsgnn {

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Callers write
/// results into per-index slots, so reductions stay in a fixed order.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const auto threads = static_cast<std::size_t>(std::max(1, workers));
  if (threads == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(threads, count); ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Adam with bias correction (beta1 = 0.9, beta2 = 0.999, eps = 1e-8).
class Adam {
 public:
  static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;

  explicit Adam(Eigen::Index size) : m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

  void step(Vector& theta, const Vector& grad, double lr) {
    ++t_;
    m_ = kBeta1 * m_ + (1.0 - kBeta1) * grad;
    v_ = kBeta2 * v_ + (1.0 - kBeta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(kBeta1, t_), c2 = 1.0 - std::pow(kBeta2, t_);
    theta.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);
  }

 private:
  Vector m_, v_;
  int t_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainOptions {
  int workers = 1;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct TrainResult {
  ModelParams params;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val = std::numeric_limits<double>::infinity();
};

/// Mean loss and flat gradient over the windows starting at `starts`.
inline std::pair<double, Vector> batch_gradient(const ModelParams& params, const ModelConfig& cfg,
                                                const Matrix& split, const std::vector<Eigen::Index>& starts,
                                                int workers = 1) {
  std::vector<double> losses(starts.size());
  std::vector<Vector> grads(starts.size());
  parallel_for(starts.size(), workers, [&](std::size_t i) {
    const WindowPair wp = window_at(split, starts[i], cfg.t, cfg.horizon);
    LossGrad lg = loss_and_gradient(params, cfg, wp.window, wp.target);
    losses[i] = lg.loss;
    grads[i] = lg.grad.to_flat();
  });
  double loss = 0.0;
  Vector grad = Vector::Zero(params.size());
  for (std::size_t i = 0; i < starts.size(); ++i) {
    loss += losses[i];
    grad += grads[i];
  }
  const double inv = 1.0 / static_cast<double>(starts.size());
  return {loss * inv, grad * inv};
}

struct Evaluation {
  Metrics model;
  Metrics persistence;
  std::size_t window_count = 0;
};

/// Metrics over every window of a split, in the split's own scale.
inline Evaluation evaluate_split(const ModelParams& params, const ModelConfig& cfg, const Matrix& split,
                                 int workers = 1) {
  const auto starts = window_starts(split.rows(), cfg.t, cfg.horizon);
  std::vector<Matrix> preds(starts.size()), naive(starts.size()), targets(starts.size());
  parallel_for(starts.size(), workers, [&](std::size_t i) {
    const WindowPair wp = window_at(split, starts[i], cfg.t, cfg.horizon);
    preds[i] = forward(params, cfg, wp.window).y;
    naive[i] = persistence_forecast(wp.window, cfg.horizon);
    targets[i] = wp.target;
  });
  return {metrics(preds, targets), metrics(naive, targets), starts.size()};
}

inline TrainResult train(const ModelConfig& cfg, const DataSplits& splits, const TrainOptions& opts = {}) {
  cfg.validate();
  detail::require(splits.train.cols() == cfg.variables, ErrorKind::Config,
                  "dataset has " + std::to_string(splits.train.cols()) + " variables, config expects " +
                      std::to_string(cfg.variables));
  auto train_starts = window_starts(splits.train.rows(), cfg.t, cfg.horizon);
  window_starts(splits.val.rows(), cfg.t, cfg.horizon);  // DataError when val cannot hold a window

  TrainResult result;
  ModelParams params = ModelParams::init(cfg);
  result.params = params;
  Vector theta = params.to_flat();
  Adam adam(theta.size());
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(train_starts.begin(), train_starts.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < train_starts.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const auto end = std::min(train_starts.size(), b + static_cast<std::size_t>(cfg.batch_size));
      const std::vector<Eigen::Index> batch(train_starts.begin() + static_cast<std::ptrdiff_t>(b),
                                            train_starts.begin() + static_cast<std::ptrdiff_t>(end));
      auto [loss, grad] = batch_gradient(params, cfg, splits.train, batch, opts.workers);
      loss_sum += loss * static_cast<double>(batch.size());
      adam.step(theta, grad, cfg.learning_rate);
      params.assign_flat(theta);
    }
    EpochRecord rec{epoch, loss_sum / static_cast<double>(train_starts.size()),
                    evaluate_split(params, cfg, splits.val, opts.workers).model.mae};
    result.history.push_back(rec);
    if (opts.on_epoch) opts.on_epoch(rec);

    if (rec.val_loss < result.best_val) {
      result.best_val = rec.val_loss;
      result.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace dstsgnn
