#pragma once

// Supervised baseline: a single-hidden-layer perceptron (ReLU hidden layer,
// logistic output) trained with momentum mini-batch gradient descent on
// binary cross-entropy.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lyricforge/error.hpp"
#include "lyricforge/lyrics.hpp"
#include "lyricforge/random.hpp"

namespace lyricforge::mlp {

struct MlpConfig {
  std::size_t hidden = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 16;
  std::size_t epochs = 200;
  std::uint64_t seed = 42;
  std::size_t min_per_class = 10;
};

struct Example {
  std::vector<double> x;
  double y = 0.0;  // 1 for synthetic
};

/// Parameter layout inside the flat vector: W1 (hidden x dim, row-major), b1
/// (hidden), w2 (hidden), b2 (1).
class Network {
 public:
  Network(std::size_t dim, std::size_t hidden) : dim_(dim), hidden_(hidden), params_(hidden * dim + 2 * hidden + 1, 0.0) {}

  std::size_t dim() const { return dim_; }
  std::size_t hidden() const { return hidden_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  void init(Rng& rng) {
    const double s1 = std::sqrt(2.0 / static_cast<double>(dim_));
    const double s2 = std::sqrt(1.0 / static_cast<double>(hidden_));
    for (std::size_t i = 0; i < hidden_ * dim_; ++i) params_[i] = rng.normal() * s1;
    for (std::size_t h = 0; h < hidden_; ++h) params_[b1(h)] = 0.0;
    for (std::size_t h = 0; h < hidden_; ++h) params_[w2(h)] = rng.normal() * s2;
    params_[b2()] = 0.0;
  }

  /// Output logit for one input.
  double logit(std::span<const double> x) const { return logit(params_, x); }

  double logit(const std::vector<double>& p, std::span<const double> x) const {
    double z = p[b2()];
    for (std::size_t h = 0; h < hidden_; ++h) {
      double a = p[b1(h)];
      for (std::size_t i = 0; i < dim_; ++i) a += p[w1(h, i)] * x[i];
      if (a > 0.0) z += p[w2(h)] * a;
    }
    return z;
  }

  /// Mean binary cross-entropy over a batch and its gradient.
  double loss_and_gradient(const std::vector<double>& p, std::span<const Example* const> batch,
                           std::vector<double>& grad) const {
    grad.assign(p.size(), 0.0);
    double loss = 0.0;
    std::vector<double> act(hidden_);
    for (const Example* ex : batch) {
      double z = p[b2()];
      for (std::size_t h = 0; h < hidden_; ++h) {
        double a = p[b1(h)];
        for (std::size_t i = 0; i < dim_; ++i) a += p[w1(h, i)] * ex->x[i];
        act[h] = a;
        if (a > 0.0) z += p[w2(h)] * a;
      }
      loss += std::max(z, 0.0) - ex->y * z + std::log1p(std::exp(-std::abs(z)));
      const double dz = 1.0 / (1.0 + std::exp(-z)) - ex->y;
      grad[b2()] += dz;
      for (std::size_t h = 0; h < hidden_; ++h) {
        if (act[h] <= 0.0) continue;
        grad[w2(h)] += dz * act[h];
        const double da = dz * p[w2(h)];
        grad[b1(h)] += da;
        for (std::size_t i = 0; i < dim_; ++i) grad[w1(h, i)] += da * ex->x[i];
      }
    }
    const double n = static_cast<double>(batch.size());
    for (auto& g : grad) g /= n;
    return loss / n;
  }

  double loss(const std::vector<double>& p, std::span<const Example* const> batch) const {
    std::vector<double> grad;
    return loss_and_gradient(p, batch, grad);
  }

 private:
  std::size_t w1(std::size_t h, std::size_t i) const { return h * dim_ + i; }
  std::size_t b1(std::size_t h) const { return hidden_ * dim_ + h; }
  std::size_t w2(std::size_t h) const { return hidden_ * dim_ + hidden_ + h; }
  std::size_t b2() const { return hidden_ * dim_ + 2 * hidden_; }

  std::size_t dim_;
  std::size_t hidden_;
  std::vector<double> params_;
};

struct MlpModel {
  Network network;
  std::vector<double> mean;
  std::vector<double> std;

  std::vector<double> transform(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean[i]) / std[i];
    return out;
  }

  double probability(std::span<const double> x) const {
    require(x.size() == network.dim(), ErrorKind::invariant, "MLP input dim mismatch");
    return 1.0 / (1.0 + std::exp(-network.logit(transform(x))));
  }

  Label predict(std::span<const double> x) const {
    return probability(x) >= 0.5 ? Label::synthetic : Label::human;
  }
};

inline MlpModel train(const std::vector<std::vector<double>>& inputs, const std::vector<Label>& labels,
                      const MlpConfig& cfg = {}) {
  require(inputs.size() == labels.size(), ErrorKind::invariant, "inputs and labels differ in length");
  require(!inputs.empty(), ErrorKind::empty_input, "no training data");
  require(cfg.hidden > 0 && cfg.batch_size > 0, ErrorKind::config, "hidden size and batch size must be positive");
  std::size_t synthetic = 0;
  for (auto l : labels) synthetic += l == Label::synthetic;
  if (synthetic < cfg.min_per_class || inputs.size() - synthetic < cfg.min_per_class)
    fail(ErrorKind::invariant, "MLP training needs at least " + std::to_string(cfg.min_per_class) + " points per class");

  const std::size_t dim = inputs.front().size();
  MlpModel model{Network(dim, cfg.hidden), std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  const auto n = static_cast<double>(inputs.size());
  for (const auto& x : inputs) {
    require(x.size() == dim, ErrorKind::invariant, "inconsistent input dims");
    for (std::size_t i = 0; i < dim; ++i) model.mean[i] += x[i] / n;
  }
  for (const auto& x : inputs)
    for (std::size_t i = 0; i < dim; ++i) model.std[i] += (x[i] - model.mean[i]) * (x[i] - model.mean[i]) / n;
  for (auto& s : model.std) s = s > 0.0 ? std::sqrt(s) : 1.0;

  std::vector<Example> examples;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    examples.push_back({model.transform(inputs[i]), labels[i] == Label::synthetic ? 1.0 : 0.0});

  Rng rng(cfg.seed);
  model.network.init(rng);
  auto& params = model.network.params();
  std::vector<double> velocity(params.size(), 0.0);
  std::vector<double> grad;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<const Example*> batch;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i)
        batch.push_back(&examples[order[i]]);
      const double loss = model.network.loss_and_gradient(params, batch, grad);
      if (!std::isfinite(loss))
        fail(ErrorKind::numeric, "MLP training diverged (non-finite loss); try a lower learning rate");
      for (std::size_t j = 0; j < params.size(); ++j) {
        velocity[j] = cfg.momentum * velocity[j] - cfg.learning_rate * grad[j];
        params[j] += velocity[j];
      }
    }
  }
  return model;
}

}  // namespace lyricforge::mlp
