#include "scrg/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace scrg {

Optimizer::Optimizer(std::string kind, double learning_rate)
    : kind_(std::move(kind)), lr_(learning_rate) {
  if (kind_ != "plain" && kind_ != "momentum" && kind_ != "adam") {
    throw std::invalid_argument("unknown optimizer: " + kind_);
  }
}

void Optimizer::step(ad::ParamStore& params) {
  ++t_;
  for (const auto& name : params.names()) {
    Mat& theta = params.value(name);
    const Mat& g = params.grad(name);
    if (kind_ == "plain") {
      theta -= lr_ * g;
    } else if (kind_ == "momentum") {
      auto [it, inserted] = m_.try_emplace(name, Mat::Zero(g.rows(), g.cols()));
      it->second = 0.9 * it->second + g;
      theta -= lr_ * it->second;
    } else {  // adam
      constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
      auto [mit, mi] = m_.try_emplace(name, Mat::Zero(g.rows(), g.cols()));
      auto [vit, vi] = v_.try_emplace(name, Mat::Zero(g.rows(), g.cols()));
      mit->second = beta1 * mit->second + (1.0 - beta1) * g;
      vit->second = beta2 * vit->second + (1.0 - beta2) * g.cwiseProduct(g);
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
      theta.array() -= lr_ * (mit->second.array() / bc1) /
                       ((vit->second.array() / bc2).sqrt() + eps);
    }
  }
}

Vec make_class_weights(const std::vector<SceneSample>& samples, const ModelConfig& cfg) {
  Vec weights = Vec::Ones(cfg.n_actions);
  if (cfg.class_weights == "uniform") return weights;
  if (cfg.class_weights != "inverse-frequency") {
    throw std::invalid_argument("unknown class_weights mode: " + cfg.class_weights);
  }
  Vec counts = Vec::Ones(cfg.n_actions);  // add-one smoothing
  double total = 0.0;
  for (const auto& s : samples) {
    for (const auto& t : s.targets) {
      if (t.labels.size() == cfg.n_actions) {
        counts += t.labels;
        total += 1.0;
      }
    }
  }
  for (Index c = 0; c < weights.size(); ++c) weights(c) = (total + 1.0) / counts(c);
  weights *= static_cast<double>(weights.size()) / weights.sum();
  return weights;
}

TrainResult train(ad::ParamStore& params, const std::vector<SceneSample>& samples,
                  const ModelConfig& cfg, const std::vector<Mat>& t_powers,
                  const std::function<void(const std::string&)>& log) {
  if (samples.empty()) throw std::invalid_argument("train: no samples");
  const Vec class_weights = make_class_weights(samples, cfg);
  Optimizer opt(cfg.optimizer, cfg.learning_rate);
  std::mt19937_64 shuffle_rng(cfg.seed ^ 0x5c79b1e5ull);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t epoch_targets = 0;
    std::size_t batch_count = 0;
    params.zero_grads();
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const SceneSample& scene = samples[order[pos]];
      ad::Binding binding(params);
      auto fwd = forward_scene(binding, scene, cfg, t_powers, class_weights, true);
      const double loss = fwd.loss.scalar();
      if (!std::isfinite(loss)) {
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch));
      }
      epoch_loss += loss;
      epoch_targets += scene.targets.size();
      ad::backward(fwd.loss);
      binding.accumulate_grads();
      ++batch_count;
      if (batch_count == static_cast<std::size_t>(cfg.batch_size) || pos + 1 == order.size()) {
        for (const auto& name : params.names()) {
          params.grad(name) /= static_cast<double>(batch_count);
        }
        opt.step(params);
        params.zero_grads();
        batch_count = 0;
      }
    }
    const double mean_loss = epoch_loss / static_cast<double>(epoch_targets);
    result.epoch_losses.push_back(mean_loss);
    if (log) {
      std::ostringstream msg;
      msg << "epoch " << epoch << " loss " << mean_loss;
      log(msg.str());
    }
  }
  return result;
}

std::vector<PredictionRow> predict_all(ad::ParamStore& params,
                                       const std::vector<SceneSample>& samples,
                                       const ModelConfig& cfg,
                                       const std::vector<Mat>& t_powers) {
  const Vec unit_weights = Vec::Ones(cfg.n_actions);
  std::vector<PredictionRow> rows;
  for (const auto& scene : samples) {
    ad::Binding binding(params);
    auto fwd = forward_scene(binding, scene, cfg, t_powers, unit_weights, false);
    for (std::size_t t = 0; t < scene.targets.size(); ++t) {
      const auto& target = scene.targets[t];
      PredictionRow row;
      row.video_id = scene.video_id;
      row.segment = scene.segment;
      row.entity_id =
          scene.graph.humans[static_cast<std::size_t>(target.human_idx)].entity_id;
      row.probs = fwd.probs[t].value().col(0);
      row.labels = target.labels;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace scrg
