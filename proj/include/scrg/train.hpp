#ifndef SCRG_TRAIN_HPP
#define SCRG_TRAIN_HPP

#include <functional>
#include <string>
#include <vector>

#include "scrg/data_io.hpp"
#include "scrg/model.hpp"

namespace scrg {

// Parameter updater over a ParamStore; holds its own slot state (momentum /
// adaptive moments) keyed by parameter name.
class Optimizer {
 public:
  // kind: plain | momentum | adam
  Optimizer(std::string kind, double learning_rate);
  void step(ad::ParamStore& params);

 private:
  std::string kind_;
  double lr_;
  long long t_ = 0;
  std::map<std::string, Mat> m_;
  std::map<std::string, Mat> v_;
};

// Per-class BCE weights: all ones, or inverse label frequency normalized to
// mean 1 over the training samples.
Vec make_class_weights(const std::vector<SceneSample>& samples, const ModelConfig& cfg);

struct TrainResult {
  std::vector<double> epoch_losses;  // mean per-target loss per epoch
};

// Fixed-seed shuffled minibatch gradient descent over scene samples. Logs one
// line per epoch through `log` when given; throws on a non-finite loss.
TrainResult train(ad::ParamStore& params, const std::vector<SceneSample>& samples,
                  const ModelConfig& cfg, const std::vector<Mat>& t_powers,
                  const std::function<void(const std::string&)>& log = {});

// Per-target probability vectors in dataset order, no gradient tracking.
struct PredictionRow {
  std::string video_id;
  int segment = 0;
  std::string entity_id;
  Vec probs;
  Vec labels;  // empty when unlabeled
};

std::vector<PredictionRow> predict_all(ad::ParamStore& params,
                                       const std::vector<SceneSample>& samples,
                                       const ModelConfig& cfg,
                                       const std::vector<Mat>& t_powers);

}  // namespace scrg

#endif
