#ifndef SCRG_MODEL_HPP
#define SCRG_MODEL_HPP

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "scrg/causal_kg.hpp"
#include "scrg/diffusion_rnn.hpp"
#include "scrg/hgat.hpp"
#include "scrg/spatial_graph.hpp"

namespace scrg {

enum class ModelType { HumansOnly, HumansObjects, Full };

ModelType model_type_from_string(const std::string& s);
std::string to_string(ModelType t);

struct ModelConfig {
  // architecture
  int feature_dim = 256;
  int d_proj = 64;
  int n_heads = 4;
  int d_att = 32;
  int n_actions = 30;
  double lambda = 1.5;
  double leaky_slope = 0.2;
  hgat::Activation activation = hgat::Activation::SmoothRectifier;
  int k_steps = 2;
  int q_dim = 32;
  int top_k = 3;
  double alpha = 0.5;
  ModelType model_type = ModelType::Full;
  // training
  double learning_rate = 0.01;
  int epochs = 50;
  int batch_size = 8;
  std::string optimizer = "adam";  // plain | momentum | adam
  std::uint64_t seed = 1;
  int segment_frames = 12;
  std::string class_weights = "uniform";  // uniform | inverse-frequency

  int d_embed() const { return n_heads * d_proj; }
  hgat::Config hgat_config() const;
  crn::Config crn_config() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig config_from_json(const nlohmann::json& j);

void init_params(ad::ParamStore& params, const ModelConfig& cfg);

// One prediction target: a human in the scene, its teacher-forced action
// history up to the observed segment, and (for training/eval) the binary
// label vector for the following segment.
struct HumanTarget {
  int human_idx = 0;
  std::vector<LabelSet> history;
  Vec labels;  // empty when unlabeled (pure prediction)
};

struct SceneSample {
  std::string video_id;
  int segment = 0;
  SpatialGraph graph;
  std::vector<HumanTarget> targets;
};

struct TargetDiagnostics {
  std::string human_id;
  std::vector<std::vector<double>> alpha_hh;  // per head, per neighbor
  std::vector<std::vector<double>> alpha_oh;
  double gate = 0.0;
  std::vector<Index> top_nodes;
};

struct SceneForward {
  ad::Var loss;                 // sum of per-target BCE, valid iff labels given
  std::vector<ad::Var> logits;  // per target
  std::vector<ad::Var> probs;
  std::vector<double> betas;    // meta-path weights, shared per scene
  std::vector<TargetDiagnostics> diagnostics;
};

SceneForward forward_scene(ad::Binding& params, const SceneSample& scene,
                           const ModelConfig& cfg, const std::vector<Mat>& t_powers,
                           const Vec& class_weight_vec, bool with_loss);

}  // namespace scrg

#endif
