#include "scrg/model.hpp"

#include <stdexcept>

namespace scrg {

ModelType model_type_from_string(const std::string& s) {
  if (s == "humans-only") return ModelType::HumansOnly;
  if (s == "humans-objects") return ModelType::HumansObjects;
  if (s == "full") return ModelType::Full;
  throw std::invalid_argument("unknown model type: " + s);
}

std::string to_string(ModelType t) {
  switch (t) {
    case ModelType::HumansOnly: return "humans-only";
    case ModelType::HumansObjects: return "humans-objects";
    case ModelType::Full: return "full";
  }
  throw std::logic_error("unreachable");
}

hgat::Config ModelConfig::hgat_config() const {
  hgat::Config c;
  c.feature_dim = feature_dim;
  c.d_proj = d_proj;
  c.n_heads = n_heads;
  c.d_att = d_att;
  c.n_actions = n_actions;
  c.leaky_slope = leaky_slope;
  c.act = activation;
  return c;
}

crn::Config ModelConfig::crn_config() const {
  crn::Config c;
  c.n_actions = n_actions;
  c.q_dim = q_dim;
  c.k_steps = k_steps;
  c.top_k = top_k;
  c.d_embed = d_embed();
  c.alpha = alpha;
  return c;
}

nlohmann::json to_json(const ModelConfig& cfg) {
  return nlohmann::json{
      {"feature_dim", cfg.feature_dim},
      {"d_proj", cfg.d_proj},
      {"n_heads", cfg.n_heads},
      {"d_att", cfg.d_att},
      {"n_actions", cfg.n_actions},
      {"lambda", cfg.lambda},
      {"leaky_slope", cfg.leaky_slope},
      {"activation", hgat::to_string(cfg.activation)},
      {"k_steps", cfg.k_steps},
      {"q_dim", cfg.q_dim},
      {"top_k", cfg.top_k},
      {"alpha", cfg.alpha},
      {"model_type", to_string(cfg.model_type)},
      {"learning_rate", cfg.learning_rate},
      {"epochs", cfg.epochs},
      {"batch_size", cfg.batch_size},
      {"optimizer", cfg.optimizer},
      {"seed", cfg.seed},
      {"segment_frames", cfg.segment_frames},
      {"class_weights", cfg.class_weights},
  };
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("feature_dim", cfg.feature_dim);
  get("d_proj", cfg.d_proj);
  get("n_heads", cfg.n_heads);
  get("d_att", cfg.d_att);
  get("n_actions", cfg.n_actions);
  get("lambda", cfg.lambda);
  get("leaky_slope", cfg.leaky_slope);
  if (j.contains("activation")) {
    cfg.activation = hgat::activation_from_string(j.at("activation").get<std::string>());
  }
  get("k_steps", cfg.k_steps);
  get("q_dim", cfg.q_dim);
  get("top_k", cfg.top_k);
  get("alpha", cfg.alpha);
  if (j.contains("model_type")) {
    cfg.model_type = model_type_from_string(j.at("model_type").get<std::string>());
  }
  get("learning_rate", cfg.learning_rate);
  get("epochs", cfg.epochs);
  get("batch_size", cfg.batch_size);
  get("optimizer", cfg.optimizer);
  get("seed", cfg.seed);
  get("segment_frames", cfg.segment_frames);
  get("class_weights", cfg.class_weights);
  return cfg;
}

void init_params(ad::ParamStore& params, const ModelConfig& cfg) {
  hgat::init_params(params, cfg.hgat_config(), cfg.seed);
  if (cfg.model_type == ModelType::Full) {
    crn::init_params(params, cfg.crn_config(), cfg.seed + 1);
  }
}

SceneForward forward_scene(ad::Binding& params, const SceneSample& scene,
                           const ModelConfig& cfg, const std::vector<Mat>& t_powers,
                           const Vec& class_weight_vec, bool with_loss) {
  const hgat::Config hcfg = cfg.hgat_config();
  const auto& graph = scene.graph;
  const int n_humans = static_cast<int>(graph.humans.size());

  std::vector<ad::Var> h_proj(static_cast<std::size_t>(n_humans));
  for (int i = 0; i < n_humans; ++i) {
    ad::Var raw = ad::constant(graph.humans[static_cast<std::size_t>(i)].feature);
    h_proj[static_cast<std::size_t>(i)] = hgat::project(params, raw, EntityKind::Human);
  }
  std::vector<ad::Var> o_proj(graph.objects.size());
  const bool use_objects = cfg.model_type != ModelType::HumansOnly;
  if (use_objects) {
    for (std::size_t o = 0; o < graph.objects.size(); ++o) {
      ad::Var raw = ad::constant(graph.objects[o].feature);
      o_proj[o] = hgat::project(params, raw, EntityKind::Object);
    }
  }

  // node-level attention per meta-path; empty neighborhoods contribute zero
  std::vector<std::vector<ad::Var>> z_per_path;
  std::vector<std::vector<hgat::NodeAttention>> attention_per_path;
  std::vector<std::string> path_names = {"hh"};
  if (use_objects) path_names.push_back("oh");
  for (const auto& path : path_names) {
    std::vector<ad::Var> zs;
    std::vector<hgat::NodeAttention> atts;
    for (int i = 0; i < n_humans; ++i) {
      std::vector<int> neighbor_idx =
          path == "hh" ? graph.human_neighbors(i) : graph.object_neighbors(i);
      if (neighbor_idx.empty()) {
        zs.push_back(ad::zeros(hcfg.d_embed(), 1));
        atts.push_back(hgat::NodeAttention{});
        continue;
      }
      std::vector<ad::Var> neighbors;
      neighbors.reserve(neighbor_idx.size());
      for (int j : neighbor_idx) {
        neighbors.push_back(path == "hh" ? h_proj[static_cast<std::size_t>(j)]
                                         : o_proj[static_cast<std::size_t>(j)]);
      }
      auto att = hgat::node_attention(params, hcfg, h_proj[static_cast<std::size_t>(i)],
                                      neighbors, path);
      zs.push_back(att.z);
      atts.push_back(std::move(att));
    }
    z_per_path.push_back(std::move(zs));
    attention_per_path.push_back(std::move(atts));
  }

  auto type_att = hgat::type_attention(params, hcfg, z_per_path);

  SceneForward out;
  out.betas = type_att.betas;
  const crn::Config ccfg = cfg.crn_config();
  for (const auto& target : scene.targets) {
    if (target.human_idx < 0 || target.human_idx >= n_humans) {
      throw std::out_of_range("forward_scene: target human index out of range");
    }
    ad::Var z_shadow;
    TargetDiagnostics diag;
    diag.human_id = graph.humans[static_cast<std::size_t>(target.human_idx)].entity_id;
    if (cfg.model_type == ModelType::Full) {
      std::vector<LabelSet> history = target.history;
      if (history.empty()) history.emplace_back();  // cold start: no active actions
      auto causal = crn::rollout(params, ccfg, history, t_powers);
      z_shadow = causal.shadow_feature;
      diag.top_nodes = causal.top_nodes;
    } else {
      z_shadow = ad::zeros(hcfg.d_embed(), 1);
    }
    auto fusion = hgat::shadow_fuse(
        params, hcfg, type_att.fused[static_cast<std::size_t>(target.human_idx)], z_shadow);
    diag.gate = fusion.gate;
    diag.alpha_hh = attention_per_path[0][static_cast<std::size_t>(target.human_idx)].alphas;
    if (use_objects) {
      diag.alpha_oh = attention_per_path[1][static_cast<std::size_t>(target.human_idx)].alphas;
    }
    ad::Var logits = hgat::predict_logits(params, fusion.z_out);
    out.logits.push_back(logits);
    out.probs.push_back(ad::sigmoid(logits));
    out.diagnostics.push_back(std::move(diag));
    if (with_loss) {
      if (target.labels.size() != cfg.n_actions) {
        throw std::invalid_argument("forward_scene: labels missing or wrong length");
      }
      ad::Var term = hgat::bce_loss(logits, target.labels, class_weight_vec);
      out.loss = out.loss.valid() ? ad::add(out.loss, term) : term;
    }
  }
  return out;
}

}  // namespace scrg
