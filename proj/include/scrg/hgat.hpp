#ifndef SCRG_HGAT_HPP
#define SCRG_HGAT_HPP

#include <map>
#include <string>
#include <vector>

#include "scrg/autodiff.hpp"
#include "scrg/spatial_graph.hpp"

namespace scrg::hgat {

enum class Activation { SmoothRectifier, Tanh, Identity };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

struct Config {
  int feature_dim = 256;
  int d_proj = 64;
  int n_heads = 4;
  int d_att = 32;
  int n_actions = 30;
  double leaky_slope = 0.2;
  Activation act = Activation::SmoothRectifier;

  int d_embed() const { return n_heads * d_proj; }
};

// Parameter names used in the ParamStore. Projections are (d_proj x
// feature_dim); one attention vector of length 2*d_proj per meta-path per
// head; see init_params for the full set.
void init_params(ad::ParamStore& params, const Config& cfg, std::uint64_t seed);

struct NodeAttention {
  ad::Var z;  // d_embed x 1, concatenated head outputs
  // per head: attention weight per neighbor, in neighbor-list order
  std::vector<std::vector<double>> alphas;
};

ad::Var project(ad::Binding& params, const ad::Var& h, EntityKind kind);

// Multi-head attention of `center` over `neighbors` for one meta-path
// ("hh" or "oh"). Both inputs are already projected (d_proj x 1).
NodeAttention node_attention(ad::Binding& params, const Config& cfg,
                             const ad::Var& center,
                             const std::vector<ad::Var>& neighbors,
                             const std::string& meta_path);

struct TypeAttention {
  std::vector<ad::Var> fused;  // Z_c per human
  std::vector<double> betas;   // weight per meta-path, sums to 1
};

// z_per_path[p][i] is human i's embedding under meta-path p. The meta-path
// importance is averaged over the human nodes.
TypeAttention type_attention(ad::Binding& params, const Config& cfg,
                             const std::vector<std::vector<ad::Var>>& z_per_path);

struct ShadowFusion {
  ad::Var z_out;
  double gate;  // sigmoid(gate_vec . Z_c), in (0,1)
};

ShadowFusion shadow_fuse(ad::Binding& params, const Config& cfg, const ad::Var& z_c,
                         const ad::Var& z_shadow);

// Per-class logits and independent sigmoid probabilities.
ad::Var predict_logits(ad::Binding& params, const ad::Var& z_out);

ad::Var bce_loss(const ad::Var& logits, const Vec& labels, const Vec& class_weights);

}  // namespace scrg::hgat

#endif
