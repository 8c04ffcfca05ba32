#ifndef SCRG_DIFFUSION_RNN_HPP
#define SCRG_DIFFUSION_RNN_HPP

#include <vector>

#include "scrg/autodiff.hpp"
#include "scrg/causal_kg.hpp"

namespace scrg::crn {

struct Config {
  int n_actions = 30;
  int p_dim = 1;       // per-node input signal width (activity indicator)
  int q_dim = 32;      // hidden width per node
  int k_steps = 2;     // diffusion support: powers T^0 .. T^{K-1}
  int top_k = 3;       // nodes fused into the shadow feature
  int d_embed = 256;   // dimension of the fused shadow feature
  double alpha = 0.5;  // restart probability, used only to initialize theta
};

// Out-degree-normalized transition matrix D_O^{-1} W; zero-out-degree rows
// stay zero.
Mat transition_matrix(const ActionKG& kg);

// T^0 .. T^{K-1}, precomputed once per KG.
std::vector<Mat> transition_powers(const Mat& transition, int k_steps);

// Theta layout: (q_dim x in_dim*k_steps), column index k*in_dim + p for
// input channel p at diffusion step k. The k=0 term is the identity pass.
void init_params(ad::ParamStore& params, const Config& cfg, std::uint64_t seed);

// H[:,q] = sum_p sum_k theta(q, k*P+p) T^k X[:,p], no activation.
ad::Var diffusion_conv(const ad::Var& x, const ad::Var& theta,
                       const std::vector<Mat>& t_powers);

// One DCGRU update; gate parameters are read from the binding.
ad::Var dcgru_step(ad::Binding& params, const Config& cfg, const ad::Var& x_t,
                   const ad::Var& h_prev, const std::vector<Mat>& t_powers);

struct CausalState {
  ad::Var hidden;           // N x Q
  ad::Var scores;           // N x 1
  ad::Var shadow_feature;   // d_embed x 1
  std::vector<Index> top_nodes;
};

// Runs the DCGRU over a per-segment action history (activity indicators as
// the node signal), reads out per-node scores, and fuses the top-K nodes.
CausalState rollout(ad::Binding& params, const Config& cfg,
                    const std::vector<LabelSet>& history,
                    const std::vector<Mat>& t_powers);

// Score-softmax-weighted mean of the top-k rows of H (ties broken by lower
// action id), projected to d_embed.
ad::Var top_k_fuse(ad::Binding& params, const Config& cfg, const ad::Var& hidden,
                   const ad::Var& scores, int k, std::vector<Index>* chosen = nullptr);

}  // namespace scrg::crn

#endif
