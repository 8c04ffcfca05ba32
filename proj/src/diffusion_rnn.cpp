#include "scrg/diffusion_rnn.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <stdexcept>

namespace scrg::crn {

Mat transition_matrix(const ActionKG& kg) {
  const Index n = kg.weights.rows();
  Mat t = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    const double out_degree = kg.weights.row(i).sum();
    if (out_degree > 0.0) t.row(i) = kg.weights.row(i) / out_degree;
  }
  return t;
}

std::vector<Mat> transition_powers(const Mat& transition, int k_steps) {
  if (k_steps < 1) throw std::invalid_argument("transition_powers: k_steps must be >= 1");
  std::vector<Mat> powers;
  powers.push_back(Mat::Identity(transition.rows(), transition.cols()));
  for (int k = 1; k < k_steps; ++k) powers.push_back(powers.back() * transition);
  return powers;
}

void init_params(ad::ParamStore& params, const Config& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int in_dim = cfg.p_dim + cfg.q_dim;
  for (const std::string& gate : {"r", "u", "c"}) {
    Mat& theta = params.create("crn.theta." + gate, cfg.q_dim, in_dim * cfg.k_steps);
    for (int k = 0; k < cfg.k_steps; ++k) {
      const double coeff = cfg.alpha * std::pow(1.0 - cfg.alpha, k);
      theta.middleCols(k * in_dim, in_dim).setConstant(coeff);
    }
    params.create("crn.bias." + gate, cfg.q_dim, 1);
  }
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(cfg.q_dim)));
  Mat& score_w = params.create("crn.score.w", cfg.q_dim, 1);
  for (Index r = 0; r < score_w.rows(); ++r) score_w(r, 0) = dist(rng);
  params.create("crn.score.b", 1, 1);
  Mat& fuse = params.create("crn.fuse.W", cfg.d_embed, cfg.q_dim);
  for (Index c = 0; c < fuse.cols(); ++c) {
    for (Index r = 0; r < fuse.rows(); ++r) fuse(r, c) = dist(rng);
  }
}

ad::Var diffusion_conv(const ad::Var& x, const ad::Var& theta,
                       const std::vector<Mat>& t_powers) {
  const Index in_dim = x.value().cols();
  if (theta.value().cols() != in_dim * static_cast<Index>(t_powers.size())) {
    throw std::invalid_argument("diffusion_conv: theta/k_steps dimension mismatch");
  }
  std::vector<ad::Var> diffused;
  diffused.reserve(t_powers.size());
  for (const Mat& tk : t_powers) {
    diffused.push_back(ad::matmul(ad::constant(tk), x));
  }
  ad::Var basis = ad::concat_cols(diffused);  // N x (in_dim * K)
  return ad::matmul(basis, ad::transpose(theta));
}

ad::Var dcgru_step(ad::Binding& params, const Config& cfg, const ad::Var& x_t,
                   const ad::Var& h_prev, const std::vector<Mat>& t_powers) {
  ad::Var xh = ad::concat_cols({x_t, h_prev});
  ad::Var r = ad::sigmoid(ad::add_rowwise(
      diffusion_conv(xh, params["crn.theta.r"], t_powers), params["crn.bias.r"]));
  ad::Var u = ad::sigmoid(ad::add_rowwise(
      diffusion_conv(xh, params["crn.theta.u"], t_powers), params["crn.bias.u"]));
  ad::Var xrh = ad::concat_cols({x_t, ad::cmul(r, h_prev)});
  ad::Var c = ad::tanh(ad::add_rowwise(
      diffusion_conv(xrh, params["crn.theta.c"], t_powers), params["crn.bias.c"]));
  ad::Var ones = ad::constant(Mat::Ones(u.value().rows(), u.value().cols()));
  return ad::add(ad::cmul(u, h_prev), ad::cmul(ad::sub(ones, u), c));
}

ad::Var top_k_fuse(ad::Binding& params, const Config& cfg, const ad::Var& hidden,
                   const ad::Var& scores, int k, std::vector<Index>* chosen) {
  const Index n = scores.value().rows();
  if (k < 1 || k > n) throw std::invalid_argument("top_k_fuse: k out of range");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return scores.value()(a, 0) > scores.value()(b, 0);
  });
  std::vector<Index> selected(order.begin(), order.begin() + k);
  if (chosen) *chosen = selected;
  ad::Var sel_scores = ad::gather_rows(scores, selected);
  ad::Var weights = ad::softmax(sel_scores);
  ad::Var sel_hidden = ad::gather_rows(hidden, selected);  // k x Q
  ad::Var fused = ad::matmul(ad::transpose(sel_hidden), weights);  // Q x 1
  return ad::matmul(params["crn.fuse.W"], fused);
}

CausalState rollout(ad::Binding& params, const Config& cfg,
                    const std::vector<LabelSet>& history,
                    const std::vector<Mat>& t_powers) {
  if (history.empty()) throw std::invalid_argument("rollout: empty history");
  if (cfg.p_dim != 1) throw std::invalid_argument("rollout: activity indicator requires p_dim 1");
  ad::Var h = ad::zeros(cfg.n_actions, cfg.q_dim);
  for (const LabelSet& segment : history) {
    Mat x = Mat::Zero(cfg.n_actions, 1);
    for (int a : segment) {
      if (a < 0 || a >= cfg.n_actions) {
        throw std::out_of_range("rollout: action id out of range: " + std::to_string(a));
      }
      x(a, 0) = 1.0;
    }
    h = dcgru_step(params, cfg, ad::constant(std::move(x)), h, t_powers);
  }
  CausalState state;
  state.hidden = h;
  state.scores = ad::add_rowwise(ad::matmul(h, params["crn.score.w"]), params["crn.score.b"]);
  state.shadow_feature =
      top_k_fuse(params, cfg, h, state.scores, std::min(cfg.top_k, cfg.n_actions),
                 &state.top_nodes);
  return state;
}

}  // namespace scrg::crn
