#include "scrg/hgat.hpp"

#include <random>
#include <stdexcept>

namespace scrg::hgat {

Activation activation_from_string(const std::string& s) {
  if (s == "smooth-rectifier") return Activation::SmoothRectifier;
  if (s == "tanh") return Activation::Tanh;
  if (s == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::SmoothRectifier: return "smooth-rectifier";
    case Activation::Tanh: return "tanh";
    case Activation::Identity: return "identity";
  }
  throw std::logic_error("unreachable");
}

namespace {

ad::Var apply_act(const ad::Var& x, Activation a) {
  switch (a) {
    case Activation::SmoothRectifier: return ad::elu(x);
    case Activation::Tanh: return ad::tanh(x);
    case Activation::Identity: return x;
  }
  throw std::logic_error("unreachable");
}

void fill_normal(Mat& m, std::mt19937_64& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Index c = 0; c < m.cols(); ++c) {
    for (Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
  }
}

}  // namespace

void init_params(ad::ParamStore& params, const Config& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto normal = [&](const std::string& name, Index rows, Index cols, double fan_in) {
    Mat& m = params.create(name, rows, cols);
    fill_normal(m, rng, 1.0 / std::sqrt(fan_in));
  };
  normal("hgat.proj.human", cfg.d_proj, cfg.feature_dim, cfg.feature_dim);
  normal("hgat.proj.object", cfg.d_proj, cfg.feature_dim, cfg.feature_dim);
  for (const std::string& path : {"hh", "oh"}) {
    for (int k = 0; k < cfg.n_heads; ++k) {
      normal("hgat.att." + path + "." + std::to_string(k), 2 * cfg.d_proj, 1, 2 * cfg.d_proj);
    }
  }
  normal("hgat.type.q", cfg.d_att, 1, cfg.d_att);
  normal("hgat.type.W", cfg.d_att, cfg.d_embed(), cfg.d_embed());
  params.create("hgat.type.b", cfg.d_att, 1);
  params.create("hgat.gate", cfg.d_embed(), 1);
  normal("hgat.readout.W", cfg.n_actions, cfg.d_embed(), cfg.d_embed());
  params.create("hgat.readout.b", cfg.n_actions, 1);
}

ad::Var project(ad::Binding& params, const ad::Var& h, EntityKind kind) {
  switch (kind) {
    case EntityKind::Human: return ad::matmul(params["hgat.proj.human"], h);
    case EntityKind::Object: return ad::matmul(params["hgat.proj.object"], h);
  }
  throw std::invalid_argument("project: unknown node type");
}

NodeAttention node_attention(ad::Binding& params, const Config& cfg,
                             const ad::Var& center,
                             const std::vector<ad::Var>& neighbors,
                             const std::string& meta_path) {
  if (neighbors.empty()) {
    throw std::invalid_argument("node_attention: empty neighborhood");
  }
  NodeAttention result;
  std::vector<ad::Var> head_outputs;
  for (int k = 0; k < cfg.n_heads; ++k) {
    ad::Var att_vec = params["hgat.att." + meta_path + "." + std::to_string(k)];
    std::vector<ad::Var> scores;
    scores.reserve(neighbors.size());
    for (const auto& nb : neighbors) {
      ad::Var pair = ad::concat_rows({center, nb});
      scores.push_back(ad::leaky_relu(ad::dot(att_vec, pair), cfg.leaky_slope));
    }
    ad::Var alpha = ad::softmax(ad::concat_rows(scores));
    ad::Var stacked = ad::concat_cols(neighbors);  // d_proj x |N|
    ad::Var aggregated = ad::matmul(stacked, alpha);
    head_outputs.push_back(apply_act(aggregated, cfg.act));
    std::vector<double> alpha_row(neighbors.size());
    for (std::size_t j = 0; j < neighbors.size(); ++j) {
      alpha_row[j] = alpha.value()(static_cast<Index>(j), 0);
    }
    result.alphas.push_back(std::move(alpha_row));
  }
  result.z = ad::concat_rows(head_outputs);
  return result;
}

TypeAttention type_attention(ad::Binding& params, const Config& cfg,
                             const std::vector<std::vector<ad::Var>>& z_per_path) {
  if (z_per_path.empty()) throw std::invalid_argument("type_attention: no meta-paths");
  const std::size_t n_humans = z_per_path.front().size();
  for (const auto& zs : z_per_path) {
    if (zs.size() != n_humans) {
      throw std::invalid_argument("type_attention: inconsistent human counts");
    }
  }
  if (n_humans == 0) return TypeAttention{{}, std::vector<double>(z_per_path.size(), 0.0)};

  ad::Var q = params["hgat.type.q"];
  ad::Var w_type = params["hgat.type.W"];
  ad::Var b_type = params["hgat.type.b"];
  std::vector<ad::Var> importances;
  for (const auto& zs : z_per_path) {
    std::vector<ad::Var> terms;
    for (const auto& z : zs) {
      terms.push_back(ad::dot(q, ad::tanh(ad::add(ad::matmul(w_type, z), b_type))));
    }
    importances.push_back(ad::scale(1.0 / static_cast<double>(n_humans),
                                    ad::sum(ad::concat_rows(terms))));
  }
  ad::Var beta = ad::softmax(ad::concat_rows(importances));

  TypeAttention result;
  for (std::size_t p = 0; p < z_per_path.size(); ++p) {
    result.betas.push_back(beta.value()(static_cast<Index>(p), 0));
  }
  for (std::size_t i = 0; i < n_humans; ++i) {
    ad::Var fused;
    for (std::size_t p = 0; p < z_per_path.size(); ++p) {
      ad::Var weighted =
          ad::scale(ad::gather_rows(beta, {static_cast<Index>(p)}), z_per_path[p][i]);
      fused = fused.valid() ? ad::add(fused, weighted) : weighted;
    }
    result.fused.push_back(fused);
  }
  return result;
}

ShadowFusion shadow_fuse(ad::Binding& params, const Config& cfg, const ad::Var& z_c,
                         const ad::Var& z_shadow) {
  if (z_c.value().rows() != z_shadow.value().rows()) {
    throw std::invalid_argument("shadow_fuse: dimension mismatch");
  }
  ad::Var gate = ad::sigmoid(ad::dot(params["hgat.gate"], z_c));
  ad::Var z_out = apply_act(ad::add(z_c, ad::scale(gate, z_shadow)), cfg.act);
  return ShadowFusion{z_out, gate.scalar()};
}

ad::Var predict_logits(ad::Binding& params, const ad::Var& z_out) {
  return ad::add(ad::matmul(params["hgat.readout.W"], z_out), params["hgat.readout.b"]);
}

ad::Var bce_loss(const ad::Var& logits, const Vec& labels, const Vec& class_weights) {
  return ad::bce_with_logits(logits, labels, class_weights);
}

}  // namespace scrg::hgat
