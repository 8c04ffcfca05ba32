#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "scrg/hgat.hpp"

using namespace scrg;
using namespace scrg::hgat;

namespace {

Config tiny_config(Activation act = Activation::Identity) {
  Config cfg;
  cfg.feature_dim = 3;
  cfg.d_proj = 2;
  cfg.n_heads = 2;
  cfg.d_att = 2;
  cfg.n_actions = 4;
  cfg.act = act;
  return cfg;
}

ad::Var col(std::initializer_list<double> vals) {
  Mat m(static_cast<Index>(vals.size()), 1);
  Index i = 0;
  for (double v : vals) m(i++, 0) = v;
  return ad::Var(m);
}

void randomize_store(ad::ParamStore& params, std::uint64_t seed, double stddev = 0.5) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  for (const auto& name : params.names()) {
    Mat& m = params.value(name);
    for (Index c = 0; c < m.cols(); ++c) {
      for (Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
    }
  }
}

}  // namespace

TEST_CASE("activation names round trip") {
  for (auto a : {Activation::SmoothRectifier, Activation::Tanh, Activation::Identity}) {
    CHECK(activation_from_string(to_string(a)) == a);
  }
  CHECK_THROWS(activation_from_string("relu6"));
}

TEST_CASE("typed projection") {
  Config cfg = tiny_config();
  ad::ParamStore params;
  init_params(params, cfg, 1);
  params.value("hgat.proj.human") << 1, 0, 0, 0, 1, 0;  // first two coordinates
  params.value("hgat.proj.object").setZero();
  ad::Binding bind(params);

  ad::Var h = col({3.0, -2.0, 5.0});
  Mat expect(2, 1);
  expect << 3.0, -2.0;
  CHECK(project(bind, h, EntityKind::Human).value() == expect);
  CHECK(project(bind, h, EntityKind::Object).value() == Mat::Zero(2, 1));
}

TEST_CASE("node attention hand cases") {
  Config cfg = tiny_config();
  ad::ParamStore params;
  init_params(params, cfg, 2);
  ad::Binding bind(params);

  SUBCASE("single neighbor gets all the weight") {
    ad::Var center = col({1.0, 2.0});
    ad::Var nb = col({-0.5, 4.0});
    auto att = node_attention(bind, cfg, center, {nb}, "hh");
    REQUIRE(att.alphas.size() == 2);
    for (const auto& head : att.alphas) {
      REQUIRE(head.size() == 1);
      CHECK(head[0] == 1.0);
    }
    Mat expect(4, 1);  // identity activation: each head emits the neighbor
    expect << -0.5, 4.0, -0.5, 4.0;
    CHECK((att.z.value() - expect).cwiseAbs().maxCoeff() <= 1e-15);
  }

  SUBCASE("identical neighbors split evenly") {
    ad::Var center = col({1.0, 2.0});
    ad::Var nb = col({3.0, -1.0});
    auto att = node_attention(bind, cfg, center, {nb, nb}, "hh");
    for (const auto& head : att.alphas) {
      CHECK(head[0] == doctest::Approx(0.5).epsilon(1e-15));
      CHECK(head[1] == doctest::Approx(0.5).epsilon(1e-15));
    }
  }

  SUBCASE("hand-computed three-neighbor weights") {
    // pin one head's attention vector and verify against a direct softmax
    Config one_head = cfg;
    one_head.n_heads = 1;
    ad::ParamStore p1;
    init_params(p1, one_head, 3);
    Mat a(4, 1);
    a << 0.0, 0.0, 1.0, 0.0;  // score = leaky_relu(first coord of neighbor)
    p1.value("hgat.att.hh.0") = a;
    ad::Binding b1(p1);
    ad::Var center = col({0.0, 0.0});
    std::vector<ad::Var> nbs = {col({1.0, 0.0}), col({2.0, 0.0}), col({-5.0, 0.0})};
    auto att = node_attention(b1, one_head, center, nbs, "hh");
    const double s0 = std::exp(1.0), s1 = std::exp(2.0), s2 = std::exp(-1.0);
    const double z = s0 + s1 + s2;  // leaky slope 0.2 on the negative score
    CHECK(att.alphas[0][0] == doctest::Approx(s0 / z).epsilon(1e-12));
    CHECK(att.alphas[0][1] == doctest::Approx(s1 / z).epsilon(1e-12));
    CHECK(att.alphas[0][2] == doctest::Approx(s2 / z).epsilon(1e-12));
  }

  SUBCASE("empty neighborhood is rejected") {
    CHECK_THROWS(node_attention(bind, cfg, col({1.0, 2.0}), {}, "hh"));
  }
}

TEST_CASE("node attention invariants over random inputs") {
  Config cfg = tiny_config(Activation::SmoothRectifier);
  ad::ParamStore params;
  init_params(params, cfg, 7);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> dist;
  auto random_col = [&](Index n) {
    Mat m(n, 1);
    for (Index i = 0; i < n; ++i) m(i, 0) = dist(rng);
    return ad::Var(m);
  };
  for (int trial = 0; trial < 20; ++trial) {
    ad::Binding bind(params);
    ad::Var center = random_col(cfg.d_proj);
    const int n_nb = 1 + static_cast<int>(rng() % 5);
    std::vector<ad::Var> nbs;
    for (int j = 0; j < n_nb; ++j) nbs.push_back(random_col(cfg.d_proj));
    auto att = node_attention(bind, cfg, center, nbs, "oh");
    for (const auto& head : att.alphas) {
      double s = 0.0;
      for (double a : head) {
        CHECK(a >= 0.0);
        s += a;
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
    // permutation equivariance: shuffling the neighbor list permutes alphas
    // and leaves the aggregate unchanged
    std::vector<ad::Var> reversed(nbs.rbegin(), nbs.rend());
    ad::Binding bind2(params);
    auto att2 = node_attention(bind2, cfg, center, reversed, "oh");
    CHECK((att.z.value() - att2.z.value()).cwiseAbs().maxCoeff() <= 1e-9);
    for (std::size_t k = 0; k < att.alphas.size(); ++k) {
      for (int j = 0; j < n_nb; ++j) {
        CHECK(std::abs(att.alphas[k][static_cast<std::size_t>(j)] -
                       att2.alphas[k][static_cast<std::size_t>(n_nb - 1 - j)]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("type attention") {
  Config cfg = tiny_config();
  ad::ParamStore params;
  init_params(params, cfg, 11);
  std::mt19937_64 rng(12);
  std::normal_distribution<double> dist;
  auto random_embed = [&]() {
    Mat m(cfg.d_embed(), 1);
    for (Index i = 0; i < m.rows(); ++i) m(i, 0) = dist(rng);
    return ad::Var(m);
  };

  SUBCASE("single meta-path passes through") {
    ad::Binding bind(params);
    ad::Var z = random_embed();
    auto t = type_attention(bind, cfg, {{z}});
    REQUIRE(t.betas.size() == 1);
    CHECK(t.betas[0] == 1.0);
    CHECK((t.fused[0].value() - z.value()).cwiseAbs().maxCoeff() <= 1e-15);
  }

  SUBCASE("identical meta-paths split evenly") {
    ad::Binding bind(params);
    std::vector<ad::Var> zs = {random_embed(), random_embed()};
    auto t = type_attention(bind, cfg, {zs, zs});
    CHECK(t.betas[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t.betas[1] == doctest::Approx(0.5).epsilon(1e-15));
    // fused output equals the shared input
    for (std::size_t i = 0; i < zs.size(); ++i) {
      CHECK((t.fused[i].value() - zs[i].value()).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }

  SUBCASE("zero query vector gives uniform weights") {
    params.value("hgat.type.q").setZero();
    ad::Binding bind(params);
    auto t = type_attention(bind, cfg, {{random_embed()}, {random_embed()}, {random_embed()}});
    for (double b : t.betas) CHECK(b == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }

  SUBCASE("betas always normalize") {
    randomize_store(params, 13);
    ad::Binding bind(params);
    auto t = type_attention(bind, cfg, {{random_embed(), random_embed()},
                                        {random_embed(), random_embed()}});
    CHECK(std::abs(t.betas[0] + t.betas[1] - 1.0) <= 1e-12);
  }
}

TEST_CASE("shadow fusion") {
  Config cfg = tiny_config();
  ad::ParamStore params;
  init_params(params, cfg, 21);
  std::mt19937_64 rng(22);
  std::normal_distribution<double> dist;
  Mat zc(cfg.d_embed(), 1);
  for (Index i = 0; i < zc.rows(); ++i) zc(i, 0) = dist(rng);

  SUBCASE("zero gate vector means gate exactly one half") {
    params.value("hgat.gate").setZero();
    ad::Binding bind(params);
    auto fused = shadow_fuse(bind, cfg, ad::Var(zc), ad::Var(Mat::Ones(cfg.d_embed(), 1)));
    CHECK(fused.gate == 0.5);
    CHECK((fused.z_out.value() - (zc.array() + 0.5).matrix()).cwiseAbs().maxCoeff() <= 1e-15);
  }

  SUBCASE("zero shadow stream leaves only the spatial embedding") {
    randomize_store(params, 23);
    ad::Binding bind(params);
    auto fused = shadow_fuse(bind, cfg, ad::Var(zc), ad::Var(Mat::Zero(cfg.d_embed(), 1)));
    CHECK((fused.z_out.value() - zc).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(fused.gate > 0.0);
    CHECK(fused.gate < 1.0);
  }

  SUBCASE("dimension mismatch throws") {
    ad::Binding bind(params);
    CHECK_THROWS(shadow_fuse(bind, cfg, ad::Var(zc), ad::Var(Mat::Zero(2, 1))));
  }
}

TEST_CASE("prediction head") {
  Config cfg = tiny_config();
  ad::ParamStore params;
  init_params(params, cfg, 31);
  params.value("hgat.readout.W").setZero();
  params.value("hgat.readout.b").setZero();
  ad::Binding bind(params);
  ad::Var z = ad::Var(Mat::Ones(cfg.d_embed(), 1));
  ad::Var logits = predict_logits(bind, z);
  CHECK(logits.value() == Mat::Zero(cfg.n_actions, 1));
  ad::Var probs = ad::sigmoid(logits);
  for (Index i = 0; i < cfg.n_actions; ++i) {
    CHECK(probs.value()(i, 0) == doctest::Approx(0.5).epsilon(1e-15));
  }
  // raising a bias entry raises exactly that logit
  params.value("hgat.readout.b")(2, 0) = 3.0;
  ad::Binding bind2(params);
  ad::Var logits2 = predict_logits(bind2, z);
  CHECK(logits2.value()(2, 0) == 3.0);
  CHECK(logits2.value()(0, 0) == 0.0);
}

TEST_CASE("end-to-end gradients through the attention stack") {
  Config cfg = tiny_config(Activation::SmoothRectifier);
  ad::ParamStore params;
  init_params(params, cfg, 41);

  std::mt19937_64 rng(42);
  std::normal_distribution<double> dist(0.0, 0.8);
  auto random_feature = [&]() {
    Mat m(cfg.feature_dim, 1);
    for (Index i = 0; i < m.rows(); ++i) m(i, 0) = dist(rng);
    return m;
  };
  Mat h0 = random_feature(), h1 = random_feature(), o0 = random_feature();
  Mat shadow(cfg.d_embed(), 1);
  for (Index i = 0; i < shadow.rows(); ++i) shadow(i, 0) = dist(rng);
  Vec labels(cfg.n_actions), weights(cfg.n_actions);
  labels << 1, 0, 1, 0;
  weights << 1.0, 0.5, 2.0, 1.0;

  auto loss_fn = [&](ad::Binding& bind) {
    ad::Var p0 = project(bind, ad::Var(h0), EntityKind::Human);
    ad::Var p1 = project(bind, ad::Var(h1), EntityKind::Human);
    ad::Var po = project(bind, ad::Var(o0), EntityKind::Object);
    auto hh0 = node_attention(bind, cfg, p0, {p1}, "hh");
    auto hh1 = node_attention(bind, cfg, p1, {p0}, "hh");
    auto oh0 = node_attention(bind, cfg, p0, {po}, "oh");
    auto oh1 = node_attention(bind, cfg, p1, {po}, "oh");
    auto typed = type_attention(bind, cfg, {{hh0.z, hh1.z}, {oh0.z, oh1.z}});
    ad::Var total;
    for (const auto& zc : typed.fused) {
      auto fused = shadow_fuse(bind, cfg, zc, ad::Var(shadow));
      ad::Var loss = bce_loss(predict_logits(bind, fused.z_out), labels, weights);
      total = total.valid() ? ad::add(total, loss) : loss;
    }
    return total;
  };
  auto report = ad::grad_check(params, loss_fn, 1e-6, 1e-4);
  CHECK(report.pass);
  CHECK(report.max_rel_err <= 1e-4);
}
