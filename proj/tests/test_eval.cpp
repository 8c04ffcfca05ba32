#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "scrg/eval.hpp"

using namespace scrg;
using namespace scrg::eval;

namespace {

// definition-level reimplementation used as the oracle: sort by score with
// stable tie handling, then average the precision at each positive
double brute_force_ap(std::vector<double> scores, std::vector<int> labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double hits = 0.0, total = 0.0;
  int positives = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1) {
      hits += 1.0;
      total += hits / static_cast<double>(rank + 1);
      ++positives;
    }
  }
  return total / static_cast<double>(positives);
}

}  // namespace

TEST_CASE("average precision examples") {
  CHECK(average_precision({0.9, 0.1}, {1, 0}).value() == 1.0);
  CHECK(average_precision({0.1, 0.9}, {1, 0}).value() == 0.5);
  CHECK(average_precision({0.3, 0.6, 0.1}, {1, 1, 1}).value() == 1.0);
  CHECK_FALSE(average_precision({0.3, 0.6}, {0, 0}).has_value());
  // one positive at rank 3 of 3
  CHECK(average_precision({0.9, 0.8, 0.7}, {0, 0, 1}).value() ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  // ties keep input order: the positive listed first wins the tie
  CHECK(average_precision({0.5, 0.5}, {1, 0}).value() == 1.0);
  CHECK(average_precision({0.5, 0.5}, {0, 1}).value() == 0.5);
}

TEST_CASE("average precision equals the brute-force definition") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 20);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    int positives = 0;
    for (int i = 0; i < n; ++i) {
      // coarse grid so score ties actually occur
      scores[static_cast<std::size_t>(i)] = std::round(score(rng) * 4.0) / 4.0;
      labels[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
      positives += labels[static_cast<std::size_t>(i)];
    }
    auto ap = average_precision(scores, labels);
    if (positives == 0) {
      CHECK_FALSE(ap.has_value());
    } else {
      REQUIRE(ap.has_value());
      CHECK(std::abs(*ap - brute_force_ap(scores, labels)) <= 1e-12);
      CHECK(*ap >= 0.0);
      CHECK(*ap <= 1.0);
    }
  }
}

TEST_CASE("average precision is invariant to monotone score transforms") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> dist;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 15);
    std::vector<double> scores(static_cast<std::size_t>(n));
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& s : scores) s = dist(rng);
    labels[0] = 1;
    for (int i = 1; i < n; ++i) labels[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
    std::vector<double> warped = scores;
    for (auto& s : warped) s = 3.0 * s + std::tanh(s);  // strictly increasing
    CHECK(average_precision(scores, labels).value() ==
          average_precision(warped, labels).value());
  }
}

TEST_CASE("perfect ranking iff every positive outranks every negative") {
  CHECK(average_precision({5, 4, 3, 2}, {1, 1, 0, 0}).value() == 1.0);
  CHECK(average_precision({5, 4, 3, 2}, {1, 0, 1, 0}).value() < 1.0);
}

TEST_CASE("mean ap over records") {
  auto record = [](std::initializer_list<double> s, std::initializer_list<double> l) {
    EvalRecord r;
    r.scores = Vec(static_cast<Index>(s.size()));
    r.labels = Vec(static_cast<Index>(l.size()));
    Index i = 0;
    for (double v : s) r.scores(i++) = v;
    i = 0;
    for (double v : l) r.labels(i++) = v;
    return r;
  };

  SUBCASE("scores equal to labels is perfect") {
    auto result = mean_ap({record({1, 0, 1}, {1, 0, 1}), record({0, 1, 0}, {0, 1, 0})});
    CHECK(result.mean_ap == 1.0);
  }

  SUBCASE("skipped classes do not dilute the mean") {
    // class 0: perfect; class 1: positive ranked second of two; class 2 empty
    auto result = mean_ap({record({0.9, 0.2, 0.1}, {1, 0, 0}),
                           record({0.1, 0.8, 0.2}, {0, 0, 0}),
                           record({0.8, 0.9, 0.3}, {0, 1, 0})});
    REQUIRE(result.per_class.size() == 3);
    CHECK(result.per_class[0].value() == 1.0);
    CHECK_FALSE(result.per_class[2].has_value());
    CHECK(result.mean_ap == doctest::Approx((1.0 + result.per_class[1].value()) / 2.0)
                                .epsilon(1e-15));
  }

  SUBCASE("no positives anywhere throws") {
    CHECK_THROWS(mean_ap({record({0.5, 0.5}, {0, 0})}));
    CHECK_THROWS(mean_ap({}));
  }
}

TEST_CASE("ap table output") {
  MapResult result;
  result.mean_ap = 0.625;
  result.per_class = {std::optional<double>(1.0), std::nullopt, std::optional<double>(0.25)};
  std::ostringstream out;
  write_ap_table(result, {"alpha", "beta", "gamma"}, out);
  const std::string text = out.str();
  CHECK(text.find("alpha\t1") != std::string::npos);
  CHECK(text.find("beta\tskipped") != std::string::npos);
  CHECK(text.find("gamma\t0.25") != std::string::npos);
  CHECK(text.find("mAP\t0.625") != std::string::npos);
}
