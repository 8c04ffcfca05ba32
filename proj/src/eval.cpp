#include "scrg/eval.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <stdexcept>

namespace scrg::eval {

std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("average_precision: size mismatch");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::size_t positives_seen = 0;
  double precision_sum = 0.0;
  for (std::size_t rank = 0; rank < n; ++rank) {
    if (labels[order[rank]] != 0) {
      ++positives_seen;
      precision_sum += static_cast<double>(positives_seen) / static_cast<double>(rank + 1);
    }
  }
  if (positives_seen == 0) return std::nullopt;
  return precision_sum / static_cast<double>(positives_seen);
}

MapResult mean_ap(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("mean_ap: no records");
  const Index n_classes = records.front().scores.size();
  for (const auto& r : records) {
    if (r.scores.size() != n_classes || r.labels.size() != n_classes) {
      throw std::invalid_argument("mean_ap: inconsistent class counts");
    }
  }
  MapResult result;
  double total = 0.0;
  int counted = 0;
  for (Index c = 0; c < n_classes; ++c) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(records.size());
    labels.reserve(records.size());
    for (const auto& r : records) {
      scores.push_back(r.scores(c));
      labels.push_back(r.labels(c) != 0.0 ? 1 : 0);
    }
    auto ap = average_precision(scores, labels);
    result.per_class.push_back(ap);
    if (ap) {
      total += *ap;
      ++counted;
    }
  }
  if (counted == 0) throw std::invalid_argument("mean_ap: no class has a positive label");
  result.mean_ap = total / counted;
  return result;
}

void write_ap_table(const MapResult& result, const std::vector<std::string>& class_names,
                    std::ostream& out) {
  out << std::setprecision(17);
  out << "class\tap\n";
  for (std::size_t c = 0; c < result.per_class.size(); ++c) {
    const std::string name =
        c < class_names.size() ? class_names[c] : "class_" + std::to_string(c);
    out << name << '\t';
    if (result.per_class[c]) {
      out << *result.per_class[c];
    } else {
      out << "skipped";
    }
    out << '\n';
  }
  out << "mAP\t" << result.mean_ap << '\n';
}

}  // namespace scrg::eval
