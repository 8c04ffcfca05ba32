#ifndef SCRG_EVAL_HPP
#define SCRG_EVAL_HPP

#include <optional>
#include <ostream>
#include <vector>

#include "scrg/types.hpp"

namespace scrg::eval {

struct EvalRecord {
  Vec scores;  // per-class scores for one sample
  Vec labels;  // binary, same length
};

// Average precision of one class's ranking: samples sorted by descending
// score (ties by input order), AP = mean over positives of precision at
// their rank. Returns nullopt when the class has no positives.
std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<int>& labels);

struct MapResult {
  double mean_ap = 0.0;
  // per class: AP, or nullopt for classes without positives (skipped)
  std::vector<std::optional<double>> per_class;
};

MapResult mean_ap(const std::vector<EvalRecord>& records);

// Tab-separated per-class AP table plus the scalar mAP.
void write_ap_table(const MapResult& result, const std::vector<std::string>& class_names,
                    std::ostream& out);

}  // namespace scrg::eval

#endif
