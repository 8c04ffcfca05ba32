#include "scrg/causal_kg.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace scrg {

ActionVocab ActionVocab::standard30() {
  return from_names({
      "BG",            "Walking",       "Standing",      "Carrying",
      "Gesturing",     "Closing",       "Opening",       "Interacts",
      "Exiting",       "Entering",      "Talking",       "Transport",
      "Unloading",     "Pull",          "Loading",       "Open_Trunk",
      "Closing_Trunk", "Riding",        "Texting_Phone", "PP_Interaction",
      "Talking_Phone", "Tunning",       "PickUp",        "Using_Tool",
      "SetDown",       "Crouching",     "Sitting",       "Object_Transfer",
      "Push",          "PickUp_2",
  });
}

ActionVocab ActionVocab::from_names(std::vector<std::string> names) {
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) throw std::invalid_argument("duplicate action name: " + n);
  }
  return ActionVocab{std::move(names)};
}

std::vector<LabelSet> segment_frames(const std::vector<LabelSet>& frame_labels,
                                     int segment_len) {
  if (segment_len < 1) throw std::invalid_argument("segment_frames: length must be >= 1");
  std::vector<LabelSet> segments;
  for (std::size_t start = 0; start < frame_labels.size();
       start += static_cast<std::size_t>(segment_len)) {
    std::set<int> merged;
    const std::size_t end =
        std::min(frame_labels.size(), start + static_cast<std::size_t>(segment_len));
    for (std::size_t f = start; f < end; ++f) {
      merged.insert(frame_labels[f].begin(), frame_labels[f].end());
    }
    segments.emplace_back(merged.begin(), merged.end());
  }
  return segments;
}

Mat count_transitions(const std::vector<std::vector<LabelSet>>& per_person_segments,
                      int n_actions) {
  Mat counts = Mat::Zero(n_actions, n_actions);
  for (const auto& segments : per_person_segments) {
    for (std::size_t t = 0; t + 1 < segments.size(); ++t) {
      for (int a : segments[t]) {
        for (int b : segments[t + 1]) {
          if (a < 0 || a >= n_actions) {
            throw std::out_of_range("count_transitions: unknown action id " + std::to_string(a));
          }
          if (b < 0 || b >= n_actions) {
            throw std::out_of_range("count_transitions: unknown action id " + std::to_string(b));
          }
          counts(a, b) += 1.0;
        }
      }
    }
  }
  return counts;
}

ActionKG build_kg(const Mat& counts, ActionVocab vocab) {
  const Index n = counts.rows();
  if (counts.cols() != n || n != vocab.size()) {
    throw std::invalid_argument("build_kg: counts/vocab size mismatch");
  }
  if ((counts.array() < 0.0).any()) throw std::invalid_argument("build_kg: negative count");
  ActionKG kg;
  kg.vocab = std::move(vocab);
  kg.counts = counts;
  kg.weights = Mat::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    double row_max = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (Index j = 0; j < n; ++j) {
      if (counts(i, j) > 0.0) {
        row_max = std::max(row_max, counts(i, j));
        any = true;
      }
    }
    if (!any) continue;  // never-observed source action: row stays zero
    double denom = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (counts(i, j) > 0.0) {
        kg.weights(i, j) = std::exp(counts(i, j) - row_max);
        denom += kg.weights(i, j);
      }
    }
    for (Index j = 0; j < n; ++j) kg.weights(i, j) /= denom;
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (kg.weights(i, j) > 0.0) {
        kg.edges.push_back({static_cast<int>(i), static_cast<int>(j), kg.weights(i, j)});
      }
    }
  }
  return kg;
}

void save_kg(const ActionKG& kg, std::ostream& out) {
  nlohmann::json j;
  j["vocab"] = kg.vocab.names;
  j["num_actions"] = kg.vocab.size();
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : kg.edges) {
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"weight", e.weight}});
  }
  j["edges"] = std::move(edges);
  nlohmann::json counts = nlohmann::json::array();
  for (Index i = 0; i < kg.counts.rows(); ++i) {
    for (Index j2 = 0; j2 < kg.counts.cols(); ++j2) {
      if (kg.counts(i, j2) > 0.0) {
        counts.push_back({{"src", static_cast<int>(i)},
                          {"dst", static_cast<int>(j2)},
                          {"count", static_cast<long long>(kg.counts(i, j2))}});
      }
    }
  }
  j["counts"] = std::move(counts);
  out << j.dump(2) << '\n';
}

ActionKG load_kg(std::istream& in) {
  nlohmann::json j = nlohmann::json::parse(in);
  ActionKG kg;
  kg.vocab = ActionVocab::from_names(j.at("vocab").get<std::vector<std::string>>());
  const int n = j.at("num_actions").get<int>();
  if (n != kg.vocab.size()) throw std::runtime_error("kg file: num_actions/vocab mismatch");
  kg.counts = Mat::Zero(n, n);
  kg.weights = Mat::Zero(n, n);
  for (const auto& c : j.at("counts")) {
    kg.counts(c.at("src").get<int>(), c.at("dst").get<int>()) =
        static_cast<double>(c.at("count").get<long long>());
  }
  for (const auto& e : j.at("edges")) {
    KgEdge edge{e.at("src").get<int>(), e.at("dst").get<int>(), e.at("weight").get<double>()};
    if (edge.src < 0 || edge.src >= n || edge.dst < 0 || edge.dst >= n) {
      throw std::runtime_error("kg file: edge index out of range");
    }
    kg.weights(edge.src, edge.dst) = edge.weight;
    kg.edges.push_back(edge);
  }
  return kg;
}

void write_kg_dot(const ActionKG& kg, std::ostream& out) {
  out << "digraph action_kg {\n";
  std::set<int> used;
  for (const auto& e : kg.edges) {
    used.insert(e.src);
    used.insert(e.dst);
  }
  for (int id : used) {
    out << "  n" << id << " [label=\"" << kg.vocab.names[static_cast<std::size_t>(id)] << "\"];\n";
  }
  for (const auto& e : kg.edges) {
    out << "  n" << e.src << " -> n" << e.dst << " [label=\"" << e.weight << "\"];\n";
  }
  out << "}\n";
}

}  // namespace scrg
