#ifndef SCRG_CAUSAL_KG_HPP
#define SCRG_CAUSAL_KG_HPP

#include <ostream>
#include <string>
#include <vector>

#include "scrg/types.hpp"

namespace scrg {

// Ordered action-name vocabulary; the id of an action is its index.
struct ActionVocab {
  std::vector<std::string> names;

  int size() const { return static_cast<int>(names.size()); }

  // The 30-action vocabulary used throughout; ids 22 and 29 both denote a
  // pick-up action in the source annotations and are kept distinct here.
  static ActionVocab standard30();
  static ActionVocab from_names(std::vector<std::string> names);
};

struct KgEdge {
  int src = 0;
  int dst = 0;
  double weight = 0.0;
};

// Weighted directed action-transition graph: raw adjacent-segment switch
// counts plus the row-softmaxed weight matrix over observed transitions.
struct ActionKG {
  ActionVocab vocab;
  Mat counts;   // N x N, nonnegative integers stored as doubles
  Mat weights;  // N x N, rows with support sum to 1
  std::vector<KgEdge> edges;
};

// Collapses frame-indexed label sets into segment-level sets: segment s is
// the union of frames [s*F, (s+1)*F).
std::vector<LabelSet> segment_frames(const std::vector<LabelSet>& frame_labels,
                                     int segment_frames);

// Adjacent-segment switch counts over the full label cross product, self
// switches included.
Mat count_transitions(const std::vector<std::vector<LabelSet>>& per_person_segments,
                      int n_actions);

// Masked row softmax over observed transitions; all-zero rows stay zero.
ActionKG build_kg(const Mat& counts, ActionVocab vocab);

void save_kg(const ActionKG& kg, std::ostream& out);
ActionKG load_kg(std::istream& in);

void write_kg_dot(const ActionKG& kg, std::ostream& out);

}  // namespace scrg

#endif
