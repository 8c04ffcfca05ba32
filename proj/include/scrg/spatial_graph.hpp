#ifndef SCRG_SPATIAL_GRAPH_HPP
#define SCRG_SPATIAL_GRAPH_HPP

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "scrg/types.hpp"

namespace scrg {

enum class EntityKind { Human, Object };

struct Entity {
  std::string entity_id;
  EntityKind kind = EntityKind::Human;
  std::string class_label;
  // bbox: top-left pixel coordinates plus width m and height n
  double x = 0, y = 0, m = 0, n = 0;
  Vec feature;

  double center_x() const { return x + 0.5 * m; }
  double center_y() const { return y + 0.5 * n; }
};

// Per-segment heterogeneous graph. Humans are fully connected (all ordered
// pairs of distinct humans); objects link to every human whose perception
// radius covers their center. Indices refer to the humans/objects vectors.
struct SpatialGraph {
  std::vector<Entity> humans;
  std::vector<Entity> objects;
  std::vector<std::pair<int, int>> edges_hh;  // (src human, dst human)
  std::vector<std::pair<int, int>> edges_oh;  // (src object, dst human)

  std::vector<int> human_neighbors(int human) const;   // hh sources into `human`
  std::vector<int> object_neighbors(int human) const;  // oh sources into `human`
};

// lambda * sqrt(m^2 + n^2), the behavior perception range of a human.
double perception_radius(const Entity& e, double lambda);

SpatialGraph build_graph(const std::vector<Entity>& entities, double lambda);

// One line per edge: `src_id dst_id meta_path` with meta_path in {hh, oh}.
void write_edge_list(const SpatialGraph& graph, std::ostream& out);

// GraphViz export of the same edge set.
void write_dot(const SpatialGraph& graph, std::ostream& out);

}  // namespace scrg

#endif
