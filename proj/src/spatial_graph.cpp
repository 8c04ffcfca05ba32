#include "scrg/spatial_graph.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace scrg {

std::vector<int> SpatialGraph::human_neighbors(int human) const {
  std::vector<int> out;
  for (const auto& [src, dst] : edges_hh) {
    if (dst == human) out.push_back(src);
  }
  return out;
}

std::vector<int> SpatialGraph::object_neighbors(int human) const {
  std::vector<int> out;
  for (const auto& [src, dst] : edges_oh) {
    if (dst == human) out.push_back(src);
  }
  return out;
}

double perception_radius(const Entity& e, double lambda) {
  if (e.kind != EntityKind::Human) {
    throw std::invalid_argument("perception_radius: entity is not a human");
  }
  if (!(e.m > 0.0) || !(e.n > 0.0)) {
    throw std::invalid_argument("perception_radius: nonpositive bbox dimensions");
  }
  if (!(lambda > 0.0)) throw std::invalid_argument("perception_radius: lambda must be positive");
  return lambda * std::sqrt(e.m * e.m + e.n * e.n);
}

SpatialGraph build_graph(const std::vector<Entity>& entities, double lambda) {
  std::set<std::string> ids;
  for (const auto& e : entities) {
    if (!ids.insert(e.entity_id).second) {
      throw std::invalid_argument("build_graph: duplicate entity id " + e.entity_id);
    }
  }
  SpatialGraph g;
  for (const auto& e : entities) {
    (e.kind == EntityKind::Human ? g.humans : g.objects).push_back(e);
  }
  const int n_humans = static_cast<int>(g.humans.size());
  for (int i = 0; i < n_humans; ++i) {
    for (int j = 0; j < n_humans; ++j) {
      if (i != j) g.edges_hh.emplace_back(i, j);
    }
  }
  for (int h = 0; h < n_humans; ++h) {
    const double radius = perception_radius(g.humans[h], lambda);
    for (int o = 0; o < static_cast<int>(g.objects.size()); ++o) {
      const double dx = g.objects[o].center_x() - g.humans[h].center_x();
      const double dy = g.objects[o].center_y() - g.humans[h].center_y();
      if (std::sqrt(dx * dx + dy * dy) <= radius) g.edges_oh.emplace_back(o, h);
    }
  }
  return g;
}

void write_edge_list(const SpatialGraph& graph, std::ostream& out) {
  for (const auto& [src, dst] : graph.edges_hh) {
    out << graph.humans[src].entity_id << ' ' << graph.humans[dst].entity_id << " hh\n";
  }
  for (const auto& [src, dst] : graph.edges_oh) {
    out << graph.objects[src].entity_id << ' ' << graph.humans[dst].entity_id << " oh\n";
  }
}

void write_dot(const SpatialGraph& graph, std::ostream& out) {
  out << "digraph spatial {\n";
  for (const auto& h : graph.humans) {
    out << "  \"" << h.entity_id << "\" [shape=circle];\n";
  }
  for (const auto& o : graph.objects) {
    out << "  \"" << o.entity_id << "\" [shape=box,label=\"" << o.class_label << "\"];\n";
  }
  for (const auto& [src, dst] : graph.edges_hh) {
    out << "  \"" << graph.humans[src].entity_id << "\" -> \"" << graph.humans[dst].entity_id
        << "\";\n";
  }
  for (const auto& [src, dst] : graph.edges_oh) {
    out << "  \"" << graph.objects[src].entity_id << "\" -> \"" << graph.humans[dst].entity_id
        << "\" [style=dashed];\n";
  }
  out << "}\n";
}

}  // namespace scrg
