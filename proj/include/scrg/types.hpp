#ifndef SCRG_TYPES_HPP
#define SCRG_TYPES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace scrg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Index = Eigen::Index;

// Sorted, duplicate-free set of action ids active in one frame or segment.
using LabelSet = std::vector<int>;

}  // namespace scrg

#endif
