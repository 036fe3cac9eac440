#pragma once

#include <Eigen/Dense>

#include <vector>

namespace finlit {

// Minimum-total-cost 1:1 assignment for a rectangular cost matrix.
// +inf entries mark forbidden pairs. Returns, per row, the assigned column
// or -1 when the row could only be placed on a forbidden or padded cell.
// Ties between equal-cost optima resolve toward lower column indices.
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost);

}  // namespace finlit
