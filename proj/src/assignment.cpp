#include "finlit/assignment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace finlit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Jonker-Volgenant style shortest augmenting path solve, square matrix.
std::vector<int> solve_square(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    std::vector<double> u(static_cast<size_t>(n) + 1, 0.0), v(static_cast<size_t>(n) + 1, 0.0);
    std::vector<int> p(static_cast<size_t>(n) + 1, 0), way(static_cast<size_t>(n) + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<size_t>(n) + 1, kInf);
        std::vector<char> used(static_cast<size_t>(n) + 1, 0);
        do {
            used[static_cast<size_t>(j0)] = 1;
            const int i0 = p[static_cast<size_t>(j0)];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) continue;
                const double cur = cost[static_cast<size_t>(i0 - 1)][static_cast<size_t>(j - 1)] -
                                   u[static_cast<size_t>(i0)] - v[static_cast<size_t>(j)];
                if (cur < minv[static_cast<size_t>(j)]) {
                    minv[static_cast<size_t>(j)] = cur;
                    way[static_cast<size_t>(j)] = j0;
                }
                if (minv[static_cast<size_t>(j)] < delta) {
                    delta = minv[static_cast<size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<size_t>(j)]) {
                    u[static_cast<size_t>(p[static_cast<size_t>(j)])] += delta;
                    v[static_cast<size_t>(j)] -= delta;
                } else {
                    minv[static_cast<size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<size_t>(j0)];
            p[static_cast<size_t>(j0)] = p[static_cast<size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> row_to_col(static_cast<size_t>(n), -1);
    for (int j = 1; j <= n; ++j)
        if (p[static_cast<size_t>(j)] != 0)
            row_to_col[static_cast<size_t>(p[static_cast<size_t>(j)] - 1)] = j - 1;
    return row_to_col;
}

}  // namespace

std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
    const int n1 = static_cast<int>(cost.rows());
    const int n0 = static_cast<int>(cost.cols());
    if (n1 == 0 || n0 == 0) return std::vector<int>(static_cast<size_t>(n1), -1);

    double max_finite = 0.0, sum_finite = 0.0;
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n0; ++j) {
            const double c = cost(i, j);
            if (std::isinf(c)) continue;
            if (c < 0.0 || !std::isfinite(c))
                throw std::invalid_argument("min_cost_assignment: entries must be >= 0 or +inf");
            max_finite = std::max(max_finite, c);
            sum_finite += c;
        }

    // any number of finite pairs beats one forbidden/padded placement
    const double big = sum_finite + max_finite + 1.0;
    // nudge equal-cost optima toward lower column indices
    const double tie_eps = 1e-12 * (1.0 + max_finite) / static_cast<double>(n0);

    const int N = std::max(n1, n0);
    std::vector<std::vector<double>> sq(static_cast<size_t>(N),
                                        std::vector<double>(static_cast<size_t>(N), 0.0));
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            if (i >= n1) { sq[static_cast<size_t>(i)][static_cast<size_t>(j)] = 0.0; continue; }
            if (j >= n0) { sq[static_cast<size_t>(i)][static_cast<size_t>(j)] = big; continue; }
            const double c = cost(i, j);
            sq[static_cast<size_t>(i)][static_cast<size_t>(j)] =
                std::isinf(c) ? big : c + tie_eps * static_cast<double>(j);
        }

    std::vector<int> assign = solve_square(sq);
    assign.resize(static_cast<size_t>(n1));
    for (int i = 0; i < n1; ++i) {
        const int j = assign[static_cast<size_t>(i)];
        if (j < 0 || j >= n0 || std::isinf(cost(i, j))) assign[static_cast<size_t>(i)] = -1;
    }
    return assign;
}

}  // namespace finlit
