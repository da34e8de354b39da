#pragma once

#include <Eigen/Core>

#include <memory>
#include <vector>

namespace smoothmatch {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

///
/// Exact nearest-neighbor index over the rows of a dense matrix.
///
/// Queries return the row minimizing squared Euclidean distance; ties resolve to the
/// smallest row index. Distances are accumulated in coordinate order, so results agree
/// bit-for-bit with a brute-force scan using `squared_distance`.
///
class KdTree {
public:
    explicit KdTree(RowMatrix data, int leaf_size = 16);
    ~KdTree();
    KdTree(KdTree&&) noexcept;
    KdTree& operator=(KdTree&&) noexcept;

    int nearest(const double* query) const;
    int rows() const { return static_cast<int>(m_data.rows()); }
    int dim() const { return static_cast<int>(m_data.cols()); }

private:
    struct Node;
    int build(int begin, int end);
    void search(int node, const double* query, int& best, double& best_dist) const;

    RowMatrix m_data;
    std::vector<int> m_index;
    std::vector<Node> m_nodes;
    int m_leaf_size;
};

double squared_distance(const double* a, const double* b, int dim);

/// Per query row, index of the nearest data row (exact; smallest index on ties).
std::vector<int> nearest_rows(const RowMatrix& queries, const RowMatrix& data);

} // namespace smoothmatch
