#include <smoothmatch/knn.hpp>
#include <smoothmatch/mesh.hpp>
#include <smoothmatch/parallel.hpp>

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace smoothmatch {

namespace {

// Above this dimension a tree prunes almost nothing; scanning is faster.
constexpr int kMaxTreeDim = 24;

inline void consider(int idx, double dist, int& best, double& best_dist)
{
    if (dist < best_dist || (dist == best_dist && idx < best)) {
        best = idx;
        best_dist = dist;
    }
}

} // namespace

double squared_distance(const double* a, const double* b, int dim)
{
    double sum = 0.0;
    for (int c = 0; c < dim; ++c) {
        const double d = a[c] - b[c];
        sum += d * d;
    }
    return sum;
}

struct KdTree::Node {
    int begin = 0;
    int end = 0;
    int split_dim = -1; // -1 for leaves
    double split_value = 0.0;
    int left = -1;
    int right = -1;
};

KdTree::KdTree(RowMatrix data, int leaf_size)
    : m_data(std::move(data))
    , m_leaf_size(std::max(1, leaf_size))
{
    m_index.resize(m_data.rows());
    std::iota(m_index.begin(), m_index.end(), 0);
    if (m_data.rows() > 0) build(0, static_cast<int>(m_data.rows()));
}

KdTree::~KdTree() = default;
KdTree::KdTree(KdTree&&) noexcept = default;
KdTree& KdTree::operator=(KdTree&&) noexcept = default;

int KdTree::build(int begin, int end)
{
    const int id = static_cast<int>(m_nodes.size());
    m_nodes.push_back(Node{begin, end});
    if (end - begin <= m_leaf_size || m_data.cols() == 0) return id;

    int best_dim = 0;
    double best_spread = -1.0;
    for (int c = 0; c < m_data.cols(); ++c) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int i = begin; i < end; ++i) {
            const double v = m_data(m_index[i], c);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > best_spread) {
            best_spread = hi - lo;
            best_dim = c;
        }
    }
    if (best_spread <= 0.0) return id;

    const int mid = begin + (end - begin) / 2;
    std::nth_element(
        m_index.begin() + begin, m_index.begin() + mid, m_index.begin() + end,
        [&](int a, int b) { return m_data(a, best_dim) < m_data(b, best_dim); });

    const double split = m_data(m_index[mid], best_dim);
    const int left = build(begin, mid);
    const int right = build(mid, end);
    Node& node = m_nodes[id];
    node.split_dim = best_dim;
    node.split_value = split;
    node.left = left;
    node.right = right;
    return id;
}

void KdTree::search(int node_id, const double* query, int& best, double& best_dist) const
{
    const Node& node = m_nodes[node_id];
    if (node.split_dim < 0) {
        const int dim = static_cast<int>(m_data.cols());
        for (int i = node.begin; i < node.end; ++i) {
            const int idx = m_index[i];
            consider(idx, squared_distance(query, m_data.row(idx).data(), dim), best, best_dist);
        }
        return;
    }
    // Left holds coordinates <= split, right holds coordinates >= split.
    const double diff = query[node.split_dim] - node.split_value;
    const int near = diff < 0.0 ? node.left : node.right;
    const int far = diff < 0.0 ? node.right : node.left;
    search(near, query, best, best_dist);
    if (diff * diff <= best_dist) search(far, query, best, best_dist);
}

int KdTree::nearest(const double* query) const
{
    if (m_data.rows() == 0) throw std::invalid_argument("nearest-neighbor query on empty data");
    int best = std::numeric_limits<int>::max();
    double best_dist = std::numeric_limits<double>::infinity();
    search(0, query, best, best_dist);
    return best;
}

std::vector<int> nearest_rows(const RowMatrix& queries, const RowMatrix& data)
{
    if (data.rows() == 0) throw std::invalid_argument("nearest_rows: empty data");
    if (queries.cols() != data.cols()) {
        throw DimensionError(
            "nearest_rows: query dimension " + std::to_string(queries.cols()) +
            " != data dimension " + std::to_string(data.cols()));
    }
    const int nq = static_cast<int>(queries.rows());
    const int dim = static_cast<int>(data.cols());
    std::vector<int> out(nq);

    if (dim > kMaxTreeDim) {
        parallel_for(nq, [&](int begin, int end) {
            for (int q = begin; q < end; ++q) {
                int best = std::numeric_limits<int>::max();
                double best_dist = std::numeric_limits<double>::infinity();
                const double* query = queries.row(q).data();
                for (int i = 0; i < data.rows(); ++i) {
                    consider(i, squared_distance(query, data.row(i).data(), dim), best, best_dist);
                }
                out[q] = best;
            }
        });
        return out;
    }

    const KdTree tree(data);
    parallel_for(nq, [&](int begin, int end) {
        for (int q = begin; q < end; ++q) out[q] = tree.nearest(queries.row(q).data());
    });
    return out;
}

} // namespace smoothmatch
