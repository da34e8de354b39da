#include <smoothmatch/mesh.hpp>
#include <smoothmatch/parallel.hpp>

#include <limits>
#include <queue>

namespace smoothmatch {

namespace {

struct Adjacency {
    std::vector<int> offsets;
    std::vector<int> neighbors;
    std::vector<double> lengths;
};

Adjacency build_adjacency(const TriMesh& mesh)
{
    const auto edges = mesh.edges();
    Adjacency adj;
    adj.offsets.assign(mesh.n_vertices() + 1, 0);
    for (const auto& [a, b] : edges) {
        ++adj.offsets[a + 1];
        ++adj.offsets[b + 1];
    }
    for (int v = 0; v < mesh.n_vertices(); ++v) adj.offsets[v + 1] += adj.offsets[v];
    adj.neighbors.resize(adj.offsets.back());
    adj.lengths.resize(adj.offsets.back());
    std::vector<int> fill(adj.offsets.begin(), adj.offsets.end() - 1);
    for (const auto& [a, b] : edges) {
        const double len = (mesh.vertices().row(a) - mesh.vertices().row(b)).norm();
        adj.neighbors[fill[a]] = b;
        adj.lengths[fill[a]++] = len;
        adj.neighbors[fill[b]] = a;
        adj.lengths[fill[b]++] = len;
    }
    return adj;
}

void dijkstra(const Adjacency& adj, int source, Eigen::Ref<Eigen::RowVectorXd> dist)
{
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
    dist.setConstant(std::numeric_limits<double>::infinity());
    dist(source) = 0.0;
    queue.emplace(0.0, source);
    while (!queue.empty()) {
        const auto [d, v] = queue.top();
        queue.pop();
        if (d > dist(v)) continue;
        for (int e = adj.offsets[v]; e < adj.offsets[v + 1]; ++e) {
            const int u = adj.neighbors[e];
            const double nd = d + adj.lengths[e];
            if (nd < dist(u)) {
                dist(u) = nd;
                queue.emplace(nd, u);
            }
        }
    }
}

} // namespace

Eigen::MatrixXd geodesic_distances(const TriMesh& mesh, const std::vector<int>& sources)
{
    for (int s : sources) {
        if (s < 0 || s >= mesh.n_vertices()) {
            throw std::out_of_range("geodesic source " + std::to_string(s) + " out of range");
        }
    }
    const Adjacency adj = build_adjacency(mesh);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(
        sources.size(), mesh.n_vertices());
    parallel_for(static_cast<int>(sources.size()), [&](int begin, int end) {
        for (int s = begin; s < end; ++s) dijkstra(adj, sources[s], out.row(s));
    });
    return out;
}

} // namespace smoothmatch
