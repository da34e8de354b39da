#include <smoothmatch/synth.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

namespace smoothmatch {

TriMesh icosphere(int subdivisions)
{
    if (subdivisions < 0) throw std::invalid_argument("icosphere: negative subdivision level");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> verts = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    for (auto& v : verts) v.normalize();
    std::vector<Eigen::Vector3i> faces = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
        {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        const auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            verts.push_back((verts[a] + verts[b]).normalized());
            const int id = static_cast<int>(verts.size()) - 1;
            midpoint.emplace(key, id);
            return id;
        };
        std::vector<Eigen::Vector3i> next;
        next.reserve(4 * faces.size());
        for (const auto& f : faces) {
            const int ab = mid(f(0), f(1));
            const int bc = mid(f(1), f(2));
            const int ca = mid(f(2), f(0));
            next.emplace_back(f(0), ab, ca);
            next.emplace_back(f(1), bc, ab);
            next.emplace_back(f(2), ca, bc);
            next.emplace_back(ab, bc, ca);
        }
        faces = std::move(next);
    }

    Vertices V(verts.size(), 3);
    for (std::size_t i = 0; i < verts.size(); ++i) V.row(i) = verts[i].transpose();
    Faces F(faces.size(), 3);
    for (std::size_t i = 0; i < faces.size(); ++i) F.row(i) = faces[i].transpose();
    return TriMesh(std::move(V), std::move(F));
}

TriMesh grid_patch(int nx, int ny, double h)
{
    if (nx < 2 || ny < 2) throw std::invalid_argument("grid_patch: need at least 2 x 2 vertices");
    Vertices V(nx * ny, 3);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) V.row(j * nx + i) << i * h, j * h, 0.0;
    }
    Faces F(2 * (nx - 1) * (ny - 1), 3);
    int f = 0;
    for (int j = 0; j + 1 < ny; ++j) {
        for (int i = 0; i + 1 < nx; ++i) {
            const int a = j * nx + i, b = a + 1, c = a + nx, d = c + 1;
            F.row(f++) << a, b, d;
            F.row(f++) << a, d, c;
        }
    }
    return TriMesh(std::move(V), std::move(F));
}

TriMesh jitter(const TriMesh& mesh, double amount, std::uint64_t seed)
{
    if (amount == 0.0) return mesh;
    std::mt19937_64 rng(seed);
    // Explicit affine map of the raw 64-bit draw keeps outputs identical across standard libraries.
    const auto uniform = [&rng] { return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0; };
    const double scale = amount * mesh.bbox_diagonal();
    Vertices V = mesh.vertices();
    for (int i = 0; i < V.rows(); ++i) {
        for (int c = 0; c < 3; ++c) V(i, c) += scale * uniform();
    }
    return mesh.with_vertices(std::move(V));
}

std::vector<int> farthest_point_sampling(const TriMesh& mesh, int count, int start)
{
    if (count < 1 || count > mesh.n_vertices()) throw std::invalid_argument("farthest_point_sampling: bad count");
    if (start < 0 || start >= mesh.n_vertices()) throw std::out_of_range("farthest_point_sampling: bad start");
    std::vector<int> picked{start};
    Eigen::RowVectorXd nearest = geodesic_distances(mesh, {start}).row(0);
    while (static_cast<int>(picked.size()) < count) {
        Eigen::Index next = 0;
        nearest.maxCoeff(&next);
        picked.push_back(static_cast<int>(next));
        nearest = nearest.cwiseMin(geodesic_distances(mesh, {static_cast<int>(next)}).row(0));
    }
    return picked;
}

} // namespace smoothmatch
