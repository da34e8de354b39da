#include "fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace smtest {

double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int uniform_int(Rng& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

TriMesh random_patch(Rng& rng, int nx, int ny, double noise)
{
    const double h = 1.0;
    TriMesh grid = grid_patch(nx, ny, h);
    Vertices V = grid.vertices();
    for (int i = 0; i < V.rows(); ++i) {
        V(i, 0) += noise * uniform(rng, -h, h);
        V(i, 1) += noise * uniform(rng, -h, h);
        V(i, 2) += 2.0 * noise * uniform(rng, -h, h);
    }
    return grid.with_vertices(std::move(V)).normalized();
}

TriMesh random_sphere(Rng& rng, int subdiv, double noise)
{
    return jitter(icosphere(subdiv), noise, rng()).normalized();
}

TriMesh random_small_mesh(Rng& rng, int max_vertices)
{
    if (max_vertices >= 12 && uniform(rng) < 0.3) return random_sphere(rng, 0, 0.03);
    for (;;) {
        const int nx = uniform_int(rng, 3, 6);
        const int ny = uniform_int(rng, 3, 6);
        if (nx * ny <= max_vertices) return random_patch(rng, nx, ny);
    }
}

PointwiseMap random_map(Rng& rng, int n_src, int n_tgt)
{
    std::vector<int> t(n_src);
    for (int& v : t) v = uniform_int(rng, 0, n_tgt - 1);
    return PointwiseMap(std::move(t), n_tgt);
}

Eigen::Matrix3d random_rotation(Rng& rng)
{
    std::normal_distribution<double> n01;
    Eigen::Quaterniond q(n01(rng), n01(rng), n01(rng), n01(rng));
    return q.normalized().toRotationMatrix();
}

RowMatrix random_matrix(Rng& rng, int rows, int cols, double scale)
{
    RowMatrix M(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) M(i, j) = scale * uniform(rng, -1.0, 1.0);
    }
    return M;
}

SolverState random_state(Rng& rng, const Shape& s1, const Shape& s2, int k, Variant kind)
{
    SolverState st;
    st.k = k;
    st.pi = {random_map(rng, s1.n(), s2.n()), random_map(rng, s2.n(), s1.n())};
    for (int d = 0; d < 2; ++d) {
        const Shape& src = d == 0 ? s1 : s2;
        st.fmap[d] = random_matrix(rng, k, k);
        st.y[d] = random_matrix(rng, src.n(), 3, 0.5);
        if (kind == Variant::NICP) {
            AffineField D(src.n());
            for (int i = 0; i < src.n(); ++i) {
                D[i] = Eigen::Matrix<double, 3, 4>::Random() * 0.3;
                D[i].leftCols<3>() += Eigen::Matrix3d::Identity();
                st.y[d].row(i) = (D[i] * src.X.row(i).transpose().homogeneous()).transpose();
            }
            st.aux[d].affine = std::move(D);
        }
        if (kind == Variant::ARAP || kind == Variant::Shells) {
            RotationField R(src.n());
            for (auto& r : R) r = random_rotation(rng);
            st.aux[d].rotations = std::move(R);
        }
        if (kind == Variant::Shells) {
            RowMatrix D = random_matrix(rng, k, 3, 0.1);
            st.y[d] = src.X + src.basis.head(k) * D;
            st.aux[d].displacement = std::move(D);
        }
    }
    return st;
}

bool rel_close(double a, double b, double tol)
{
    return std::abs(a - b) <= tol * std::max({1e-300, std::abs(a), std::abs(b)});
}

namespace oracle {

Eigen::MatrixXd cotan_weights(const TriMesh& mesh)
{
    const int n = mesh.n_vertices();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    const auto& V = mesh.vertices();
    for (int f = 0; f < mesh.n_faces(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const int k = mesh.faces()(f, c);
            const int i = mesh.faces()(f, (c + 1) % 3);
            const int j = mesh.faces()(f, (c + 2) % 3);
            const Eigen::Vector3d a = (V.row(i) - V.row(k)).transpose();
            const Eigen::Vector3d b = (V.row(j) - V.row(k)).transpose();
            const double cosang = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
            double cot = 1.0 / std::tan(std::acos(cosang));
            cot = std::clamp(cot, -kCotangentClamp, kCotangentClamp);
            w(i, j) += 0.5 * cot;
            w(j, i) += 0.5 * cot;
        }
    }
    return w;
}

Eigen::MatrixXd laplacian(const TriMesh& mesh)
{
    const Eigen::MatrixXd w = cotan_weights(mesh);
    Eigen::MatrixXd L = -w;
    L.diagonal() = w.rowwise().sum();
    return L;
}

Eigen::VectorXd lumped_mass(const TriMesh& mesh)
{
    Eigen::VectorXd m = Eigen::VectorXd::Zero(mesh.n_vertices());
    const auto& V = mesh.vertices();
    for (int f = 0; f < mesh.n_faces(); ++f) {
        const auto F = mesh.faces().row(f);
        const Eigen::Vector3d e1 = (V.row(F(1)) - V.row(F(0))).transpose();
        const Eigen::Vector3d e2 = (V.row(F(2)) - V.row(F(0))).transpose();
        const double area = 0.5 * e1.cross(e2).norm();
        for (int c = 0; c < 3; ++c) m(F(c)) += area / 3.0;
    }
    return m;
}

Eigen::MatrixXd map_matrix(const PointwiseMap& pi)
{
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(pi.n_src(), pi.n_tgt());
    for (int p = 0; p < pi.n_src(); ++p) P(p, pi[p]) = 1.0;
    return P;
}

double dirichlet(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& Y)
{
    double e = 0.0;
    for (int i = 0; i < weights.rows(); ++i) {
        for (int j = i + 1; j < weights.cols(); ++j) {
            if (weights(i, j) != 0.0) e += weights(i, j) * (Y.row(i) - Y.row(j)).squaredNorm();
        }
    }
    return e;
}

double mass_norm(const Eigen::MatrixXd& M, const Eigen::VectorXd& mass)
{
    return (M.transpose() * mass.asDiagonal() * M).trace();
}

double bijectivity(const SolverState& st, const Shape& s1, const Shape& s2, const EnergyWeights& w)
{
    double e = 0.0;
    for (int d = 0; d < 2; ++d) {
        const Shape& src = d == 0 ? s1 : s2;
        const Shape& tgt = d == 0 ? s2 : s1;
        const Eigen::MatrixXd P = map_matrix(st.pi[d]);
        const Eigen::MatrixXd phi_s = src.basis.phi.leftCols(st.k);
        const Eigen::MatrixXd phi_t = tgt.basis.phi.leftCols(st.k);
        const Eigen::VectorXd A = lumped_mass(src.mesh);
        e += w.spectral_bij * mass_norm(P * phi_t * st.fmap[1 - d] - phi_s, A);
        e += w.alpha * mass_norm(phi_s * st.fmap[d] - P * phi_t, A);
    }
    return e;
}

double arap(const TriMesh& mesh, const std::vector<Eigen::Matrix3d>& R, const Eigen::MatrixXd& Y)
{
    const Eigen::MatrixXd w = cotan_weights(mesh);
    const auto& X = mesh.vertices();
    double e = 0.0;
    for (int i = 0; i < w.rows(); ++i) {
        for (int j = 0; j < w.cols(); ++j) {
            if (i == j || w(i, j) == 0.0) continue;
            const Eigen::Vector3d dy = (Y.row(i) - Y.row(j)).transpose();
            const Eigen::Vector3d dx = (X.row(i) - X.row(j)).transpose();
            e += 0.5 * w(i, j) * (dy - R[i] * dx).squaredNorm();
        }
    }
    return e;
}

double smoothness(
    const SolverState& st, const Shape& s1, const Shape& s2, const EnergyWeights& w, const VariantParams& v)
{
    double e = 0.0;
    for (int d = 0; d < 2; ++d) {
        const Shape& src = d == 0 ? s1 : s2;
        const Shape& tgt = d == 0 ? s2 : s1;
        const Eigen::MatrixXd P = map_matrix(st.pi[d]);
        const Eigen::MatrixXd X_t = tgt.mesh.vertices();
        const Eigen::MatrixXd Y = st.y[d];
        const Eigen::VectorXd A_s = lumped_mass(src.mesh);
        const Eigen::MatrixXd weights = cotan_weights(src.mesh);
        e += w.beta * mass_norm(Y - P * X_t, A_s);
        switch (v.kind) {
        case Variant::Dirichlet: e += dirichlet(weights, Y); break;
        case Variant::RHM: {
            const Eigen::MatrixXd P_bwd = map_matrix(st.pi[1 - d]);
            e += dirichlet(weights, Y) + v.mu * mass_norm(P_bwd * Y - X_t, lumped_mass(tgt.mesh));
            break;
        }
        case Variant::NICP: {
            const auto& D = *st.aux[d].affine;
            for (int i = 0; i < weights.rows(); ++i) {
                for (int j = i + 1; j < weights.cols(); ++j) {
                    if (weights(i, j) != 0.0) e += weights(i, j) * (D[i] - D[j]).squaredNorm();
                }
            }
            break;
        }
        case Variant::ARAP:
        case Variant::Shells: e += v.lambda * arap(src.mesh, *st.aux[d].rotations, Y); break;
        }
    }
    return e;
}

double total(
    const SolverState& st, const Shape& s1, const Shape& s2, const EnergyWeights& w, const VariantParams& v)
{
    return bijectivity(st, s1, s2, w) + w.gamma * smoothness(st, s1, s2, w, v);
}

std::vector<int> nearest_rows(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& data)
{
    std::vector<int> out(queries.rows());
    for (int q = 0; q < queries.rows(); ++q) {
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < data.rows(); ++r) {
            double dist = 0.0;
            for (int c = 0; c < data.cols(); ++c) {
                const double diff = queries(q, c) - data(r, c);
                dist += diff * diff;
            }
            if (dist < best) {
                best = dist;
                out[q] = r;
            }
        }
    }
    return out;
}

Eigen::VectorXd dijkstra(const TriMesh& mesh, int source)
{
    const int n = mesh.n_vertices();
    Eigen::MatrixXd len = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::infinity());
    for (int f = 0; f < mesh.n_faces(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const int a = mesh.faces()(f, c), b = mesh.faces()(f, (c + 1) % 3);
            const double l = (mesh.vertices().row(a) - mesh.vertices().row(b)).norm();
            len(a, b) = len(b, a) = l;
        }
    }
    Eigen::VectorXd dist = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    std::vector<char> done(n, 0);
    dist(source) = 0.0;
    for (int it = 0; it < n; ++it) {
        int u = -1;
        for (int v = 0; v < n; ++v) {
            if (!done[v] && (u < 0 || dist(v) < dist(u))) u = v;
        }
        if (u < 0 || std::isinf(dist(u))) break;
        done[u] = 1;
        for (int v = 0; v < n; ++v) dist(v) = std::min(dist(v), dist(u) + len(u, v));
    }
    return dist;
}

} // namespace oracle

} // namespace smtest
