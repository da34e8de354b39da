#include "fixtures.hpp"

#include <doctest.h>

#include <filesystem>

using namespace smtest;

namespace {

double max_generalized_residual(const SparseMatrix& W, const Eigen::VectorXd& a, const SpectralBasis& b)
{
    double worst = 0.0;
    for (int j = 0; j < b.k(); ++j) {
        const Eigen::VectorXd phi = b.phi.col(j);
        const Eigen::VectorXd aphi = a.cwiseProduct(phi);
        const Eigen::VectorXd r = W * phi - b.eigenvalues(j) * aphi;
        worst = std::max(worst, r.norm() / aphi.norm() / std::max(1.0, b.eigenvalues(j)));
    }
    return worst;
}

double ortho_error(const SpectralBasis& b, const Eigen::VectorXd& a)
{
    const Eigen::MatrixXd G = b.phi.transpose() * a.asDiagonal() * b.phi;
    return (G - Eigen::MatrixXd::Identity(b.k(), b.k())).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("first eigenpair is the constant function")
{
    Rng rng(21);
    const TriMesh mesh = random_patch(rng, 9, 8);
    const Shape s = Shape::build(mesh, 6);
    CHECK(std::abs(s.basis.eigenvalues(0)) < 1e-8);
    const double c = 1.0 / std::sqrt(mesh.total_area());
    CHECK((s.basis.phi.col(0).array() - c).abs().maxCoeff() < 1e-8);
    for (int j = 1; j < 6; ++j) CHECK(s.basis.eigenvalues(j) >= s.basis.eigenvalues(j - 1));
    CHECK(ortho_error(s.basis, s.mass) < 1e-10);
}

TEST_CASE("dense and Krylov paths agree")
{
    Rng rng(22);
    const TriMesh mesh = random_patch(rng, 22, 20, 0.1);
    const SparseMatrix W = cotangent_matrix(mesh);
    const Eigen::VectorXd a = mass_matrix(mesh);
    EigenOptions dense;
    EigenOptions krylov;
    krylov.dense_threshold = 0;
    const SpectralBasis bd = eigenbasis(W, a, 30, dense);
    const SpectralBasis bk = eigenbasis(W, a, 30, krylov);
    CHECK(max_generalized_residual(W, a, bk) < 1e-8);
    CHECK(ortho_error(bk, a) < 1e-8);
    for (int j = 0; j < 30; ++j) CHECK(std::abs(bd.eigenvalues(j) - bk.eigenvalues(j)) < 1e-8 * std::max(1.0, bd.eigenvalues(j)));
    // Both paths fix signs the same way, so simple eigenvectors coincide.
    for (int j = 0; j < 30; ++j) {
        const bool simple = (j == 0 || bd.eigenvalues(j) - bd.eigenvalues(j - 1) > 1e-3 * bd.eigenvalues(j)) &&
                            (j == 29 || bd.eigenvalues(j + 1) - bd.eigenvalues(j) > 1e-3 * bd.eigenvalues(j));
        if (simple) CHECK((bd.phi.col(j) - bk.phi.col(j)).cwiseAbs().maxCoeff() < 1e-5);
    }
}

TEST_CASE("sphere spectrum groups by spherical-harmonic degree")
{
    const TriMesh sphere = icosphere(4); // 2562 vertices, radius 1
    const Shape s = Shape::build(sphere, 16);
    CHECK(max_generalized_residual(s.W, s.mass, s.basis) < 1e-6);
    CHECK(ortho_error(s.basis, s.mass) < 1e-8);
    CHECK(std::abs(s.basis.eigenvalues(0)) < 1e-8);
    int j = 1;
    for (int degree = 1; degree <= 3; ++degree) {
        const double exact = degree * (degree + 1);
        for (int m = 0; m < 2 * degree + 1; ++m, ++j) {
            CHECK(std::abs(s.basis.eigenvalues(j) - exact) < 0.05 * exact);
        }
    }
}

TEST_CASE("argument checks")
{
    const TriMesh mesh = grid_patch(4, 4, 1.0);
    const SparseMatrix W = cotangent_matrix(mesh);
    const Eigen::VectorXd a = mass_matrix(mesh);
    CHECK_THROWS(eigenbasis(W, a, 0));
    CHECK_THROWS(eigenbasis(W, a, 17));
    CHECK_THROWS(eigenbasis(W, Eigen::VectorXd::Ones(3), 2));
}

TEST_CASE("identity map gives the identity functional map")
{
    Rng rng(23);
    const Shape s = Shape::build(random_patch(rng, 8, 8).normalized(), 12);
    const FunctionalMap C = p2p_to_fmap(PointwiseMap::identity(s.n()), s.basis, s.mass, s.basis, 12, 12);
    CHECK((C - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-10);
    const FunctionalMap C85 = p2p_to_fmap(PointwiseMap::identity(s.n()), s.basis, s.mass, s.basis, 8, 5);
    CHECK(C85.rows() == 8);
    CHECK(C85.cols() == 5);
}

TEST_CASE("p2p_to_fmap matches the dense product")
{
    Rng rng(24);
    for (int t = 0; t < 6; ++t) {
        const Shape s1 = Shape::build(random_small_mesh(rng, 80), 10);
        const Shape s2 = Shape::build(random_small_mesh(rng, 80), 10);
        const PointwiseMap pi = t == 0 ? PointwiseMap(std::vector<int>(s1.n(), 3), s2.n()) : random_map(rng, s1.n(), s2.n());
        const Eigen::MatrixXd P1(s1.basis.phi);
        const Eigen::MatrixXd P2(s2.basis.phi);
        const Eigen::MatrixXd expect = P1.transpose() * s1.mass.asDiagonal() * oracle::map_matrix(pi) * P2;
        const FunctionalMap C = p2p_to_fmap(pi, s1.basis, s1.mass, s2.basis, 10, 10);
        CHECK((C - expect).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
        if (t == 0) {
            // Constant map: every column is the first function times phi_tgt(3).
            const Eigen::VectorXd col0 = P1.transpose() * s1.mass;
            for (int j = 0; j < 10; ++j) CHECK((C.col(j) - col0 * P2(3, j)).norm() < 1e-12);
        }
    }
}

TEST_CASE("fmap_to_p2p equals the brute-force spectral nearest neighbor")
{
    Rng rng(25);
    for (int t = 0; t < 6; ++t) {
        const Shape s1 = Shape::build(random_patch(rng, uniform_int(rng, 5, 10), 6).normalized(), 12);
        const Shape s2 = Shape::build(random_patch(rng, uniform_int(rng, 5, 10), 6).normalized(), 15);
        const FunctionalMap C = random_matrix(rng, 12, 15);
        const Eigen::MatrixXd queries = Eigen::MatrixXd(s1.basis.phi) * C;
        const auto expect = oracle::nearest_rows(queries, Eigen::MatrixXd(s2.basis.phi));
        CHECK(fmap_to_p2p(C, s1.basis, s2.basis).target_of() == expect);
    }
    const Shape s = Shape::build(grid_patch(4, 4, 1.0), 5);
    CHECK_THROWS_AS(fmap_to_p2p(Eigen::MatrixXd::Identity(6, 5), s.basis, s.basis), DimensionError);
}

TEST_CASE("round trip through a full basis recovers permutations")
{
    Rng rng(26);
    for (int t = 0; t < 4; ++t) {
        const TriMesh mesh = t < 2 ? icosphere(1) : random_small_mesh(rng, 200);
        const int n = mesh.n_vertices();
        std::vector<int> perm(n);
        for (int i = 0; i < n; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        // Shuffle vertex order of the second copy so the permutation is an isometry.
        Vertices V2(n, 3);
        for (int i = 0; i < n; ++i) V2.row(perm[i]) = mesh.vertices().row(i);
        Faces F2 = mesh.faces();
        for (int f = 0; f < F2.rows(); ++f)
            for (int c = 0; c < 3; ++c) F2(f, c) = perm[F2(f, c)];
        const Shape s1 = Shape::build(mesh, n - 1);
        const Shape s2 = Shape::build(TriMesh(V2, F2), n - 1);
        const PointwiseMap pi(perm, n);
        const FunctionalMap C = p2p_to_fmap(pi, s1.basis, s1.mass, s2.basis, n - 1, n - 1);
        const PointwiseMap back = fmap_to_p2p(C, s1.basis, s2.basis);
        int hits = 0;
        for (int i = 0; i < n; ++i) hits += back[i] == perm[i];
        CHECK(hits >= static_cast<int>(std::ceil(0.99 * n)));
    }
}

TEST_CASE("map and functional map files")
{
    const auto dir = std::filesystem::temp_directory_path();
    const PointwiseMap pi({2, 0, 1, 1}, 3);
    save_pointwise_map(pi, dir / "smoothmatch_pi.txt");
    CHECK(load_pointwise_map(dir / "smoothmatch_pi.txt", 3) == pi);
    CHECK_THROWS(load_pointwise_map(dir / "smoothmatch_pi.txt", 2));

    Rng rng(27);
    const FunctionalMap C = random_matrix(rng, 4, 6);
    save_functional_map(C, dir / "smoothmatch_C.txt");
    CHECK(load_functional_map(dir / "smoothmatch_C.txt") == C);

    CHECK_THROWS(PointwiseMap({0, 5}, 3));
    const RowMatrix values = random_matrix(rng, 3, 2);
    const RowMatrix pulled = pi.pull(values);
    CHECK(pulled.row(0) == values.row(2));
    const RowMatrix pushed = pi.push(random_matrix(rng, 4, 2));
    CHECK(pushed.rows() == 3);
}
