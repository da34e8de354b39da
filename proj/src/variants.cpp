#include <smoothmatch/variants.hpp>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <Eigen/SparseLU>

#include <cmath>
#include <iostream>

namespace smoothmatch {

namespace {

// Directed neighbor pairs (i, j, w_ij) from the off-diagonal entries of W.
template <typename Fn>
void for_each_directed_edge(const SparseMatrix& W, Fn&& fn)
{
    for (int col = 0; col < W.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(W, col); it; ++it) {
            if (it.row() != it.col()) fn(static_cast<int>(it.row()), static_cast<int>(it.col()), -it.value());
        }
    }
}

Eigen::Vector3d row3(const RowMatrix& M, int i)
{
    return M.row(i).transpose();
}

RowMatrix solve_sparse_spd(const SparseMatrix& system, const RowMatrix& rhs, const char* what)
{
    const Eigen::SimplicialLLT<SparseMatrix> llt(system);
    if (llt.info() != Eigen::Success) throw SolverError(std::string(what) + ": factorization failed");
    RowMatrix out = llt.solve(rhs);
    if (!out.allFinite()) throw SolverError(std::string(what) + ": non-finite solution");
    return out;
}

} // namespace

std::string_view to_string(Variant v)
{
    switch (v) {
    case Variant::Dirichlet: return "dirichlet";
    case Variant::NICP: return "nicp";
    case Variant::ARAP: return "arap";
    case Variant::Shells: return "shells";
    case Variant::RHM: return "rhm";
    }
    return "unknown";
}

Variant parse_variant(std::string_view tag)
{
    for (Variant v : {Variant::Dirichlet, Variant::NICP, Variant::ARAP, Variant::Shells, Variant::RHM}) {
        if (tag == to_string(v)) return v;
    }
    throw std::invalid_argument(
        "unknown energy '" + std::string(tag) + "' (expected dirichlet|nicp|arap|shells|rhm)");
}

double default_beta(Variant kind)
{
    switch (kind) {
    case Variant::Dirichlet: return 1.0;
    case Variant::NICP: return 1e-2;
    case Variant::ARAP: return 1e-1;
    case Variant::Shells: return 1e-3;
    case Variant::RHM: return 1.0;
    }
    return 1.0;
}

VariantParams VariantParams::defaults(Variant kind)
{
    VariantParams p;
    p.kind = kind;
    return p;
}

void VariantParams::validate() const
{
    if (!(lambda >= 0.0) || !(mu >= 0.0) || k_def < 0) {
        throw std::invalid_argument("variant weights must be non-negative");
    }
}

Prefactored::Prefactored(const SparseMatrix& system)
    : m_llt(system)
    , m_rows(static_cast<int>(system.rows()))
{
    if (m_llt.info() != Eigen::Success) throw SolverError("prefactorization failed (system not SPD)");
}

RowMatrix Prefactored::solve(const RowMatrix& rhs) const
{
    if (rhs.rows() != m_rows) throw DimensionError("Prefactored::solve: size mismatch");
    return m_llt.solve(rhs);
}

SparseMatrix dirichlet_system(const Shape& src, double beta, double w_scale)
{
    SparseMatrix system = w_scale * src.W;
    for (int i = 0; i < src.n(); ++i) system.coeffRef(i, i) += beta * src.mass(i);
    return system;
}

RowMatrix y_step_dirichlet(
    const PointwiseMap& pi,
    const Shape& src,
    const Shape& tgt,
    double beta,
    const Prefactored* factor)
{
    if (pi.n_src() != src.n() || pi.n_tgt() != tgt.n()) throw DimensionError("y_step_dirichlet: map size");
    if (!(beta > 0.0)) throw SolverError("y_step_dirichlet: beta must be positive");
    const RowMatrix rhs = beta * (src.mass.asDiagonal() * pi.pull(tgt.X));
    if (factor) return factor->solve(rhs);
    return solve_sparse_spd(dirichlet_system(src, beta), rhs, "y_step_dirichlet");
}

std::pair<SparseMatrix, RowMatrix>
nicp_system(const PointwiseMap& pi, const Shape& src, const Shape& tgt, double beta)
{
    const int n = src.n();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(4 * src.W.nonZeros() + 16 * n);
    for (int col = 0; col < src.W.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(src.W, col); it; ++it) {
            for (int r = 0; r < 4; ++r) {
                triplets.emplace_back(4 * it.row() + r, 4 * it.col() + r, it.value());
            }
        }
    }
    const RowMatrix target = pi.pull(tgt.X);
    RowMatrix rhs(4 * n, 3);
    for (int i = 0; i < n; ++i) {
        Eigen::Vector4d xh;
        xh << src.X(i, 0), src.X(i, 1), src.X(i, 2), 1.0;
        const Eigen::Matrix4d block = beta * src.mass(i) * xh * xh.transpose();
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) triplets.emplace_back(4 * i + r, 4 * i + c, block(r, c));
        }
        rhs.middleRows(4 * i, 4) = beta * src.mass(i) * xh * target.row(i);
    }
    SparseMatrix system(4 * n, 4 * n);
    system.setFromTriplets(triplets.begin(), triplets.end());
    system.makeCompressed();
    return {std::move(system), std::move(rhs)};
}

YStep y_step_nicp(const PointwiseMap& pi, const Shape& src, const Shape& tgt, double beta)
{
    if (pi.n_src() != src.n() || pi.n_tgt() != tgt.n()) throw DimensionError("y_step_nicp: map size");
    const int n = src.n();
    Eigen::Matrix<double, 3, 4> identity = Eigen::Matrix<double, 3, 4>::Zero();
    identity.leftCols<3>().setIdentity();

    YStep out;
    AffineField D(n, identity);
    if (beta > 0.0) {
        auto [system, rhs] = nicp_system(pi, src, tgt, beta);
        Eigen::SimplicialLLT<SparseMatrix> llt(system);
        RowMatrix Z;
        if (llt.info() == Eigen::Success) Z = llt.solve(rhs);
        if (llt.info() != Eigen::Success || !Z.allFinite()) {
            // Coplanar sources leave the affine normal direction free; pull it toward identity.
            const double eps = 1e-10 * system.diagonal().cwiseAbs().maxCoeff();
            std::clog << "y_step_nicp: singular system, regularizing with eps = " << eps << '\n';
            RowMatrix id_rhs(4 * n, 3);
            for (int i = 0; i < n; ++i) id_rhs.middleRows(4 * i, 4) = identity.transpose();
            SparseMatrix reg = system;
            for (int i = 0; i < 4 * n; ++i) reg.coeffRef(i, i) += eps;
            Z = solve_sparse_spd(reg, rhs + eps * id_rhs, "y_step_nicp");
        }
        for (int i = 0; i < n; ++i) D[i] = Z.middleRows(4 * i, 4).transpose();
    }
    out.y.resize(n, 3);
    for (int i = 0; i < n; ++i) {
        out.y.row(i) = (D[i].leftCols<3>() * row3(src.X, i) + D[i].col(3)).transpose();
    }
    out.aux.affine = std::move(D);
    return out;
}

RotationField arap_local_step(const RowMatrix& Y, const Shape& src)
{
    if (Y.rows() != src.n() || Y.cols() != 3) throw DimensionError("arap_local_step: Y must be n x 3");
    std::vector<Eigen::Matrix3d> cov(src.n(), Eigen::Matrix3d::Zero());
    for_each_directed_edge(src.W, [&](int i, int j, double w) {
        cov[i] += w * (row3(src.X, i) - row3(src.X, j)) * (row3(Y, i) - row3(Y, j)).transpose();
    });

    RotationField R(src.n());
    for (int i = 0; i < src.n(); ++i) {
        const double scale = cov[i].cwiseAbs().maxCoeff();
        if (!(scale > 0.0)) {
            R[i].setIdentity();
            continue;
        }
        // trace(R S) is maximized by R = V U^T for S = U Sigma V^T.
        const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov[i], Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::Matrix3d V = svd.matrixV();
        const Eigen::Matrix3d U = svd.matrixU();
        if ((V * U.transpose()).determinant() < 0.0) V.col(2) *= -1.0;
        R[i] = V * U.transpose();
    }
    return R;
}

RowMatrix arap_rhs(const RotationField& R, const Shape& src)
{
    RowMatrix b = RowMatrix::Zero(src.n(), 3);
    for_each_directed_edge(src.W, [&](int i, int j, double w) {
        b.row(i) += (0.5 * w * (R[i] + R[j]) * (row3(src.X, i) - row3(src.X, j))).transpose();
    });
    return b;
}

double arap_energy(const RotationField& R, const RowMatrix& Y, const Shape& src)
{
    double e = 0.0;
    for_each_directed_edge(src.W, [&](int i, int j, double w) {
        const Eigen::Vector3d d =
            (row3(Y, i) - row3(Y, j)) - R[i] * (row3(src.X, i) - row3(src.X, j));
        e += 0.5 * w * d.squaredNorm();
    });
    return e;
}

double arap_rigid_energy(const RotationField& R, const RowMatrix& Y, const Shape& src)
{
    double e = 0.0;
    for_each_directed_edge(src.W, [&](int i, int j, double w) {
        e += 0.5 * w * (row3(Y, i) - row3(Y, j)).dot(R[i] * (row3(src.X, i) - row3(src.X, j)));
    });
    return e;
}

YStep y_step_arap(
    const PointwiseMap& pi,
    const Shape& src,
    const Shape& tgt,
    double beta,
    double lambda,
    const RowMatrix& y_current,
    const Prefactored* factor)
{
    if (pi.n_src() != src.n() || pi.n_tgt() != tgt.n()) throw DimensionError("y_step_arap: map size");
    if (!(lambda > 0.0) && !(beta > 0.0)) throw SolverError("y_step_arap: lambda and beta both zero");

    YStep out;
    RotationField R = arap_local_step(y_current, src);
    const RowMatrix target = pi.pull(tgt.X);
    const RowMatrix rhs = lambda * arap_rhs(R, src) + beta * (src.mass.asDiagonal() * target);

    if (beta > 0.0) {
        out.y = factor ? factor->solve(rhs)
                       : solve_sparse_spd(dirichlet_system(src, beta, lambda), rhs, "y_step_arap");
    } else {
        // lambda W alone is singular along constants: pin the A-weighted centroid.
        const int n = src.n();
        std::vector<Eigen::Triplet<double>> triplets;
        for (int col = 0; col < src.W.outerSize(); ++col) {
            for (SparseMatrix::InnerIterator it(src.W, col); it; ++it) {
                triplets.emplace_back(it.row(), it.col(), lambda * it.value());
            }
        }
        for (int i = 0; i < n; ++i) {
            triplets.emplace_back(i, n, src.mass(i));
            triplets.emplace_back(n, i, src.mass(i));
        }
        SparseMatrix system(n + 1, n + 1);
        system.setFromTriplets(triplets.begin(), triplets.end());
        Eigen::SparseLU<SparseMatrix> lu(system);
        if (lu.info() != Eigen::Success) throw SolverError("y_step_arap: pinned system factorization failed");
        Eigen::MatrixXd full_rhs(n + 1, 3);
        full_rhs.topRows(n) = rhs;
        full_rhs.row(n) = src.mass.transpose() * target;
        const Eigen::MatrixXd sol = lu.solve(full_rhs);
        out.y = sol.topRows(n);
    }
    out.aux.rotations = std::move(R);
    return out;
}

std::pair<Eigen::MatrixXd, RowMatrix> shells_system(
    const PointwiseMap& pi,
    const Shape& src,
    const Shape& tgt,
    int k_def,
    double beta,
    double lambda,
    const RotationField& R)
{
    const RowMatrix phi = src.basis.head(k_def);
    const RowMatrix W_phi = src.W * phi;
    const RowMatrix A_phi = src.mass.asDiagonal() * phi;
    Eigen::MatrixXd system = lambda * (phi.transpose() * W_phi) + beta * (phi.transpose() * A_phi);
    system = 0.5 * (system + system.transpose()).eval();
    const RowMatrix b = arap_rhs(R, src);
    const RowMatrix WX = src.W * src.X;
    RowMatrix rhs = lambda * (phi.transpose() * (b - WX)) +
                    beta * (A_phi.transpose() * (pi.pull(tgt.X) - src.X));
    return {std::move(system), std::move(rhs)};
}

RowMatrix shells_coordinates(const Shape& src, const SpectralDisplacement& D)
{
    return src.X + src.basis.head(static_cast<int>(D.rows())) * D;
}

YStep y_step_shells(
    const PointwiseMap& pi,
    const Shape& src,
    const Shape& tgt,
    int k_def,
    double beta,
    double lambda,
    const RowMatrix& y_current)
{
    if (pi.n_src() != src.n() || pi.n_tgt() != tgt.n()) throw DimensionError("y_step_shells: map size");
    if (k_def < 1 || k_def > src.basis.k()) throw DimensionError("y_step_shells: k_def exceeds basis size");

    YStep out;
    RotationField R = arap_local_step(y_current, src);
    const auto [system, rhs] = shells_system(pi, src, tgt, k_def, beta, lambda, R);
    SpectralDisplacement D;
    if (beta > 0.0) {
        const Eigen::LLT<Eigen::MatrixXd> llt(system);
        if (llt.info() != Eigen::Success) throw SolverError("y_step_shells: K x K system not SPD");
        D = llt.solve(Eigen::MatrixXd(rhs));
    } else {
        // Translation along the constant eigenfunction is free; take the minimum-norm D.
        D = system.completeOrthogonalDecomposition().solve(Eigen::MatrixXd(rhs));
    }
    out.y = shells_coordinates(src, D);
    out.aux.rotations = std::move(R);
    out.aux.displacement = std::move(D);
    return out;
}

SparseMatrix rhm_system(const PointwiseMap& pi_bwd, const Shape& src, const Shape& tgt, double beta, double mu)
{
    if (pi_bwd.n_src() != tgt.n() || pi_bwd.n_tgt() != src.n()) throw DimensionError("rhm_system: map size");
    SparseMatrix system = dirichlet_system(src, beta);
    // Pi_bwd^T A_tgt Pi_bwd is diagonal: each target vertex adds its area to its image.
    for (int q = 0; q < tgt.n(); ++q) system.coeffRef(pi_bwd[q], pi_bwd[q]) += mu * tgt.mass(q);
    return system;
}

RowMatrix rhm_rhs(
    const PointwiseMap& pi_fwd,
    const PointwiseMap& pi_bwd,
    const Shape& src,
    const Shape& tgt,
    double beta,
    double mu)
{
    if (pi_fwd.n_src() != src.n() || pi_fwd.n_tgt() != tgt.n()) throw DimensionError("rhm_rhs: map size");
    return beta * (src.mass.asDiagonal() * pi_fwd.pull(tgt.X)) +
           mu * pi_bwd.push(tgt.mass.asDiagonal() * tgt.X);
}

RowMatrix y_step_rhm(
    const PointwiseMap& pi_fwd,
    const PointwiseMap& pi_bwd,
    const Shape& src,
    const Shape& tgt,
    double beta,
    double mu)
{
    if (!(beta > 0.0)) throw SolverError("y_step_rhm: beta must be positive");
    return solve_sparse_spd(
        rhm_system(pi_bwd, src, tgt, beta, mu), rhm_rhs(pi_fwd, pi_bwd, src, tgt, beta, mu),
        "y_step_rhm");
}

SpatialEmbedding variant_embedding(
    const VariantParams& params,
    double gamma,
    double beta,
    const RowMatrix& y,
    const Shape& src,
    const Shape& tgt,
    const RowMatrix* y_bwd)
{
    SpatialEmbedding out;
    const double coupling = gamma * beta;
    const double bij = params.kind == Variant::RHM ? gamma * params.mu : 0.0;
    const int cols = (coupling > 0.0 ? 3 : 0) + (bij > 0.0 ? 3 : 0);
    out.query.resize(src.n(), cols);
    out.data.resize(tgt.n(), cols);
    int c = 0;
    if (coupling > 0.0) {
        out.query.middleCols(c, 3) = std::sqrt(coupling) * y;
        out.data.middleCols(c, 3) = std::sqrt(coupling) * tgt.X;
        c += 3;
    }
    if (bij > 0.0) {
        if (!y_bwd) throw std::invalid_argument("variant_embedding: RHM needs the reverse Y");
        out.query.middleCols(c, 3) = std::sqrt(bij) * src.X;
        out.data.middleCols(c, 3) = std::sqrt(bij) * *y_bwd;
    }
    return out;
}

} // namespace smoothmatch
