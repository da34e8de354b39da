#include <smoothmatch/spectral.hpp>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace smoothmatch {

namespace {

using DenseMatrix = Eigen::MatrixXd;

void fix_signs(RowMatrix& phi)
{
    for (int j = 0; j < phi.cols(); ++j) {
        for (int i = 0; i < phi.rows(); ++i) {
            const double v = phi(i, j);
            if (std::abs(v) > 1e-6) {
                if (v < 0.0) phi.col(j) *= -1.0;
                break;
            }
        }
    }
}

SpectralBasis dense_eigenbasis(const SparseMatrix& W, const Eigen::VectorXd& inv_sqrt_mass, int k)
{
    const DenseMatrix L =
        inv_sqrt_mass.asDiagonal() * DenseMatrix(W) * inv_sqrt_mass.asDiagonal();
    const Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(0.5 * (L + L.transpose()));
    if (solver.info() != Eigen::Success) throw SolverError("dense eigensolver failed");
    SpectralBasis basis;
    basis.eigenvalues = solver.eigenvalues().head(k);
    basis.phi = inv_sqrt_mass.asDiagonal() * solver.eigenvectors().leftCols(k);
    return basis;
}

// Orthonormalizes `block` against the first `m` columns of Q (two Gram-Schmidt passes),
// then within itself. Columns that vanish are replaced by fresh random directions.
void orthonormalize_block(const DenseMatrix& Q, int m, DenseMatrix& block, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (int c = 0; c < block.cols(); ++c) {
        auto v = block.col(c);
        for (int attempt = 0; attempt < 4; ++attempt) {
            const double before = v.norm();
            for (int pass = 0; pass < 2; ++pass) {
                if (m > 0) v -= Q.leftCols(m) * (Q.leftCols(m).transpose() * v);
                if (c > 0) v -= block.leftCols(c) * (block.leftCols(c).transpose() * v);
            }
            const double after = v.norm();
            if (after > 1e-10 * std::max(before, 1e-300)) {
                v /= after;
                break;
            }
            for (int i = 0; i < v.size(); ++i) v(i) = unit(rng);
        }
    }
}

SpectralBasis krylov_eigenbasis(
    const SparseMatrix& W,
    const Eigen::VectorXd& mass,
    const Eigen::VectorXd& inv_sqrt_mass,
    int k,
    const EigenOptions& options)
{
    const int n = static_cast<int>(W.rows());
    const Eigen::VectorXd sqrt_mass = mass.cwiseSqrt();

    SparseMatrix shifted = W;
    for (int i = 0; i < n; ++i) shifted.coeffRef(i, i) -= options.shift * mass(i);
    const Eigen::SimplicialLLT<SparseMatrix> chol(shifted);
    if (chol.info() != Eigen::Success) {
        throw SolverError("Cholesky factorization of the shifted Laplacian failed");
    }
    const SparseMatrix L = inv_sqrt_mass.asDiagonal() * W * inv_sqrt_mass.asDiagonal();
    // (L - shift I)^{-1} x = A^{1/2} (W - shift A)^{-1} A^{1/2} x
    const auto apply_inverse = [&](const DenseMatrix& x) -> DenseMatrix {
        const DenseMatrix rhs = sqrt_mass.asDiagonal() * x;
        return sqrt_mass.asDiagonal() * DenseMatrix(chol.solve(rhs));
    };

    // Ritz vectors kept across restarts; the guard vectors beyond k make clusters that
    // straddle the k-th eigenvalue converge as a whole.
    const int keep = std::min(n, k + std::max(1, options.block_size));
    const int cap = std::min(n, 3 * keep);
    DenseMatrix V(n, cap);
    DenseMatrix LV(n, cap);
    int m = 0;

    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    DenseMatrix block(n, keep);
    for (int i = 0; i < block.size(); ++i) block.data()[i] = unit(rng);

    DenseMatrix ritz_vectors;
    DenseMatrix ritz_images;
    Eigen::VectorXd theta;
    double worst = std::numeric_limits<double>::infinity();
    constexpr int kMaxIterations = 500;

    for (int iter = 0; iter < kMaxIterations; ++iter) {
        if (m + block.cols() > cap) {
            // Thick restart: compress the search space to the current Ritz vectors.
            const int kept = static_cast<int>(ritz_vectors.cols());
            V.leftCols(kept) = ritz_vectors;
            LV.leftCols(kept) = ritz_images;
            m = kept;
            if (m + block.cols() > cap) block.conservativeResize(Eigen::NoChange, cap - m);
        }
        orthonormalize_block(V, m, block, rng);
        const int width = static_cast<int>(block.cols());
        V.middleCols(m, width) = block;
        LV.middleCols(m, width) = L * block;
        m += width;

        // Rayleigh-Ritz on the current search space.
        const DenseMatrix H = V.leftCols(m).transpose() * LV.leftCols(m);
        const Eigen::SelfAdjointEigenSolver<DenseMatrix> ritz(0.5 * (H + H.transpose()));
        if (ritz.info() != Eigen::Success) throw SolverError("Rayleigh-Ritz eigensolve failed");
        const int r = std::min(keep, m);
        const DenseMatrix S = ritz.eigenvectors().leftCols(r);
        theta = ritz.eigenvalues().head(r);
        ritz_vectors = V.leftCols(m) * S;
        ritz_images = LV.leftCols(m) * S;
        const DenseMatrix residual = ritz_images - ritz_vectors * theta.asDiagonal();

        // ||W phi - lambda A phi|| / ||A phi|| with phi = A^{-1/2} psi, relative to max(1, |lambda|).
        std::vector<int> open;
        worst = 0.0;
        for (int j = 0; j < r; ++j) {
            const double num = (sqrt_mass.asDiagonal() * residual.col(j)).norm();
            const double den = (sqrt_mass.asDiagonal() * ritz_vectors.col(j)).norm();
            const double rel = num / den / std::max(1.0, std::abs(theta(j)));
            if (j < k) worst = std::max(worst, rel);
            if (rel >= options.tolerance) open.push_back(j);
        }
        if (worst < options.tolerance || m == n) break;

        // Expand with the shift-inverted residuals of the unconverged pairs. Together with the
        // Ritz vectors they span the inverse-iteration directions, without the cancellation
        // of inverting the Ritz vectors themselves.
        DenseMatrix seeds(n, static_cast<int>(open.size()));
        for (std::size_t c = 0; c < open.size(); ++c) seeds.col(c) = residual.col(open[c]);
        block = apply_inverse(seeds);
    }

    if (!(worst < std::max(options.tolerance, 1e-8))) {
        throw SolverError(
            "eigensolver did not converge (worst residual " + std::to_string(worst) + ")");
    }
    SpectralBasis basis;
    basis.eigenvalues = theta.head(k);
    basis.phi = inv_sqrt_mass.asDiagonal() * ritz_vectors.leftCols(k);
    return basis;
}

} // namespace

RowMatrix SpectralBasis::head(int k) const
{
    if (k > this->k()) {
        throw DimensionError(
            "requested " + std::to_string(k) + " basis functions, only " +
            std::to_string(this->k()) + " available");
    }
    return phi.leftCols(k);
}

SpectralBasis eigenbasis(
    const SparseMatrix& W,
    const Eigen::VectorXd& mass,
    int k,
    const EigenOptions& options)
{
    const int n = static_cast<int>(W.rows());
    if (W.cols() != n || mass.size() != n) throw DimensionError("eigenbasis: W and A sizes differ");
    if (k < 1 || k >= n) {
        throw DimensionError(
            "eigenbasis: k = " + std::to_string(k) + " must be in [1, " + std::to_string(n) + ")");
    }
    if ((mass.array() <= 0.0).any()) {
        throw SolverError("eigenbasis: mass matrix has non-positive entries (isolated vertices?)");
    }
    const Eigen::VectorXd inv_sqrt_mass = mass.cwiseSqrt().cwiseInverse();

    SpectralBasis basis = n <= options.dense_threshold
        ? dense_eigenbasis(W, inv_sqrt_mass, k)
        : krylov_eigenbasis(W, mass, inv_sqrt_mass, k, options);
    fix_signs(basis.phi);
    return basis;
}

PointwiseMap::PointwiseMap(std::vector<int> target_of, int n_tgt)
    : m_target(std::move(target_of))
    , m_n_tgt(n_tgt)
{
    for (std::size_t p = 0; p < m_target.size(); ++p) {
        if (m_target[p] < 0 || m_target[p] >= n_tgt) {
            throw DimensionError(
                "pointwise map entry " + std::to_string(p) + " = " + std::to_string(m_target[p]) +
                " outside [0, " + std::to_string(n_tgt) + ")");
        }
    }
}

PointwiseMap PointwiseMap::identity(int n)
{
    std::vector<int> t(n);
    for (int i = 0; i < n; ++i) t[i] = i;
    return PointwiseMap(std::move(t), n);
}

RowMatrix PointwiseMap::pull(const RowMatrix& values) const
{
    if (values.rows() != m_n_tgt) throw DimensionError("PointwiseMap::pull: row count mismatch");
    RowMatrix out(n_src(), values.cols());
    for (int p = 0; p < n_src(); ++p) out.row(p) = values.row(m_target[p]);
    return out;
}

RowMatrix PointwiseMap::push(const RowMatrix& values) const
{
    if (values.rows() != n_src()) throw DimensionError("PointwiseMap::push: row count mismatch");
    RowMatrix out = RowMatrix::Zero(m_n_tgt, values.cols());
    for (int p = 0; p < n_src(); ++p) out.row(m_target[p]) += values.row(p);
    return out;
}

FunctionalMap p2p_to_fmap(
    const PointwiseMap& pi,
    const SpectralBasis& basis_src,
    const Eigen::VectorXd& mass_src,
    const SpectralBasis& basis_tgt,
    int k_src,
    int k_tgt)
{
    if (pi.n_src() != basis_src.n() || pi.n_tgt() != basis_tgt.n() || mass_src.size() != pi.n_src()) {
        throw DimensionError("p2p_to_fmap: map and basis sizes differ");
    }
    const RowMatrix pulled = pi.pull(basis_tgt.head(k_tgt));
    return basis_src.head(k_src).transpose() * mass_src.asDiagonal() * pulled;
}

PointwiseMap fmap_to_p2p(
    const FunctionalMap& C,
    const SpectralBasis& basis_src,
    const SpectralBasis& basis_tgt)
{
    if (C.rows() > basis_src.k() || C.cols() > basis_tgt.k()) {
        throw DimensionError("fmap_to_p2p: functional map larger than the stored bases");
    }
    const RowMatrix queries = basis_src.head(static_cast<int>(C.rows())) * C;
    const RowMatrix data = basis_tgt.head(static_cast<int>(C.cols()));
    return PointwiseMap(nearest_rows(queries, data), basis_tgt.n());
}

PointwiseMap load_pointwise_map(const std::filesystem::path& path, int n_tgt)
{
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open map file " + path.string());
    std::vector<int> target;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        long value = 0;
        if (!(ls >> value)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw DimensionError(
                path.string() + ": malformed map entry at line " + std::to_string(line_no));
        }
        target.push_back(static_cast<int>(value));
    }
    return PointwiseMap(std::move(target), n_tgt);
}

void save_pointwise_map(const PointwiseMap& pi, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot write " + path.string());
    for (int t : pi.target_of()) out << t << '\n';
}

void save_functional_map(const FunctionalMap& C, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot write " + path.string());
    out << C.rows() << ' ' << C.cols() << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (int i = 0; i < C.rows(); ++i) {
        for (int j = 0; j < C.cols(); ++j) out << (j ? " " : "") << C(i, j);
        out << '\n';
    }
}

FunctionalMap load_functional_map(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open functional map " + path.string());
    long rows = 0, cols = 0;
    if (!(in >> rows >> cols) || rows < 0 || cols < 0) {
        throw DimensionError(path.string() + ": malformed functional map header");
    }
    FunctionalMap C(rows, cols);
    for (long i = 0; i < rows; ++i) {
        for (long j = 0; j < cols; ++j) {
            if (!(in >> C(i, j))) throw DimensionError(path.string() + ": truncated functional map");
        }
    }
    return C;
}

} // namespace smoothmatch
