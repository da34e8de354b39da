#pragma once

#include <smoothmatch/knn.hpp>
#include <smoothmatch/mesh.hpp>

#include <Eigen/Core>

#include <filesystem>
#include <stdexcept>
#include <vector>

namespace smoothmatch {

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// First k generalized eigenpairs of (W, A), A-orthonormal, eigenvalues nondecreasing.
struct SpectralBasis {
    RowMatrix phi;             // n x k
    Eigen::VectorXd eigenvalues;

    int n() const { return static_cast<int>(phi.rows()); }
    int k() const { return static_cast<int>(phi.cols()); }

    /// First `k` columns.
    RowMatrix head(int k) const;
};

struct EigenOptions {
    double shift = -1e-8;
    int block_size = 16; // guard pairs tracked beyond k
    double tolerance = 1e-10;
    /// Meshes at or below this size are solved densely.
    int dense_threshold = 600;
};

///
/// Solves W phi = lambda A phi for the k smallest eigenvalues.
///
/// Large problems use a shift-invert block Krylov method with thick restarts on
/// A^{-1/2} W A^{-1/2}: the search space is expanded with (L - shift I)^{-1} applied to the
/// residuals of unconverged Ritz pairs (k + block_size pairs are tracked, so clusters larger
/// than one block still converge) and reduced by Rayleigh-Ritz. Pairs are accepted once
/// ||W phi - lambda A phi|| / ||A phi|| < tolerance * max(1, lambda). Each column's sign is
/// fixed so that its first entry with magnitude above 1e-6 is positive.
///
SpectralBasis eigenbasis(
    const SparseMatrix& W,
    const Eigen::VectorXd& mass,
    int k,
    const EigenOptions& options = {});

///
/// Vertex-to-vertex map from a source mesh to a target mesh.
///
/// Equivalent to the row-one-hot matrix Pi with Pi(p, target_of[p]) = 1.
///
class PointwiseMap {
public:
    PointwiseMap() = default;
    PointwiseMap(std::vector<int> target_of, int n_tgt);

    static PointwiseMap identity(int n);

    const std::vector<int>& target_of() const { return m_target; }
    int operator[](int p) const { return m_target[p]; }
    int n_src() const { return static_cast<int>(m_target.size()); }
    int n_tgt() const { return m_n_tgt; }

    /// Rows of `values` (indexed by target vertex) gathered per source vertex: Pi * values.
    RowMatrix pull(const RowMatrix& values) const;

    /// Pi^T * values for values indexed by source vertex.
    RowMatrix push(const RowMatrix& values) const;

    friend bool operator==(const PointwiseMap&, const PointwiseMap&) = default;

private:
    std::vector<int> m_target;
    int m_n_tgt = 0;
};

using FunctionalMap = Eigen::MatrixXd;

///
/// Pull-back functional map of a pointwise map: C = Phi_src^T A_src Pi Phi_tgt.
///
/// For Pi mapping mesh i to mesh j this is C_ji, of size k_src x k_tgt.
///
FunctionalMap p2p_to_fmap(
    const PointwiseMap& pi,
    const SpectralBasis& basis_src,
    const Eigen::VectorXd& mass_src,
    const SpectralBasis& basis_tgt,
    int k_src,
    int k_tgt);

///
/// Recovers the pointwise map src -> tgt from its pull-back C (k_src x k_tgt):
/// target_of[p] = argmin_q || Phi_src[p, :] C - Phi_tgt[q, :] ||.
///
PointwiseMap fmap_to_p2p(
    const FunctionalMap& C,
    const SpectralBasis& basis_src,
    const SpectralBasis& basis_tgt);

/// One 0-based target index per line.
PointwiseMap load_pointwise_map(const std::filesystem::path& path, int n_tgt);
void save_pointwise_map(const PointwiseMap& pi, const std::filesystem::path& path);

/// "k_src k_tgt" header followed by row-major rows.
void save_functional_map(const FunctionalMap& C, const std::filesystem::path& path);
FunctionalMap load_functional_map(const std::filesystem::path& path);

} // namespace smoothmatch
