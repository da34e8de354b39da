#pragma once

#include <smoothmatch/mesh.hpp>
#include <smoothmatch/spectral.hpp>

namespace smoothmatch {

/// A mesh together with its operators and spectral basis, computed once.
struct Shape {
    TriMesh mesh;
    SparseMatrix W;
    Eigen::VectorXd mass;
    SpectralBasis basis;
    RowMatrix X; // vertex coordinates, n x 3

    int n() const { return mesh.n_vertices(); }

    /// Assembles W and A and computes `k_basis` eigenfunctions (0 skips the eigensolve).
    static Shape build(TriMesh mesh, int k_basis, const EigenOptions& options = {});
};

} // namespace smoothmatch
