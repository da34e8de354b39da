#pragma once

#include <smoothmatch/shape.hpp>

#include <Eigen/Core>
#include <Eigen/SparseCholesky>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace smoothmatch {

enum class Variant { Dirichlet, NICP, ARAP, Shells, RHM };

std::string_view to_string(Variant v);
/// Accepts the CLI tags dirichlet, nicp, arap, shells, rhm.
Variant parse_variant(std::string_view tag);

/// Default spatial coupling weight of each variant.
double default_beta(Variant kind);

struct VariantParams {
    Variant kind = Variant::Dirichlet;
    double lambda = 1.0; // ARAP / Shells rigidity weight
    double mu = 1e4;     // RHM pointwise bijectivity weight
    int k_def = 0;       // Shells displacement basis size, 0 = current functional map size

    static VariantParams defaults(Variant kind);
    void validate() const;
};

using AffineField = std::vector<Eigen::Matrix<double, 3, 4>>;
using RotationField = std::vector<Eigen::Matrix3d>;
using SpectralDisplacement = RowMatrix; // K x 3

/// Variant-specific variables that live alongside Y for one map direction.
struct VariantAux {
    std::optional<AffineField> affine;
    std::optional<RotationField> rotations;
    std::optional<SpectralDisplacement> displacement;
};

struct YStep {
    RowMatrix y;
    VariantAux aux;
};

/// Cholesky factor of a fixed sparse SPD system, reused across solves.
class Prefactored {
public:
    explicit Prefactored(const SparseMatrix& system);
    RowMatrix solve(const RowMatrix& rhs) const;
    int rows() const { return m_rows; }

private:
    Eigen::SimplicialLLT<SparseMatrix> m_llt;
    int m_rows = 0;
};

/// W + beta A, the Dirichlet Y-system (also lambda W + beta A with lambda folded into W).
SparseMatrix dirichlet_system(const Shape& src, double beta, double w_scale = 1.0);

///
/// Minimizes ||Y||_W^2 + beta ||Y - Pi X_tgt||_A^2 over Y:
/// (W + beta A) Y = beta A Pi X_tgt.
///
RowMatrix y_step_dirichlet(
    const PointwiseMap& pi,
    const Shape& src,
    const Shape& tgt,
    double beta,
    const Prefactored* factor = nullptr);

///
/// Non-rigid ICP with per-vertex affine transforms D_i (3x4):
/// min sum_edges w_ij ||D_i - D_j||_F^2 + beta sum_i A_i ||D_i [x_i; 1] - (Pi X_tgt)_i||^2.
/// beta = 0 returns identity transforms.
///
YStep y_step_nicp(const PointwiseMap& pi, const Shape& src, const Shape& tgt, double beta);

/// Normal matrix and right-hand side of the nICP system, unknowns stacked as 4n x 3.
std::pair<SparseMatrix, RowMatrix>
nicp_system(const PointwiseMap& pi, const Shape& src, const Shape& tgt, double beta);

/// Per-vertex Procrustes fit: R_i = argmax_{R in SO(3)} sum_j w_ij (y_i - y_j)^T R (x_i - x_j).
RotationField arap_local_step(const RowMatrix& Y, const Shape& src);

/// b_i = sum_j (w_ij / 2) (R_i + R_j) (x_i - x_j), one row per vertex.
RowMatrix arap_rhs(const RotationField& R, const Shape& src);

/// 1/2 sum_i sum_{j in N(i)} w_ij ||(y_i - y_j) - R_i (x_i - x_j)||^2.
double arap_energy(const RotationField& R, const RowMatrix& Y, const Shape& src);

/// 1/2 sum_i sum_{j in N(i)} w_ij (y_i - y_j)^T R_i (x_i - x_j).
double arap_rigid_energy(const RotationField& R, const RowMatrix& Y, const Shape& src);

///
/// One ARAP local/global sweep coupled to the current map: rotations are fitted to
/// `y_current`, then (lambda W + beta A) Y = lambda b(R) + beta A Pi X_tgt is solved. With
/// beta = 0 the A-weighted centroid of Y is pinned to that of Pi X_tgt.
///
YStep y_step_arap(
    const PointwiseMap& pi,
    const Shape& src,
    const Shape& tgt,
    double beta,
    double lambda,
    const RowMatrix& y_current,
    const Prefactored* factor = nullptr);

///
/// Smooth-shells step: Y = X + Phi D with D (K x 3) minimizing
/// lambda E_arap(R, X + Phi D) + beta ||X + Phi D - Pi X_tgt||_A^2 for rotations fitted to
/// `y_current`.
///
YStep y_step_shells(
    const PointwiseMap& pi,
    const Shape& src,
    const Shape& tgt,
    int k_def,
    double beta,
    double lambda,
    const RowMatrix& y_current);

/// K x K normal matrix and K x 3 right-hand side of the shells step for fixed rotations.
std::pair<Eigen::MatrixXd, RowMatrix> shells_system(
    const PointwiseMap& pi,
    const Shape& src,
    const Shape& tgt,
    int k_def,
    double beta,
    double lambda,
    const RotationField& R);

RowMatrix shells_coordinates(const Shape& src, const SpectralDisplacement& D);

/// RHM system matrix W + beta A + mu Pi_bwd^T A_tgt Pi_bwd (the last term is diagonal).
SparseMatrix rhm_system(const PointwiseMap& pi_bwd, const Shape& src, const Shape& tgt, double beta, double mu);
RowMatrix rhm_rhs(
    const PointwiseMap& pi_fwd,
    const PointwiseMap& pi_bwd,
    const Shape& src,
    const Shape& tgt,
    double beta,
    double mu);

///
/// Minimizes E_D(Y) + beta ||Y - Pi_fwd X_tgt||_A^2 + mu ||Pi_bwd Y - X_tgt||_{A_tgt}^2,
/// where pi_fwd maps src -> tgt and pi_bwd maps tgt -> src.
///
RowMatrix y_step_rhm(
    const PointwiseMap& pi_fwd,
    const PointwiseMap& pi_bwd,
    const Shape& src,
    const Shape& tgt,
    double beta,
    double mu);

/// Spatial block of the Pi-step embedding for one direction.
struct SpatialEmbedding {
    RowMatrix query; // rows of the map's source
    RowMatrix data;  // rows of the map's target
};

///
/// Builds sqrt(gamma beta) Y (queries) against sqrt(gamma beta) X_tgt (data). For RHM the
/// pointwise bijectivity term adds sqrt(gamma mu) X_src (queries) against
/// sqrt(gamma mu) Y_bwd (data), where Y_bwd is the auxiliary variable of the reverse map.
///
SpatialEmbedding variant_embedding(
    const VariantParams& params,
    double gamma,
    double beta,
    const RowMatrix& y,
    const Shape& src,
    const Shape& tgt,
    const RowMatrix* y_bwd = nullptr);

} // namespace smoothmatch
