#pragma once

#include <smoothmatch/shape.hpp>
#include <smoothmatch/variants.hpp>

#include <array>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace smoothmatch {

struct EnergyWeights {
    double spectral_bij = 1.0; // first term of the bijectivity energy
    double alpha = 0.1;        // functional / pointwise map coupling
    double beta = 1.0;         // spatial coupling of Y to Pi X
    double gamma = 1.0;        // weight of the whole smoothness block

    /// Defaults with the variant's spatial coupling weight.
    static EnergyWeights for_variant(Variant kind);
    void validate() const;
};

///
/// The live variables of the refinement, both directions.
///
/// Index 0 is the map from shape 1 to shape 2, index 1 the reverse map. `fmap[d]` is the
/// pull-back paired with `pi[d]`: fmap[0] = C_21 (k x k, functions on 2 -> functions on 1)
/// and fmap[1] = C_12. `y[d]` stands in for pi[d] applied to the other shape's vertices.
///
struct SolverState {
    std::array<PointwiseMap, 2> pi;
    std::array<FunctionalMap, 2> fmap;
    std::array<RowMatrix, 2> y;
    std::array<VariantAux, 2> aux;
    int k = 0;
    int iteration = 0;

    void validate(const Shape& s1, const Shape& s2) const;
};

/// Shapes in map direction d: (source, target).
inline std::pair<const Shape&, const Shape&> direction_shapes(int d, const Shape& s1, const Shape& s2)
{
    return d == 0 ? std::pair<const Shape&, const Shape&>{s1, s2}
                  : std::pair<const Shape&, const Shape&>{s2, s1};
}

/// trace(coords^T W coords).
double dirichlet_energy(const RowMatrix& coords, const SparseMatrix& W);

/// sum_i mass_i ||M_i||^2 = trace(M^T A M).
double mass_norm_sq(const RowMatrix& M, const Eigen::VectorXd& mass);

/// ||C - Phi_src^T A_src Pi Phi_tgt||_F^2 with C sized k_src x k_tgt.
double coupling_energy(const FunctionalMap& C, const PointwiseMap& pi, const Shape& src, const Shape& tgt);

/// Terms of the bijectivity energy, already weighted.
struct BijectivityTerms {
    double spectral = 0.0; // spectral_bij * sum ||Pi_d Phi_t C_{other} - Phi_s||_{A_s}^2
    double coupling = 0.0; // alpha * sum ||Phi_s C_d - Pi_d Phi_t||_{A_s}^2
    double total() const { return spectral + coupling; }
};

BijectivityTerms bijectivity_terms(
    const SolverState& state, const Shape& s1, const Shape& s2, const EnergyWeights& weights);

double bijectivity_energy(
    const SolverState& state, const Shape& s1, const Shape& s2, const EnergyWeights& weights);

/// sum_d ||Y_d||_{W_s}^2 + beta ||Y_d - Pi_d X_t||_{A_s}^2.
double coupled_smoothness_dirichlet(
    const SolverState& state, const Shape& s1, const Shape& s2, const EnergyWeights& weights);

/// Smoothness block split into its variant term and its coupling terms (unweighted by gamma).
struct SmoothnessTerms {
    double smooth = 0.0;   // ||Y||_W^2, ||D||_W^2, lambda E_arap, ...
    double coupling = 0.0; // beta ||Y - Pi X||_A^2 (+ mu ||Pi_bwd Y - X||_A^2 for RHM)
    double total() const { return smooth + coupling; }
};

///
/// Coupled smoothness of the active variant. nICP reads the affine field from `state.aux`;
/// ARAP and Shells use the stored rotations or, when absent, the optimal ones for Y.
///
SmoothnessTerms coupled_smoothness(
    const SolverState& state,
    const Shape& s1,
    const Shape& s2,
    const EnergyWeights& weights,
    const VariantParams& variant);

struct EnergyBreakdown {
    double e_bij = 0.0;
    double e_couple_spec = 0.0;
    double e_dirichlet = 0.0;
    double e_couple_spatial = 0.0;
    double gamma = 1.0;
    double e_total = 0.0;

    /// "key value" per line.
    void write_report(std::ostream& out) const;
};

EnergyBreakdown energy_breakdown(
    const SolverState& state,
    const Shape& s1,
    const Shape& s2,
    const EnergyWeights& weights,
    const VariantParams& variant);

/// E_bij + gamma * E_sm^c for the active variant.
double total_energy(
    const SolverState& state,
    const Shape& s1,
    const Shape& s2,
    const EnergyWeights& weights,
    const VariantParams& variant);

} // namespace smoothmatch
