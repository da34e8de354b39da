#include <smoothmatch/energy.hpp>

#include <iomanip>
#include <limits>
#include <ostream>

namespace smoothmatch {

EnergyWeights EnergyWeights::for_variant(Variant kind)
{
    EnergyWeights w;
    w.beta = default_beta(kind);
    return w;
}

void EnergyWeights::validate() const
{
    if (!(spectral_bij >= 0.0) || !(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0)) {
        throw std::invalid_argument("energy weights must be non-negative");
    }
}

void SolverState::validate(const Shape& s1, const Shape& s2) const
{
    for (int d = 0; d < 2; ++d) {
        const auto [src, tgt] = direction_shapes(d, s1, s2);
        const std::string tag = d == 0 ? "1->2" : "2->1";
        if (pi[d].n_src() != src.n() || pi[d].n_tgt() != tgt.n()) {
            throw DimensionError("state: pointwise map " + tag + " has wrong size");
        }
        if (fmap[d].rows() != k || fmap[d].cols() != k) {
            throw DimensionError("state: functional map " + tag + " is not k x k");
        }
        if (y[d].rows() != src.n() || y[d].cols() != 3) {
            throw DimensionError("state: auxiliary coordinates " + tag + " have wrong size");
        }
    }
}

double dirichlet_energy(const RowMatrix& coords, const SparseMatrix& W)
{
    if (coords.rows() != W.rows()) throw DimensionError("dirichlet_energy: row count mismatch");
    return (coords.transpose() * (W * coords)).trace();
}

double mass_norm_sq(const RowMatrix& M, const Eigen::VectorXd& mass)
{
    if (M.rows() != mass.size()) throw DimensionError("mass_norm_sq: row count mismatch");
    return (M.rowwise().squaredNorm().transpose() * mass).value();
}

double coupling_energy(const FunctionalMap& C, const PointwiseMap& pi, const Shape& src, const Shape& tgt)
{
    const FunctionalMap converted = p2p_to_fmap(
        pi, src.basis, src.mass, tgt.basis, static_cast<int>(C.rows()), static_cast<int>(C.cols()));
    return (C - converted).squaredNorm();
}

BijectivityTerms bijectivity_terms(
    const SolverState& state, const Shape& s1, const Shape& s2, const EnergyWeights& weights)
{
    state.validate(s1, s2);
    BijectivityTerms terms;
    for (int d = 0; d < 2; ++d) {
        const auto [src, tgt] = direction_shapes(d, s1, s2);
        const RowMatrix phi_s = src.basis.head(state.k);
        const RowMatrix phi_t = tgt.basis.head(state.k);
        const PointwiseMap& pi = state.pi[d];
        const RowMatrix spectral = pi.pull(phi_t * state.fmap[1 - d]) - phi_s;
        const RowMatrix coupling = phi_s * state.fmap[d] - pi.pull(phi_t);
        terms.spectral += weights.spectral_bij * mass_norm_sq(spectral, src.mass);
        terms.coupling += weights.alpha * mass_norm_sq(coupling, src.mass);
    }
    return terms;
}

double bijectivity_energy(
    const SolverState& state, const Shape& s1, const Shape& s2, const EnergyWeights& weights)
{
    return bijectivity_terms(state, s1, s2, weights).total();
}

double coupled_smoothness_dirichlet(
    const SolverState& state, const Shape& s1, const Shape& s2, const EnergyWeights& weights)
{
    state.validate(s1, s2);
    double e = 0.0;
    for (int d = 0; d < 2; ++d) {
        const auto [src, tgt] = direction_shapes(d, s1, s2);
        e += dirichlet_energy(state.y[d], src.W) +
             weights.beta * mass_norm_sq(state.y[d] - state.pi[d].pull(tgt.X), src.mass);
    }
    return e;
}

SmoothnessTerms coupled_smoothness(
    const SolverState& state,
    const Shape& s1,
    const Shape& s2,
    const EnergyWeights& weights,
    const VariantParams& variant)
{
    state.validate(s1, s2);
    SmoothnessTerms terms;
    for (int d = 0; d < 2; ++d) {
        const auto [src, tgt] = direction_shapes(d, s1, s2);
        const RowMatrix& y = state.y[d];
        const VariantAux& aux = state.aux[d];
        terms.coupling += weights.beta * mass_norm_sq(y - state.pi[d].pull(tgt.X), src.mass);

        switch (variant.kind) {
        case Variant::Dirichlet: terms.smooth += dirichlet_energy(y, src.W); break;
        case Variant::RHM:
            terms.smooth += dirichlet_energy(y, src.W);
            terms.coupling += variant.mu * mass_norm_sq(state.pi[1 - d].pull(y) - tgt.X, tgt.mass);
            break;
        case Variant::NICP: {
            if (!aux.affine) throw std::invalid_argument("nICP energy needs the affine field");
            const AffineField& D = *aux.affine;
            double e = 0.0;
            for (int col = 0; col < src.W.outerSize(); ++col) {
                for (SparseMatrix::InnerIterator it(src.W, col); it; ++it) {
                    if (it.row() == it.col()) continue;
                    e += -0.5 * it.value() * (D[it.row()] - D[it.col()]).squaredNorm();
                }
            }
            terms.smooth += e;
            break;
        }
        case Variant::ARAP:
        case Variant::Shells: {
            const RotationField R = aux.rotations ? *aux.rotations : arap_local_step(y, src);
            terms.smooth += variant.lambda * arap_energy(R, y, src);
            break;
        }
        }
    }
    return terms;
}

EnergyBreakdown energy_breakdown(
    const SolverState& state,
    const Shape& s1,
    const Shape& s2,
    const EnergyWeights& weights,
    const VariantParams& variant)
{
    const BijectivityTerms bij = bijectivity_terms(state, s1, s2, weights);
    const SmoothnessTerms sm = coupled_smoothness(state, s1, s2, weights, variant);
    EnergyBreakdown out;
    out.e_bij = bij.spectral;
    out.e_couple_spec = bij.coupling;
    out.e_dirichlet = sm.smooth;
    out.e_couple_spatial = sm.coupling;
    out.gamma = weights.gamma;
    out.e_total = bij.total() + weights.gamma * sm.total();
    return out;
}

double total_energy(
    const SolverState& state,
    const Shape& s1,
    const Shape& s2,
    const EnergyWeights& weights,
    const VariantParams& variant)
{
    return energy_breakdown(state, s1, s2, weights, variant).e_total;
}

void EnergyBreakdown::write_report(std::ostream& out) const
{
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    out << "e_bij " << e_bij << '\n'
        << "e_couple_spec " << e_couple_spec << '\n'
        << "e_dirichlet " << e_dirichlet << '\n'
        << "e_couple_spatial " << e_couple_spatial << '\n'
        << "gamma " << gamma << '\n'
        << "e_total " << e_total << '\n';
    out.precision(old);
}

} // namespace smoothmatch
