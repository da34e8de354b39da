#pragma once

#include <smoothmatch/energy.hpp>

#include <array>
#include <filesystem>
#include <iosfwd>
#include <utility>
#include <vector>

namespace smoothmatch {

struct SolverConfig {
    int k_init = 20;
    int k_final = 100;
    int n_outer = 9;
    double gamma_start = 0.1;
    double gamma_end = 1.0;
    VariantParams variant;
    EnergyWeights weights; // weights.gamma is overridden by the schedule
    bool exact_pi_step = false;
    bool stop_when_stable = true;

    /// Defaults for a variant, including its coupling weight.
    static SolverConfig for_variant(Variant kind);

    /// K per outer iteration, linear from k_init to k_final.
    std::vector<int> k_schedule() const;
    /// gamma per outer iteration, geometric from gamma_start to gamma_end.
    std::vector<double> gamma_schedule() const;

    void validate(int basis_size) const;
};

///
/// Closed-form functional maps minimizing the bijectivity energy at fixed pointwise maps.
///
/// fmap[d] appears in the coupling term of pi[d] and in the spectral term of the reverse
/// map, giving the K x K system
/// (w (Pi_e Phi_s)^T A_t (Pi_e Phi_s) + alpha I) C_d
///     = alpha Phi_s^T A_s Pi_d Phi_t + w (Pi_e Phi_s)^T A_t Phi_t.
///
std::array<FunctionalMap, 2> c_step(
    const std::array<PointwiseMap, 2>& pi, int k, const Shape& s1, const Shape& s2, const EnergyWeights& weights);

/// Variant-specific auxiliary update for both directions, with Y re-seeded from Pi X.
void y_step(
    SolverState& state,
    const Shape& s1,
    const Shape& s2,
    const EnergyWeights& weights,
    const VariantParams& variant,
    const std::array<const Prefactored*, 2>& factors = {nullptr, nullptr});

///
/// Row-separable pointwise update: each vertex takes the nearest row of a concatenated
/// embedding. The default mode keeps only the coupling terms; `exact` also includes the
/// spectral bijectivity term so that the step minimizes the total energy.
///
std::array<PointwiseMap, 2> pi_step(
    const SolverState& state,
    const Shape& s1,
    const Shape& s2,
    const EnergyWeights& weights,
    const VariantParams& variant,
    bool exact);

struct TraceRow {
    int iteration = 0;
    int k = 0;
    EnergyBreakdown energy;
};

struct EnergyTrace {
    std::vector<TraceRow> rows;

    /// iteration,k,gamma,e_bij,e_couple_spec,e_dirichlet,e_couple_spatial,e_total
    void write_csv(std::ostream& out) const;
};

struct RefineResult {
    SolverState state;
    EnergyTrace trace;
};

/// Solver failure carrying the state reached before the failing step.
class RefineFailure : public SolverError {
public:
    RefineFailure(const std::string& what, SolverState state)
        : SolverError(what)
        , m_state(std::move(state))
    {
    }
    const SolverState& state() const { return m_state; }

private:
    SolverState m_state;
};

///
/// Runs the alternating C / Y / Pi updates for `config.n_outer` iterations, growing K and
/// gamma along their schedules. Energies are recorded after every full iteration.
///
RefineResult refine(
    const std::array<PointwiseMap, 2>& pi_init,
    const Shape& s1,
    const Shape& s2,
    const SolverConfig& config);

struct LandmarkInit {
    std::array<PointwiseMap, 2> pi;
    std::array<FunctionalMap, 2> fmap; // k0 x k0, same pairing as SolverState::fmap
};

using LandmarkPairs = std::vector<std::pair<int, int>>;

///
/// Initial maps from landmark correspondences. Each landmark is an area-normalized delta
/// (optionally diffused for `heat_time`), projected on the first k0 eigenfunctions; the
/// functional maps fit the projected landmarks in least squares and are converted to
/// pointwise maps by spectral nearest neighbors.
///
LandmarkInit landmark_init(
    const LandmarkPairs& landmarks, const Shape& s1, const Shape& s2, int k0, double heat_time = 0.0);

/// "src_idx tgt_idx" per line.
LandmarkPairs load_landmarks(const std::filesystem::path& path);
void save_landmarks(const LandmarkPairs& landmarks, const std::filesystem::path& path);

} // namespace smoothmatch
