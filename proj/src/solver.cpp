#include <smoothmatch/solver.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <set>
#include <sstream>

namespace smoothmatch {

SolverConfig SolverConfig::for_variant(Variant kind)
{
    SolverConfig c;
    c.variant = VariantParams::defaults(kind);
    c.weights = EnergyWeights::for_variant(kind);
    return c;
}

std::vector<int> SolverConfig::k_schedule() const
{
    std::vector<int> ks(n_outer);
    for (int t = 0; t < n_outer; ++t) {
        const double frac = n_outer > 1 ? static_cast<double>(t) / (n_outer - 1) : 1.0;
        ks[t] = static_cast<int>(std::lround(k_init + frac * (k_final - k_init)));
    }
    return ks;
}

std::vector<double> SolverConfig::gamma_schedule() const
{
    std::vector<double> gs(n_outer);
    for (int t = 0; t < n_outer; ++t) {
        if (n_outer == 1 || gamma_start == gamma_end) {
            gs[t] = gamma_end;
        } else if (gamma_start > 0.0 && gamma_end > 0.0) {
            const double frac = static_cast<double>(t) / (n_outer - 1);
            gs[t] = gamma_start * std::pow(gamma_end / gamma_start, frac);
        } else {
            // A zero endpoint has no geometric path; interpolate linearly.
            const double frac = static_cast<double>(t) / (n_outer - 1);
            gs[t] = gamma_start + frac * (gamma_end - gamma_start);
        }
    }
    if (n_outer > 0) gs.back() = gamma_end;
    return gs;
}

void SolverConfig::validate(int basis_size) const
{
    if (n_outer < 1) throw std::invalid_argument("n_outer must be at least 1");
    if (k_init < 1 || k_init > k_final) throw std::invalid_argument("need 1 <= k_init <= k_final");
    if (k_final > basis_size) {
        throw std::invalid_argument(
            "k_final = " + std::to_string(k_final) + " exceeds the computed basis size " +
            std::to_string(basis_size));
    }
    if (!(gamma_start >= 0.0) || !(gamma_end >= 0.0)) throw std::invalid_argument("gamma must be >= 0");
    weights.validate();
    variant.validate();
}

std::array<FunctionalMap, 2> c_step(
    const std::array<PointwiseMap, 2>& pi, int k, const Shape& s1, const Shape& s2, const EnergyWeights& weights)
{
    std::array<FunctionalMap, 2> out;
    for (int d = 0; d < 2; ++d) {
        const auto [src, tgt] = direction_shapes(d, s1, s2);
        const RowMatrix phi_s = src.basis.head(k);
        const RowMatrix phi_t = tgt.basis.head(k);
        const RowMatrix back = pi[1 - d].pull(phi_s); // Pi_e Phi_s, n_t x k
        const RowMatrix back_weighted = tgt.mass.asDiagonal() * back;

        Eigen::MatrixXd system = weights.spectral_bij * (back.transpose() * back_weighted);
        system.diagonal().array() += weights.alpha;
        const Eigen::MatrixXd rhs =
            weights.alpha * (phi_s.transpose() * src.mass.asDiagonal() * pi[d].pull(phi_t)) +
            weights.spectral_bij * (back_weighted.transpose() * phi_t);

        Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (system + system.transpose()));
        if (llt.info() != Eigen::Success) {
            std::clog << "c_step: singular " << k << "x" << k << " system, adding 1e-9 diagonal\n";
            system.diagonal().array() += 1e-9;
            llt.compute(0.5 * (system + system.transpose()));
            if (llt.info() != Eigen::Success) throw SolverError("c_step: functional map system is not SPD");
        }
        out[d] = llt.solve(rhs);
    }
    return out;
}

void y_step(
    SolverState& state,
    const Shape& s1,
    const Shape& s2,
    const EnergyWeights& weights,
    const VariantParams& variant,
    const std::array<const Prefactored*, 2>& factors)
{
    std::array<YStep, 2> next;
    for (int d = 0; d < 2; ++d) {
        const auto [src, tgt] = direction_shapes(d, s1, s2);
        const PointwiseMap& pi = state.pi[d];
        switch (variant.kind) {
        case Variant::Dirichlet:
            next[d].y = y_step_dirichlet(pi, src, tgt, weights.beta, factors[d]);
            break;
        case Variant::NICP: next[d] = y_step_nicp(pi, src, tgt, weights.beta); break;
        case Variant::ARAP:
            next[d] = y_step_arap(pi, src, tgt, weights.beta, variant.lambda, pi.pull(tgt.X), factors[d]);
            break;
        case Variant::Shells: {
            const int k_def = variant.k_def > 0 ? variant.k_def : state.k;
            next[d] = y_step_shells(pi, src, tgt, k_def, weights.beta, variant.lambda, pi.pull(tgt.X));
            break;
        }
        case Variant::RHM:
            next[d].y = y_step_rhm(pi, state.pi[1 - d], src, tgt, weights.beta, variant.mu);
            break;
        }
    }
    for (int d = 0; d < 2; ++d) {
        state.y[d] = std::move(next[d].y);
        state.aux[d] = std::move(next[d].aux);
    }
}

std::array<PointwiseMap, 2> pi_step(
    const SolverState& state,
    const Shape& s1,
    const Shape& s2,
    const EnergyWeights& weights,
    const VariantParams& variant,
    bool exact)
{
    state.validate(s1, s2);
    std::array<PointwiseMap, 2> out;
    const int k = state.k;
    for (int d = 0; d < 2; ++d) {
        const auto [src, tgt] = direction_shapes(d, s1, s2);
        const RowMatrix phi_s = src.basis.head(k);
        const RowMatrix phi_t = tgt.basis.head(k);
        const SpatialEmbedding spatial =
            variant_embedding(variant, weights.gamma, weights.beta, state.y[d], src, tgt, &state.y[1 - d]);

        const bool use_spectral = exact && weights.spectral_bij > 0.0;
        const bool use_coupling = weights.alpha > 0.0;
        const int cols = (use_spectral ? k : 0) + (use_coupling ? k : 0) + static_cast<int>(spatial.query.cols());
        RowMatrix query(src.n(), cols);
        RowMatrix data(tgt.n(), cols);
        int c = 0;
        if (use_spectral) {
            const double s = std::sqrt(weights.spectral_bij);
            query.middleCols(c, k) = s * phi_s;
            data.middleCols(c, k) = s * (phi_t * state.fmap[1 - d]);
            c += k;
        }
        if (use_coupling) {
            const double s = std::sqrt(weights.alpha);
            query.middleCols(c, k) = s * (phi_s * state.fmap[d]);
            data.middleCols(c, k) = s * phi_t;
            c += k;
        }
        query.rightCols(spatial.query.cols()) = spatial.query;
        data.rightCols(spatial.data.cols()) = spatial.data;
        if (cols == 0) {
            out[d] = state.pi[d];
            continue;
        }
        out[d] = PointwiseMap(nearest_rows(query, data), tgt.n());
    }
    return out;
}

void EnergyTrace::write_csv(std::ostream& out) const
{
    const auto old = out.precision(std::numeric_limits<double>::max_digits10);
    out << "iteration,k,gamma,e_bij,e_couple_spec,e_dirichlet,e_couple_spatial,e_total\n";
    for (const auto& r : rows) {
        out << r.iteration << ',' << r.k << ',' << r.energy.gamma << ',' << r.energy.e_bij << ','
            << r.energy.e_couple_spec << ',' << r.energy.e_dirichlet << ','
            << r.energy.e_couple_spatial << ',' << r.energy.e_total << '\n';
    }
    out.precision(old);
}

RefineResult refine(
    const std::array<PointwiseMap, 2>& pi_init,
    const Shape& s1,
    const Shape& s2,
    const SolverConfig& config)
{
    config.validate(std::min(s1.basis.k(), s2.basis.k()));
    for (int d = 0; d < 2; ++d) {
        const auto [src, tgt] = direction_shapes(d, s1, s2);
        if (pi_init[d].n_src() != src.n() || pi_init[d].n_tgt() != tgt.n()) {
            throw DimensionError("refine: initial map sizes do not match the shapes");
        }
    }

    // Y-systems that do not depend on Pi are factored once.
    std::array<std::unique_ptr<Prefactored>, 2> factors;
    const Variant kind = config.variant.kind;
    if ((kind == Variant::Dirichlet || kind == Variant::ARAP) && config.weights.beta > 0.0) {
        const double w_scale = kind == Variant::ARAP ? config.variant.lambda : 1.0;
        for (int d = 0; d < 2; ++d) {
            const Shape& src = d == 0 ? s1 : s2;
            factors[d] = std::make_unique<Prefactored>(dirichlet_system(src, config.weights.beta, w_scale));
        }
    }
    const std::array<const Prefactored*, 2> factor_ptrs{factors[0].get(), factors[1].get()};

    RefineResult result;
    SolverState& state = result.state;
    state.pi = pi_init;
    for (int d = 0; d < 2; ++d) {
        const Shape& tgt = d == 0 ? s2 : s1;
        state.y[d] = state.pi[d].pull(tgt.X);
    }

    const std::vector<int> ks = config.k_schedule();
    const std::vector<double> gammas = config.gamma_schedule();
    for (int t = 0; t < config.n_outer; ++t) {
        EnergyWeights weights = config.weights;
        weights.gamma = gammas[t];
        state.k = ks[t];
        try {
            state.fmap = c_step(state.pi, state.k, s1, s2, weights);
            y_step(state, s1, s2, weights, config.variant, factor_ptrs);
            auto next = pi_step(state, s1, s2, weights, config.variant, config.exact_pi_step);
            const bool changed = next[0] != state.pi[0] || next[1] != state.pi[1];
            state.pi = std::move(next);
            state.iteration = t + 1;
            result.trace.rows.push_back(
                {state.iteration, state.k, energy_breakdown(state, s1, s2, weights, config.variant)});
            const bool schedule_done = state.k == config.k_final && weights.gamma == config.gamma_end;
            if (config.stop_when_stable && !changed && schedule_done) break;
        } catch (const SolverError& e) {
            throw RefineFailure(
                "iteration " + std::to_string(t + 1) + " (k = " + std::to_string(state.k) + "): " + e.what(),
                state);
        }
    }
    return result;
}

LandmarkInit landmark_init(
    const LandmarkPairs& landmarks, const Shape& s1, const Shape& s2, int k0, double heat_time)
{
    if (landmarks.size() < 2) throw std::invalid_argument("landmark_init: need at least 2 landmarks");
    if (k0 < 1 || k0 > s1.basis.k() || k0 > s2.basis.k()) {
        throw DimensionError("landmark_init: k0 exceeds the basis size");
    }
    std::set<int> seen1, seen2;
    for (const auto& [a, b] : landmarks) {
        if (a < 0 || a >= s1.n() || b < 0 || b >= s2.n()) {
            throw std::out_of_range(
                "landmark (" + std::to_string(a) + ", " + std::to_string(b) + ") out of range");
        }
        if (!seen1.insert(a).second || !seen2.insert(b).second) {
            throw std::invalid_argument(
                "landmark_init: duplicate landmark index in (" + std::to_string(a) + ", " +
                std::to_string(b) + ")");
        }
    }

    // Coefficients of the area-normalized delta at v: Phi^T A (e_v / A_v) = Phi[v, :]^T.
    const auto project = [&](const Shape& shape, bool first) {
        Eigen::MatrixXd F(k0, static_cast<Eigen::Index>(landmarks.size()));
        for (std::size_t l = 0; l < landmarks.size(); ++l) {
            const int v = first ? landmarks[l].first : landmarks[l].second;
            for (int j = 0; j < k0; ++j) {
                F(j, l) = std::exp(-heat_time * shape.basis.eigenvalues(j)) * shape.basis.phi(v, j);
            }
        }
        return F;
    };
    const Eigen::MatrixXd F1 = project(s1, true);
    const Eigen::MatrixXd F2 = project(s2, false);

    // min ||C F_from - F_to||: solve F_from^T C^T = F_to^T.
    const auto fit = [](const Eigen::MatrixXd& from, const Eigen::MatrixXd& to) -> FunctionalMap {
        return from.transpose().completeOrthogonalDecomposition().solve(to.transpose()).transpose();
    };

    LandmarkInit out;
    out.fmap[0] = fit(F2, F1); // C_21: functions on 2 -> 1
    out.fmap[1] = fit(F1, F2); // C_12
    out.pi[0] = fmap_to_p2p(out.fmap[0], s1.basis, s2.basis);
    out.pi[1] = fmap_to_p2p(out.fmap[1], s2.basis, s1.basis);
    return out;
}

LandmarkPairs load_landmarks(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open landmark file " + path.string());
    LandmarkPairs out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        int a = 0, b = 0;
        if (!(ls >> a >> b)) {
            throw std::invalid_argument(
                path.string() + ": expected 'src_idx tgt_idx' at line " + std::to_string(line_no));
        }
        out.emplace_back(a, b);
    }
    return out;
}

void save_landmarks(const LandmarkPairs& landmarks, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot write " + path.string());
    for (const auto& [a, b] : landmarks) out << a << ' ' << b << '\n';
}

} // namespace smoothmatch
