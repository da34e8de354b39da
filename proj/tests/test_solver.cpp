#include "fixtures.hpp"

#include <smoothmatch/solver.hpp>

#include <doctest.h>

#include <Eigen/Dense>

#include <filesystem>
#include <sstream>

using namespace smtest;

namespace {

Eigen::MatrixXd sqrt_mass(const Eigen::VectorXd& a)
{
    return Eigen::MatrixXd(a.cwiseSqrt().asDiagonal());
}

// Least-squares minimizer for fmap[d], stacked from the two terms it appears in.
Eigen::MatrixXd c_oracle(const std::array<PointwiseMap, 2>& pi, int d, int k, const Shape& s1, const Shape& s2,
                         const EnergyWeights& w)
{
    const auto [src, tgt] = direction_shapes(d, s1, s2);
    const Eigen::MatrixXd Ps = Eigen::MatrixXd(src.basis.phi).leftCols(k);
    const Eigen::MatrixXd Pt = Eigen::MatrixXd(tgt.basis.phi).leftCols(k);
    const Eigen::MatrixXd Pi_d = oracle::map_matrix(pi[d]);
    const Eigen::MatrixXd Pi_e = oracle::map_matrix(pi[1 - d]);
    const int nt = tgt.n();
    const int ns = src.n();
    Eigen::MatrixXd lhs(nt + ns, k);
    Eigen::MatrixXd rhs(nt + ns, k);
    lhs.topRows(nt) = std::sqrt(w.spectral_bij) * sqrt_mass(tgt.mass) * Pi_e * Ps;
    rhs.topRows(nt) = std::sqrt(w.spectral_bij) * sqrt_mass(tgt.mass) * Pt;
    lhs.bottomRows(ns) = std::sqrt(w.alpha) * sqrt_mass(src.mass) * Ps;
    rhs.bottomRows(ns) = std::sqrt(w.alpha) * sqrt_mass(src.mass) * Pi_d * Pt;
    return lhs.colPivHouseholderQr().solve(rhs);
}

// Exhaustive per-vertex argmin of every energy term that depends on pi[d].
std::vector<int> pi_oracle(const SolverState& st, int d, const Shape& s1, const Shape& s2, const EnergyWeights& w,
                           const VariantParams& v)
{
    const auto [src, tgt] = direction_shapes(d, s1, s2);
    const int k = st.k;
    const Eigen::MatrixXd Ps = Eigen::MatrixXd(src.basis.phi).leftCols(k);
    const Eigen::MatrixXd Pt = Eigen::MatrixXd(tgt.basis.phi).leftCols(k);
    const Eigen::MatrixXd mapped_t = Pt * st.fmap[1 - d];
    const Eigen::MatrixXd mapped_s = Ps * st.fmap[d];
    std::vector<int> out(src.n());
    for (int p = 0; p < src.n(); ++p) {
        double best = std::numeric_limits<double>::infinity();
        for (int q = 0; q < tgt.n(); ++q) {
            double e = w.spectral_bij * (mapped_t.row(q) - Ps.row(p)).squaredNorm() +
                       w.alpha * (mapped_s.row(p) - Pt.row(q)).squaredNorm() +
                       w.gamma * w.beta * (st.y[d].row(p) - tgt.X.row(q)).squaredNorm();
            if (v.kind == Variant::RHM) e += w.gamma * v.mu * (st.y[1 - d].row(q) - src.X.row(p)).squaredNorm();
            if (e < best) {
                best = e;
                out[p] = q;
            }
        }
    }
    return out;
}

LandmarkPairs diagonal_landmarks(const std::vector<int>& idx)
{
    LandmarkPairs lm;
    for (int i : idx) lm.emplace_back(i, i);
    return lm;
}

SolverConfig small_config(Variant kind)
{
    SolverConfig cfg = SolverConfig::for_variant(kind);
    cfg.k_init = 6;
    cfg.k_final = 16;
    cfg.n_outer = 4;
    return cfg;
}

} // namespace

TEST_CASE("schedules")
{
    const SolverConfig cfg;
    CHECK(cfg.k_schedule() == std::vector<int>{20, 30, 40, 50, 60, 70, 80, 90, 100});
    const auto g = cfg.gamma_schedule();
    REQUIRE(g.size() == 9);
    CHECK(g.front() == doctest::Approx(0.1));
    CHECK(g.back() == doctest::Approx(1.0));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(g[1] / g[0]));
    CHECK_THROWS(cfg.validate(50));
    CHECK_NOTHROW(cfg.validate(100));
    CHECK(SolverConfig::for_variant(Variant::RHM).weights.beta == default_beta(Variant::RHM));
}

TEST_CASE("C-step equals the dense least-squares solution")
{
    Rng rng(51);
    for (int t = 0; t < 6; ++t) {
        const Shape s1 = Shape::build(random_patch(rng, uniform_int(rng, 3, 5), 4).normalized(), 6);
        const Shape s2 = Shape::build(random_patch(rng, uniform_int(rng, 3, 5), 4).normalized(), 6);
        const std::array<PointwiseMap, 2> pi{random_map(rng, s1.n(), s2.n()), random_map(rng, s2.n(), s1.n())};
        EnergyWeights w;
        w.alpha = uniform(rng, 0.01, 2.0);
        w.spectral_bij = uniform(rng, 0.1, 2.0);
        const int k = uniform_int(rng, 2, 6);
        const auto C = c_step(pi, k, s1, s2, w);
        for (int d = 0; d < 2; ++d) {
            const Eigen::MatrixXd expect = c_oracle(pi, d, k, s1, s2, w);
            CHECK((C[d] - expect).cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
        }

        // No perturbation of the returned maps lowers the bijectivity energy.
        SolverState st;
        st.k = k;
        st.pi = pi;
        st.fmap = C;
        st.y = {pi[0].pull(s2.X), pi[1].pull(s1.X)};
        const double e0 = bijectivity_energy(st, s1, s2, w);
        for (int r = 0; r < 4; ++r) {
            SolverState moved = st;
            moved.fmap[r % 2] += random_matrix(rng, k, k, 1e-3);
            CHECK(bijectivity_energy(moved, s1, s2, w) >= e0 - 1e-12);
        }
    }
}

TEST_CASE("C-step with a heavy coupling weight reproduces the induced functional map")
{
    Rng rng(52);
    const Shape s1 = Shape::build(random_sphere(rng, 1), 10);
    const Shape s2 = Shape::build(random_sphere(rng, 1), 10);
    const std::array<PointwiseMap, 2> pi{random_map(rng, s1.n(), s2.n()), random_map(rng, s2.n(), s1.n())};
    EnergyWeights light;
    light.alpha = 0.1;
    EnergyWeights heavy;
    heavy.alpha = 1e6;
    const auto Cl = c_step(pi, 10, s1, s2, light);
    const auto Ch = c_step(pi, 10, s1, s2, heavy);
    for (int d = 0; d < 2; ++d) {
        const auto [src, tgt] = direction_shapes(d, s1, s2);
        CHECK(coupling_energy(Ch[d], pi[d], src, tgt) < 1e-3 * coupling_energy(Cl[d], pi[d], src, tgt));
    }
}

TEST_CASE("Pi-step in exact mode is the exhaustive argmin")
{
    Rng rng(53);
    for (Variant kind : {Variant::Dirichlet, Variant::RHM, Variant::ARAP}) {
        for (int t = 0; t < 4; ++t) {
            const Shape s1 = Shape::build(random_patch(rng, 5, 4).normalized(), 6);
            const Shape s2 = Shape::build(random_patch(rng, 4, 5).normalized(), 6);
            const SolverState st = random_state(rng, s1, s2, uniform_int(rng, 2, 6), kind);
            EnergyWeights w = EnergyWeights::for_variant(kind);
            w.gamma = uniform(rng, 0.1, 1.0);
            VariantParams v = VariantParams::defaults(kind);
            v.mu = 3.0;
            const auto pi = pi_step(st, s1, s2, w, v, true);
            for (int d = 0; d < 2; ++d) CHECK(pi[d].target_of() == pi_oracle(st, d, s1, s2, w, v));

            // The update can only lower the total energy.
            SolverState next = st;
            next.pi = pi;
            CHECK(total_energy(next, s1, s2, w, v) <= total_energy(st, s1, s2, w, v) + 1e-12);
        }
    }
}

TEST_CASE("Pi-step with gamma = 0 is spectral nearest neighbor")
{
    Rng rng(54);
    const Shape s1 = Shape::build(random_sphere(rng, 2), 12);
    const Shape s2 = Shape::build(random_sphere(rng, 2), 12);
    const SolverState st = random_state(rng, s1, s2, 12, Variant::Dirichlet);
    EnergyWeights w;
    w.gamma = 0.0;
    const auto pi = pi_step(st, s1, s2, w, VariantParams::defaults(Variant::Dirichlet), false);
    CHECK(pi[0] == fmap_to_p2p(st.fmap[0], s1.basis, s2.basis));
    CHECK(pi[1] == fmap_to_p2p(st.fmap[1], s2.basis, s1.basis));
}

TEST_CASE("Y-step dispatch re-seeds from the current maps")
{
    Rng rng(55);
    const Shape s1 = Shape::build(random_sphere(rng, 1), 8);
    const Shape s2 = Shape::build(random_sphere(rng, 1), 8);
    SolverState st = random_state(rng, s1, s2, 8, Variant::Dirichlet);
    const EnergyWeights w;
    y_step(st, s1, s2, w, VariantParams::defaults(Variant::Dirichlet));
    CHECK((st.y[0] - y_step_dirichlet(st.pi[0], s1, s2, w.beta)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((st.y[1] - y_step_dirichlet(st.pi[1], s2, s1, w.beta)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("landmark initialization")
{
    const TriMesh sphere = jitter(icosphere(3), 0.005, 3).normalized(); // 642 vertices, symmetry broken
    const Shape s = Shape::build(sphere, 20);
    const LandmarkPairs lm = diagonal_landmarks(farthest_point_sampling(sphere, 5));

    const LandmarkInit init = landmark_init(lm, s, s, 5);
    CHECK(init.fmap[0].rows() == 5);
    CHECK(init.fmap[0].cols() == 5);
    for (int d = 0; d < 2; ++d) {
        int hits = 0;
        for (int p = 0; p < s.n(); ++p) hits += init.pi[d][p] == p;
        CHECK(hits >= static_cast<int>(0.9 * s.n()));
    }

    CHECK_THROWS(landmark_init(diagonal_landmarks({3}), s, s, 5));
    CHECK_THROWS(landmark_init({{1, 2}, {1, 5}, {7, 8}}, s, s, 3));
    CHECK_THROWS(landmark_init({{1, 2}, {4, 5}, {7, 9999}}, s, s, 3));

    const auto path = std::filesystem::temp_directory_path() / "smoothmatch_lm.txt";
    save_landmarks(lm, path);
    CHECK(load_landmarks(path) == lm);
}

TEST_CASE("refinement is deterministic and symmetric under swapping the shapes")
{
    Rng rng(56);
    const Shape s1 = Shape::build(random_sphere(rng, 2, 0.01), 16);
    const Shape s2 = Shape::build(random_sphere(rng, 2, 0.01), 16);
    const std::vector<int> idx = farthest_point_sampling(s1.mesh, 5);
    const LandmarkPairs lm = diagonal_landmarks(idx);
    LandmarkPairs swapped;
    for (auto [a, b] : lm) swapped.emplace_back(b, a);

    for (Variant kind : {Variant::Dirichlet, Variant::RHM}) {
        const SolverConfig cfg = small_config(kind);
        const LandmarkInit init = landmark_init(lm, s1, s2, 5);
        const RefineResult a = refine(init.pi, s1, s2, cfg);
        const RefineResult b = refine(init.pi, s1, s2, cfg);
        CHECK(a.state.pi == b.state.pi);
        CHECK(a.state.fmap[0] == b.state.fmap[0]);
        REQUIRE(a.trace.rows.size() == b.trace.rows.size());
        for (std::size_t i = 0; i < a.trace.rows.size(); ++i)
            CHECK(a.trace.rows[i].energy.e_total == b.trace.rows[i].energy.e_total);

        const LandmarkInit init_sw = landmark_init(swapped, s2, s1, 5);
        CHECK(init_sw.pi[0] == init.pi[1]);
        CHECK(init_sw.pi[1] == init.pi[0]);
        const RefineResult c = refine(init_sw.pi, s2, s1, cfg);
        CHECK(c.state.pi[0] == a.state.pi[1]);
        CHECK(c.state.pi[1] == a.state.pi[0]);
    }
}

TEST_CASE("refinement trace and validation")
{
    Rng rng(57);
    const Shape s1 = Shape::build(random_sphere(rng, 1), 16);
    const Shape s2 = Shape::build(random_sphere(rng, 1), 16);
    const std::array<PointwiseMap, 2> pi{random_map(rng, s1.n(), s2.n()), random_map(rng, s2.n(), s1.n())};

    SolverConfig cfg = small_config(Variant::ARAP);
    cfg.stop_when_stable = false;
    const RefineResult r = refine(pi, s1, s2, cfg);
    REQUIRE(r.trace.rows.size() == 4);
    const auto ks = cfg.k_schedule();
    for (std::size_t i = 0; i < 4; ++i) CHECK(r.trace.rows[i].k == ks[i]);
    CHECK(r.state.k == 16);
    CHECK(r.state.fmap[0].rows() == 16);

    std::ostringstream csv;
    r.trace.write_csv(csv);
    CHECK(csv.str().rfind("iteration,k,gamma,e_bij,e_couple_spec,e_dirichlet,e_couple_spatial,e_total\n", 0) == 0);

    cfg.k_final = 40; // larger than the stored basis
    CHECK_THROWS(refine(pi, s1, s2, cfg));
    CHECK_THROWS(refine({PointwiseMap::identity(s1.n() - 1), pi[1]}, s1, s2, small_config(Variant::Dirichlet)));
}
