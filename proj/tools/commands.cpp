#include "commands.hpp"

#include <smoothmatch/metrics.hpp>
#include <smoothmatch/parallel.hpp>
#include <smoothmatch/synth.hpp>

#include <atomic>
#include <fstream>
#include <iomanip>
#include <ios>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace smoothmatch::cli {

namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& path, const char* what)
{
    if (!fs::is_regular_file(path)) {
        throw std::invalid_argument(std::string(what) + " file not found: " + path.string());
    }
}

void check_ground_truth(const GroundTruth& gt, int n_src, int n_tgt)
{
    for (const auto& [p, q] : gt) {
        if (p < 0 || p >= n_src || q < 0 || q >= n_tgt) {
            throw DimensionError(
                "ground-truth pair (" + std::to_string(p) + ", " + std::to_string(q) + ") out of range");
        }
    }
}

/// Runs a command body and maps exceptions onto exit codes.
template <class Body>
int guarded(std::ostream& err, Body&& body)
{
    try {
        return body();
    } catch (const RefineFailure& e) {
        err << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << '\n';
        return kSolverFailure;
    } catch (const MeshError& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::invalid_argument& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::out_of_range& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::ios_base::failure& e) {
        err << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kSolverFailure;
    }
}

void write_state(const SolverState& state, const fs::path& dir)
{
    fs::create_directories(dir);
    save_pointwise_map(state.pi[0], dir / "map_12.txt");
    save_pointwise_map(state.pi[1], dir / "map_21.txt");
    // fmap_12 is the functional map induced by map_12 (it pulls functions on shape 2 back to shape 1).
    if (state.fmap[0].size() > 0) save_functional_map(state.fmap[0], dir / "fmap_12.txt");
    if (state.fmap[1].size() > 0) save_functional_map(state.fmap[1], dir / "fmap_21.txt");
}

void print_metrics(const MetricsReport& report, bool conformal, std::ostream& out)
{
    out << MetricsReport::csv_header(conformal) << '\n' << report.csv_row(conformal) << '\n';
}

} // namespace

void RunConfig::validate() const
{
    require_file(src, "source mesh");
    require_file(tgt, "target mesh");
    const bool have_init = !init_12.empty() || !init_21.empty();
    if (landmarks.empty() == !have_init) {
        throw std::invalid_argument("give either --landmarks or both --init-12 and --init-21");
    }
    if (have_init) {
        if (init_12.empty() || init_21.empty()) {
            throw std::invalid_argument("--init-12 and --init-21 must be given together");
        }
        require_file(init_12, "initial map");
        require_file(init_21, "initial map");
    } else {
        require_file(landmarks, "landmark");
    }
    if (!gt.empty()) require_file(gt, "ground-truth");
    (void)parse_variant(energy);
    if (k0 < 0) throw std::invalid_argument("--k0 must be >= 0");
    if (heat_time < 0.0) throw std::invalid_argument("heat time must be >= 0");
    solver.weights.validate();
    solver.variant.validate();
    solver.validate(solver.k_final);
}

void RunConfig::write(std::ostream& os) const
{
    const auto prec = os.precision(std::numeric_limits<double>::max_digits10);
    const auto& s = solver;
    os << "src = " << src.string() << '\n'
       << "tgt = " << tgt.string() << '\n'
       << "landmarks = " << landmarks.string() << '\n'
       << "init_12 = " << init_12.string() << '\n'
       << "init_21 = " << init_21.string() << '\n'
       << "gt = " << gt.string() << '\n'
       << "out = " << out.string() << '\n'
       << "energy = " << energy << '\n'
       << "k_init = " << s.k_init << '\n'
       << "k_final = " << s.k_final << '\n'
       << "n_outer = " << s.n_outer << '\n'
       << "gamma_start = " << s.gamma_start << '\n'
       << "gamma_end = " << s.gamma_end << '\n'
       << "spectral_weight = " << s.weights.spectral_bij << '\n'
       << "alpha = " << s.weights.alpha << '\n'
       << "beta = " << s.weights.beta << '\n'
       << "lambda = " << s.variant.lambda << '\n'
       << "mu = " << s.variant.mu << '\n'
       << "k_def = " << s.variant.k_def << '\n'
       << "exact_pi_step = " << (s.exact_pi_step ? "true" : "false") << '\n'
       << "stop_when_stable = " << (s.stop_when_stable ? "true" : "false") << '\n'
       << "k0 = " << k0 << '\n'
       << "heat_time = " << heat_time << '\n'
       << "normalize = " << (normalize ? "true" : "false") << '\n'
       << "seed = " << seed << '\n'
       << "threads = " << max_threads() << '\n';
    os.precision(prec);
}

void apply_variant(RunConfig& config, const WeightOverrides& overrides)
{
    const Variant kind = parse_variant(config.energy);
    config.solver.variant = VariantParams::defaults(kind);
    config.solver.weights = EnergyWeights::for_variant(kind);
    if (overrides.spectral_bij) config.solver.weights.spectral_bij = *overrides.spectral_bij;
    if (overrides.alpha) config.solver.weights.alpha = *overrides.alpha;
    if (overrides.beta) config.solver.weights.beta = *overrides.beta;
    if (overrides.lambda) config.solver.variant.lambda = *overrides.lambda;
    if (overrides.mu) config.solver.variant.mu = *overrides.mu;
    if (overrides.k_def) config.solver.variant.k_def = *overrides.k_def;
}

int cmd_refine(const RunConfig& config, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        config.validate();
        if (config.print_config) config.write(out);

        const int k_basis = config.solver.k_final;
        const Shape s1 = Shape::build(load_mesh(config.src, config.normalize), k_basis);
        const Shape s2 = Shape::build(load_mesh(config.tgt, config.normalize), k_basis);

        std::array<PointwiseMap, 2> init;
        if (!config.landmarks.empty()) {
            const LandmarkPairs lm = load_landmarks(config.landmarks);
            const int k0 = config.k0 > 0 ? config.k0 : static_cast<int>(lm.size());
            init = landmark_init(lm, s1, s2, k0, config.heat_time).pi;
        } else {
            init = {load_pointwise_map(config.init_12, s2.n()), load_pointwise_map(config.init_21, s1.n())};
        }

        std::optional<GroundTruth> gt;
        if (!config.gt.empty()) {
            gt = load_ground_truth(config.gt);
            check_ground_truth(*gt, s1.n(), s2.n());
        }

        fs::create_directories(config.out);
        RefineResult result;
        try {
            result = refine(init, s1, s2, config.solver);
        } catch (const RefineFailure& e) {
            write_state(e.state(), config.out);
            err << "state before the failure written to " << config.out.string() << '\n';
            throw;
        }

        write_state(result.state, config.out);
        {
            std::ofstream trace(config.out / "energy_trace.csv");
            if (!trace) throw std::ios_base::failure("cannot write energy_trace.csv");
            result.trace.write_csv(trace);
        }
        if (config.print_config) {
            std::ofstream cfg(config.out / "config.txt");
            config.write(cfg);
        }
        out << "iterations " << result.state.iteration << ", final energy ";
        if (!result.trace.rows.empty()) {
            out << std::setprecision(std::numeric_limits<double>::max_digits10)
                << result.trace.rows.back().energy.e_total;
        }
        out << '\n';

        if (gt) {
            EvalOptions opts;
            opts.conformal = config.conformal;
            const MetricsReport report = evaluate(result.state.pi[0], &result.state.pi[1], s1, s2, *gt, opts);
            print_metrics(report, config.conformal, out);
            std::ofstream csv(config.out / "metrics.csv");
            print_metrics(report, config.conformal, csv);
        }
        return int(kOk);
    });
}

int cmd_eval(const EvalConfig& config, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        require_file(config.src, "source mesh");
        require_file(config.tgt, "target mesh");
        require_file(config.map_12, "map");
        require_file(config.gt, "ground-truth");
        if (!config.map_21.empty()) require_file(config.map_21, "map");

        const Shape s1 = Shape::build(load_mesh(config.src, config.normalize), 0);
        const Shape s2 = Shape::build(load_mesh(config.tgt, config.normalize), 0);
        const PointwiseMap pi_12 = load_pointwise_map(config.map_12, s2.n());
        if (pi_12.n_src() != s1.n()) {
            throw DimensionError(
                config.map_12.string() + " has " + std::to_string(pi_12.n_src()) + " entries, source mesh has " +
                std::to_string(s1.n()) + " vertices");
        }
        std::optional<PointwiseMap> pi_21;
        if (!config.map_21.empty()) {
            pi_21 = load_pointwise_map(config.map_21, s1.n());
            if (pi_21->n_src() != s2.n()) {
                throw DimensionError(
                    config.map_21.string() + " has " + std::to_string(pi_21->n_src()) +
                    " entries, target mesh has " + std::to_string(s2.n()) + " vertices");
            }
        }
        const GroundTruth gt = load_ground_truth(config.gt);
        check_ground_truth(gt, s1.n(), s2.n());

        EvalOptions opts;
        opts.conformal = config.conformal;
        const MetricsReport report = evaluate(pi_12, pi_21 ? &*pi_21 : nullptr, s1, s2, gt, opts);
        print_metrics(report, config.conformal, out);
        if (!config.out.empty()) {
            std::ofstream csv(config.out);
            if (!csv) throw std::ios_base::failure("cannot write " + config.out.string());
            print_metrics(report, config.conformal, csv);
        }
        return int(kOk);
    });
}

int cmd_synth(const SynthConfig& config, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        if (config.fixture != "icosphere") throw std::invalid_argument("unknown fixture: " + config.fixture);
        if (config.subdiv < 0 || config.subdiv > 7) throw std::invalid_argument("--subdiv must be in [0, 7]");
        if (!(config.jitter >= 0.0)) throw std::invalid_argument("--jitter must be >= 0");

        const TriMesh sphere = icosphere(config.subdiv);
        const TriMesh moved = jitter(sphere, config.jitter, config.seed);
        const std::vector<int> picks = farthest_point_sampling(sphere, config.landmarks);

        fs::create_directories(config.out);
        save_off(sphere, config.out / "mesh_1.off");
        save_off(moved, config.out / "mesh_2.off");
        save_pointwise_map(PointwiseMap::identity(sphere.n_vertices()), config.out / "gt.txt");
        LandmarkPairs lm;
        for (int v : picks) lm.emplace_back(v, v);
        const std::string lm_name = "lm" + std::to_string(config.landmarks) + ".txt";
        save_landmarks(lm, config.out / lm_name);

        out << "wrote mesh_1.off, mesh_2.off, gt.txt, " << lm_name << " (" << sphere.n_vertices()
            << " vertices) to " << config.out.string() << '\n';
        return int(kOk);
    });
}

int cmd_inspect(const InspectConfig& config, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        require_file(config.mesh, "mesh");
        const TriMesh mesh = load_mesh(config.mesh, config.normalize);
        const Shape shape = Shape::build(mesh, config.k);
        const auto prec = out.precision(10);
        out << "vertices " << mesh.n_vertices() << '\n'
            << "faces " << mesh.n_faces() << '\n'
            << "edges " << mesh.edges().size() << '\n'
            << "area " << mesh.total_area() << '\n'
            << "bbox_diagonal " << mesh.bbox_diagonal() << '\n'
            << "isolated_vertices " << mesh.isolated_vertices().size() << '\n';
        if (config.k > 0) {
            out << "eigenvalues";
            for (int i = 0; i < shape.basis.k(); ++i) out << ' ' << shape.basis.eigenvalues(i);
            out << '\n';
        }
        out.precision(prec);
        return int(kOk);
    });
}

int cmd_batch(const BatchConfig& config, std::ostream& out, std::ostream& err)
{
    std::vector<RunConfig> runs;
    const int parsed = guarded(err, [&] {
        require_file(config.pairs, "pair list");
        if (config.jobs < 1) throw std::invalid_argument("--jobs must be >= 1");
        std::ifstream in(config.pairs);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') {
                continue;
            }
            std::istringstream ls(line);
            RunConfig run = config.base;
            std::string src, tgt, lm, dir, gt;
            if (!(ls >> src >> tgt >> lm >> dir)) {
                throw std::invalid_argument(
                    config.pairs.string() + ": line " + std::to_string(line_no) + " needs src tgt landmarks out");
            }
            ls >> gt;
            const fs::path base = config.pairs.parent_path();
            const auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
            run.src = resolve(src);
            run.tgt = resolve(tgt);
            run.landmarks = resolve(lm);
            run.init_12.clear();
            run.init_21.clear();
            run.out = resolve(dir);
            run.gt = gt.empty() ? fs::path() : resolve(gt);
            runs.push_back(std::move(run));
        }
        return int(kOk);
    });
    if (parsed != kOk) return parsed;

    std::vector<std::string> logs(runs.size());
    std::vector<int> codes(runs.size(), kOk);
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < runs.size(); i = next++) {
            std::ostringstream o, e;
            codes[i] = cmd_refine(runs[i], o, e);
            logs[i] = o.str() + e.str();
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min<int>(config.jobs, static_cast<int>(runs.size()));
    for (int t = 1; t < n_workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    int worst = kOk;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        out << "[" << i + 1 << "/" << runs.size() << "] " << runs[i].src.filename().string() << " -> "
            << runs[i].tgt.filename().string() << ": exit " << codes[i] << '\n'
            << logs[i];
        worst = std::max(worst, codes[i]);
    }
    return worst;
}

} // namespace smoothmatch::cli
