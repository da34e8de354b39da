#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace smoothmatch::cli;

namespace {

void add_solver_flags(CLI::App* cmd, RunConfig& run, WeightOverrides& w)
{
    auto& s = run.solver;
    cmd->add_option("--energy", run.energy, "Smoothness variant")
        ->check(CLI::IsMember({"dirichlet", "nicp", "arap", "shells", "rhm"}))
        ->capture_default_str();
    cmd->add_option("--k-init", s.k_init, "Initial spectral basis size")->capture_default_str();
    cmd->add_option("--k-final", s.k_final, "Final spectral basis size")->capture_default_str();
    cmd->add_option("--n-outer", s.n_outer, "Outer iterations")->capture_default_str();
    cmd->add_option("--gamma-start", s.gamma_start, "Smoothness weight at the first iteration")
        ->capture_default_str();
    cmd->add_option("--gamma-end", s.gamma_end, "Smoothness weight at the last iteration")->capture_default_str();
    cmd->add_option("--spectral-weight", w.spectral_bij, "Weight of the spectral bijectivity term (default 1)");
    cmd->add_option("--alpha", w.alpha, "Functional/pointwise coupling weight (default 0.1)");
    cmd->add_option("--beta", w.beta, "Spatial coupling weight (default depends on --energy)");
    cmd->add_option("--lambda", w.lambda, "ARAP / shells stiffness (default 1)");
    cmd->add_option("--mu", w.mu, "RHM reverse-map weight (default 1e4)");
    cmd->add_option("--k-def", w.k_def, "Shells deformation basis size (default: current K)");
    cmd->add_option("--k0", run.k0, "Landmark functional map size (default: number of landmarks)");
    cmd->add_option("--heat-time", run.heat_time, "Diffuse landmark deltas before fitting")->capture_default_str();
    cmd->add_flag("--exact-pi-step", s.exact_pi_step, "Include the spectral term in the pointwise update");
    cmd->add_flag(
        "--no-early-stop{false}", s.stop_when_stable, "Run every outer iteration even when the maps are stable");
    cmd->add_flag("--no-normalize{false}", run.normalize, "Keep input scale (default rescales to unit area)");
    cmd->add_flag("--conformal", run.conformal, "Add conformal distortion to the metrics");
    cmd->add_flag("--print-config", run.print_config, "Print the effective configuration");
    cmd->add_option("--seed", run.seed, "Recorded in the configuration; the solver is deterministic");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Refine and evaluate dense correspondences between triangle meshes"};
    app.require_subcommand(1);

    RunConfig run;
    WeightOverrides weights;
    auto* refine = app.add_subcommand("refine", "Refine an initial map pair");
    refine->add_option("--src", run.src, "Source mesh (.off/.obj)")->required();
    refine->add_option("--tgt", run.tgt, "Target mesh (.off/.obj)")->required();
    auto* lm = refine->add_option("--landmarks", run.landmarks, "Landmark pairs, \"src tgt\" per line");
    auto* i12 = refine->add_option("--init-12", run.init_12, "Initial map 1 -> 2");
    auto* i21 = refine->add_option("--init-21", run.init_21, "Initial map 2 -> 1");
    lm->excludes(i12)->excludes(i21);
    refine->add_option("--gt", run.gt, "Ground truth for the 1 -> 2 map");
    refine->add_option("--out", run.out, "Output directory")->capture_default_str();
    add_solver_flags(refine, run, weights);

    EvalConfig eval;
    auto* eval_cmd = app.add_subcommand("eval", "Score maps against ground truth");
    eval_cmd->add_option("--src", eval.src, "Source mesh")->required();
    eval_cmd->add_option("--tgt", eval.tgt, "Target mesh")->required();
    eval_cmd->add_option("--map-12", eval.map_12, "Map 1 -> 2")->required();
    eval_cmd->add_option("--map-21", eval.map_21, "Map 2 -> 1 (enables bijectivity)");
    eval_cmd->add_option("--gt", eval.gt, "Ground truth for the 1 -> 2 map")->required();
    eval_cmd->add_option("--out", eval.out, "Also write the CSV here");
    eval_cmd->add_flag("--conformal", eval.conformal, "Add conformal distortion column");
    eval_cmd->add_flag("--no-normalize{false}", eval.normalize, "Keep input scale");

    SynthConfig synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a test fixture");
    synth_cmd->add_option("fixture", synth.fixture, "Fixture name (icosphere)")->capture_default_str();
    synth_cmd->add_option("--subdiv", synth.subdiv, "Subdivision level")->capture_default_str();
    synth_cmd->add_option("--jitter", synth.jitter, "Noise amplitude, fraction of bbox diagonal")
        ->capture_default_str();
    synth_cmd->add_option("--landmarks", synth.landmarks, "Number of landmarks")->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "Noise seed")->capture_default_str();
    synth_cmd->add_option("--out", synth.out, "Output directory")->capture_default_str();

    InspectConfig inspect;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print mesh statistics and spectrum");
    inspect_cmd->add_option("mesh", inspect.mesh, "Mesh file")->required();
    inspect_cmd->add_option("--k", inspect.k, "Number of eigenvalues to print")->capture_default_str();
    inspect_cmd->add_flag("--no-normalize{false}", inspect.normalize, "Keep input scale");

    BatchConfig batch;
    WeightOverrides batch_weights;
    auto* batch_cmd = app.add_subcommand("batch", "Refine every pair of a list");
    batch_cmd->add_option("--pairs", batch.pairs, "\"src tgt landmarks out [gt]\" per line")->required();
    batch_cmd->add_option("--jobs", batch.jobs, "Pairs refined concurrently")->capture_default_str();
    add_solver_flags(batch_cmd, batch.base, batch_weights);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*refine) {
            apply_variant(run, weights);
            return cmd_refine(run, std::cout, std::cerr);
        }
        if (*eval_cmd) return cmd_eval(eval, std::cout, std::cerr);
        if (*synth_cmd) return cmd_synth(synth, std::cout, std::cerr);
        if (*inspect_cmd) return cmd_inspect(inspect, std::cout, std::cerr);
        if (*batch_cmd) {
            apply_variant(batch.base, batch_weights);
            return cmd_batch(batch, std::cout, std::cerr);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}
