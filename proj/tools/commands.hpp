#pragma once

#include <smoothmatch/solver.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace smoothmatch::cli {

enum ExitCode : int { kOk = 0, kSolverFailure = 1, kInputError = 2 };

struct RunConfig {
    std::filesystem::path src;
    std::filesystem::path tgt;
    std::filesystem::path landmarks;
    std::filesystem::path init_12;
    std::filesystem::path init_21;
    std::filesystem::path gt;
    std::filesystem::path out = ".";
    std::string energy = "dirichlet";
    SolverConfig solver;
    int k0 = 0;            // landmark functional map size, 0 = number of landmarks
    double heat_time = 0.0;
    bool normalize = true;
    bool conformal = false;
    bool print_config = false;
    unsigned seed = 0;

    /// Checks paths and the variant tag; throws std::invalid_argument.
    void validate() const;
    void write(std::ostream& out) const;
};

/// Weight overrides collected from the command line; unset fields keep the variant defaults.
struct WeightOverrides {
    std::optional<double> spectral_bij;
    std::optional<double> alpha;
    std::optional<double> beta;
    std::optional<double> lambda;
    std::optional<double> mu;
    std::optional<int> k_def;
};

/// Variant defaults for `config.energy`, then the explicit overrides.
void apply_variant(RunConfig& config, const WeightOverrides& overrides);

struct EvalConfig {
    std::filesystem::path src;
    std::filesystem::path tgt;
    std::filesystem::path map_12;
    std::filesystem::path map_21;
    std::filesystem::path gt;
    std::filesystem::path out; // optional CSV file
    bool normalize = true;
    bool conformal = false;
};

struct SynthConfig {
    std::string fixture = "icosphere";
    int subdiv = 3;
    double jitter = 0.02;
    int landmarks = 5;
    std::uint64_t seed = 1;
    std::filesystem::path out = ".";
};

struct InspectConfig {
    std::filesystem::path mesh;
    int k = 0;
    bool normalize = true;
};

struct BatchConfig {
    std::filesystem::path pairs; // "src tgt landmarks out [gt]" per line
    RunConfig base;
    int jobs = 1;
};

int cmd_refine(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalConfig& config, std::ostream& out, std::ostream& err);
int cmd_synth(const SynthConfig& config, std::ostream& out, std::ostream& err);
int cmd_inspect(const InspectConfig& config, std::ostream& out, std::ostream& err);
int cmd_batch(const BatchConfig& config, std::ostream& out, std::ostream& err);

} // namespace smoothmatch::cli
