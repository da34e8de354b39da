#pragma once

#include <smoothmatch/shape.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

namespace smoothmatch {

/// Ground truth for a subset of source vertices: (source vertex, target vertex).
using GroundTruth = std::vector<std::pair<int, int>>;

/// Dense ground truth, one target per source vertex.
GroundTruth dense_ground_truth(const PointwiseMap& gt);

/// Reads either a dense map file (one index per line) or sparse "src tgt" pairs.
GroundTruth load_ground_truth(const std::filesystem::path& path);

///
/// Map quality numbers. Distances are reported x100 (meshes are expected to be
/// unit-area); `bijectivity` and `conformal` are absent when not computed.
///
struct MetricsReport {
    double accuracy = 0.0;
    std::optional<double> bijectivity;
    double smoothness = 0.0;
    double coverage = 0.0;
    std::optional<double> conformal;

    static std::string csv_header(bool with_conformal);
    std::string csv_row(bool with_conformal) const;
    void write_pretty(std::ostream& out) const;
};

/// 100 x mean geodesic distance (on the target) between pi(p) and gt(p).
double accuracy_metric(const PointwiseMap& pi, const GroundTruth& gt, const TriMesh& target);

/// Same, with precomputed distances: rows indexed like `sources` (target vertices).
double accuracy_metric(
    const PointwiseMap& pi,
    const GroundTruth& gt,
    const Eigen::MatrixXd& distances,
    const std::vector<int>& sources);

/// 100 x mean over p of d_src(p, pi_bwd(pi_fwd(p))).
double roundtrip_error(const PointwiseMap& pi_fwd, const PointwiseMap& pi_bwd, const TriMesh& src);

/// Mean of the two round-trip errors 1 -> 2 -> 1 and 2 -> 1 -> 2.
double bijectivity_metric(
    const PointwiseMap& pi_12, const PointwiseMap& pi_21, const TriMesh& mesh1, const TriMesh& mesh2);

/// Dirichlet energy of Pi X_tgt on the source.
double smoothness_metric(const PointwiseMap& pi, const SparseMatrix& W_src, const RowMatrix& X_tgt);

/// 100 x area of the image vertices / total target area.
double coverage_metric(const PointwiseMap& pi, const Eigen::VectorXd& mass_tgt);

struct ConformalDistortion {
    double mean = 1.0;       // area-weighted mean of sigma_max / sigma_min
    int collapsed_faces = 0; // faces whose image has (near) zero area, excluded from the mean
};

/// Per-face dilatation of the piecewise-affine map induced by pi.
ConformalDistortion conformal_distortion(const PointwiseMap& pi, const TriMesh& src, const TriMesh& tgt);

struct EvalOptions {
    bool conformal = false;
};

/// All metrics for a map pair (pi_21 optional) against ground truth for the 1 -> 2 map.
MetricsReport evaluate(
    const PointwiseMap& pi_12,
    const PointwiseMap* pi_21,
    const Shape& s1,
    const Shape& s2,
    const GroundTruth& gt_12,
    const EvalOptions& options = {});

} // namespace smoothmatch
