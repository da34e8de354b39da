#include <smoothmatch/energy.hpp>
#include <smoothmatch/metrics.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace smoothmatch {

namespace {

constexpr double kScale = 100.0;

std::string fmt(double v)
{
    std::ostringstream s;
    s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return s.str();
}

} // namespace

GroundTruth dense_ground_truth(const PointwiseMap& gt)
{
    GroundTruth out;
    out.reserve(gt.n_src());
    for (int p = 0; p < gt.n_src(); ++p) out.emplace_back(p, gt[p]);
    return out;
}

GroundTruth load_ground_truth(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open ground-truth file " + path.string());
    GroundTruth out;
    std::string line;
    std::size_t line_no = 0;
    int dense_index = 0;
    int columns = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::vector<long> values;
        long v = 0;
        while (ls >> v) values.push_back(v);
        if (values.empty()) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw std::invalid_argument(path.string() + ": malformed line " + std::to_string(line_no));
        }
        if (columns == 0) columns = static_cast<int>(values.size());
        if (static_cast<int>(values.size()) != columns || columns > 2) {
            throw std::invalid_argument(
                path.string() + ": inconsistent ground-truth format at line " + std::to_string(line_no));
        }
        if (columns == 1) {
            out.emplace_back(dense_index++, static_cast<int>(values[0]));
        } else {
            out.emplace_back(static_cast<int>(values[0]), static_cast<int>(values[1]));
        }
    }
    return out;
}

double accuracy_metric(
    const PointwiseMap& pi,
    const GroundTruth& gt,
    const Eigen::MatrixXd& distances,
    const std::vector<int>& sources)
{
    if (gt.empty()) throw std::invalid_argument("accuracy_metric: empty ground truth");
    std::map<int, int> row_of;
    for (std::size_t r = 0; r < sources.size(); ++r) row_of.emplace(sources[r], static_cast<int>(r));
    double sum = 0.0;
    for (const auto& [p, q] : gt) {
        if (p < 0 || p >= pi.n_src()) throw DimensionError("ground truth source index out of range");
        const auto it = row_of.find(q);
        if (it == row_of.end()) throw std::invalid_argument("accuracy_metric: missing distance row");
        sum += distances(it->second, pi[p]);
    }
    return kScale * sum / static_cast<double>(gt.size());
}

double accuracy_metric(const PointwiseMap& pi, const GroundTruth& gt, const TriMesh& target)
{
    if (gt.empty()) throw std::invalid_argument("accuracy_metric: empty ground truth");
    if (pi.n_tgt() != target.n_vertices()) throw DimensionError("accuracy_metric: target size mismatch");
    std::vector<int> sources;
    for (const auto& [p, q] : gt) sources.push_back(q);
    std::sort(sources.begin(), sources.end());
    sources.erase(std::unique(sources.begin(), sources.end()), sources.end());
    return accuracy_metric(pi, gt, geodesic_distances(target, sources), sources);
}

double roundtrip_error(const PointwiseMap& pi_fwd, const PointwiseMap& pi_bwd, const TriMesh& src)
{
    if (pi_fwd.n_src() != src.n_vertices() || pi_fwd.n_tgt() != pi_bwd.n_src() ||
        pi_bwd.n_tgt() != src.n_vertices()) {
        throw DimensionError("roundtrip_error: map sizes are inconsistent");
    }
    GroundTruth identity;
    identity.reserve(src.n_vertices());
    std::vector<int> back(src.n_vertices());
    for (int p = 0; p < src.n_vertices(); ++p) {
        identity.emplace_back(p, p);
        back[p] = pi_bwd[pi_fwd[p]];
    }
    return accuracy_metric(PointwiseMap(std::move(back), src.n_vertices()), identity, src);
}

double bijectivity_metric(
    const PointwiseMap& pi_12, const PointwiseMap& pi_21, const TriMesh& mesh1, const TriMesh& mesh2)
{
    return 0.5 * (roundtrip_error(pi_12, pi_21, mesh1) + roundtrip_error(pi_21, pi_12, mesh2));
}

double smoothness_metric(const PointwiseMap& pi, const SparseMatrix& W_src, const RowMatrix& X_tgt)
{
    return dirichlet_energy(pi.pull(X_tgt), W_src);
}

double coverage_metric(const PointwiseMap& pi, const Eigen::VectorXd& mass_tgt)
{
    if (pi.n_tgt() != mass_tgt.size()) throw DimensionError("coverage_metric: target size mismatch");
    std::vector<char> hit(pi.n_tgt(), 0);
    for (int q : pi.target_of()) hit[q] = 1;
    double covered = 0.0;
    for (int q = 0; q < pi.n_tgt(); ++q) {
        if (hit[q]) covered += mass_tgt(q);
    }
    return kScale * covered / mass_tgt.sum();
}

ConformalDistortion conformal_distortion(const PointwiseMap& pi, const TriMesh& src, const TriMesh& tgt)
{
    if (pi.n_src() != src.n_vertices() || pi.n_tgt() != tgt.n_vertices()) {
        throw DimensionError("conformal_distortion: map sizes do not match meshes");
    }
    ConformalDistortion out;
    double weighted = 0.0;
    double total_area = 0.0;
    const auto& X = src.vertices();
    const auto& Y = tgt.vertices();
    for (int f = 0; f < src.n_faces(); ++f) {
        const int a = src.faces()(f, 0), b = src.faces()(f, 1), c = src.faces()(f, 2);
        const Eigen::Vector3d e1 = (X.row(b) - X.row(a)).transpose();
        const Eigen::Vector3d e2 = (X.row(c) - X.row(a)).transpose();
        const Eigen::Vector3d normal = e1.cross(e2);
        const double area = 0.5 * normal.norm();
        if (!(area > 0.0)) continue;

        // Source triangle in its own orthonormal frame.
        const Eigen::Vector3d u = e1.normalized();
        const Eigen::Vector3d v = normal.normalized().cross(u);
        Eigen::Matrix2d E;
        E << e1.dot(u), e2.dot(u), e1.dot(v), e2.dot(v);

        Eigen::Matrix<double, 3, 2> F;
        F.col(0) = (Y.row(pi[b]) - Y.row(pi[a])).transpose();
        F.col(1) = (Y.row(pi[c]) - Y.row(pi[a])).transpose();
        const Eigen::Matrix<double, 3, 2> J = F * E.inverse();
        const Eigen::Vector2d sigma = Eigen::JacobiSVD<Eigen::Matrix<double, 3, 2>>(J).singularValues();
        if (!(sigma(0) > 0.0) || sigma(1) <= 1e-12 * sigma(0)) {
            ++out.collapsed_faces;
            continue;
        }
        weighted += area * sigma(0) / sigma(1);
        total_area += area;
    }
    out.mean = total_area > 0.0 ? weighted / total_area : std::numeric_limits<double>::quiet_NaN();
    return out;
}

std::string MetricsReport::csv_header(bool with_conformal)
{
    return with_conformal ? "accuracy,bijectivity,smoothness,coverage,conformal"
                          : "accuracy,bijectivity,smoothness,coverage";
}

std::string MetricsReport::csv_row(bool with_conformal) const
{
    std::string row = fmt(accuracy) + ',' + (bijectivity ? fmt(*bijectivity) : "n/a") + ',' +
                      fmt(smoothness) + ',' + fmt(coverage);
    if (with_conformal) row += ',' + (conformal ? fmt(*conformal) : "n/a");
    return row;
}

void MetricsReport::write_pretty(std::ostream& out) const
{
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << std::fixed << std::setprecision(2);
    out << "accuracy    " << accuracy << '\n';
    out << "bijectivity ";
    if (bijectivity) {
        out << *bijectivity << '\n';
    } else {
        out << "n/a\n";
    }
    out << "smoothness  " << smoothness << '\n';
    out << "coverage    " << coverage << " %\n";
    if (conformal) out << "conformal   " << *conformal << '\n';
    out << "(distances x100 on unit-area meshes)\n";
    out.flags(flags);
    out.precision(prec);
}

MetricsReport evaluate(
    const PointwiseMap& pi_12,
    const PointwiseMap* pi_21,
    const Shape& s1,
    const Shape& s2,
    const GroundTruth& gt_12,
    const EvalOptions& options)
{
    if (pi_12.n_src() != s1.n() || pi_12.n_tgt() != s2.n()) {
        throw DimensionError("evaluate: map 1->2 length does not match the meshes");
    }
    if (pi_21 && (pi_21->n_src() != s2.n() || pi_21->n_tgt() != s1.n())) {
        throw DimensionError("evaluate: map 2->1 length does not match the meshes");
    }
    MetricsReport report;
    report.accuracy = accuracy_metric(pi_12, gt_12, s2.mesh);
    report.smoothness = smoothness_metric(pi_12, s1.W, s2.X);
    report.coverage = coverage_metric(pi_12, s2.mass);
    if (pi_21) {
        report.bijectivity = bijectivity_metric(pi_12, *pi_21, s1.mesh, s2.mesh);
        report.smoothness = 0.5 * (report.smoothness + smoothness_metric(*pi_21, s2.W, s1.X));
        report.coverage = 0.5 * (report.coverage + coverage_metric(*pi_21, s1.mass));
    }
    if (options.conformal) report.conformal = conformal_distortion(pi_12, s1.mesh, s2.mesh).mean;
    return report;
}

} // namespace smoothmatch
