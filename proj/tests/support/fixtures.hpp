#pragma once

#include <smoothmatch/energy.hpp>
#include <smoothmatch/synth.hpp>

#include <Eigen/Dense>

#include <random>

namespace smtest {

using namespace smoothmatch;
using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo = 0.0, double hi = 1.0);
int uniform_int(Rng& rng, int lo, int hi); // inclusive

/// Grid patch with in-plane and normal noise; nx * ny vertices.
TriMesh random_patch(Rng& rng, int nx, int ny, double noise = 0.15);
/// Jittered, normalized icosphere.
TriMesh random_sphere(Rng& rng, int subdiv, double noise = 0.02);
/// Either of the above with at most `max_vertices` vertices, unit area.
TriMesh random_small_mesh(Rng& rng, int max_vertices);

PointwiseMap random_map(Rng& rng, int n_src, int n_tgt);
Eigen::Matrix3d random_rotation(Rng& rng);
RowMatrix random_matrix(Rng& rng, int rows, int cols, double scale = 1.0);

/// State with random maps, functional maps, Y and variant auxiliaries for basis size k.
SolverState random_state(Rng& rng, const Shape& s1, const Shape& s2, int k, Variant kind);

bool rel_close(double a, double b, double tol);

/// Dense brute-force references, written from the definitions.
namespace oracle {

/// Edge weights from corner angles (acos), clamped cotangents, half sums.
Eigen::MatrixXd cotan_weights(const TriMesh& mesh);
/// Laplacian assembled from `cotan_weights`.
Eigen::MatrixXd laplacian(const TriMesh& mesh);
Eigen::VectorXd lumped_mass(const TriMesh& mesh);
Eigen::MatrixXd map_matrix(const PointwiseMap& pi);

/// sum_{i<j} w_ij ||Y_i - Y_j||^2.
double dirichlet(const Eigen::MatrixXd& weights, const Eigen::MatrixXd& Y);
/// trace(M^T diag(mass) M).
double mass_norm(const Eigen::MatrixXd& M, const Eigen::VectorXd& mass);

double bijectivity(const SolverState& state, const Shape& s1, const Shape& s2, const EnergyWeights& w);
/// Coupled smoothness block for the variant (not multiplied by gamma).
double smoothness(
    const SolverState& state, const Shape& s1, const Shape& s2, const EnergyWeights& w, const VariantParams& v);
double total(
    const SolverState& state, const Shape& s1, const Shape& s2, const EnergyWeights& w, const VariantParams& v);

/// 1/2 sum_i sum_{j in N(i)} w_ij ||(y_i - y_j) - R_i (x_i - x_j)||^2.
double arap(const TriMesh& mesh, const std::vector<Eigen::Matrix3d>& R, const Eigen::MatrixXd& Y);

/// Index of the nearest data row by linear scan (first index on ties).
std::vector<int> nearest_rows(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& data);

/// Full Dijkstra from one vertex over edge lengths (O(n^2) selection).
Eigen::VectorXd dijkstra(const TriMesh& mesh, int source);

} // namespace oracle

} // namespace smtest
