#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace smoothmatch {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vertices = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<int, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// Raised for malformed mesh data, including file parse failures.
class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when operand sizes do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

///
/// Triangle mesh with validated connectivity.
///
/// Construction checks that every face index is in range and that no face
/// repeats a vertex. Vertices not referenced by any face are allowed but are
/// reported by `isolated_vertices()`.
///
class TriMesh {
public:
    TriMesh() = default;
    TriMesh(Vertices vertices, Faces faces);

    const Vertices& vertices() const { return m_vertices; }
    const Faces& faces() const { return m_faces; }
    int n_vertices() const { return static_cast<int>(m_vertices.rows()); }
    int n_faces() const { return static_cast<int>(m_faces.rows()); }

    Eigen::VectorXd face_areas() const;
    double total_area() const;
    double bbox_diagonal() const;
    std::vector<int> isolated_vertices() const;

    /// Undirected edges (i < j), sorted, each listed once.
    std::vector<std::pair<int, int>> edges() const;

    /// Copy with vertices centered at the area-weighted centroid and scaled to unit area.
    TriMesh normalized() const;

    /// Copy with the given vertex positions and the same faces.
    TriMesh with_vertices(Vertices vertices) const;

private:
    Vertices m_vertices;
    Faces m_faces;
};

/// Reads an ASCII OFF or OBJ file (chosen by extension).
TriMesh load_mesh(const std::filesystem::path& path, bool normalize);

TriMesh parse_off(std::istream& in);
TriMesh parse_obj(std::istream& in);

void save_off(const TriMesh& mesh, const std::filesystem::path& path);
void write_off(const TriMesh& mesh, std::ostream& out);

/// Cotangent values are clamped to this magnitude before assembly.
inline constexpr double kCotangentClamp = 1e5;

///
/// Positive semi-definite cotangent Laplacian.
///
/// Off-diagonal entries are -w_ij with w_ij = (cot a_ij + cot b_ij) / 2 and the
/// diagonal holds sum_j w_ij, so that x^T W x = sum over edges of w_ij (x_i - x_j)^2.
///
SparseMatrix cotangent_matrix(const TriMesh& mesh);

/// Diagonal of the lumped mass matrix: a third of the incident face areas per vertex.
Eigen::VectorXd mass_matrix(const TriMesh& mesh);

/// Edge-graph shortest-path distances, one row per source. Unreachable vertices get +inf.
Eigen::MatrixXd geodesic_distances(const TriMesh& mesh, const std::vector<int>& sources);

} // namespace smoothmatch
