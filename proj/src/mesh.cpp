#include <smoothmatch/mesh.hpp>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace smoothmatch {

namespace {

std::string at_line(std::size_t line)
{
    return " (line " + std::to_string(line) + ")";
}

std::string strip_comment(const std::string& line)
{
    const auto hash = line.find('#');
    return hash == std::string::npos ? line : line.substr(0, hash);
}

bool blank(const std::string& s)
{
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Reads the next non-empty, comment-free line. Returns false at EOF.
bool next_line(std::istream& in, std::string& out, std::size_t& line_no)
{
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        out = strip_comment(raw);
        if (!blank(out)) return true;
    }
    return false;
}

double cot_clamped(const Eigen::Vector3d& a, const Eigen::Vector3d& b)
{
    const double cross = a.cross(b).norm();
    const double dot = a.dot(b);
    if (cross <= 0.0) return dot >= 0.0 ? kCotangentClamp : -kCotangentClamp;
    return std::clamp(dot / cross, -kCotangentClamp, kCotangentClamp);
}

} // namespace

TriMesh::TriMesh(Vertices vertices, Faces faces)
    : m_vertices(std::move(vertices))
    , m_faces(std::move(faces))
{
    const int n = n_vertices();
    for (int f = 0; f < n_faces(); ++f) {
        const auto face = m_faces.row(f);
        for (int c = 0; c < 3; ++c) {
            if (face(c) < 0 || face(c) >= n) {
                throw MeshError(
                    "face " + std::to_string(f) + " references vertex " + std::to_string(face(c)) +
                    " outside [0, " + std::to_string(n) + ")");
            }
        }
        if (face(0) == face(1) || face(1) == face(2) || face(0) == face(2)) {
            throw MeshError("degenerate face " + std::to_string(f) + " repeats a vertex");
        }
    }
    if (!m_vertices.allFinite()) throw MeshError("non-finite vertex coordinate");
}

Eigen::VectorXd TriMesh::face_areas() const
{
    Eigen::VectorXd areas(n_faces());
    for (int f = 0; f < n_faces(); ++f) {
        const Eigen::Vector3d a = m_vertices.row(m_faces(f, 0));
        const Eigen::Vector3d b = m_vertices.row(m_faces(f, 1));
        const Eigen::Vector3d c = m_vertices.row(m_faces(f, 2));
        areas(f) = 0.5 * (b - a).cross(c - a).norm();
    }
    return areas;
}

double TriMesh::total_area() const
{
    return face_areas().sum();
}

double TriMesh::bbox_diagonal() const
{
    if (n_vertices() == 0) return 0.0;
    return (m_vertices.colwise().maxCoeff() - m_vertices.colwise().minCoeff()).norm();
}

std::vector<int> TriMesh::isolated_vertices() const
{
    std::vector<char> used(n_vertices(), 0);
    for (int f = 0; f < n_faces(); ++f) {
        for (int c = 0; c < 3; ++c) used[m_faces(f, c)] = 1;
    }
    std::vector<int> isolated;
    for (int v = 0; v < n_vertices(); ++v) {
        if (!used[v]) isolated.push_back(v);
    }
    return isolated;
}

std::vector<std::pair<int, int>> TriMesh::edges() const
{
    std::vector<std::pair<int, int>> out;
    out.reserve(3 * n_faces());
    for (int f = 0; f < n_faces(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const int a = m_faces(f, c);
            const int b = m_faces(f, (c + 1) % 3);
            out.emplace_back(std::min(a, b), std::max(a, b));
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

TriMesh TriMesh::normalized() const
{
    const Eigen::VectorXd mass = mass_matrix(*this);
    const double area = mass.sum();
    if (!(area > 0.0)) throw MeshError("cannot normalize a mesh with zero area");
    const Eigen::RowVector3d centroid = (mass.transpose() * m_vertices) / area;
    Vertices v = (m_vertices.rowwise() - centroid) / std::sqrt(area);
    return TriMesh(std::move(v), m_faces);
}

TriMesh TriMesh::with_vertices(Vertices vertices) const
{
    if (vertices.rows() != m_vertices.rows()) {
        throw DimensionError("vertex count mismatch in with_vertices");
    }
    return TriMesh(std::move(vertices), m_faces);
}

TriMesh parse_off(std::istream& in)
{
    std::size_t line_no = 0;
    std::string line;
    if (!next_line(in, line, line_no)) throw MeshError("empty OFF file");

    std::istringstream header(line);
    std::string magic;
    header >> magic;
    if (magic != "OFF") throw MeshError("missing OFF header" + at_line(line_no));

    // Counts may follow the header on the same line.
    long nv = -1, nf = -1, ne = 0;
    if (!(header >> nv >> nf)) {
        if (!next_line(in, line, line_no)) throw MeshError("missing OFF counts line");
        std::istringstream counts(line);
        if (!(counts >> nv >> nf)) throw MeshError("malformed OFF counts" + at_line(line_no));
        counts >> ne;
    }
    if (nv < 0 || nf < 0) throw MeshError("negative OFF counts" + at_line(line_no));

    Vertices vertices(nv, 3);
    for (long v = 0; v < nv; ++v) {
        if (!next_line(in, line, line_no)) throw MeshError("unexpected end of file in vertex list");
        std::istringstream ls(line);
        if (!(ls >> vertices(v, 0) >> vertices(v, 1) >> vertices(v, 2))) {
            throw MeshError("malformed vertex" + at_line(line_no));
        }
    }

    Faces faces(nf, 3);
    for (long f = 0; f < nf; ++f) {
        if (!next_line(in, line, line_no)) throw MeshError("unexpected end of file in face list");
        std::istringstream ls(line);
        int count = 0;
        if (!(ls >> count)) throw MeshError("malformed face" + at_line(line_no));
        if (count != 3) throw MeshError("non-triangular face" + at_line(line_no));
        if (!(ls >> faces(f, 0) >> faces(f, 1) >> faces(f, 2))) {
            throw MeshError("malformed face" + at_line(line_no));
        }
    }
    try {
        return TriMesh(std::move(vertices), std::move(faces));
    } catch (const MeshError& e) {
        throw MeshError(std::string("invalid OFF mesh: ") + e.what());
    }
}

TriMesh parse_obj(std::istream& in)
{
    std::vector<Eigen::RowVector3d> vertices;
    std::vector<Eigen::RowVector3i> faces;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::istringstream ls(strip_comment(raw));
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Eigen::RowVector3d p;
            if (!(ls >> p(0) >> p(1) >> p(2))) throw MeshError("malformed vertex" + at_line(line_no));
            vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string token;
            while (ls >> token) {
                // "i", "i/t", "i//n" or "i/t/n"; only the position index matters.
                const std::string head = token.substr(0, token.find('/'));
                int value = 0;
                try {
                    std::size_t used = 0;
                    value = std::stoi(head, &used);
                    if (used != head.size()) throw std::invalid_argument(head);
                } catch (const std::exception&) {
                    throw MeshError("malformed face index '" + token + "'" + at_line(line_no));
                }
                if (value == 0) throw MeshError("OBJ indices are 1-based" + at_line(line_no));
                idx.push_back(value > 0 ? value - 1 : static_cast<int>(vertices.size()) + value);
            }
            if (idx.size() != 3) throw MeshError("non-triangular face" + at_line(line_no));
            faces.emplace_back(idx[0], idx[1], idx[2]);
        }
    }
    Vertices v(vertices.size(), 3);
    for (std::size_t i = 0; i < vertices.size(); ++i) v.row(i) = vertices[i];
    Faces f(faces.size(), 3);
    for (std::size_t i = 0; i < faces.size(); ++i) f.row(i) = faces[i];
    try {
        return TriMesh(std::move(v), std::move(f));
    } catch (const MeshError& e) {
        throw MeshError(std::string("invalid OBJ mesh: ") + e.what());
    }
}

TriMesh load_mesh(const std::filesystem::path& path, bool normalize)
{
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open mesh file " + path.string());

    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });

    TriMesh mesh;
    try {
        if (ext == ".off") {
            mesh = parse_off(in);
        } else if (ext == ".obj") {
            mesh = parse_obj(in);
        } else {
            throw MeshError("unsupported mesh extension '" + ext + "'");
        }
    } catch (const MeshError& e) {
        throw MeshError(path.string() + ": " + e.what());
    }
    return normalize ? mesh.normalized() : mesh;
}

void write_off(const TriMesh& mesh, std::ostream& out)
{
    out << "OFF\n" << mesh.n_vertices() << ' ' << mesh.n_faces() << " 0\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        out << mesh.vertices()(v, 0) << ' ' << mesh.vertices()(v, 1) << ' ' << mesh.vertices()(v, 2)
            << '\n';
    }
    for (int f = 0; f < mesh.n_faces(); ++f) {
        out << "3 " << mesh.faces()(f, 0) << ' ' << mesh.faces()(f, 1) << ' ' << mesh.faces()(f, 2)
            << '\n';
    }
}

void save_off(const TriMesh& mesh, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw std::ios_base::failure("cannot write " + path.string());
    write_off(mesh, out);
}

SparseMatrix cotangent_matrix(const TriMesh& mesh)
{
    const auto& X = mesh.vertices();
    const auto& F = mesh.faces();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(12 * F.rows());
    for (int f = 0; f < F.rows(); ++f) {
        for (int c = 0; c < 3; ++c) {
            // Edge (i, j) is opposite corner k.
            const int i = F(f, (c + 1) % 3);
            const int j = F(f, (c + 2) % 3);
            const int k = F(f, c);
            const Eigen::Vector3d p = X.row(k);
            const double w =
                0.5 * cot_clamped(Eigen::Vector3d(X.row(i)) - p, Eigen::Vector3d(X.row(j)) - p);
            triplets.emplace_back(i, j, -w);
            triplets.emplace_back(j, i, -w);
            triplets.emplace_back(i, i, w);
            triplets.emplace_back(j, j, w);
        }
    }
    SparseMatrix W(mesh.n_vertices(), mesh.n_vertices());
    W.setFromTriplets(triplets.begin(), triplets.end());
    W.makeCompressed();
    return W;
}

Eigen::VectorXd mass_matrix(const TriMesh& mesh)
{
    const Eigen::VectorXd areas = mesh.face_areas();
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(mesh.n_vertices());
    for (int f = 0; f < mesh.n_faces(); ++f) {
        for (int c = 0; c < 3; ++c) mass(mesh.faces()(f, c)) += areas(f) / 3.0;
    }
    return mass;
}

} // namespace smoothmatch
