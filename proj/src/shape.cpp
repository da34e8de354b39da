#include <smoothmatch/shape.hpp>

namespace smoothmatch {

Shape Shape::build(TriMesh mesh, int k_basis, const EigenOptions& options)
{
    Shape shape;
    shape.W = cotangent_matrix(mesh);
    shape.mass = mass_matrix(mesh);
    if (k_basis > 0) shape.basis = eigenbasis(shape.W, shape.mass, k_basis, options);
    shape.X = mesh.vertices();
    shape.mesh = std::move(mesh);
    return shape;
}

} // namespace smoothmatch
