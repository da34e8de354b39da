#pragma once

#include <smoothmatch/mesh.hpp>

#include <cstdint>
#include <vector>

namespace smoothmatch {

/// Loop-subdivided icosahedron projected to the unit sphere: 10 * 4^s + 2 vertices.
TriMesh icosphere(int subdivisions);

/// Flat nx x ny vertex grid in the z = 0 plane with spacing h, two triangles per cell.
TriMesh grid_patch(int nx, int ny, double h);

/// Displaces each coordinate uniformly in [-amount, amount] * bbox diagonal.
TriMesh jitter(const TriMesh& mesh, double amount, std::uint64_t seed);

/// Greedy farthest-point sampling under edge-graph geodesic distance, starting at `start`.
std::vector<int> farthest_point_sampling(const TriMesh& mesh, int count, int start = 0);

} // namespace smoothmatch
