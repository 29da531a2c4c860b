#pragma once

#include <cstdint>
#include <vector>

#include "s4tok/types.hpp"

namespace s4tok::synthetic {

/// A generated cloud with one ground-truth label per primitive.
struct Scene {
  PointCloud cloud;
  std::vector<Index> labels;
};

/// Desk-scale indoor stand-in: floor and wall planes, a box (one label per
/// face) and a sphere, sampled by area with Gaussian noise of standard
/// deviation `noise` (in scene units, extent about 4).
Scene make_scene(Index points, double noise, std::uint64_t seed);

/// Floor z = 0 and wall x = 0 meeting along the y axis, each 2×2.
Scene make_perpendicular_planes(Index points, double noise, std::uint64_t seed);

/// Two parallel unit squares at z = 0 and z = gap.
Scene make_parallel_planes(Index points, double gap, std::uint64_t seed);

/// Uniform samples in the unit cube.
PointCloud make_uniform_cube(Index points, std::uint64_t seed);

} // namespace s4tok::synthetic
