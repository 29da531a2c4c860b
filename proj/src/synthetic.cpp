#include "s4tok/synthetic.hpp"

#include <array>
#include <cmath>

#include <Eigen/Geometry>

#include "s4tok/error.hpp"
#include "s4tok/rng.hpp"

namespace s4tok::synthetic {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Axis-aligned rectangle: origin + u·a + v·b, (u, v) ∈ [0,1]².
struct Rect {
  Vec3 origin;
  Vec3 a;
  Vec3 b;
  Index label;
  double area() const { return a.cross(b).norm(); }
};

struct Sphere {
  Vec3 center;
  double radius;
  Index label;
  double area() const { return 4.0 * kPi * radius * radius; }
};

Vec3
sample_rect(const Rect& r, Rng& rng)
{
  const double u = uniform_unit(rng);
  const double v = uniform_unit(rng);
  return r.origin + u * r.a + v * r.b;
}

Vec3
sample_sphere(const Sphere& s, Rng& rng)
{
  const double z = 2.0 * uniform_unit(rng) - 1.0;
  const double phi = 2.0 * kPi * uniform_unit(rng);
  const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
  return s.center + s.radius * Vec3(rho * std::cos(phi), rho * std::sin(phi), z);
}

Scene
assemble(const std::vector<Rect>& rects,
         const std::vector<Sphere>& spheres,
         Index points,
         double noise,
         std::uint64_t seed)
{
  if (points < 1)
    throw InvalidArgument("synthetic scene needs at least one point");
  std::vector<double> areas;
  for (const auto& r : rects)
    areas.push_back(r.area());
  for (const auto& s : spheres)
    areas.push_back(s.area());

  Rng rng(seed);
  Scene scene;
  scene.cloud.positions.resize(points, 3);
  scene.cloud.attributes.resize(points, 0);
  scene.labels.resize(static_cast<std::size_t>(points));
  for (Index i = 0; i < points; ++i) {
    const auto which = static_cast<std::size_t>(draw_multinomial(areas, rng));
    Vec3 p;
    Index label;
    if (which < rects.size()) {
      p = sample_rect(rects[which], rng);
      label = rects[which].label;
    } else {
      const auto& s = spheres[which - rects.size()];
      p = sample_sphere(s, rng);
      label = s.label;
    }
    if (noise > 0.0)
      for (int d = 0; d < 3; ++d)
        p[d] += noise * standard_normal(rng);
    scene.cloud.positions.row(i) = p.transpose();
    scene.labels[i] = label;
  }
  return scene;
}

} // namespace

Scene
make_scene(Index points, double noise, std::uint64_t seed)
{
  std::vector<Rect> rects{
    { Vec3(0, 0, 0), Vec3(4, 0, 0), Vec3(0, 4, 0), 0 },    // floor
    { Vec3(0, 0, 0), Vec3(0, 4, 0), Vec3(0, 0, 2.5), 1 },  // wall
  };
  // Box standing on the floor, one label per visible face.
  const Vec3 lo(2.2, 0.8, 0.0);
  const Vec3 size(1.0, 0.8, 0.7);
  rects.push_back({ Vec3(lo.x(), lo.y(), size.z()), Vec3(size.x(), 0, 0), Vec3(0, size.y(), 0), 2 });
  rects.push_back({ lo, Vec3(size.x(), 0, 0), Vec3(0, 0, size.z()), 3 });
  rects.push_back({ Vec3(lo.x(), lo.y() + size.y(), 0), Vec3(size.x(), 0, 0), Vec3(0, 0, size.z()), 4 });
  rects.push_back({ lo, Vec3(0, size.y(), 0), Vec3(0, 0, size.z()), 5 });
  rects.push_back({ Vec3(lo.x() + size.x(), lo.y(), 0), Vec3(0, size.y(), 0), Vec3(0, 0, size.z()), 6 });
  const std::vector<Sphere> spheres{ { Vec3(1.3, 2.8, 0.6), 0.55, 7 } };
  return assemble(rects, spheres, points, noise, seed);
}

Scene
make_perpendicular_planes(Index points, double noise, std::uint64_t seed)
{
  const std::vector<Rect> rects{
    { Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 2, 0), 0 },
    { Vec3(0, 0, 0), Vec3(0, 2, 0), Vec3(0, 0, 2), 1 },
  };
  return assemble(rects, {}, points, noise, seed);
}

Scene
make_parallel_planes(Index points, double gap, std::uint64_t seed)
{
  const std::vector<Rect> rects{
    { Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), 0 },
    { Vec3(0, 0, gap), Vec3(1, 0, 0), Vec3(0, 1, 0), 1 },
  };
  return assemble(rects, {}, points, 0.0, seed);
}

PointCloud
make_uniform_cube(Index points, std::uint64_t seed)
{
  Rng rng(seed);
  Points p(points, 3);
  for (Index i = 0; i < points; ++i)
    for (int d = 0; d < 3; ++d)
      p(i, d) = uniform_unit(rng);
  return PointCloud::from_positions(std::move(p));
}

} // namespace s4tok::synthetic
