#include "s4tok/types.hpp"

#include "s4tok/error.hpp"

namespace s4tok {

void
PointCloud::validate() const
{
  if (positions.rows() < 1)
    throw InvalidArgument("point cloud is empty");
  if (!positions.allFinite())
    throw InvalidArgument("point cloud has non-finite coordinates");
  if (attributes.cols() > 0 && attributes.rows() != positions.rows())
    throw InvalidArgument("attribute rows (" + std::to_string(attributes.rows()) +
                          ") differ from point count (" +
                          std::to_string(positions.rows()) + ")");
  if (!attribute_names.empty() &&
      static_cast<Eigen::Index>(attribute_names.size()) != attributes.cols())
    throw InvalidArgument("attribute names do not match attribute columns");
}

PointCloud
PointCloud::from_positions(Points positions)
{
  PointCloud cloud;
  cloud.positions = std::move(positions);
  cloud.attributes.resize(cloud.positions.rows(), 0);
  return cloud;
}

PointCloud
scaled(const PointCloud& cloud, double factor)
{
  PointCloud out = cloud;
  out.positions *= factor;
  return out;
}

} // namespace s4tok
