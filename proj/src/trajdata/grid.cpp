#include "cstte/trajdata/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cstte/error.hpp"

namespace cstte::traj {

GridSpec::GridSpec(double min_lon, double min_lat, double max_lon, double max_lat,
                   double cell_size_m)
    : min_lon_(min_lon),
      min_lat_(min_lat),
      max_lon_(max_lon),
      max_lat_(max_lat),
      cell_(cell_size_m) {
  if (!(max_lon > min_lon) || !(max_lat > min_lat)) {
    throw ConfigError("degenerate grid bounding box");
  }
  if (!(cell_size_m > 0.0)) throw ConfigError("grid cell size must be positive");
  const double mid = 0.5 * (min_lat + max_lat) * std::numbers::pi / 180.0;
  m_lon_ = kMetersPerDegree * std::cos(mid);
  n_cols_ = static_cast<std::size_t>(std::ceil((max_lon - min_lon) * m_lon_ / cell_));
  n_rows_ = static_cast<std::size_t>(std::ceil((max_lat - min_lat) * kMetersPerDegree / cell_));
  n_cols_ = std::max<std::size_t>(n_cols_, 1);
  n_rows_ = std::max<std::size_t>(n_rows_, 1);
}

std::uint32_t GridSpec::assign(double lon, double lat) const {
  if (n_cols_ == 0) throw ContractError("assign() on an unset grid");
  auto cell = [&](double offset_m, std::size_t n) {
    const double c = std::floor(offset_m / cell_);
    if (!(c > 0.0)) return std::size_t{0};  // also catches NaN
    return std::min(static_cast<std::size_t>(c), n - 1);
  };
  const auto col = cell((lon - min_lon_) * m_lon_, n_cols_);
  const auto row = cell((lat - min_lat_) * kMetersPerDegree, n_rows_);
  return static_cast<std::uint32_t>(row * n_cols_ + col);
}

void GridSpec::cell_center(std::uint32_t index, double& lon, double& lat) const {
  const auto col = index % n_cols_, row = index / n_cols_;
  lon = min_lon_ + (static_cast<double>(col) + 0.5) * cell_ / m_lon_;
  lat = min_lat_ + (static_cast<double>(row) + 0.5) * cell_ / kMetersPerDegree;
}

}  // namespace cstte::traj
