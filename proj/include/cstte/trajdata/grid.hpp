#pragma once

#include <cstddef>
#include <cstdint>

namespace cstte::traj {

inline constexpr double kMetersPerDegree = 111320.0;

/// Square-cell grid over a lon/lat box. Degrees become meters with an
/// equirectangular projection at the box's mid-latitude.
class GridSpec {
 public:
  GridSpec() = default;
  /// Throws ConfigError for an empty box or non-positive cell size.
  GridSpec(double min_lon, double min_lat, double max_lon, double max_lat,
           double cell_size_m = 250.0);

  double min_lon() const { return min_lon_; }
  double min_lat() const { return min_lat_; }
  double max_lon() const { return max_lon_; }
  double max_lat() const { return max_lat_; }
  double cell_size() const { return cell_; }
  std::size_t n_cols() const { return n_cols_; }
  std::size_t n_rows() const { return n_rows_; }
  std::size_t n_locations() const { return n_cols_ * n_rows_; }
  double meters_per_deg_lon() const { return m_lon_; }
  double meters_per_deg_lat() const { return kMetersPerDegree; }

  /// row·n_cols + col; points outside the box clamp to the border cell.
  std::uint32_t assign(double lon, double lat) const;
  /// Centre of a cell, in degrees.
  void cell_center(std::uint32_t index, double& lon, double& lat) const;

 private:
  double min_lon_ = 0, min_lat_ = 0, max_lon_ = 0, max_lat_ = 0, cell_ = 250.0;
  double m_lon_ = kMetersPerDegree;
  std::size_t n_cols_ = 0, n_rows_ = 0;
};

}  // namespace cstte::traj
