#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pcar/point_cloud.hpp"

namespace pcar {

inline constexpr double kDefaultPeak = 1023.0;  // 10-bit voxel grid

struct D1Result {
  double mse_ab = 0.0;  // mean squared NN distance, test -> ref
  double mse_ba = 0.0;  // ref -> test
  double psnr = 0.0;    // 10*log10(3*peak^2 / max(mse_ab, mse_ba)); +inf when equal
};

D1Result d1_psnr(const PointCloud& test, const PointCloud& ref,
                 double peak = kDefaultPeak);

// Same PSNR form with the worst-case squared NN distance over both
// directions in place of the mean.
double hausdorff_psnr(const PointCloud& test, const PointCloud& ref,
                      double peak = kDefaultPeak);

struct MetricsReport {
  std::string name;
  double rate_bpp = 0.0;
  double mse_ab = 0.0;
  double mse_ba = 0.0;
  double psnr_d1 = 0.0;
  double psnr_hausdorff = 0.0;
  double chamfer = 0.0;
};

// One pass over the NN distances feeds all fields.
MetricsReport evaluate_clouds(const std::string& name, const PointCloud& test,
                              const PointCloud& ref, double peak = kDefaultPeak,
                              double rate_bpp = 0.0);

// Header + one row per report; infinities appear as the string "inf".
std::string metrics_csv(std::span<const MetricsReport> reports);
void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const MetricsReport> reports);
std::vector<MetricsReport> read_metrics_csv(const std::filesystem::path& path);

}  // namespace pcar
