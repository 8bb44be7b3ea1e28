#pragma once

#include <filesystem>
#include <span>
#include <vector>

namespace pcar {

struct RateDistortionPoint {
  double rate_bpp = 0.0;
  double psnr = 0.0;
};

// Bjontegaard delta rate in percent; negative means the test curve needs
// less rate for the same quality. Each curve needs >= 3 points with
// positive rates and PSNR strictly increasing in rate; curves whose PSNR
// ranges do not overlap are rejected. log10(rate) is fitted as a polynomial
// in PSNR of degree min(3, points-1) and integrated exactly over the
// overlap.
double bd_rate(std::span<const RateDistortionPoint> anchor,
               std::span<const RateDistortionPoint> test);

// Rate/PSNR curve from CSV. Accepts either a bare "rate,psnr"-per-line file
// (optional "rate_bpp,psnr" header) or a metrics CSV, from which rate_bpp
// and psnr_d1 are taken.
std::vector<RateDistortionPoint> read_rd_csv(const std::filesystem::path& path);

}  // namespace pcar
