#include "pcar/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pcar/grid_index.hpp"
#include "pcar/text_io.hpp"

namespace pcar {

namespace {

// Squared NN distance from every point of `from` into `to`.
std::vector<double> nn_sq_dists(const PointCloud& from, const PointCloud& to) {
  GridIndex index(to);
  std::vector<double> d(from.size());
  for (std::size_t i = 0; i < from.size(); ++i) {
    d[i] = index.nearest_sq_dist(from.positions[i]);
  }
  return d;
}

double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double maximum(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, x);
  return m;
}

double psnr_from_mse(double mse, double peak) {
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(3.0 * peak * peak / mse);
}

void check_inputs(const PointCloud& test, const PointCloud& ref, double peak) {
  if (test.empty() || ref.empty()) {
    throw std::invalid_argument("metrics: empty point cloud");
  }
  if (!(peak > 0.0)) throw std::invalid_argument("metrics: peak must be positive");
}

}  // namespace

D1Result d1_psnr(const PointCloud& test, const PointCloud& ref, double peak) {
  check_inputs(test, ref, peak);
  D1Result r;
  r.mse_ab = mean(nn_sq_dists(test, ref));
  r.mse_ba = mean(nn_sq_dists(ref, test));
  r.psnr = psnr_from_mse(std::max(r.mse_ab, r.mse_ba), peak);
  return r;
}

double hausdorff_psnr(const PointCloud& test, const PointCloud& ref, double peak) {
  check_inputs(test, ref, peak);
  const double worst = std::max(maximum(nn_sq_dists(test, ref)),
                                maximum(nn_sq_dists(ref, test)));
  return psnr_from_mse(worst, peak);
}

MetricsReport evaluate_clouds(const std::string& name, const PointCloud& test,
                              const PointCloud& ref, double peak, double rate_bpp) {
  check_inputs(test, ref, peak);
  const std::vector<double> ab = nn_sq_dists(test, ref);
  const std::vector<double> ba = nn_sq_dists(ref, test);

  MetricsReport r;
  r.name = name;
  r.rate_bpp = rate_bpp;
  r.mse_ab = mean(ab);
  r.mse_ba = mean(ba);
  r.psnr_d1 = psnr_from_mse(std::max(r.mse_ab, r.mse_ba), peak);
  r.psnr_hausdorff = psnr_from_mse(std::max(maximum(ab), maximum(ba)), peak);
  double chamfer = 0.0;
  for (double d : ab) chamfer += d;
  for (double d : ba) chamfer += d;
  r.chamfer = chamfer;
  return r;
}

std::string metrics_csv(std::span<const MetricsReport> reports) {
  std::string out = "name,rate_bpp,mse_ab,mse_ba,psnr_d1,psnr_hausdorff,chamfer\n";
  for (const MetricsReport& r : reports) {
    if (r.name.find(',') != std::string::npos) {
      throw std::invalid_argument("metrics_csv: name contains a comma: " + r.name);
    }
    out += r.name;
    out += ',' + format_double(r.rate_bpp);
    out += ',' + format_double(r.mse_ab);
    out += ',' + format_double(r.mse_ba);
    out += ',' + format_double(r.psnr_d1);
    out += ',' + format_double(r.psnr_hausdorff);
    out += ',' + format_double(r.chamfer);
    out += '\n';
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path,
                       std::span<const MetricsReport> reports) {
  write_text_atomic(path, metrics_csv(reports));
}

std::vector<MetricsReport> read_metrics_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<MetricsReport> reports;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != "name,rate_bpp,mse_ab,mse_ba,psnr_d1,psnr_hausdorff,chamfer") {
        throw std::runtime_error(path.string() + ": unexpected metrics CSV header");
      }
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    if (fields.size() != 7) {
      throw std::runtime_error(path.string() + ": line " + std::to_string(line_no) +
                               ": expected 7 fields");
    }
    MetricsReport r;
    r.name = std::string(fields[0]);
    r.rate_bpp = parse_double(fields[1], "rate_bpp");
    r.mse_ab = parse_double(fields[2], "mse_ab");
    r.mse_ba = parse_double(fields[3], "mse_ba");
    r.psnr_d1 = parse_double(fields[4], "psnr_d1");
    r.psnr_hausdorff = parse_double(fields[5], "psnr_hausdorff");
    r.chamfer = parse_double(fields[6], "chamfer");
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace pcar
