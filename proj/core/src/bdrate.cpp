#include "pcar/bdrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "pcar/text_io.hpp"

namespace pcar {

namespace {

constexpr int kMaxDegree = 3;

struct FittedCurve {
  double shift = 0.0;  // PSNR centering, for conditioning
  std::array<double, kMaxDegree + 1> c{};
  double lo = 0.0;
  double hi = 0.0;
};

std::vector<RateDistortionPoint> validated(std::span<const RateDistortionPoint> pts,
                                           const char* label) {
  const std::string who = std::string("bd_rate: ") + label + " curve ";
  if (pts.size() < 3) throw std::invalid_argument(who + "needs at least 3 points");
  std::vector<RateDistortionPoint> v(pts.begin(), pts.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.rate_bpp < b.rate_bpp;
  });
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i].rate_bpp > 0.0) || !std::isfinite(v[i].rate_bpp) ||
        !std::isfinite(v[i].psnr)) {
      throw std::invalid_argument(who + "has a non-positive or non-finite point");
    }
    if (i > 0 && !(v[i].rate_bpp > v[i - 1].rate_bpp && v[i].psnr > v[i - 1].psnr)) {
      throw std::invalid_argument(who + "must be strictly monotone in rate and PSNR");
    }
  }
  return v;
}

// Least-squares fit of log10(rate) as a polynomial in centered PSNR, via
// the normal equations; the systems are at most 4x4.
FittedCurve fit_curve(const std::vector<RateDistortionPoint>& pts) {
  const std::size_t n = pts.size();
  const int degree = std::min<int>(kMaxDegree, static_cast<int>(n) - 1);
  const int m = degree + 1;

  FittedCurve f;
  f.lo = pts.front().psnr;
  f.hi = pts.back().psnr;
  for (const auto& p : pts) f.shift += p.psnr;
  f.shift /= static_cast<double>(n);

  double a[kMaxDegree + 1][kMaxDegree + 2] = {};  // augmented [M | rhs]
  for (const auto& p : pts) {
    const double x = p.psnr - f.shift;
    const double y = std::log10(p.rate_bpp);
    double xi = 1.0;
    std::array<double, kMaxDegree + 1> basis{};
    for (int k = 0; k < m; ++k) {
      basis[k] = xi;
      xi *= x;
    }
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) a[r][c] += basis[r] * basis[c];
      a[r][m] += basis[r] * y;
    }
  }

  for (int col = 0; col < m; ++col) {
    int pivot = col;
    for (int r = col + 1; r < m; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (std::abs(a[pivot][col]) < 1e-300) {
      throw std::invalid_argument("bd_rate: degenerate curve fit");
    }
    if (pivot != col) std::swap(a[pivot], a[col]);
    for (int r = 0; r < m; ++r) {
      if (r == col) continue;
      const double factor = a[r][col] / a[col][col];
      for (int c = col; c <= m; ++c) a[r][c] -= factor * a[col][c];
    }
  }
  for (int k = 0; k < m; ++k) f.c[static_cast<std::size_t>(k)] = a[k][m] / a[k][k];
  return f;
}

double integrate(const FittedCurve& f, double lo, double hi) {
  const double a = lo - f.shift;
  const double b = hi - f.shift;
  double sum = 0.0;
  double pa = a;
  double pb = b;
  for (int k = 0; k <= kMaxDegree; ++k) {
    sum += f.c[static_cast<std::size_t>(k)] * (pb - pa) / (k + 1);
    pa *= a;
    pb *= b;
  }
  return sum;
}

}  // namespace

double bd_rate(std::span<const RateDistortionPoint> anchor,
               std::span<const RateDistortionPoint> test) {
  const auto va = validated(anchor, "anchor");
  const auto vt = validated(test, "test");
  const FittedCurve fa = fit_curve(va);
  const FittedCurve ft = fit_curve(vt);

  const double lo = std::max(fa.lo, ft.lo);
  const double hi = std::min(fa.hi, ft.hi);
  if (!(lo < hi)) {
    throw std::invalid_argument("bd_rate: PSNR ranges do not overlap");
  }
  const double delta = (integrate(ft, lo, hi) - integrate(fa, lo, hi)) / (hi - lo);
  return (std::pow(10.0, delta) - 1.0) * 100.0;
}

std::vector<RateDistortionPoint> read_rd_csv(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        fields.emplace_back(line.substr(start, i - start));
        start = i + 1;
      }
    }
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw std::runtime_error(path.string() + ": empty rate CSV");

  auto numeric = [](const std::string& s) {
    if (s.empty()) return false;
    try {
      parse_double(s, "field");
      return true;
    } catch (const std::exception&) {
      return false;
    }
  };

  std::size_t rate_col = 0;
  std::size_t psnr_col = 1;
  std::size_t first_row = 0;
  if (!numeric(rows[0][0])) {  // header
    rate_col = psnr_col = rows[0].size();
    for (std::size_t i = 0; i < rows[0].size(); ++i) {
      if (rows[0][i] == "rate_bpp" || rows[0][i] == "rate") rate_col = i;
      if (rows[0][i] == "psnr" || rows[0][i] == "psnr_d1") psnr_col = i;
    }
    if (rate_col >= rows[0].size() || psnr_col >= rows[0].size()) {
      throw std::runtime_error(path.string() +
                               ": header lacks rate_bpp/psnr columns");
    }
    first_row = 1;
  }

  std::vector<RateDistortionPoint> pts;
  for (std::size_t r = first_row; r < rows.size(); ++r) {
    if (rows[r].size() <= std::max(rate_col, psnr_col)) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(r + 1) +
                               " has too few fields");
    }
    pts.push_back({parse_double(rows[r][rate_col], "rate_bpp"),
                   parse_double(rows[r][psnr_col], "psnr")});
  }
  return pts;
}

}  // namespace pcar
