#include "focusforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "focusforge/parallel.hpp"
#include "focusforge/phase_synthesis.hpp"

namespace focusforge {
namespace {

double sum_intensity(const ComplexField& f) {
  double p = 0.0;
  for (const auto& v : f.samples.values()) p += std::norm(v);
  return p;
}

/// Field accessor in the design frame (x along rows) of an assignment.
struct FrameView {
  const ComplexField& field;
  bool transposed;

  std::size_t nx() const { return transposed ? field.ny() : field.nx(); }
  std::size_t ny() const { return transposed ? field.nx() : field.ny(); }
  double x_at(std::size_t j) const { return transposed ? field.y_at(j) : field.x_at(j); }
  double y_at(std::size_t i) const { return transposed ? field.x_at(i) : field.y_at(i); }
  double x0() const { return transposed ? field.y0_um : field.x0_um; }
  double y0() const { return transposed ? field.x0_um : field.y0_um; }
  double intensity(std::size_t i, std::size_t j) const {
    return std::norm(transposed ? field.samples(j, i) : field.samples(i, j));
  }
};

IndexWindow window(double center, double half, double origin, double dx, std::size_t n) {
  const double lo = std::ceil((center - half - origin) / dx - 1e-9);
  const double hi = std::floor((center + half - origin) / dx + 1e-9);
  if (lo < 0.0 || hi > double(n) - 1.0 || hi < lo) throw std::out_of_range("metrics window outside field");
  return {std::size_t(lo), std::size_t(hi)};
}

}  // namespace

double fwhm_of_cut(std::span<const double> I, double dx_um) {
  if (I.size() < 3) throw std::domain_error("unbounded peak");
  const auto peak_it = std::max_element(I.begin(), I.end());
  const std::size_t p = std::size_t(peak_it - I.begin());
  if (p == 0 || p + 1 == I.size() || !(*peak_it > 0.0)) throw std::domain_error("unbounded peak");
  const double half = 0.5 * *peak_it;

  std::size_t l = p;
  while (l > 0 && I[l] > half) --l;
  if (I[l] > half) throw std::domain_error("unbounded peak");
  const double left = double(l) + (half - I[l]) / (I[l + 1] - I[l]);

  std::size_t r = p;
  while (r + 1 < I.size() && I[r] > half) ++r;
  if (I[r] > half) throw std::domain_error("unbounded peak");
  const double right = double(r - 1) + (I[r - 1] - half) / (I[r - 1] - I[r]);
  return (right - left) * dx_um;
}

FocusMetrics plane_metrics(const ComplexField& field) {
  field.validate();
  const double total = sum_intensity(field);
  if (!(total > 0.0)) throw std::domain_error("degenerate field (all zeros)");
  const auto I = intensity(field);
  const auto it = std::max_element(I.values().begin(), I.values().end());
  const std::size_t k = std::size_t(it - I.values().begin());
  const std::size_t pi = k / field.nx(), pj = k % field.nx();

  FocusMetrics m;
  m.peak_intensity = *it / total;
  m.peak_x_um = field.x_at(pj);
  m.peak_y_um = field.y_at(pi);
  std::vector<double> col(field.ny());
  for (std::size_t i = 0; i < field.ny(); ++i) col[i] = I(i, pj);
  for (auto [name, cut] : {std::pair<const char*, std::span<const double>>{"x", I.row(pi)},
                           std::pair<const char*, std::span<const double>>{"y", col}}) {
    try {
      m.fwhm.push_back({name, fwhm_of_cut(cut, field.dx_um)});
    } catch (const std::domain_error&) {
    }
  }
  return m;
}

FocalScan find_focal_plane(const ComplexField& field0, double z_min_um, double z_max_um, int n_steps) {
  if (n_steps < 3) throw std::invalid_argument("focal scan needs at least 3 steps");
  if (!(z_min_um < z_max_um)) throw std::invalid_argument("focal scan needs z_min < z_max");
  if (z_min_um < field0.z_um) throw std::invalid_argument("focal scan starts behind the input plane");
  field0.validate();
  if (!(sum_intensity(field0) > 0.0)) throw std::domain_error("degenerate field (all zeros)");

  FocalScan scan;
  scan.z_values.resize(std::size_t(n_steps));
  scan.peaks.resize(std::size_t(n_steps));
  for (int k = 0; k < n_steps; ++k)
    scan.z_values[std::size_t(k)] = z_min_um + (z_max_um - z_min_um) * double(k) / double(n_steps - 1);

  parallel_for(std::size_t(n_steps), [&](std::size_t k) {
    const auto f = propagate(field0, scan.z_values[k] - field0.z_um);
    double peak = 0.0, total = 0.0;
    for (const auto& v : f.samples.values()) {
      const double n = std::norm(v);
      peak = std::max(peak, n);
      total += n;
    }
    scan.peaks[k] = total > 0.0 ? peak / total : 0.0;
  });

  std::size_t best = 0;
  for (std::size_t k = 1; k < scan.peaks.size(); ++k)
    if (scan.peaks[k] > scan.peaks[best] * (1.0 + 1e-9)) best = k;
  scan.z_um = scan.z_values[best];
  scan.metrics = plane_metrics(propagate(field0, scan.z_um - field0.z_um));
  return scan;
}

FocusMetrics pattern_metrics(const ComplexField& field, const RowAssignment& assignment,
                             const PatternMetricsOptions& options) {
  field.validate();
  const double total = sum_intensity(field);
  if (!(total > 0.0)) throw std::domain_error("degenerate field (all zeros)");
  const FrameView view{field, assignment.transposed};
  const LensSpec& frame = assignment.frame;
  const double dx = field.dx_um;

  FocusMetrics m = plane_metrics(field);

  std::map<int, std::vector<std::size_t>> per_segment;
  for (const auto& row : assignment.rows) {
    const auto& subs = row.subapertures;
    for (std::size_t t = 0; t < subs.size(); ++t) {
      const auto& sub = subs[t];
      // Point targets contribute only their nearest row.
      if (std::size_t(sub.segment_id) < assignment.segment_point_row.size()) {
        const int pr = assignment.segment_point_row[std::size_t(sub.segment_id)];
        if (pr >= 0 && pr != row.row_index) continue;
      }
      const double na = subaperture_na(sub.x_lo_um, sub.x_hi_um, sub.a_um, frame.focal_length_um + sub.s_um);
      const double half = frame.wavelength_um / na;

      RowPeak rp;
      rp.row_index = row.row_index;
      rp.y_um = row.y_um;
      rp.segment_id = sub.segment_id;
      rp.subaperture_index = int(t);
      rp.target_x_um = sub.target_x_um();
      rp.s_um = sub.s_um;

      const auto wx = window(rp.target_x_um, half, view.x0(), dx, view.nx());
      const auto wy = window(rp.y_um, half, view.y0(), dx, view.ny());
      double best = -1.0;
      std::size_t bi = wy.lo, bj = wx.lo;
      for (std::size_t i = wy.lo; i <= wy.hi; ++i)
        for (std::size_t j = wx.lo; j <= wx.hi; ++j) {
          const double v = view.intensity(i, j);
          if (v > best) {
            best = v;
            bi = i;
            bj = j;
          }
        }
      rp.peak_intensity = best / total;
      rp.peak_x_um = view.x_at(bj);
      rp.peak_y_um = view.y_at(bi);

      // Row cut through the peak, limited to +-3 windows and to the midpoints
      // towards neighbouring targets.
      double lo_x = rp.target_x_um - 3.0 * half, hi_x = rp.target_x_um + 3.0 * half;
      if (t > 0) lo_x = std::max(lo_x, 0.5 * (rp.target_x_um + subs[t - 1].target_x_um()));
      if (t + 1 < subs.size()) hi_x = std::min(hi_x, 0.5 * (rp.target_x_um + subs[t + 1].target_x_um()));
      const double cut_lo = std::max(lo_x, view.x0());
      const double cut_hi = std::min(hi_x, view.x_at(view.nx() - 1));
      if (cut_hi > cut_lo) {
        const auto wc = window(0.5 * (cut_lo + cut_hi), 0.5 * (cut_hi - cut_lo), view.x0(), dx, view.nx());
        std::vector<double> cut;
        for (std::size_t j = wc.lo; j <= wc.hi; ++j) cut.push_back(view.intensity(bi, j));
        try {
          rp.fwhm_um = fwhm_of_cut(cut, dx);
        } catch (const std::domain_error&) {
          rp.fwhm_um = 0.0;
        }
      }

      // Crowded targets: another target on this row within the crowding distance.
      const double crowd = options.crowding_windows * half;
      if ((t > 0 && rp.target_x_um - subs[t - 1].target_x_um() < crowd) ||
          (t + 1 < subs.size() && subs[t + 1].target_x_um() - rp.target_x_um < crowd))
        rp.in_support = false;

      per_segment[rp.segment_id].push_back(m.rows.size());
      m.rows.push_back(rp);
    }
  }

  for (auto& [seg, idx] : per_segment) {
    (void)seg;
    const std::size_t n = idx.size();
    const auto trim = std::size_t(std::floor(options.end_trim_fraction * double(n)));
    for (std::size_t k = 0; k < n; ++k)
      if (k < trim || k + trim >= n) m.rows[idx[k]].in_support = false;
  }

  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& r : m.rows) {
    if (!r.in_support) continue;
    lo = any ? std::min(lo, r.peak_intensity) : r.peak_intensity;
    hi = any ? std::max(hi, r.peak_intensity) : r.peak_intensity;
    any = true;
  }
  m.homogeneity_ratio = any && lo > 0.0 ? hi / lo : 1.0;
  return m;
}

std::vector<RidgePoint> row_ridge(const ComplexField& field, const RowAssignment& assignment,
                                  double central_fraction) {
  field.validate();
  if (!(central_fraction > 0.0 && central_fraction <= 1.0))
    throw std::invalid_argument("central fraction must lie in (0, 1]");
  const FrameView view{field, assignment.transposed};
  const LensSpec& frame = assignment.frame;
  const int ny = frame.ny();
  const int skip = int(std::floor(0.5 * (1.0 - central_fraction) * ny + 1e-9));
  std::vector<RidgePoint> out;
  for (int r = skip; r < ny - skip; ++r) {
    const double y = frame.cell_y(r);
    const double fi = std::round((y - view.y0()) / field.dx_um);
    if (fi < 0.0 || fi > double(view.ny()) - 1.0) continue;
    const auto i = std::size_t(fi);
    std::size_t best_j = 0;
    double best = -1.0;
    for (std::size_t j = 0; j < view.nx(); ++j) {
      const double v = view.intensity(i, j);
      if (v > best) {
        best = v;
        best_j = j;
      }
    }
    out.push_back({view.y_at(i), view.x_at(best_j)});
  }
  return out;
}

LineFit fit_line(std::span<const double> ys, std::span<const double> xs) {
  if (ys.size() != xs.size() || ys.size() < 2) throw std::invalid_argument("line fit needs >= 2 points");
  const double n = double(ys.size());
  double sy = 0, sx = 0, syy = 0, syx = 0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    sy += ys[k];
    sx += xs[k];
    syy += ys[k] * ys[k];
    syx += ys[k] * xs[k];
  }
  const double denom = n * syy - sy * sy;
  if (denom == 0.0) throw std::invalid_argument("line fit needs distinct y values");
  LineFit fit;
  fit.slope = (n * syx - sy * sx) / denom;
  fit.intercept_um = (sx - fit.slope * sy) / n;
  double ss = 0.0;
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const double r = xs[k] - (fit.slope * ys[k] + fit.intercept_um);
    ss += r * r;
  }
  fit.rms_residual_um = std::sqrt(ss / n);
  return fit;
}

}  // namespace focusforge
