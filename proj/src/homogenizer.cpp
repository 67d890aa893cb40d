#include "focusforge/homogenizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "focusforge/metrics.hpp"
#include "focusforge/parallel.hpp"
#include "focusforge/phase_synthesis.hpp"
#include "focusforge/propagation.hpp"

namespace focusforge {
namespace {

void check_config(const CalibrationConfig& c) {
  if (!(c.micro_aperture_w_um > 0.0)) throw std::invalid_argument("micro aperture width must be > 0");
  if (!(c.s_step_um > 0.0)) throw std::invalid_argument("focal shift step must be > 0");
  if (!(c.s_min_um <= 0.0 && c.s_max_um >= 0.0 && c.s_max_um > c.s_min_um))
    throw std::invalid_argument("focal shift range must span 0");
  if (!(c.tolerance >= 0.0)) throw std::invalid_argument("tolerance must be >= 0");
  if (!(c.padding_factor >= 1.0)) throw std::invalid_argument("padding factor must be >= 1");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

/// Index of the grid point whose intensity is nearest the target. The curve
/// I(s) has one crossing of T on each side of its maximum, and picking between
/// them by a hair's difference makes s(a) jump between branches, so the search
/// is confined to the branch s >= argmax I when that branch reaches T within
/// tolerance. Ties go to the smaller |s|, then to positive s.
std::size_t select_shift(std::span<const double> I, std::span<const double> s_grid, double T,
                         double tolerance) {
  const std::size_t ns = I.size();
  auto nearest = [&](std::size_t from) {
    std::size_t pick = from;
    double pick_err = std::abs(I[from] - T);
    const double tie = 1e-9 * T;
    for (std::size_t is = from + 1; is < ns; ++is) {
      const double err = std::abs(I[is] - T);
      bool take = err < pick_err - tie;
      if (!take && std::abs(err - pick_err) <= tie) {
        const double s = s_grid[is], cur = s_grid[pick];
        take = std::abs(s) < std::abs(cur) - 1e-12 ||
               (std::abs(std::abs(s) - std::abs(cur)) <= 1e-12 && s > cur);
      }
      if (take) {
        pick = is;
        pick_err = err;
      }
    }
    return pick;
  };
  const auto peak = std::size_t(std::max_element(I.begin(), I.end()) - I.begin());
  const std::size_t branch = nearest(peak);
  if (std::abs(I[branch] - T) <= tolerance * T && branch + 1 < ns) return branch;
  return nearest(0);
}

}  // namespace

std::vector<double> focal_shift_grid(const CalibrationConfig& config) {
  check_config(config);
  const auto k_lo = long(std::ceil(config.s_min_um / config.s_step_um - 1e-9));
  const auto k_hi = long(std::floor(config.s_max_um / config.s_step_um + 1e-9));
  std::vector<double> grid;
  for (long k = k_lo; k <= k_hi; ++k) grid.push_back(double(k) * config.s_step_um);
  return grid;
}

double micro_lens_peak_intensity(double a_um, double s_um, const LensSpec& spec,
                                 const CalibrationConfig& config, double max_abs_a_um,
                                 double slope) {
  const double U = spec.pitch_um;
  const double g = std::sqrt(1.0 + slope * slope);
  const auto n_ref = std::max(2L, std::lround(config.micro_aperture_w_um / U));
  const auto n = std::size_t(std::max(2L, std::lround(g * config.micro_aperture_w_um / U)));
  const double extent = g * (config.padding_factor * config.micro_aperture_w_um + 2.0 * max_abs_a_um);
  auto total = std::size_t(std::ceil(extent / U));
  if ((total - n) % 2 != 0) ++total;
  const std::size_t offset = (total - n) / 2;

  ComplexLine line;
  line.samples.assign(total, Complex{});
  line.dx_um = U;
  line.wavelength_um = spec.wavelength_um;
  line.x0_um = -0.5 * double(total - 1) * U;
  const RowParams row{0.0, g * g * a_um, s_um};
  for (std::size_t j = 0; j < n; ++j)
    line.samples[offset + j] =
        std::polar(1.0, -shifted_focus_phase(g * line.x_at(offset + j), row, spec));

  const auto focal = propagate(line, spec.focal_length_um);
  const double na = local_na(config.micro_aperture_w_um, a_um, spec.focal_length_um);
  const double half = spec.wavelength_um / na;
  double peak = 0.0;
  for (std::size_t j = 0; j < total; ++j)
    if (std::abs(focal.x_at(j) + g * a_um) <= half) peak = std::max(peak, std::norm(focal.samples[j]));
  return peak / double(n_ref);
}

ShiftTable calibrate_focal_shift(std::span<const double> a_values, const LensSpec& spec,
                                 const CalibrationConfig& config, std::span<const double> slopes) {
  spec.validate();
  check_config(config);
  if (a_values.empty()) throw std::invalid_argument("calibration needs at least one offset");
  if (slopes.empty()) throw std::invalid_argument("calibration needs at least one slope");
  std::vector<double> as(a_values.begin(), a_values.end());
  std::sort(as.begin(), as.end());
  as.erase(std::unique(as.begin(), as.end()), as.end());
  std::vector<double> ms;
  for (double m : slopes) {
    if (!std::isfinite(m)) throw std::invalid_argument("slope must be finite");
    ms.push_back(std::abs(m));
  }
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());

  const auto s_grid = focal_shift_grid(config);
  if (s_grid.size() < 3) throw std::invalid_argument("focal shift grid needs at least 3 points");
  if (!(spec.focal_length_um + s_grid.front() > 0.0))
    throw std::invalid_argument("focal shift range makes the effective focal length non-positive");

  double max_abs_a = 0.0;
  for (double a : as) max_abs_a = std::max(max_abs_a, std::abs(a));

  // Rows of I are (slope, a) pairs in table order.
  const std::size_t nrow = ms.size() * as.size(), ns = s_grid.size();
  std::vector<double> I(nrow * ns);
  parallel_for(nrow * ns, [&](std::size_t k) {
    const std::size_t r = k / ns;
    I[k] = micro_lens_peak_intensity(as[r % as.size()], s_grid[k % ns], spec, config, max_abs_a,
                                     ms[r / as.size()]);
  });

  ShiftTable table;
  table.config = config;
  if (config.policy == TargetPolicy::weakest_row) {
    double target = 0.0;
    for (std::size_t r = 0; r < nrow; ++r) {
      const double best = *std::max_element(I.begin() + long(r * ns), I.begin() + long((r + 1) * ns));
      target = r == 0 ? best : std::min(target, best);
    }
    table.target_intensity = target;
  } else {
    if (!(config.fixed_target > 0.0)) throw std::invalid_argument("fixed target intensity must be > 0");
    table.target_intensity = config.fixed_target;
  }
  const double T = table.target_intensity;

  for (std::size_t r = 0; r < nrow; ++r) {
    const double a = as[r % as.size()], m = ms[r / as.size()];
    const std::size_t pick = select_shift(std::span(I).subspan(r * ns, ns), s_grid, T, config.tolerance);
    const double achieved = I[r * ns + pick];
    const std::string where = "a = " + fmt(a) + " um" + (m != 0.0 ? ", slope " + fmt(m) : "");
    if (pick == 0 || pick + 1 == ns)
      throw std::runtime_error("focal shift for " + where +
                               " lies on the search range boundary; widen the s range");
    if (std::abs(achieved - T) > config.tolerance * T)
      throw std::runtime_error("target intensity unreachable within tolerance for " + where);
    table.entries.push_back({m, a, s_grid[pick], achieved});
  }
  return table;
}

std::vector<double> ShiftTable::slopes() const {
  std::vector<double> out;
  for (const auto& e : entries)
    if (out.empty() || e.slope != out.back()) out.push_back(e.slope);
  return out;
}

namespace {

double interpolate_in_a(std::span<const ShiftEntry> group, double a_um) {
  const double tol = 1e-9 * std::max(1.0, std::abs(a_um));
  if (a_um < group.front().a_um - tol || a_um > group.back().a_um + tol)
    throw std::out_of_range("calibration range exceeded");
  if (group.size() == 1) return group.front().s_um;
  const double a = std::clamp(a_um, group.front().a_um, group.back().a_um);
  auto hi = std::lower_bound(group.begin(), group.end(), a,
                             [](const ShiftEntry& e, double v) { return e.a_um < v; });
  if (hi == group.begin()) return hi->s_um;
  auto lo = std::prev(hi);
  const double t = (a - lo->a_um) / (hi->a_um - lo->a_um);
  return lo->s_um + t * (hi->s_um - lo->s_um);
}

}  // namespace

double ShiftTable::shift_at(double a_um, double slope) const {
  if (entries.empty()) throw std::out_of_range("calibration range exceeded");
  const double m = std::abs(slope);
  std::vector<std::span<const ShiftEntry>> groups;
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i;
    while (j < entries.size() && entries[j].slope == entries[i].slope) ++j;
    groups.emplace_back(entries.data() + i, j - i);
    i = j;
  }
  const double mtol = 1e-6;
  if (m < groups.front().front().slope - mtol || m > groups.back().front().slope + mtol)
    throw std::out_of_range("calibration range exceeded");
  std::size_t g = 0;
  while (g + 1 < groups.size() && groups[g + 1].front().slope <= m) ++g;
  const double m0 = groups[g].front().slope;
  const double s0 = interpolate_in_a(groups[g], a_um);
  if (g + 1 == groups.size() || std::abs(m - m0) <= mtol) return s0;
  const double m1 = groups[g + 1].front().slope;
  if (std::abs(m - m1) <= mtol) return interpolate_in_a(groups[g + 1], a_um);
  const double t = (m - m0) / (m1 - m0);
  return s0 + t * (interpolate_in_a(groups[g + 1], a_um) - s0);
}

RowAssignment apply_homogenization(const RowAssignment& assignment, const ShiftTable& table) {
  RowAssignment out = assignment;
  for (auto& row : out.rows)
    for (auto& sub : row.subapertures) {
      const auto id = std::size_t(sub.segment_id);
      if (id >= out.segment_homogenize.size() || !out.segment_homogenize[id]) continue;
      sub.s_um = table.shift_at(sub.relative_offset_um(), sub.slope);
      if (!(out.frame.focal_length_um + sub.s_um > 0.0))
        throw std::domain_error("non-positive effective focal length");
    }
  return out;
}

namespace {

/// Piecewise-linear s corrections, `knots` per homogenized segment spread over
/// the segment's row range.
struct KnotMap {
  struct Hook {
    std::size_t row, sub;
    std::size_t knot;  ///< lower knot index into the parameter vector
    double frac;
  };
  std::vector<Hook> hooks;
  std::size_t n_params = 0;

  KnotMap(const RowAssignment& a, int knots) {
    std::map<int, std::pair<double, double>> span;
    for (const auto& row : a.rows)
      for (const auto& sub : row.subapertures) {
        const auto id = std::size_t(sub.segment_id);
        if (id >= a.segment_homogenize.size() || !a.segment_homogenize[id] || a.segment_point_row[id] >= 0)
          continue;
        auto [it, fresh] = span.try_emplace(sub.segment_id, row.y_um, row.y_um);
        it->second.first = std::min(it->second.first, row.y_um);
        it->second.second = std::max(it->second.second, row.y_um);
      }
    const auto K = std::size_t(knots);
    std::map<int, std::size_t> base;
    for (const auto& [id, range] : span) {
      base[id] = n_params;
      n_params += K;
    }
    for (std::size_t r = 0; r < a.rows.size(); ++r)
      for (std::size_t k = 0; k < a.rows[r].subapertures.size(); ++k) {
        const int id = a.rows[r].subapertures[k].segment_id;
        auto it = span.find(id);
        if (it == span.end()) continue;
        const auto [lo, hi] = it->second;
        const double t = hi > lo ? (a.rows[r].y_um - lo) / (hi - lo) * double(K - 1) : 0.0;
        const std::size_t i = std::min(std::size_t(std::max(0.0, t)), K - 2);
        hooks.push_back({r, k, base[id] + i, std::clamp(t - double(i), 0.0, 1.0)});
      }
  }

  RowAssignment apply(const RowAssignment& start, const Eigen::VectorXd& p) const {
    RowAssignment out = start;
    for (const auto& h : hooks)
      out.rows[h.row].subapertures[h.sub].s_um += (1.0 - h.frac) * p[Eigen::Index(h.knot)] +
                                                   h.frac * p[Eigen::Index(h.knot + 1)];
    return out;
  }
};

}  // namespace

RefineResult refine_homogenization(const RowAssignment& start, const RefineOptions& options) {
  if (options.knots < 2) throw std::invalid_argument("refinement needs at least 2 knots per segment");
  if (!(options.fd_step_um > 0.0) || !(options.max_step_um > 0.0))
    throw std::invalid_argument("refinement step settings must be > 0");
  const double f = start.frame.focal_length_um;
  const KnotMap knots(start, options.knots);

  RefineResult result;
  result.assignment = start;
  auto measure = [&](const Eigen::VectorXd& p, RowAssignment* applied = nullptr) {
    RowAssignment a = knots.apply(start, p);
    for (const auto& row : a.rows)
      for (const auto& sub : row.subapertures)
        if (!(f + sub.s_um > 0.0)) throw std::domain_error("non-positive effective focal length");
    auto m = pattern_metrics(propagate(field_from_profile(synthesize_profile(a), options.padding), f), a,
                             options.metrics);
    if (applied) *applied = std::move(a);
    return m;
  };
  // Deviation of each supported ln(peak) from their mean, raised to power q/2
  // so that the squared norm is the q-norm of the spread.
  auto residual = [](const FocusMetrics& m, double q) {
    std::vector<double> v;
    for (const auto& r : m.rows)
      if (r.in_support) v.push_back(std::log(std::max(r.peak_intensity, 1e-300)));
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= double(std::max<std::size_t>(1, v.size()));
    Eigen::VectorXd out(Eigen::Index(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double d = v[i] - mean;
      out[Eigen::Index(i)] = std::copysign(std::pow(std::abs(d), 0.5 * q), d);
    }
    return out;
  };

  Eigen::VectorXd p = Eigen::VectorXd::Zero(Eigen::Index(knots.n_params));
  FocusMetrics current = measure(p);
  result.ratio_history.push_back(current.homogeneity_ratio);
  double best_ratio = current.homogeneity_ratio;
  if (knots.n_params == 0) return result;

  const auto n = Eigen::Index(knots.n_params);
  for (double q : options.norm_powers) {
    Eigen::VectorXd r = residual(current, q);
    double cost = r.squaredNorm();
    double mu = 1e-2;
    for (int it = 0; it < options.iterations_per_power; ++it) {
      Eigen::MatrixXd J(r.size(), n);
      std::vector<Eigen::VectorXd> cols{std::size_t(n)};
      parallel_for(std::size_t(n), [&](std::size_t j) {
        Eigen::VectorXd pj = p;
        pj[Eigen::Index(j)] += options.fd_step_um;
        cols[j] = residual(measure(pj), q);
      });
      for (Eigen::Index j = 0; j < n; ++j) {
        if (cols[std::size_t(j)].size() != r.size()) throw std::runtime_error("support changed during refinement");
        J.col(j) = (cols[std::size_t(j)] - r) / options.fd_step_um;
      }
      const Eigen::MatrixXd A = J.transpose() * J;
      const Eigen::VectorXd g = J.transpose() * r;
      bool accepted = false;
      for (int attempt = 0; attempt < 6 && !accepted; ++attempt) {
        Eigen::MatrixXd B = A;
        for (Eigen::Index j = 0; j < n; ++j) B(j, j) += mu * (A(j, j) + 1e-6);
        Eigen::VectorXd d = -B.ldlt().solve(g);
        const double biggest = d.cwiseAbs().maxCoeff();
        if (!std::isfinite(biggest)) break;
        if (biggest > options.max_step_um) d *= options.max_step_um / biggest;
        RowAssignment applied;
        const FocusMetrics trial = measure(p + d, &applied);
        const Eigen::VectorXd rt = residual(trial, q);
        if (rt.size() == r.size() && rt.squaredNorm() < cost) {
          p += d;
          r = rt;
          cost = rt.squaredNorm();
          current = trial;
          mu = std::max(mu / 3.0, 1e-6);
          accepted = true;
          result.ratio_history.push_back(trial.homogeneity_ratio);
          if (trial.homogeneity_ratio < best_ratio) {
            best_ratio = trial.homogeneity_ratio;
            result.assignment = std::move(applied);
          }
        } else {
          mu *= 4.0;
        }
      }
      if (!accepted) break;
    }
  }
  return result;
}

std::vector<double> calibration_offsets(const RowAssignment& assignment, double step_um) {
  if (!(step_um > 0.0)) throw std::invalid_argument("offset step must be > 0");
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& row : assignment.rows)
    for (const auto& sub : row.subapertures) {
      const auto id = std::size_t(sub.segment_id);
      if (id >= assignment.segment_homogenize.size() || !assignment.segment_homogenize[id]) continue;
      const double a = sub.relative_offset_um();
      lo = any ? std::min(lo, a) : a;
      hi = any ? std::max(hi, a) : a;
      any = true;
    }
  if (!any) return {};
  const auto k_lo = long(std::floor(lo / step_um + 1e-9));
  const auto k_hi = long(std::ceil(hi / step_um - 1e-9));
  std::vector<double> out;
  for (long k = k_lo; k <= k_hi; ++k) out.push_back(double(k) * step_um);
  return out;
}

std::vector<double> calibration_slopes(const RowAssignment& assignment, std::size_t max_distinct,
                                       double grid_step) {
  if (!(grid_step > 0.0)) throw std::invalid_argument("slope grid step must be > 0");
  std::vector<double> ms;
  for (const auto& row : assignment.rows)
    for (const auto& sub : row.subapertures) {
      const auto id = std::size_t(sub.segment_id);
      if (id >= assignment.segment_homogenize.size() || !assignment.segment_homogenize[id]) continue;
      ms.push_back(double(std::llround(std::abs(sub.slope) * 1e6)) * 1e-6);
    }
  std::sort(ms.begin(), ms.end());
  ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
  if (ms.size() <= max_distinct) return ms;
  const auto steps = long(std::ceil(ms.back() / grid_step - 1e-9));
  std::vector<double> grid;
  for (long k = 0; k <= steps; ++k) grid.push_back(double(k) * grid_step);
  return grid;
}

double dominant_subaperture_width(const RowAssignment& assignment) {
  std::map<long, int> counts;
  for (const auto& row : assignment.rows)
    for (const auto& sub : row.subapertures) {
      const auto id = std::size_t(sub.segment_id);
      if (id >= assignment.segment_homogenize.size() || !assignment.segment_homogenize[id]) continue;
      ++counts[std::lround((sub.x_hi_um - sub.x_lo_um) * 1e6)];
    }
  if (counts.empty()) return assignment.frame.aperture_w_um;
  auto best = std::max_element(counts.begin(), counts.end(),
                               [](const auto& a, const auto& b) { return a.second < b.second; });
  return double(best->first) * 1e-6;
}

}  // namespace focusforge
