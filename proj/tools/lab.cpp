#include "lab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "hitchin/fiducial.hpp"
#include "hitchin/gluing.hpp"
#include "hitchin/hyperkahler.hpp"
#include "hitchin/painleve.hpp"

namespace hitchin::lab {

namespace {

struct CommandName {
  Command command;
  const char* name;
};

constexpr CommandName kCommands[] = {
    {Command::solve_ode, "solve-ode"}, {Command::fiducial, "fiducial"},       {Command::limiting, "limiting"},
    {Command::residual, "residual"},   {Command::glue, "glue"},               {Command::lt_spectrum, "lt-spectrum"},
    {Command::hk_check, "hk-check"},   {Command::decay, "decay"},             {Command::collapse, "collapse"},
};

const std::vector<std::string> kFormats{"csv", "json", "plotdata"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  throw UsageError("invalid value for '" + key + "': '" + value + "' (" + why + ")");
}

double parse_double(const std::string& key, const std::string& value) {
  double v = 0.0;
  const char* end = value.data() + value.size();
  const auto [p, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || p != end || !std::isfinite(v)) bad_value(key, value, "not a finite number");
  return v;
}

double parse_positive(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  if (!(v > 0.0)) bad_value(key, value, "must be positive");
  return v;
}

long long parse_integer(const std::string& key, const std::string& value) {
  long long v = 0;
  const char* end = value.data() + value.size();
  const auto [p, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || p != end) bad_value(key, value, "not an integer");
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& value, std::size_t min) {
  const long long v = parse_integer(key, value);
  if (v <= 0) bad_value(key, value, "must be positive");
  if (static_cast<std::size_t>(v) < min) bad_value(key, value, "must be at least " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

std::uint64_t parse_seed(const std::string& key, const std::string& value) {
  int base = 10;
  std::string digits = value;
  if (digits.rfind("0x", 0) == 0 || digits.rfind("0X", 0) == 0) {
    base = 16;
    digits = digits.substr(2);
  }
  std::uint64_t v = 0;
  const char* end = digits.data() + digits.size();
  const auto [p, ec] = std::from_chars(digits.data(), end, v, base);
  if (digits.empty() || ec != std::errc() || p != end) bad_value(key, value, "not an unsigned integer");
  return v;
}

std::string join_numbers(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_number(v[i]);
  return s;
}

std::string canonical(const RunConfig& c, bool with_output_dir) {
  std::ostringstream os;
  os << "command = " << to_string(c.command) << '\n';
  os << "t_values = " << join_numbers(c.t_values) << '\n';
  os << "k = " << c.k << '\n';
  os << "epsilon = " << format_number(c.epsilon) << '\n';
  os << "r_min = " << format_number(c.r_min) << '\n';
  os << "r_max = " << format_number(c.r_max) << '\n';
  os << "n_r = " << c.n_r << '\n';
  os << "n_theta = " << c.n_theta << '\n';
  os << "spacing = " << (c.spacing == Spacing::uniform_r ? "uniform" : "log") << '\n';
  if (with_output_dir) os << "output_dir = " << c.output_dir << '\n';
  os << "formats = ";
  for (std::size_t i = 0; i < c.formats.size(); ++i) os << (i ? "," : "") << c.formats[i];
  os << '\n';
  os << "seed = " << c.seed << '\n';
  return os.str();
}

// ---------------------------------------------------------------------------
// Experiments

using PolarRef = std::shared_ptr<const PolarGrid>;

RadialGrid config_radial(const RunConfig& c) { return RadialGrid::make(c.r_min, c.r_max, c.n_r, c.spacing); }

PolarRef polar(RadialGrid radial, std::size_t n_theta) {
  return std::make_shared<const PolarGrid>(std::move(radial), n_theta);
}

RadialInterval clip(double lo, double hi, const RadialGrid& g) {
  return {std::max(lo, g[3]), std::min(hi, g[g.size() - 4])};
}

void check(RunResult& r, std::string name, double value, double threshold, bool passed) {
  r.checks.push_back({std::move(name), value, threshold, passed});
}

void check_below(RunResult& r, std::string name, double value, double threshold) {
  check(r, std::move(name), value, threshold, value < threshold);
}

std::string tag(double t) { return "t" + format_number(t); }

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

void run_solve_ode(RunResult& out) {
  const auto& c = out.config;
  out.table.headers = {"r", "h", "r_h_prime", "ode_residual"};
  const RadialGrid grid = config_radial(c);
  double worst = 0.0;
  auto per_t = nlohmann::ordered_json::array();
  for (double t : c.t_values) {
    const RadialProfile p = solve_bvp(t, c.k, grid);
    const auto res = ode_residual(p);
    const auto rhp = p.r_h_prime();
    bool in_range = true;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out.table.rows.push_back({grid[i], p.h[i], rhp[i], res[i]});
      out.plots["h_" + tag(t)].emplace_back(grid[i], p.h[i]);
      out.plots["r_h_prime_" + tag(t)].emplace_back(grid[i], rhp[i]);
      if (i > 0 && i + 1 < grid.size() && !(rhp[i] > -0.5 * c.k && rhp[i] < 0.0)) in_range = false;
    }
    const double sup = ode_residual_sup(p);
    worst = std::max(worst, sup);
    per_t.push_back({{"t", t},
                     {"ode_residual_sup", sup},
                     {"indicial_constant", p.indicial_constant},
                     {"newton_iterations", p.newton_history.size()}});
    check_below(out, "ode_residual_sup_" + tag(t), sup, 1e-8);
    check(out, "r_h_prime_in_range_" + tag(t), in_range ? 1.0 : 0.0, 1.0, in_range);
  }
  out.summary["profiles"] = per_t;
  out.summary["ode_residual_max"] = worst;
}

void run_fiducial(RunResult& out) {
  const auto& c = out.config;
  out.table.headers = {"t", "residual_first_sup", "residual_second_sup", "det_defect", "indicial_constant"};
  const PolarRef grid = polar(config_radial(c), c.n_theta);
  const RadialInterval region = clip(0.05, 2.0, grid->radial());
  for (double t : c.t_values) {
    const FiducialSolution sol = make_fiducial(t, c.k, grid);
    const HitchinResidual res = hitchin_residual(sol.config, t, region);
    double det_defect = 0.0;
    for (std::size_t i = 0; i < sol.config.phi.size(); ++i) {
      const Complex zk = std::pow(grid->point(i), c.k);
      det_defect = std::max(det_defect, std::abs(sol.config.phi[i].determinant() + zk) / std::max(1.0, std::abs(zk)));
    }
    out.table.rows.push_back(
        {t, res.first_norms.sup, res.second_norms.sup, det_defect, sol.profile->indicial_constant});
    for (std::size_t i = 0; i < grid->radial().size(); ++i) out.plots["f_" + tag(t)].emplace_back(grid->radial()[i], sol.f[i]);
    check_below(out, "det_defect_" + tag(t), det_defect, 1e-12);
    check_below(out, "ode_residual_sup_" + tag(t), ode_residual_sup(*sol.profile), 1e-8);
  }
  out.summary["region"] = {region.lo, region.hi};
}

void run_limiting(RunResult& out) {
  const auto& c = out.config;
  out.table.headers = {"n_r", "curvature_sup", "bracket_sup", "holomorphic_sup"};
  RadialGrid radial = config_radial(c);
  std::vector<double> curvature;
  for (int level = 0; level < 3; ++level) {
    const PolarRef grid = polar(radial, c.n_theta);
    const FiducialSolution lim = make_limiting(c.k, grid);
    const DecoupledNorms d = verify_decoupled(lim.config, clip(0.2, 2.0, grid->radial()));
    out.table.rows.push_back({static_cast<double>(radial.size()), d.curvature.sup, d.bracket.sup, d.holomorphic.sup});
    out.plots["curvature"].emplace_back(static_cast<double>(radial.size()), d.curvature.sup);
    curvature.push_back(d.curvature.sup);
    check_below(out, "bracket_sup_n" + std::to_string(radial.size()), d.bracket.sup, 1e-12);
    radial = radial.refined();
  }
  check(out, "curvature_decreasing", curvature.back(), curvature.front(), strictly_decreasing(curvature));
  std::mt19937_64 rng(c.seed);
  std::normal_distribution<double> nd;
  Mat2 m;
  m << Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng));
  const Mat2 u = Eigen::HouseholderQR<Mat2>(m).householderQ();
  const double defect = frame_defect(limiting_configuration(c.k, polar(config_radial(c), c.n_theta), u));
  check_below(out, "frame_defect", defect, 1e-12);
  out.summary["frame_defect"] = defect;
  out.summary["curvature_ratio"] = curvature[curvature.size() - 2] / curvature.back();
}

void run_residual(RunResult& out) {
  const auto& c = out.config;
  out.table.headers = {"t", "n_r", "first_sup", "second_sup", "first_l2", "second_l2"};
  auto per_t = nlohmann::ordered_json::array();
  for (double t : c.t_values) {
    RadialGrid radial = config_radial(c);
    std::vector<double> first, second;
    for (int level = 0; level < 3; ++level) {
      const PolarRef grid = polar(radial, c.n_theta);
      const HitchinResidual res = hitchin_residual(make_fiducial(t, c.k, grid).config, t, clip(0.05, 2.0, radial));
      out.table.rows.push_back({t, static_cast<double>(radial.size()), res.first_norms.sup, res.second_norms.sup,
                                res.first_norms.l2, res.second_norms.l2});
      out.plots["first_sup_" + tag(t)].emplace_back(static_cast<double>(radial.size()), res.first_norms.sup);
      first.push_back(res.first_norms.sup);
      second.push_back(res.second_norms.sup);
      radial = radial.refined();
    }
    const double order_first = std::log2(first[1] / first[2]);
    const double order_second = std::log2(second[1] / second[2]);
    per_t.push_back({{"t", t}, {"order_first", order_first}, {"order_second", order_second}});
    check(out, "first_decreasing_" + tag(t), first.back(), first.front(), strictly_decreasing(first));
    check(out, "second_decreasing_" + tag(t), second.back(), second.front(), strictly_decreasing(second));
  }
  out.summary["orders"] = per_t;
}

void run_glue(RunResult& out) {
  const auto& c = out.config;
  out.table.headers = {"t", "sup_error", "l2_error", "inv_norm", "contraction_product"};
  ContractionOptions opt;
  opt.k = c.k;
  opt.n_r = c.n_r;
  opt.n_theta = c.n_theta;
  opt.grid = gluing_grid(c.t_values.front(), c.t_values.back(), c.k, c.epsilon, c.n_r, c.n_theta);
  std::vector<double> l2, product;
  bool finite = true;
  for (double t : c.t_values) {
    const ContractionProbe p = contraction_probe(t, c.epsilon, opt);
    out.table.rows.push_back({t, p.error_sup, p.error_norm, p.inverse_norm, p.product});
    out.plots["l2_error"].emplace_back(t, p.error_norm);
    out.plots["contraction_product"].emplace_back(t, p.product);
    l2.push_back(p.error_norm);
    product.push_back(p.product);
    finite = finite && std::isfinite(p.inverse_norm) && p.inverse_norm > 0.0;
  }
  check(out, "inverse_norm_finite", finite ? 1.0 : 0.0, 1.0, finite);
  if (c.t_values.size() >= 2) {
    check(out, "l2_error_decreasing", l2.back(), l2.front(), strictly_decreasing(l2));
    check(out, "product_decreasing", product.back(), product.front(), strictly_decreasing(product));
    const double rate = exponential_rate(c.t_values, l2);
    check(out, "l2_error_rate_positive", rate, 0.0, rate > 0.0);
    out.summary["l2_error_rate"] = rate;
  }
  std::size_t first_feasible = c.t_values.size();
  for (std::size_t i = 0; i < product.size() && first_feasible == product.size(); ++i)
    if (product[i] < opt.threshold) first_feasible = i;
  out.summary["contraction_threshold"] = opt.threshold;
  out.summary["first_feasible_t"] =
      first_feasible < product.size() ? nlohmann::ordered_json(c.t_values[first_feasible]) : nlohmann::ordered_json();
}

void run_lt_spectrum(RunResult& out) {
  const auto& c = out.config;
  out.table.headers = {"t", "min_singular", "argmin_mode", "inverse_norm", "h2_bound"};
  const PolarRef grid = polar(config_radial(c), c.n_theta);
  const InverseNormReport rep =
      inverse_norm_report(c.t_values, [&](double t) { return radial_background(make_fiducial(t, c.k, grid)); });
  double lo = 1e300, hi = 0.0;
  bool finite = true;
  for (const auto& row : rep.rows) {
    out.table.rows.push_back({row.t, row.min_singular, static_cast<double>(row.argmin_mode), row.inverse_norm, row.h2_bound});
    out.plots["min_singular"].emplace_back(row.t, row.min_singular);
    out.plots["h2_bound"].emplace_back(row.t, row.h2_bound);
    lo = std::min(lo, row.inverse_norm);
    hi = std::max(hi, row.inverse_norm);
    finite = finite && std::isfinite(row.inverse_norm);
  }
  check(out, "inverse_norm_finite", finite ? 1.0 : 0.0, 1.0, finite);
  check(out, "tail_bound_ok", rep.tail_bound, 0.0, rep.tail_ok);
  check_below(out, "inverse_norm_variation", hi / lo, 4.0);
  // t = 0 with the trivial background: Neumann-Bessel eigenvalues of the annulus [1/2, 2].
  const RadialGrid annulus = RadialGrid::uniform(0.5, 2.0, c.n_r);
  for (int n = 0; n <= 2; ++n) {
    const auto oracle = bessel_neumann_eigenvalues(n, 0.5, 2.0, 2);
    const double expect = n == 0 ? oracle[1] : oracle[0];
    const auto ev = assemble_Lt(n, 0.0, trivial_background(annulus)).smallest_eigenvalues(n == 0 ? 4 : 1);
    const double rel = std::abs(ev.back() - expect) / expect;
    check_below(out, "bessel_n" + std::to_string(n), rel, 5e-3);
  }
  out.summary["n_max"] = rep.n_max;
  out.summary["tail_bound"] = rep.tail_bound;
  out.summary["inverse_norm_variation"] = hi / lo;
}

Mat2 random_traceless(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat2 m;
  m << Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng));
  m.diagonal().array() -= 0.5 * m.trace();
  return m;
}

void run_hk_check(RunResult& out) {
  const auto& c = out.config;
  out.table.headers = {"trial", "quaternion_defect", "isometry_defect", "pair_norm"};
  const GridRef grid = share(TorusGrid(2.0, 3.0, c.n_theta, c.n_theta));
  std::mt19937_64 rng(c.seed);
  auto random_pair = [&] {
    MatrixField a(grid, FormDegree::zero_one), p(grid, FormDegree::one_zero);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = random_traceless(rng);
      p[i] = random_traceless(rng);
    }
    return TangentPair(std::move(a), std::move(p));
  };
  double q_max = 0.0, iso_max = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const TangentPair v = random_pair(), w = random_pair();
    double s = 0.0;
    for (std::size_t i = 0; i < v.alpha().size(); ++i) s = std::max({s, v.alpha()[i].norm(), v.phi_dot()[i].norm()});
    const auto I1 = apply_I(1, v), I2 = apply_I(2, v), I3 = apply_I(3, v);
    double q = 0.0;
    for (int j = 1; j <= 3; ++j) q = std::max(q, max_difference(apply_I(j, apply_I(j, v)), Complex(-1.0) * v));
    q = std::max({q, max_difference(apply_I(1, I2), I3), max_difference(apply_I(2, I3), I1),
                  max_difference(apply_I(3, I1), I2)});
    q /= s;
    const double g = l2_inner(v, w), nv = std::sqrt(l2_inner(v, v)), ref = nv * std::sqrt(l2_inner(w, w));
    double iso = 0.0;
    for (int j = 1; j <= 3; ++j) iso = std::max(iso, std::abs(l2_inner(apply_I(j, v), apply_I(j, w)) - g) / ref);
    out.table.rows.push_back({static_cast<double>(trial), q, iso, nv});
    q_max = std::max(q_max, q);
    iso_max = std::max(iso_max, iso);
  }
  Mat2 a = Mat2::Zero(), phi = Mat2::Zero();
  a(0, 0) = Complex(0.3, -0.7);
  a(1, 1) = -a(0, 0);
  phi(0, 0) = Complex(1.2, 0.5);
  phi(1, 1) = -phi(0, 0);
  const HiggsConfiguration abelian(MatrixField::constant(grid, FormDegree::one_zero, a),
                                   MatrixField::constant(grid, FormDegree::one_zero, phi));
  const MomentTriple mu = moment_maps(abelian, c.t_values.front());
  const double mu_sup = std::max({norms(mu.mu1).sup, norms(mu.mu2).sup, norms(mu.mu3).sup});
  check_below(out, "quaternion_max_defect", q_max, 1e-12);
  check_below(out, "isometry_max_defect", iso_max, 1e-12);
  check(out, "abelian_moment_maps_zero", mu_sup, 0.0, mu_sup == 0.0);
  out.summary["quaternion_max_defect"] = q_max;
  out.summary["isometry_max_defect"] = iso_max;
  out.summary["abelian_moment_sup"] = mu_sup;
  out.summary["trials"] = 100;
}

void run_decay(RunResult& out) {
  const auto& c = out.config;
  out.table.headers = {"t", "rate", "amplitude", "distance_a", "distance_phi"};
  const RadialGrid grid = config_radial(c);
  const RadialInterval region{0.5 * c.epsilon, c.epsilon};
  ConvergenceOptions copt;
  copt.n_r = c.n_r;
  copt.n_theta = c.n_theta;
  const ConvergenceReport conv = convergence_report(c.t_values, c.k, region, copt);
  for (std::size_t i = 0; i < c.t_values.size(); ++i) {
    const double t = c.t_values[i];
    const DecayFit fit = decay_fit(solve_bvp(t, c.k, grid), 4.0, 0.9 * 12.0);
    out.table.rows.push_back({t, fit.rate, fit.amplitude, conv.rows[i].distance_a, conv.rows[i].distance_phi});
    out.plots["distance_a"].emplace_back(t, conv.rows[i].distance_a);
    out.plots["distance_phi"].emplace_back(t, conv.rows[i].distance_phi);
    check_below(out, "decay_rate_" + tag(t), std::abs(fit.rate - 1.0), 0.05);
  }
  if (c.t_values.size() >= 2) {
    check(out, "distances_decreasing", conv.rows.back().distance_a, conv.rows.front().distance_a, conv.monotone);
    out.summary["rate_a"] = conv.rate_a;
    out.summary["rate_phi"] = conv.rate_phi;
    out.summary["expected_rate"] = conv.expected_rate;
    if (c.k == 1) check_below(out, "rate_a_relative_error", std::abs(conv.rate_a / conv.expected_rate - 1.0), 0.1);
  }
  out.summary["asymptotic_window"] = conv.asymptotic_window;
}

void run_collapse(RunResult& out) {
  const auto& c = out.config;
  out.table.headers = {"t", "max_psi_difference", "painleve_residual_sup"};
  const RadialGrid grid = config_radial(c);
  std::optional<PainleveProfile> reference;
  for (double t : c.t_values) {
    const PainleveProfile p = to_painleve(solve_bvp(t, c.k, grid));
    if (!reference) reference = p;
    double diff = 0.0;
    for (int i = 0; i <= 700; ++i) {
      const double rho = 1.0 + 0.01 * i;
      diff = std::max(diff, std::abs(interpolate_psi(p, rho) - interpolate_psi(*reference, rho)));
    }
    const double res = painleve_residual(p).sup;
    out.table.rows.push_back({t, diff, res});
    for (std::size_t i = 0; i < p.rho.size(); ++i) out.plots["psi_" + tag(t)].emplace_back(p.rho[i], p.psi[i]);
    check_below(out, "collapse_" + tag(t), diff, 1e-4);
  }
}

std::string timestamp() {
  const char* epoch = std::getenv("SOURCE_DATE_EPOCH");
  if (!epoch) return {};
  const std::time_t t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct HelpRequested {
  std::string text;
};

}  // namespace

const char* to_string(Command c) {
  for (const auto& e : kCommands)
    if (e.command == c) return e.name;
  return "?";
}

Command command_from_string(const std::string& s) {
  for (const auto& e : kCommands)
    if (s == e.name) return e.command;
  throw UsageError("unknown command '" + s + "'");
}

bool RunConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw UsageError("missing key in '" + line + "'");
    kv.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return kv;
}

RunConfig apply_key_values(RunConfig c, const KeyValues& kv, bool& command_seen) {
  for (const auto& [key, value] : kv) {
    if (key == "command") {
      c.command = command_from_string(value);
      command_seen = true;
    } else if (key == "t_values" || key == "t") {
      c.t_values.clear();
      for (const auto& item : split(value, ',')) c.t_values.push_back(parse_positive(key, item));
      if (c.t_values.empty()) bad_value(key, value, "empty list");
    } else if (key == "k") {
      const long long k = parse_integer(key, value);
      if (k <= 0) bad_value(key, value, "must be positive");
      c.k = static_cast<int>(k);
    } else if (key == "epsilon") {
      c.epsilon = parse_positive(key, value);
    } else if (key == "r_min") {
      c.r_min = parse_positive(key, value);
    } else if (key == "r_max") {
      c.r_max = parse_positive(key, value);
    } else if (key == "n_r") {
      c.n_r = parse_count(key, value, 8);
    } else if (key == "n_theta") {
      c.n_theta = parse_count(key, value, 4);
    } else if (key == "grid") {
      const auto parts = split(value, ',');
      if (parts.size() != 2) bad_value(key, value, "expected n_r,n_theta");
      c.n_r = parse_count(key, parts[0], 8);
      c.n_theta = parse_count(key, parts[1], 4);
    } else if (key == "spacing") {
      if (value == "log") c.spacing = Spacing::uniform_log_r;
      else if (value == "uniform") c.spacing = Spacing::uniform_r;
      else bad_value(key, value, "expected log or uniform");
    } else if (key == "output_dir" || key == "out") {
      if (value.empty()) bad_value(key, value, "empty path");
      c.output_dir = value;
    } else if (key == "formats" || key == "format") {
      c.formats.clear();
      for (const auto& f : split(value, ',')) {
        if (std::find(kFormats.begin(), kFormats.end(), f) == kFormats.end()) bad_value(key, f, "expected csv, json or plotdata");
        if (!c.wants(f)) c.formats.push_back(f);
      }
      if (c.formats.empty()) bad_value(key, value, "empty list");
    } else if (key == "seed") {
      c.seed = parse_seed(key, value);
    } else {
      throw UsageError("unknown key '" + key + "'");
    }
  }
  return c;
}

RunConfig validate(RunConfig c) {
  if (c.t_values.empty()) throw UsageError("t_values must not be empty");
  for (double t : c.t_values)
    if (!(t > 0.0) || !std::isfinite(t)) throw UsageError("invalid value for 't_values': " + format_number(t));
  std::sort(c.t_values.begin(), c.t_values.end());
  c.t_values.erase(std::unique(c.t_values.begin(), c.t_values.end()), c.t_values.end());
  if (c.k <= 0) throw UsageError("invalid value for 'k': must be positive");
  if (!(c.epsilon > 0.0)) throw UsageError("invalid value for 'epsilon': must be positive");
  if (!(c.r_min > 0.0)) throw UsageError("invalid value for 'r_min': must be positive");
  if (c.r_max == 0.0) c.r_max = r_of_rho(12.0, c.t_values.front(), c.k);
  if (!(c.r_max > c.r_min)) throw UsageError("invalid value for 'r_max': must exceed r_min");
  if (c.n_r < 8) throw UsageError("invalid value for 'n_r': must be at least 8");
  if (c.n_theta < 4) throw UsageError("invalid value for 'n_theta': must be at least 4");
  if (c.formats.empty()) throw UsageError("invalid value for 'formats': empty list");
  return c;
}

std::string emit_config(const RunConfig& config) { return canonical(config, true); }

RunConfig parse_config_text(const std::string& text) {
  bool seen = false;
  RunConfig c = apply_key_values(RunConfig{}, parse_key_values(text), seen);
  if (!seen) throw UsageError("missing command");
  return validate(std::move(c));
}

std::uint64_t config_hash(const RunConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical(config, false)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

RunConfig parse_args(int argc, const char* const* argv) {
  CLI::App app{"Numerical laboratory for Hitchin's self-duality equations", "hitchin-lab"};
  std::string command, config_file, k, epsilon, grid, r_min, r_max, spacing, out, seed;
  std::vector<std::string> ts, formats;
  std::string command_list;
  for (const auto& e : kCommands) command_list += std::string(command_list.empty() ? "" : ", ") + e.name;
  app.add_option("command,--command", command, "One of: " + command_list);
  app.add_option("--config", config_file, "key = value configuration file");
  app.add_option("--t", ts, "t values, comma separated")->delimiter(',');
  app.add_option("--k", k, "Zero order k");
  app.add_option("--epsilon", epsilon, "Gluing radius");
  app.add_option("--grid", grid, "n_r,n_theta");
  app.add_option("--r-min", r_min, "Inner radius");
  app.add_option("--r-max", r_max, "Outer radius");
  app.add_option("--spacing", spacing, "log or uniform");
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", seed, "Seed for randomized checks");
  app.add_option("--format", formats, "csv, json, plotdata")->delimiter(',');
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunConfig base;
  if (const char* env = std::getenv("HITCHIN_LAB_OUT"); env && *env) base.output_dir = env;
  bool seen = false;
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw UsageError("cannot read config file '" + config_file + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    base = apply_key_values(base, parse_key_values(buf.str()), seen);
  }
  KeyValues flags;
  auto add = [&](const char* key, const std::string& v) {
    if (!v.empty()) flags.emplace_back(key, v);
  };
  add("command", command);
  if (!ts.empty()) {
    std::string joined;
    for (const auto& t : ts) joined += (joined.empty() ? "" : ",") + t;
    flags.emplace_back("t_values", joined);
  }
  add("k", k);
  add("epsilon", epsilon);
  add("grid", grid);
  add("r_min", r_min);
  add("r_max", r_max);
  add("spacing", spacing);
  add("output_dir", out);
  add("seed", seed);
  if (!formats.empty()) {
    std::string joined;
    for (const auto& f : formats) joined += (joined.empty() ? "" : ",") + f;
    flags.emplace_back("formats", joined);
  }
  base = apply_key_values(base, flags, seen);
  if (!seen) throw UsageError("missing command");
  return validate(std::move(base));
}

bool RunResult::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

nlohmann::ordered_json RunResult::report() const {
  nlohmann::ordered_json j;
  j["tool"] = "hitchin-lab";
  j["version"] = kVersion;
  j["command"] = to_string(config.command);
  auto cfg = nlohmann::ordered_json::object();
  for (const auto& [key, value] : parse_key_values(canonical(config, false))) cfg[key] = value;
  j["config"] = cfg;
  char hash[19];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(config)));
  j["config_hash"] = hash;
  j["seed"] = config.seed;
  const std::string ts = timestamp();
  j["timestamp"] = ts.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(ts);
  j["columns"] = table.headers;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json r;
    for (std::size_t i = 0; i < row.size(); ++i) r[table.headers[i]] = row[i];
    rows.push_back(r);
  }
  j["rows"] = rows;
  j["summary"] = summary;
  auto cs = nlohmann::ordered_json::array();
  for (const auto& c : checks) cs.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"passed", c.passed}});
  j["checks"] = cs;
  j["passed"] = ok();
  return j;
}

RunResult run(const RunConfig& config) {
  RunResult out;
  out.config = validate(config);
  switch (out.config.command) {
    case Command::solve_ode: run_solve_ode(out); break;
    case Command::fiducial: run_fiducial(out); break;
    case Command::limiting: run_limiting(out); break;
    case Command::residual: run_residual(out); break;
    case Command::glue: run_glue(out); break;
    case Command::lt_spectrum: run_lt_spectrum(out); break;
    case Command::hk_check: run_hk_check(out); break;
    case Command::decay: run_decay(out); break;
    case Command::collapse: run_collapse(out); break;
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string format_csv(const Table& table) {
  std::string s;
  for (std::size_t i = 0; i < table.headers.size(); ++i) s += (i ? "," : "") + table.headers[i];
  s += "\r\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) s += (i ? "," : "") + format_number(row[i]);
    s += "\r\n";
  }
  return s;
}

std::vector<std::filesystem::path> write_outputs(const RunResult& result) {
  namespace fs = std::filesystem;
  const fs::path dir(result.config.output_dir);
  fs::create_directories(dir);
  std::vector<fs::path> written;
  auto write = [&](const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!(f << text)) throw std::runtime_error("cannot write " + p.string());
    written.push_back(p);
  };
  if (result.config.wants("csv")) write(dir / "table.csv", format_csv(result.table));
  if (result.config.wants("json")) write(dir / "report.json", result.report().dump(2) + "\n");
  if (result.config.wants("plotdata")) {
    for (const auto& [name, points] : result.plots) {
      std::string text;
      for (const auto& [x, y] : points) text += format_number(x) + " " + format_number(y) + "\n";
      write(dir / (name + ".dat"), text);
    }
  }
  return written;
}

int main_entry(int argc, const char* const* argv) {
  RunConfig config;
  try {
    config = parse_args(argc, argv);
  } catch (const HelpRequested& h) {
    std::cout << h.text;
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\nrun 'hitchin-lab --help' for usage\n";
    return 2;
  }
  try {
    const RunResult result = run(config);
    write_outputs(result);
    for (const auto& c : result.checks)
      std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << format_number(c.value) << " (threshold "
                << format_number(c.threshold) << ")\n";
    for (const auto& [key, value] : result.summary.items())
      if (value.is_number()) std::cout << key << " = " << format_number(value.get<double>()) << '\n';
    std::cout << (result.ok() ? "all checks passed" : "some checks failed") << " (" << result.config.output_dir
              << ")\n";
    return result.ok() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace hitchin::lab
