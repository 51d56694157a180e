#include <random>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hitchin/fiducial.hpp"
#include "hitchin/gluing.hpp"
#include "hitchin/hyperkahler.hpp"
#include "hitchin/painleve.hpp"
#include "lab.hpp"

namespace py = pybind11;
using namespace hitchin;

namespace {

py::array_t<double> array(const std::vector<double>& v) { return py::array_t<double>(v.size(), v.data()); }

std::vector<double> nodes(const RadialGrid& g) { return {g.nodes().begin(), g.nodes().end()}; }

py::dict profile_dict(const RadialProfile& p) {
  py::dict d;
  d["t"] = p.t;
  d["k"] = p.k;
  d["r"] = array(nodes(p.grid));
  d["h"] = array(p.h);
  d["h_prime"] = array(p.h_prime);
  d["r_h_prime"] = array(p.r_h_prime());
  d["indicial_constant"] = p.indicial_constant;
  return d;
}

RadialGrid radial(double r_min, double r_max, std::size_t n, const std::string& spacing) {
  if (spacing == "log") return RadialGrid::log_uniform(r_min, r_max, n);
  if (spacing == "uniform") return RadialGrid::uniform(r_min, r_max, n);
  throw ContractError("spacing must be 'log' or 'uniform'");
}

py::dict norms_dict(const Norms& n) {
  py::dict d;
  d["sup"] = n.sup;
  d["l2"] = n.l2;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hitchin equation laboratory: radial ODE, fiducial solutions, gluing and hyperkahler checks";
  m.attr("__version__") = lab::kVersion;
  m.attr("DEFAULT_SEED") = lab::kDefaultSeed;

  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<lab::UsageError>(m, "UsageError", PyExc_ValueError);

  m.def("rho_of", &rho_of, py::arg("r"), py::arg("t"), py::arg("k") = 1);
  m.def("r_of_rho", &r_of_rho, py::arg("rho"), py::arg("t"), py::arg("k") = 1);

  m.def(
      "solve_ode",
      [](double t, int k, std::size_t n, double rho_max) {
        const RadialProfile p = solve_bvp(t, k, default_radial_grid(t, k, n, rho_max));
        py::dict d = profile_dict(p);
        d["ode_residual"] = array(ode_residual(p));
        d["ode_residual_sup"] = ode_residual_sup(p);
        return d;
      },
      py::arg("t"), py::arg("k") = 1, py::arg("n") = 513, py::arg("rho_max") = 12.0,
      "Collocation solution of h'' + h'/r = 8 t^2 r^k sinh 2h on the default log grid.");

  m.def(
      "solve_ode_on",
      [](double t, int k, double r_min, double r_max, std::size_t n, const std::string& spacing) {
        const RadialProfile p = solve_bvp(t, k, radial(r_min, r_max, n, spacing));
        py::dict d = profile_dict(p);
        d["ode_residual_sup"] = ode_residual_sup(p);
        return d;
      },
      py::arg("t"), py::arg("k"), py::arg("r_min"), py::arg("r_max"), py::arg("n"), py::arg("spacing") = "log");

  m.def(
      "shooting_oracle",
      [](double t, int k, const std::vector<double>& r) { return profile_dict(shooting_oracle(t, k, r)); },
      py::arg("t"), py::arg("k"), py::arg("r"));

  m.def(
      "painleve",
      [](double t, int k, std::size_t n) {
        const PainleveProfile p = to_painleve(solve_bvp(t, k, default_radial_grid(t, k, n)));
        py::dict d;
        d["rho"] = array(p.rho);
        d["psi"] = array(p.psi);
        d["residual_sup"] = painleve_residual(p).sup;
        return d;
      },
      py::arg("t"), py::arg("k") = 1, py::arg("n") = 513);

  m.def(
      "decay_fit",
      [](double t, int k, std::size_t n, double rho_lo, double rho_hi) {
        const DecayFit f = decay_fit(solve_bvp(t, k, default_radial_grid(t, k, n)), rho_lo, rho_hi);
        return py::make_tuple(f.rate, f.amplitude);
      },
      py::arg("t"), py::arg("k") = 1, py::arg("n") = 1025, py::arg("rho_lo") = 4.0, py::arg("rho_hi") = 10.8,
      "Least-squares (rate, amplitude) of log h = log A - rate rho - log(rho)/2.");

  m.def(
      "fiducial_residual",
      [](double t, int k, std::size_t n_r, std::size_t n_theta, double lo, double hi) {
        const FiducialSolution sol = make_fiducial(t, k, fiducial_grid(t, t, k, n_r, n_theta));
        const HitchinResidual res = hitchin_residual(sol.config, t, {lo, hi});
        py::dict d;
        d["first"] = norms_dict(res.first_norms);
        d["second"] = norms_dict(res.second_norms);
        return d;
      },
      py::arg("t"), py::arg("k") = 1, py::arg("n_r") = 513, py::arg("n_theta") = 16, py::arg("lo") = 0.05,
      py::arg("hi") = 2.0);

  m.def(
      "convergence_report",
      [](const std::vector<double>& ts, int k, double lo, double hi) {
        const ConvergenceReport rep = convergence_report(ts, k, {lo, hi});
        py::dict d;
        std::vector<double> da, dp;
        for (const auto& row : rep.rows) {
          da.push_back(row.distance_a);
          dp.push_back(row.distance_phi);
        }
        d["distance_a"] = da;
        d["distance_phi"] = dp;
        d["rate_a"] = rep.rate_a;
        d["rate_phi"] = rep.rate_phi;
        d["expected_rate"] = rep.expected_rate;
        d["monotone"] = rep.monotone;
        return d;
      },
      py::arg("t_list"), py::arg("k") = 1, py::arg("lo") = 0.5, py::arg("hi") = 1.0);

  m.def("bessel_neumann_eigenvalues", &bessel_neumann_eigenvalues, py::arg("n"), py::arg("a"), py::arg("b"),
        py::arg("count"));

  m.def(
      "mode_eigenvalues",
      [](int n, double t, const std::string& background, int k, double a, double b, std::size_t n_r,
         std::size_t count) {
        const RadialGrid g = RadialGrid::uniform(a, b, n_r);
        RadialBackground bg = background == "trivial"    ? trivial_background(g)
                              : background == "limiting" ? limiting_background(k, g)
                                                         : throw ContractError("background must be trivial or limiting");
        return assemble_Lt(n, t, bg).smallest_eigenvalues(count);
      },
      py::arg("n"), py::arg("t"), py::arg("background") = "limiting", py::arg("k") = 1, py::arg("a") = 1.0,
      py::arg("b") = 2.0, py::arg("n_r") = 257, py::arg("count") = 3,
      "Smallest eigenvalues of the Neumann mode operator L_t on the annulus [a, b].");

  m.def(
      "inverse_norm_report",
      [](const std::vector<double>& ts, int k, std::size_t n_r, std::size_t n_theta) {
        double t_lo = ts.empty() ? 1.0 : *std::min_element(ts.begin(), ts.end());
        double t_hi = ts.empty() ? 1.0 : *std::max_element(ts.begin(), ts.end());
        const auto grid = fiducial_grid(t_lo, t_hi, k, n_r, n_theta);
        const InverseNormReport rep =
            inverse_norm_report(ts, [&](double t) { return radial_background(make_fiducial(t, k, grid)); });
        py::list rows;
        for (const auto& r : rep.rows) {
          py::dict d;
          d["t"] = r.t;
          d["min_singular"] = r.min_singular;
          d["argmin_mode"] = r.argmin_mode;
          d["inverse_norm"] = r.inverse_norm;
          d["h2_bound"] = r.h2_bound;
          d["h2_measured"] = r.h2_measured;
          rows.append(d);
        }
        return rows;
      },
      py::arg("t_list"), py::arg("k") = 1, py::arg("n_r") = 257, py::arg("n_theta") = 8);

  m.def(
      "contraction_probe",
      [](double t, double epsilon, int k, std::size_t n_r, std::size_t n_theta) {
        ContractionOptions opt;
        opt.k = k;
        opt.n_r = n_r;
        opt.n_theta = n_theta;
        const ContractionProbe p = contraction_probe(t, epsilon, opt);
        py::dict d;
        d["t"] = p.t;
        d["error_norm"] = p.error_norm;
        d["error_sup"] = p.error_sup;
        d["inverse_norm"] = p.inverse_norm;
        d["product"] = p.product;
        d["feasible"] = p.feasible;
        return d;
      },
      py::arg("t"), py::arg("epsilon") = 1.0, py::arg("k") = 1, py::arg("n_r") = 513, py::arg("n_theta") = 32);

  m.def(
      "hk_check",
      [](std::uint64_t seed, std::size_t n, int trials) {
        const GridRef torus = share(TorusGrid(2.0, 3.0, n, n));
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd;
        auto random_pair = [&] {
          MatrixField a(torus, FormDegree::zero_one), p(torus, FormDegree::one_zero);
          for (std::size_t i = 0; i < a.size(); ++i) {
            for (MatrixField* f : {&a, &p}) {
              Mat2 x;
              x << Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng)), Complex(nd(rng), nd(rng));
              x.diagonal().array() -= 0.5 * x.trace();
              (*f)[i] = x;
            }
          }
          return TangentPair(std::move(a), std::move(p));
        };
        double q = 0.0, iso = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
          const TangentPair v = random_pair(), w = random_pair();
          double s = 0.0;
          for (std::size_t i = 0; i < v.alpha().size(); ++i) s = std::max({s, v.alpha()[i].norm(), v.phi_dot()[i].norm()});
          q = std::max(q, max_difference(apply_I(1, apply_I(2, v)), apply_I(3, v)) / s);
          for (int j = 1; j <= 3; ++j)
            q = std::max(q, max_difference(apply_I(j, apply_I(j, v)), Complex(-1.0) * v) / s);
          const double g = l2_inner(v, w), ref = std::sqrt(l2_inner(v, v) * l2_inner(w, w));
          for (int j = 1; j <= 3; ++j) iso = std::max(iso, std::abs(l2_inner(apply_I(j, v), apply_I(j, w)) - g) / ref);
        }
        py::dict d;
        d["quaternion_max_defect"] = q;
        d["isometry_max_defect"] = iso;
        return d;
      },
      py::arg("seed") = lab::kDefaultSeed, py::arg("n") = 16, py::arg("trials") = 100);

  m.def(
      "_run_config",
      [](const std::string& text) { return lab::run(lab::parse_config_text(text)).report().dump(); },
      py::arg("config_text"));

  m.def(
      "main",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "hitchin-lab");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        return lab::main_entry(static_cast<int>(argv.size()), argv.data());
      },
      py::arg("args"), "Run the hitchin-lab command line with the given arguments; returns the exit code.");
}
