#include <fmt/format.h>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hopflab/barriers.hpp"
#include "hopflab/config.hpp"
#include "hopflab/convex_geometry.hpp"
#include "hopflab/decay_analysis.hpp"
#include "hopflab/elliptic_operator.hpp"
#include "hopflab/error.hpp"
#include "hopflab/fd_solver.hpp"
#include "hopflab/modulus.hpp"
#include "hopflab/reports.hpp"

using namespace hopflab;

namespace {

constexpr int kOk = 0;
constexpr int kCertificateFailure = 1;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;

struct Command {
  std::string name;
  std::string description;
  std::vector<std::string> keys;
  int (*run)(const RunConfig&);
};

std::string config_block(const RunConfig& cfg) {
  std::istringstream in(cfg.resolved());
  std::string line, out;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    out += "config." + line.substr(0, eq) + ": " + line.substr(eq + 1) + "\n";
  }
  return out;
}

std::string matrix_text(const Eigen::MatrixXd& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    s += i ? ", [" : "[";
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += fmt::format("{}{:.17g}", j ? ", " : "", m(i, j));
    s += "]";
  }
  return s + "]";
}

SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions o;
  o.tol = cfg.real("tol");
  o.max_iter = static_cast<int>(cfg.integer("max_iter"));
  o.direct_below = static_cast<std::size_t>(cfg.integer("direct_below"));
  return o;
}

HopfExperiment experiment(const RunConfig& cfg) {
  HopfExperiment e;
  e.profile = cfg.text("profile");
  e.op = cfg.text("op");
  e.R0 = cfg.real("R0");
  e.K = static_cast<int>(cfg.integer("K"));
  e.h = cfg.real("h");
  e.bc = cfg.text("bc");
  e.ladder_base = cfg.real("ladder_base");
  e.trace_window = static_cast<int>(cfg.integer("trace_window"));
  e.seed = cfg.seed();
  e.solver = solver_options(cfg);
  return e;
}

int cmd_modulus(const RunConfig& cfg) {
  const auto& csv = cfg.text("csv");
  const Modulus sigma = [&] {
    if (csv.empty()) return Modulus::preset(cfg.text("preset"));
    std::ifstream in(csv);
    if (!in) fail(ErrorCode::ConfigError, fmt::format("cannot read modulus CSV '{}'", csv));
    return Modulus::from_csv(in, csv);
  }();
  const auto inv = check_invariants(sigma);
  const auto v = dini_classify(sigma, static_cast<int>(cfg.integer("depth")));

  std::ostringstream table;
  write_modulus_table(table, sigma, static_cast<std::size_t>(cfg.integer("grid")));

  std::string s = fmt::format("modulus: {}\nverdict: {}\nnumeric_verdict: {}\nanalytic_override: {}\n", sigma.id(),
                              to_string(v.verdict), to_string(v.numeric_verdict), v.analytic_override);
  s += fmt::format("growth_exponent_estimate: {:.17g}\n", v.growth_exponent_estimate);
  s += fmt::format("invariants_ok: {}\nworst_monotone_defect: {:.3e}\nworst_ratio_defect: {:.3e}\n", inv.ok(),
                   inv.worst_monotone_defect, inv.worst_ratio_defect);
  s += config_block(cfg);

  OutputSet out(cfg.output_dir());
  out.write("modulus.csv", table.str());
  out.write("modulus_summary.txt", s);
  out.commit();
  std::cout << s;
  return kOk;
}

std::vector<double> geometry_radii(const RunConfig& cfg) {
  std::vector<double> radii;
  const double R0 = cfg.real("R0");
  if (cfg.text("r").empty()) {
    for (long k = 1; k <= std::max(1L, cfg.integer("K")); ++k) radii.push_back(std::ldexp(R0, static_cast<int>(-k)));
    return radii;
  }
  for (const auto& item : split_list(cfg.text("r"))) {
    double r = 0.0;
    try {
      std::size_t used = 0;
      r = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorCode::ConfigError, fmt::format("radius '{}' is not a number", item));
    }
    if (!(r > 0.0 && 2.0 * r <= R0)) fail(ErrorCode::ConfigError, fmt::format("radius {} outside (0, R0/2]", r));
    radii.push_back(r);
  }
  return radii;
}

int cmd_geometry(const RunConfig& cfg) {
  const double R0 = cfg.real("R0");
  const auto F = BoundaryProfile::preset(cfg.text("profile"), R0, 2);
  const auto radii = geometry_radii(cfg);
  const auto inv = check_invariants(F, static_cast<int>(std::min(cfg.integer("samples"), 100000L)), cfg.seed());

  std::ostringstream table;
  write_geometry_table(table, F, radii);
  bool sandwich_ok = true;
  for (double r : radii) sandwich_ok = sandwich_ok && sandwich_check(F, r).holds();

  std::string s = fmt::format("profile: {}\ninvariants_ok: {}\nworst_midpoint_defect: {:.3e}\nsandwich_ok: {}\n", F.id(),
                              inv.ok(), inv.worst_midpoint_defect, sandwich_ok);
  const auto frame = extremal_frame(F, radii.front());
  s += fmt::format("frame_r: {:.17g}\nframe_degenerate: {}\n", frame.r, frame.degenerate);
  if (!frame.degenerate) {
    s += fmt::format("frame_phi: {:.17g}\nframe_x_star: {}\n", frame.phi, matrix_text(frame.x_star.transpose()));
    const auto ball = ball_inclusion_check(F, frame, cfg.real("nu"), static_cast<int>(cfg.integer("samples")));
    s += fmt::format("ball_inside: {}\nball_margin: {:.17g}\nball_rho0: {:.17g}\nsmallness_violated: {}\n", ball.inside,
                     ball.margin, ball.rho0, ball.smallness_violated);
  }
  s += config_block(cfg);

  OutputSet out(cfg.output_dir());
  out.write("geometry.csv", table.str());
  out.write("geometry_summary.txt", s);
  out.commit();
  std::cout << s;
  return inv.ok() && sandwich_ok ? kOk : kCertificateFailure;
}

int cmd_verify(const RunConfig& cfg) {
  const double nu = cfg.real("nu");
  const int n = static_cast<int>(cfg.integer("n"));
  const int samples = static_cast<int>(cfg.integer("samples"));
  const auto seed = cfg.seed();
  double s = static_cast<double>(n) / (nu * nu);
  if (cfg.text("s") != "auto") {
    try {
      std::size_t used = 0;
      s = std::stod(cfg.text("s"), &used);
      if (used != cfg.text("s").size()) throw std::invalid_argument("s");
    } catch (const std::exception&) {
      fail(ErrorCode::ConfigError, fmt::format("s must be a number or auto, got '{}'", cfg.text("s")));
    }
  }

  const auto cyl = cylinder_barrier_certificate(nu, n, samples, seed);
  const auto rad = radial_exponent_certificate(s, nu, n, samples, seed);
  const auto sw = sandwich_suite(static_cast<int>(cfg.integer("profiles")), cfg.real("R0"), seed);
  const auto dr = drift_property_suite(samples, seed);

  std::string text = "# cylinder barrier\n" + to_text(cyl) + "# radial barrier\n" + to_text(rad) + "# sandwich\n" +
                     to_text(sw) + "# drift correction\n" + to_text(dr);
  const bool ok = cyl.pass && rad.pass && sw.pass() && dr.pass();
  text += fmt::format("all_pass: {}\n", ok);
  text += config_block(cfg);

  OutputSet out(cfg.output_dir());
  out.write("verify_summary.txt", text);
  out.commit();

  std::cout << fmt::format("cylinder_barrier: {}\nradial_barrier: {}\nsandwich: {}\ndrift_correction: {}\n",
                           cyl.pass ? "pass" : "FAIL", rad.pass ? "pass" : "FAIL", sw.pass() ? "pass" : "FAIL",
                           dr.pass() ? "pass" : "FAIL");
  if (!cyl.pass) {
    std::cerr << fmt::format("cylinder barrier failed: bracket {:.17g} at a = {}\n", cyl.bracket_max,
                             matrix_text(cyl.worst_matrix));
  }
  if (!rad.pass) {
    std::cerr << fmt::format("radial barrier failed at s = {}: form {:.17g} at a = {}, direction {}\n", s, rad.min_form,
                             matrix_text(rad.worst_matrix), matrix_text(rad.worst_direction.transpose()));
  }
  if (!sw.pass()) std::cerr << "sandwich failed: " << sw.first_failure << '\n';
  if (!dr.pass()) std::cerr << "drift correction failed: " << dr.first_failure << '\n';
  return ok ? kOk : kCertificateFailure;
}

int cmd_solve(const RunConfig& cfg) {
  const double R0 = cfg.real("R0");
  const auto F = BoundaryProfile::preset(cfg.text("profile"), R0, 2);
  const auto op = EllipticOperator::preset(cfg.text("op"), 2);
  const auto bc = boundary_data(cfg.text("bc"), F);
  const auto dom = discrete_domain(F, GridSpec{cfg.real("h"), R0, cfg.real("H"), 0.0});
  const auto sys = discretize(op, dom, bc);
  const auto mm = mmatrix_check(sys.A);
  const auto sol = solve(sys, solver_options(cfg));

  std::ostringstream csv;
  write_solution_csv(csv, sol);
  std::string s = fmt::format("profile: {}\nop: {}\nbc: {}\nunknowns: {}\nmmatrix_ok: {}\nmethod: {}\niterations: {}\n",
                              F.id(), op.id(), bc.kind, dom->unknowns(), mm.ok(), sol.method, sol.iterations);
  s += fmt::format("residual: {:.3e}\n", sol.residual_norm);
  s += config_block(cfg);

  OutputSet out(cfg.output_dir());
  out.write("solution.csv", csv.str());
  if (cfg.text("dump") == "true") {
    std::ostringstream coo, rhs;
    write_coo(coo, sys.A);
    write_vector(rhs, sys.rhs);
    out.write("matrix.coo", coo.str());
    out.write("rhs.txt", rhs.str());
  }
  out.write("solve_summary.txt", s);
  out.commit();
  std::cout << s;
  return kOk;
}

int cmd_decay(const RunConfig& cfg) {
  const auto shared = experiment(cfg);
  const double kappa = cfg.real("kappa");
  const int kp = static_cast<int>(cfg.integer("K_product"));

  if (!cfg.text("contrast").empty()) {
    const auto t = contrast_suite(split_list(cfg.text("contrast")), shared.op, shared, kappa, kp);
    std::ostringstream csv;
    write_contrast_csv(csv, t);
    std::string s = fmt::format("shared_kappa: {:.17g}\nshared_K: {}\nconsistent: {}\n", t.shared_kappa, t.shared_K,
                                t.consistent);
    for (const auto& row : t.rows) {
      s += fmt::format("{}: dini={} trend={} kappa={:.6g} product_K={:.6g} verdict={}\n", row.profile,
                       to_string(row.dini), row.trend, row.kappa, row.product_K, to_string(row.verdict));
    }
    s += config_block(cfg);
    OutputSet out(cfg.output_dir());
    for (const auto& row : t.rows) {
      const std::string dir = "contrast/" + path_safe(row.profile) + "/";
      std::ostringstream one;
      write_decay_csv(one, row.report);
      out.write(dir + "decay.csv", one.str());
      out.write(dir + "decay_summary.txt", decay_summary(row.report) + config_block(cfg));
    }
    out.write("contrast.csv", csv.str());
    out.write("contrast_summary.txt", s);
    out.commit();
    std::cout << csv.str() << s;
    return t.consistent ? kOk : kCertificateFailure;
  }

  const auto rep = run_experiment(shared);
  const auto F = BoundaryProfile::preset(shared.profile, shared.R0, 2);
  const auto pb = product_bound(F, kappa, kp);
  std::ostringstream csv;
  write_decay_csv(csv, rep);
  std::string s = decay_summary(rep);
  s += fmt::format("product_kappa: {:.17g}\nproduct_K: {}\nproduct_partial_K: {:.17g}\nproduct_limit_lower: {:.17g}\n",
                   kappa, kp, pb.partial.back(), pb.limit_lower);
  s += config_block(cfg);
  OutputSet out(cfg.output_dir());
  out.write("decay.csv", csv.str());
  out.write("decay_summary.txt", s);
  out.commit();
  std::cout << s;
  return kOk;
}

const std::vector<Command>& commands() {
  static const std::vector<Command> list = {
      {"modulus", "Tabulate a modulus of continuity and classify its Dini integral",
       {"preset", "csv", "grid", "depth", "seed", "out"}, cmd_modulus},
      {"geometry", "Boundary modulus table, sandwich bounds and extremal frame of a profile",
       {"profile", "R0", "r", "K", "nu", "samples", "seed", "out"}, cmd_geometry},
      {"verify", "Barrier certificates, sandwich suite and drift-correction property",
       {"nu", "n", "s", "samples", "profiles", "R0", "seed", "out"}, cmd_verify},
      {"solve", "Finite-difference Dirichlet solve on a profile domain",
       {"profile", "op", "bc", "h", "R0", "H", "tol", "max_iter", "direct_below", "dump", "seed", "out"}, cmd_solve},
      {"decay", "Dyadic oscillation decay, Hopf trace verdict and product bound",
       {"profile", "op", "bc", "h", "R0", "K", "ladder_base", "trace_window", "kappa", "K_product", "contrast", "tol",
        "max_iter", "direct_below", "seed", "out"},
       cmd_decay},
  };
  return list;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hopflab: boundary point experiments for convex domains"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");
  app.footer("Outputs go to --out, else $HOPFLAB_OUT, else ./hopflab_out.\n"
             "Exit codes: 0 success, 1 certificate failure, 2 configuration error, 3 numerical failure.");

  std::string config_file;
  std::map<std::string, std::string> flags;
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : commands()) {
    auto* sub = app.add_subcommand(c.name, c.description);
    sub->set_help_flag("--help", "Print this help message and exit");
    sub->add_option("--config", config_file, "key=value file applied before the flags");
    for (const auto& key : c.keys) {
      const ConfigKey* k = find_key(key);
      sub->add_option("--" + key, flags[key], fmt::format("{} (default: {})", k->help, k->fallback.empty() ? "none" : k->fallback));
    }
    subs[c.name] = sub;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  for (const auto& c : commands()) {
    CLI::App* sub = subs[c.name];
    if (!sub->parsed()) continue;
    try {
      RunConfig cfg(c.name);
      if (!config_file.empty()) cfg.load_file(config_file);
      for (const auto& key : c.keys) {
        if (sub->count("--" + key) > 0) cfg.set(key, flags[key]);
      }
      return c.run(cfg);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      return is_numerical(e.code()) ? kNumericalFailure : kConfigError;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kNumericalFailure;
    }
  }
  return kConfigError;
}
