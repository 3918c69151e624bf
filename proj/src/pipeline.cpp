#include "bandshift/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "bandshift/errors.hpp"
#include "json.hpp"

namespace bandshift {

namespace {

using nlohmann::ordered_json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::filesystem::path output_path(const RunConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.output_dir);
  return std::filesystem::path(c.output_dir) / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

struct Csv {
  std::string text;
  explicit Csv(const std::vector<std::string>& header) { row(header); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text += (i ? "," : "") + cells[i];
    text += "\n";
  }
};

void write_metadata(const std::string& subcommand, const RunConfig& c, const ordered_json& extra) {
  ordered_json meta;
  meta["subcommand"] = subcommand;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : c.echo()) cfg[k] = v;
  meta["config"] = cfg;
  meta["profiles"] = {
      {"chi", "psi(|x| / (r1 M^{-1/delta})): 1 below the plateau, 0 beyond 1, smooth step between"},
      {"theta", "M/3 up to M/6, then M/3 plus the integral of a smooth step of width M/3; equals t from M/2 on"},
      {"ids", "counting over the BZ grid"},
      {"rho_prime", "Gaussian-smoothed band histogram"},
  };
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  write_text(output_path(c, "metadata.json"), meta.dump(2) + "\n");
}

void write_data(const RunConfig& c, const std::string& stem, const Csv& csv, const ordered_json& json) {
  if (c.format == "json")
    write_text(output_path(c, stem + ".json"), json.dump(2) + "\n");
  else
    write_text(output_path(c, stem + ".csv"), csv.text);
}

int run_bands(const RunConfig& c, std::ostream& log) {
  const Problem problem = make_problem(c);
  const Grid grid = bz_grid(problem.dual(), c.bz_resolution);
  const BandSamples samples = sample_bands(problem, grid, c.p_max);
  std::vector<std::string> header;
  for (int i = 1; i <= c.dimension; ++i) header.push_back("k" + std::to_string(i));
  for (int p = 1; p <= c.p_max; ++p) header.push_back("lambda" + std::to_string(p));
  Csv csv(header);
  ordered_json rows = ordered_json::array();
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    std::vector<std::string> cells;
    ordered_json kv = ordered_json::array(), lv = ordered_json::array();
    for (int i = 0; i < c.dimension; ++i) {
      cells.push_back(num(grid.points(i, k)));
      kv.push_back(grid.points(i, k));
    }
    for (int p = 0; p < c.p_max; ++p) {
      cells.push_back(num(samples.values(p, k)));
      lv.push_back(samples.values(p, k));
    }
    csv.row(cells);
    rows.push_back({{"k", kv}, {"lambda", lv}});
  }
  write_data(c, "bands", csv, ordered_json{{"bands", rows}});
  write_metadata("bands", c, {{"basis_size", problem.basis_size()}, {"k_points", grid.size()}});
  log << "bands: " << grid.size() << " k-points, " << c.p_max << " bands\n";
  return kExitOk;
}

int run_dos(const RunConfig& c, std::ostream& log) {
  const Problem problem = make_problem(c);
  const Grid grid = bz_grid(problem.dual(), c.bz_resolution);
  const std::vector<double> energies = uniform_energies(c.energy_min, c.energy_max, c.energy_points);
  const double sigma = c.kernel_width > 0 ? c.kernel_width : 4 * (energies[1] - energies[0]);
  const int p = band_cutoff(problem, grid, c.energy_max + 9 * sigma);
  const DosTable table = dos_density(problem, energies, grid, p, sigma);
  Csv csv({"energy", "rho", "rho_prime"});
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < energies.size(); ++i) {
    csv.row({num(energies[i]), num(table.rho[i]), num(table.rho_prime[i])});
    rows.push_back({{"energy", energies[i]}, {"rho", table.rho[i]}, {"rho_prime", table.rho_prime[i]}});
  }
  write_data(c, "dos", csv, ordered_json{{"kernel_width", sigma}, {"dos", rows}});
  write_metadata("dos", c, {{"kernel_width", sigma}, {"bands_used", p}});
  log << "dos: " << energies.size() << " energies, kernel width " << sigma << "\n";
  return kExitOk;
}

int run_certify(const RunConfig& c, std::ostream& log) {
  const Problem problem = make_problem(c);
  const DecayPotential W = make_decay(c);
  const Grid grid = bz_grid(problem.dual(), c.bz_resolution);
  CertifyOptions opts;
  opts.energy_samples = c.certify_energy_samples;
  opts.edge_margin = c.certify_edge_margin;
  if (c.fd_step > 0) opts.fd_step = c.fd_step;
  const WindowCertificate cert = certify_window(problem, c.window_a, c.window_b, grid, c.delta, W.angular().w0_min(), opts);
  const std::string status = cert.certified ? "certified" : "rejected";
  Csv csv({"a", "b", "status", "min_gradient_norm", "min_laplacian", "non_trapping_c0", "min_band_gap", "fermi_points",
           "reason"});
  csv.row({num(cert.a), num(cert.b), status, num(cert.min_gradient_norm), num(cert.min_laplacian),
           num(cert.non_trapping_c0), num(cert.min_band_gap), std::to_string(cert.fermi_points),
           "\"" + cert.reason + "\""});
  ordered_json json = {{"a", cert.a},
                       {"b", cert.b},
                       {"status", status},
                       {"min_gradient_norm", cert.min_gradient_norm},
                       {"min_laplacian", cert.min_laplacian},
                       {"non_trapping_c0", cert.non_trapping_c0},
                       {"min_band_gap", cert.min_band_gap},
                       {"fermi_points", cert.fermi_points},
                       {"reason", cert.reason}};
  write_data(c, "certificate", csv, json);
  write_metadata("certify", c, {});
  log << "certify [" << c.window_a << ", " << c.window_b << "]: " << status
      << (cert.certified ? "" : " (" + cert.reason + ")") << "\n";
  return cert.certified ? kExitOk : kExitRejected;
}

int run_coeffs(const RunConfig& c, std::ostream& log) {
  const Problem problem = make_problem(c);
  const DecayPotential W = make_decay(c);
  const CompactFunction f = make_test_function(c).compact();
  const CoefficientResult r = compute_coefficients(f, problem, W, make_coefficient_options(c));
  const EnergyWindow window{c.window_a, c.window_b};
  const GammaOptions gopts = make_gamma_options(c);
  const DosTable dos =
      gamma_dos_table(problem, c.window_b + gopts.fd_step, c.gamma_kernel_width, c.gamma_bz_resolution);
  std::vector<double> energies;
  if (c.gamma_points == 1)
    energies = {0.5 * (c.window_a + c.window_b)};
  else
    energies = uniform_energies(c.window_a, c.window_b, c.gamma_points);
  const GammaTable table = gamma_table(energies, W, dos, window, gopts);

  ordered_json summary = {{"a0", r.a0},
                          {"a1", r.a1},
                          {"a0_error", r.a0_error},
                          {"a1_error", r.a1_error},
                          {"bz_resolution", r.bz_resolution},
                          {"p_max", r.p_max},
                          {"truncation_radius", r.truncation_radius}};
  Csv csv({"lambda", "gamma0", "gamma1"});
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < energies.size(); ++i) {
    csv.row({num(energies[i]), num(table.gamma0[i]), num(table.gamma1[i])});
    rows.push_back({{"lambda", energies[i]}, {"gamma0", table.gamma0[i]}, {"gamma1", table.gamma1[i]}});
  }
  write_data(c, "gamma", csv, ordered_json{{"coefficients", summary}, {"gamma", rows}});
  write_text(output_path(c, "coefficients.json"), summary.dump(2) + "\n");
  write_metadata("coeffs", c, {{"gamma_kernel_width", dos.kernel_width}});
  log << "coeffs: a0 = " << num(r.a0) << " (+- " << r.a0_error << "), a1 = " << num(r.a1) << "\n";
  return kExitOk;
}

int run_verify(const RunConfig& c, std::ostream& log) {
  const Problem problem = make_problem(c);
  const DecayPotential W = make_decay(c);
  const CompactFunction f = make_test_function(c).compact();
  const ReferenceOptions ropts = make_reference_options(c);
  const double M = c.reference_M > 0 ? c.reference_M : choose_M(f.lo, f.hi, problem.potential().sup_bound());
  const ReferenceData ref = build_reference(W, M, largest_admissible_h(W, M, ropts), ropts);
  const StructureReport s = verify_structure(ref, structure_samples(ref));

  struct Check {
    std::string name;
    double value, tolerance;
    bool passed;
  };
  std::vector<Check> checks;
  checks.push_back({"euler_residual", s.euler_residual, c.euler_tolerance, s.euler_residual <= c.euler_tolerance});
  checks.push_back({"phi0_deviation", s.phi0_deviation, c.phi0_tolerance, s.phi0_deviation <= c.phi0_tolerance});
  // phi0 equals M where chi = 1 and exceeds it on the rest of supp chi.
  checks.push_back({"leading_minus_M_on_support", s.min_leading_minus_M, 0.0, s.min_leading_minus_M > 0});
  checks.push_back({"phi0_minus_M_on_support", s.min_phi0_minus_M, 0.0, s.min_phi0_minus_M >= 0});
  checks.push_back({"phi0_minus_M_on_transition", s.min_transition_phi0_minus_M, 0.0,
                    s.min_transition_phi0_minus_M > 0});
  checks.push_back({"theta_identity", s.theta_identity_error, 1e-12, s.theta_identity_error <= 1e-12});
  checks.push_back({"theta_floor", M / 3 - s.theta_min, 1e-12, s.theta_min >= M / 3 - 1e-12});

  const CoefficientOptions copts = make_coefficient_options(c);
  const GammaOptions gopts = make_gamma_options(c);
  const DosTable dos = gamma_dos_table(problem, f.hi + gopts.fd_step, c.gamma_kernel_width, c.gamma_bz_resolution);
  const DualityReport d = duality_check(f, EnergyWindow{c.window_a, c.window_b}, problem, W, dos, copts, gopts);
  const double scale0 = std::abs(d.a0);
  const double scale1 = d.a1 != 0 ? std::abs(d.a1) : scale0;
  checks.push_back({"duality_residual0", d.residual0 / scale0, c.duality_tolerance,
                    d.residual0 <= c.duality_tolerance * scale0});
  checks.push_back({"duality_residual1", d.residual1 / scale1, c.duality_tolerance,
                    d.residual1 <= c.duality_tolerance * scale1});

  // Cutoff independence: two admissible chi profiles.
  ReferenceOptions other = ropts;
  other.chi.plateau = 0.5 * ropts.chi.plateau;
  other.r1 = 0.8 * std::pow(W.angular().w0_min(), 1 / W.delta());
  const ReferenceData ref2 = build_reference(W, M, ref.h(), other);
  const CoefficientResult c1 = reference_coefficients(f, problem, ref, copts);
  const CoefficientResult c2 = reference_coefficients(f, problem, ref2, copts);
  const double chi0 = std::abs(c1.a0 - c2.a0) / std::abs(c1.a0);
  const double chi1 = c1.a1 != 0 ? std::abs(c1.a1 - c2.a1) / std::abs(c1.a1) : std::abs(c2.a1);
  checks.push_back({"chi_robustness_a0", chi0, 1e-6, chi0 <= 1e-6});
  checks.push_back({"chi_robustness_a1", chi1, 1e-6, chi1 <= 1e-6});

  Csv csv({"check", "value", "tolerance", "passed"});
  ordered_json rows = ordered_json::array();
  bool all = true;
  for (const auto& ch : checks) {
    csv.row({ch.name, num(ch.value), num(ch.tolerance), ch.passed ? "true" : "false"});
    rows.push_back({{"check", ch.name}, {"value", ch.value}, {"tolerance", ch.tolerance}, {"passed", ch.passed}});
    all = all && ch.passed;
    log << "verify " << ch.name << ": " << num(ch.value) << (ch.passed ? " ok" : " BREACH") << "\n";
  }
  write_data(c, "verify", csv, ordered_json{{"checks", rows}});
  write_metadata("verify", c, {{"M", M}, {"h", ref.h()}, {"r1", ref.r1()}, {"r2", ref.r2()}});
  return all ? kExitOk : kExitTolerance;
}

int run_sweep(const RunConfig& c, std::ostream& log) {
  const Problem problem = make_problem(c);
  const DecayPotential W = make_decay(c);
  const TestFunction tf = make_test_function(c);
  const CompactFunction f = tf.compact();
  const OracleOptions oopts = make_oracle_options(c);
  std::vector<TraceEstimate> traces;
  const SweepFit fit = mu_sweep_fit(problem, f, c.mu_list, W, oopts, &traces);
  const CoefficientResult r = compute_coefficients(f, problem, W, make_coefficient_options(c));
  Csv csv({"mu", "trace", "method", "error_estimate"});
  ordered_json rows = ordered_json::array();
  for (const auto& t : traces) {
    csv.row({num(t.mu), num(t.value), to_string(t.method), num(t.error_estimate)});
    const BoxDiscretization box = box_rule(t.mu, W.delta(), problem.lattice().cell_volume(), oopts);
    rows.push_back({{"mu", t.mu},
                    {"trace", t.value},
                    {"method", to_string(t.method)},
                    {"error_estimate", t.error_estimate},
                    {"cells", t.cells},
                    {"basis_size", t.basis_size},
                    {"tail_bound", tail_bound(box, t.mu, W, tf.max_abs_derivative())}});
  }
  ordered_json summary = {{"c0", fit.c0},
                          {"c1", fit.c1},
                          {"c0_one_term", fit.c0_one_term},
                          {"residual_two_term", fit.residual_two_term},
                          {"residual_one_term", fit.residual_one_term},
                          {"slope", fit.slope},
                          {"a0", r.a0},
                          {"a1", r.a1},
                          {"traces", rows}};
  write_data(c, "sweep", csv, summary);
  write_text(output_path(c, "sweep_fit.json"), summary.dump(2) + "\n");
  write_metadata("sweep", c, {});
  log << "sweep: slope " << num(fit.slope) << ", c0 " << num(fit.c0) << " (a0 " << num(r.a0) << ")\n";
  return kExitOk;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"bands", "dos", "certify", "coeffs", "verify", "sweep"};
  return names;
}

int run(const std::string& subcommand, const RunConfig& config, std::ostream& log) {
  validate(config);
  if (subcommand == "bands") return run_bands(config, log);
  if (subcommand == "dos") return run_dos(config, log);
  if (subcommand == "certify") return run_certify(config, log);
  if (subcommand == "coeffs") return run_coeffs(config, log);
  if (subcommand == "verify") return run_verify(config, log);
  if (subcommand == "sweep") return run_sweep(config, log);
  throw ValidationError("unknown subcommand '" + subcommand + "'");
}

int exit_code_for(const std::exception& error) {
  if (dynamic_cast<const ValidationError*>(&error)) return kExitValidation;
  return kExitNumerical;
}

}  // namespace bandshift
