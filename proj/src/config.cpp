#include "bandshift/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "bandshift/errors.hpp"

namespace bandshift {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected a real number, got '" + v + "'");
  }
}

long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ValidationError(key + ": expected an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v, char sep) {
  std::vector<double> out;
  for (const auto& item : split(v, sep)) out.push_back(to_double(key, item));
  return out;
}

std::vector<std::vector<double>> to_table(const std::string& key, const std::string& v) {
  std::vector<std::vector<double>> out;
  for (const auto& entry : split(v, ';')) out.push_back(to_list(key, entry, ','));
  return out;
}

std::string list_text(const std::vector<double>& v, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? sep : "") + fmt(v[i]);
  return s;
}

std::string table_text(const std::vector<std::vector<double>>& t) {
  std::string s;
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? ";" : "") + list_text(t[i], ",");
  return s;
}

struct Key {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Key real_key(const char* name, T RunConfig::*field) {
  return {name, [=](RunConfig& c, const std::string& v) { c.*field = to_double(name, v); },
          [=](const RunConfig& c) { return fmt(c.*field); }};
}

Key int_key(const char* name, int RunConfig::*field) {
  return {name, [=](RunConfig& c, const std::string& v) { c.*field = static_cast<int>(to_integer(name, v)); },
          [=](const RunConfig& c) { return std::to_string(c.*field); }};
}

Key bool_key(const char* name, bool RunConfig::*field) {
  return {name, [=](RunConfig& c, const std::string& v) { c.*field = to_bool(name, v); },
          [=](const RunConfig& c) { return std::string(c.*field ? "true" : "false"); }};
}

Key optional_key(const char* name, std::optional<double> RunConfig::*field) {
  return {name,
          [=](RunConfig& c, const std::string& v) {
            if (v == "auto")
              (c.*field).reset();
            else
              c.*field = to_double(name, v);
          },
          [=](const RunConfig& c) { return (c.*field) ? fmt(*(c.*field)) : std::string("auto"); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      int_key("lattice.dimension", &RunConfig::dimension),
      {"lattice.basis",
       [](RunConfig& c, const std::string& v) {
         c.basis = v == "auto" ? std::vector<double>{} : to_list("lattice.basis", v, ',');
       },
       [](const RunConfig& c) { return c.basis.empty() ? std::string("auto") : list_text(c.basis, ","); }},
      int_key("bz.resolution", &RunConfig::bz_resolution),
      {"potential.fourier", [](RunConfig& c, const std::string& v) { c.fourier = to_table("potential.fourier", v); },
       [](const RunConfig& c) { return table_text(c.fourier); }},
      real_key("bloch.g_max", &RunConfig::g_max),
      int_key("bloch.p_max", &RunConfig::p_max),
      real_key("bloch.fd_step", &RunConfig::fd_step),
      real_key("dos.energy_min", &RunConfig::energy_min),
      real_key("dos.energy_max", &RunConfig::energy_max),
      int_key("dos.points", &RunConfig::energy_points),
      real_key("dos.kernel_width", &RunConfig::kernel_width),
      real_key("window.a", &RunConfig::window_a),
      real_key("window.b", &RunConfig::window_b),
      int_key("certify.energy_samples", &RunConfig::certify_energy_samples),
      real_key("certify.edge_margin", &RunConfig::certify_edge_margin),
      real_key("pert.delta", &RunConfig::delta),
      {"pert.w", [](RunConfig& c, const std::string& v) { c.w = to_table("pert.w", v); },
       [](const RunConfig& c) { return table_text(c.w); }},
      real_key("pert.core_scale", &RunConfig::core_scale),
      optional_key("ref.r1", &RunConfig::r1),
      optional_key("ref.r2", &RunConfig::r2),
      real_key("ref.chi_plateau", &RunConfig::chi_plateau),
      real_key("ref.M", &RunConfig::reference_M),
      real_key("f.center", &RunConfig::f_center),
      real_key("f.half_width", &RunConfig::f_half_width),
      int_key("coeff.radial_points", &RunConfig::radial_points),
      int_key("coeff.angular_points", &RunConfig::angular_points),
      int_key("coeff.bz_resolution", &RunConfig::coeff_bz_resolution),
      real_key("gamma.fd_step", &RunConfig::gamma_fd_step),
      real_key("gamma.kernel_width", &RunConfig::gamma_kernel_width),
      int_key("gamma.bz_resolution", &RunConfig::gamma_bz_resolution),
      int_key("gamma.points", &RunConfig::gamma_points),
      int_key("oracle.cells", &RunConfig::oracle_cells),
      int_key("oracle.modes_per_cell", &RunConfig::modes_per_cell),
      real_key("oracle.c_tail", &RunConfig::c_tail),
      int_key("oracle.dense_threshold", &RunConfig::dense_threshold),
      real_key("oracle.cheb_degree_factor", &RunConfig::cheb_degree_factor),
      {"oracle.mu_list", [](RunConfig& c, const std::string& v) { c.mu_list = to_list("oracle.mu_list", v, ';'); },
       [](const RunConfig& c) { return list_text(c.mu_list, ";"); }},
      {"oracle.precision",
       [](RunConfig& c, const std::string& v) {
         if (v != "double" && v != "extended")
           throw ValidationError("oracle.precision: expected double or extended, got '" + v + "'");
         c.extended_precision = v == "extended";
       },
       [](const RunConfig& c) { return std::string(c.extended_precision ? "extended" : "double"); }},
      bool_key("oracle.stochastic", &RunConfig::stochastic),
      int_key("oracle.probes", &RunConfig::probes),
      real_key("oracle.xi_lambda", &RunConfig::xi_lambda),
      real_key("oracle.xi_epsilon", &RunConfig::xi_epsilon),
      real_key("verify.duality_tolerance", &RunConfig::duality_tolerance),
      real_key("verify.euler_tolerance", &RunConfig::euler_tolerance),
      real_key("verify.phi0_tolerance", &RunConfig::phi0_tolerance),
      {"output_dir", [](RunConfig& c, const std::string& v) { c.output_dir = v; },
       [](const RunConfig& c) { return c.output_dir; }},
      {"format",
       [](RunConfig& c, const std::string& v) {
         if (v != "csv" && v != "json") throw ValidationError("format: expected csv or json, got '" + v + "'");
         c.format = v;
       },
       [](const RunConfig& c) { return c.format; }},
      {"seed",
       [](RunConfig& c, const std::string& v) {
         const long long s = to_integer("seed", v);
         if (s < 0) throw ValidationError("seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(s);
       },
       [](const RunConfig& c) { return std::to_string(c.seed); }},
  };
  return table;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : keys()) out.emplace_back(k.name, k.get(*this));
  return out;
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError("line " + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    bool known = false;
    for (const auto& k : keys())
      if (key == k.name) {
        k.set(config, value);
        known = true;
        break;
      }
    if (!known) throw ValidationError("line " + std::to_string(number) + ": unknown key '" + key + "'");
  }
  validate(config);
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void validate(const RunConfig& c) {
  const int n = c.dimension;
  if (n < 1) throw ValidationError("lattice.dimension must be positive");
  if (!c.basis.empty() && static_cast<int>(c.basis.size()) != n * n)
    throw ValidationError("lattice.basis must list n*n reals");
  if (c.bz_resolution < 1) throw ValidationError("bz.resolution must be >= 1");
  for (const auto& e : c.fourier)
    if (static_cast<int>(e.size()) != n + 2)
      throw ValidationError("potential.fourier entries need n indices, re and im");
  if (!(c.g_max > 0)) throw ValidationError("bloch.g_max must be positive");
  if (c.p_max < 1) throw ValidationError("bloch.p_max must be >= 1");
  if (c.fd_step < 0) throw ValidationError("bloch.fd_step must be non-negative");
  if (!(c.energy_max > c.energy_min) || c.energy_points < 2)
    throw ValidationError("dos.energy_min < dos.energy_max and dos.points >= 2 are required");
  if (c.kernel_width < 0) throw ValidationError("dos.kernel_width must be non-negative");
  if (!(c.window_a < c.window_b)) throw ValidationError("window.a must be below window.b");
  if (!(c.delta > n))
    throw ValidationError("pert.delta = " + fmt(c.delta) + " must exceed the dimension n = " + std::to_string(n) +
                          " (decay assumption delta > n)");
  if (c.w.empty()) throw ValidationError("pert.w needs at least w_0");
  for (const auto& order : c.w) {
    if (n == 1 && order.size() != 2) throw ValidationError("pert.w: in one dimension each order is 'w(-1), w(+1)'");
    if (n > 1 && order.size() != 1) throw ValidationError("pert.w: for n >= 2 each order is one constant");
  }
  for (double w0 : c.w.front())
    if (!(w0 > 0)) throw ValidationError("pert.w: w_0 must be strictly positive");
  if (!(c.core_scale > 0)) throw ValidationError("pert.core_scale must be positive");
  if (!(c.chi_plateau > 0 && c.chi_plateau < 1)) throw ValidationError("ref.chi_plateau must lie in (0, 1)");
  if (c.reference_M < 0) throw ValidationError("ref.M must be non-negative");
  if (!(c.f_half_width > 0)) throw ValidationError("f.half_width must be positive");
  if (c.radial_points < 2 || c.angular_points < 1 || c.coeff_bz_resolution < 2)
    throw ValidationError("coeff.radial_points >= 2, coeff.angular_points >= 1, coeff.bz_resolution >= 2 required");
  if (c.gamma_fd_step < 0 || !(c.gamma_kernel_width > 0) || c.gamma_bz_resolution < 2 || c.gamma_points < 1)
    throw ValidationError("gamma settings must be positive");
  if (c.oracle_cells < 0 || c.modes_per_cell < 2 || !(c.c_tail > 0) || c.dense_threshold < 1 ||
      !(c.cheb_degree_factor > 0) || c.probes < 1)
    throw ValidationError("oracle settings out of range");
  for (double mu : c.mu_list)
    if (!(mu > 0)) throw ValidationError("oracle.mu_list entries must be positive");
  if (!(c.xi_epsilon > 0)) throw ValidationError("oracle.xi_epsilon must be positive");
}

Lattice<double> make_lattice(const RunConfig& c) {
  const int n = c.dimension;
  Eigen::MatrixXd basis(n, n);
  if (c.basis.empty()) {
    basis = 2 * std::numbers::pi * Eigen::MatrixXd::Identity(n, n);
  } else {
    // Row i of the list is e_i; Lattice stores e_i as column i.
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) basis(j, i) = c.basis[static_cast<std::size_t>(i * n + j)];
  }
  return Lattice<double>(basis);
}

FourierPotential<double> make_potential(const RunConfig& c) {
  const int n = c.dimension;
  const Lattice<double> lattice = make_lattice(c);
  const DualLattice<double> dual = dual_basis(lattice);
  std::map<MillerIndex, std::complex<double>> coeffs;
  double cutoff = 0;
  for (const auto& e : c.fourier) {
    MillerIndex m(n);
    Eigen::VectorXd mv(n);
    for (int i = 0; i < n; ++i) {
      if (e[i] != std::round(e[i])) throw ValidationError("potential.fourier indices must be integers");
      m[i] = static_cast<int>(e[i]);
      mv(i) = e[i];
    }
    coeffs[m] += std::complex<double>(e[n], e[n + 1]);
    cutoff = std::max(cutoff, (dual.basis() * mv).norm());
  }
  return FourierPotential<double>(n, coeffs, cutoff > 0 ? cutoff : 1.0);
}

Problem make_problem(const RunConfig& c) { return Problem(make_lattice(c), make_potential(c), c.g_max); }

DecayPotential make_decay(const RunConfig& c) {
  AngularCoefficients angular = [&] {
    if (c.dimension == 1) {
      std::vector<std::pair<double, double>> pairs;
      for (const auto& o : c.w) pairs.emplace_back(o[0], o[1]);
      return AngularCoefficients::one_dimensional(pairs);
    }
    std::vector<double> values;
    for (const auto& o : c.w) values.push_back(o[0]);
    return AngularCoefficients::constants(c.dimension, values);
  }();
  return DecayPotential(c.delta, std::move(angular), c.core_scale);
}

TestFunction make_test_function(const RunConfig& c) { return TestFunction{c.f_center, c.f_half_width}; }

ReferenceOptions make_reference_options(const RunConfig& c) {
  ReferenceOptions o;
  o.r1 = c.r1;
  o.r2 = c.r2;
  o.chi.plateau = c.chi_plateau;
  return o;
}

CoefficientOptions make_coefficient_options(const RunConfig& c) {
  CoefficientOptions o;
  o.bz_resolution = c.coeff_bz_resolution;
  o.angular_points = c.angular_points;
  o.radial_points = c.radial_points;
  return o;
}

GammaOptions make_gamma_options(const RunConfig& c) {
  GammaOptions o;
  o.fd_step = c.gamma_fd_step;
  o.angular_points = c.angular_points;
  return o;
}

OracleOptions make_oracle_options(const RunConfig& c) {
  OracleOptions o;
  o.modes_per_cell = c.modes_per_cell;
  o.c_tail = c.c_tail;
  o.cells = c.oracle_cells;
  o.dense_threshold = c.dense_threshold;
  o.cheb_degree_factor = c.cheb_degree_factor;
  o.stochastic = c.stochastic;
  o.probes = c.probes;
  o.seed = c.seed;
  o.extended_precision = c.extended_precision;
  return o;
}

}  // namespace bandshift
