#include "vpsfem/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace vpsfem {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

const std::set<std::string>& top_level_keys() {
  static const std::set<std::string> keys = {
      "preset", "coefficients", "mesh_n",          "T",       "N",
      "tau",    "newton",       "seed",            "output_dir", "snapshot_stride",
      "initial", "convergence_base_n"};
  return keys;
}

const std::set<std::string>& coefficient_keys() {
  static const std::set<std::string> keys = {
      "gamma",       "epsilon",     "d0",       "c_scale",    "potential_scale", "well_low",
      "well_high",   "kappa_scale", "A_amplitude", "A_steepness", "phi_star",    "clamp_delta"};
  return keys;
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& prefix) {
  for (const auto& item : obj.items()) {
    if (!allowed.contains(item.key())) {
      throw ConfigError("unknown config key '" + prefix + item.key() + "'");
    }
  }
}

double get_number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError("config key '" + path + "' must be a number");
  return v.get<double>();
}

long long get_integer(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError("config key '" + path + "' must be an integer");
  return v.get<long long>();
}

std::string get_string(const json& obj, const std::string& key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError("config key '" + path + "' must be a string");
  return v.get<std::string>();
}

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  return out;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("config is not valid JSON: ") + err.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(root, top_level_keys(), "");

  RunConfig cfg;
  if (root.contains("preset")) cfg.preset = get_string(root, "preset", "preset");
  if (cfg.preset != "experiment1" && cfg.preset != "experiment2" && cfg.preset != "custom") {
    throw ConfigError("config key 'preset': unknown preset '" + cfg.preset +
                      "' (expected experiment1, experiment2 or custom)");
  }
  if (root.contains("coefficients")) {
    if (cfg.preset != "custom") {
      throw ConfigError("config key 'coefficients' is only allowed with preset 'custom'");
    }
    const json& table = root.at("coefficients");
    if (!table.is_object()) throw ConfigError("config key 'coefficients' must be an object");
    reject_unknown(table, coefficient_keys(), "coefficients.");
    for (const auto& item : table.items()) {
      cfg.coefficients[item.key()] =
          get_number(table, item.key(), "coefficients." + item.key());
    }
  }

  if (root.contains("mesh_n")) cfg.mesh_n = static_cast<int>(get_integer(root, "mesh_n", "mesh_n"));
  if (cfg.mesh_n < 3) throw ConfigError("config key 'mesh_n' must be at least 3");
  if (root.contains("T")) cfg.T = get_number(root, "T", "T");
  if (!(cfg.T > 0.0)) throw ConfigError("config key 'T' must be positive");

  const bool has_n = root.contains("N");
  const bool has_tau = root.contains("tau");
  if (has_n) cfg.N = static_cast<int>(get_integer(root, "N", "N"));
  if (has_n && cfg.N < 1) throw ConfigError("config key 'N' must be at least 1");
  if (has_tau) {
    const double tau = get_number(root, "tau", "tau");
    if (!(tau > 0.0)) throw ConfigError("config key 'tau' must be positive");
    const double steps = cfg.T / tau;
    const long long rounded = std::llround(steps);
    if (rounded < 1 || std::abs(steps - static_cast<double>(rounded)) > 1e-9 * steps) {
      throw ConfigError("config key 'tau': T / tau must be an integer");
    }
    if (has_n && rounded != cfg.N) throw ConfigError("config key 'tau' is inconsistent with 'N'");
    cfg.N = static_cast<int>(rounded);
  }

  if (root.contains("newton")) {
    const json& nw = root.at("newton");
    if (!nw.is_object()) throw ConfigError("config key 'newton' must be an object");
    reject_unknown(nw,
                   {"tolerance", "max_iterations", "damping", "continuation_depth",
                    "continuation_max_iterations"},
                   "newton.");
    if (nw.contains("tolerance")) {
      cfg.newton.tolerance = get_number(nw, "tolerance", "newton.tolerance");
      if (!(cfg.newton.tolerance > 0.0)) {
        throw ConfigError("config key 'newton.tolerance' must be positive");
      }
    }
    if (nw.contains("max_iterations")) {
      cfg.newton.max_iterations =
          static_cast<int>(get_integer(nw, "max_iterations", "newton.max_iterations"));
      if (cfg.newton.max_iterations < 1) {
        throw ConfigError("config key 'newton.max_iterations' must be at least 1");
      }
    }
    if (nw.contains("damping")) {
      if (!nw.at("damping").is_boolean()) {
        throw ConfigError("config key 'newton.damping' must be a boolean");
      }
      cfg.newton.damping = nw.at("damping").get<bool>();
    }
    if (nw.contains("continuation_depth")) {
      cfg.newton.continuation_depth =
          static_cast<int>(get_integer(nw, "continuation_depth", "newton.continuation_depth"));
      if (cfg.newton.continuation_depth < 0 || cfg.newton.continuation_depth > 30) {
        throw ConfigError("config key 'newton.continuation_depth' must lie in [0, 30]");
      }
    }
    if (nw.contains("continuation_max_iterations")) {
      cfg.newton.continuation_max_iterations = static_cast<int>(get_integer(
          nw, "continuation_max_iterations", "newton.continuation_max_iterations"));
      if (cfg.newton.continuation_max_iterations < 1) {
        throw ConfigError("config key 'newton.continuation_max_iterations' must be at least 1");
      }
    }
  }

  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_unsigned()) throw ConfigError("config key 'seed' must be a nonnegative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (root.contains("output_dir")) cfg.output_dir = get_string(root, "output_dir", "output_dir");
  if (root.contains("snapshot_stride")) {
    cfg.snapshot_stride = static_cast<int>(get_integer(root, "snapshot_stride", "snapshot_stride"));
    if (cfg.snapshot_stride < 0) throw ConfigError("config key 'snapshot_stride' must be >= 0");
  }
  if (root.contains("initial")) {
    const json& in = root.at("initial");
    if (!in.is_object()) throw ConfigError("config key 'initial' must be an object");
    reject_unknown(in, {"kind", "phi", "q"}, "initial.");
    if (in.contains("kind")) cfg.initial.kind = get_string(in, "kind", "initial.kind");
    if (cfg.initial.kind != "preset" && cfg.initial.kind != "constant") {
      throw ConfigError("config key 'initial.kind' must be 'preset' or 'constant'");
    }
    if (in.contains("phi")) cfg.initial.phi = get_number(in, "phi", "initial.phi");
    if (in.contains("q")) cfg.initial.q = get_number(in, "q", "initial.q");
  }
  if (root.contains("convergence_base_n")) {
    cfg.convergence_base_n =
        static_cast<int>(get_integer(root, "convergence_base_n", "convergence_base_n"));
    if (cfg.convergence_base_n < 3) {
      throw ConfigError("config key 'convergence_base_n' must be at least 3");
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
  ordered_json root;
  root["preset"] = cfg.preset;
  if (!cfg.coefficients.empty()) {
    ordered_json table = ordered_json::object();
    for (const auto& [k, v] : cfg.coefficients) table[k] = v;
    root["coefficients"] = table;
  }
  root["mesh_n"] = cfg.mesh_n;
  root["T"] = cfg.T;
  root["N"] = cfg.N;
  root["newton"] = {{"tolerance", cfg.newton.tolerance},
                    {"max_iterations", cfg.newton.max_iterations},
                    {"damping", cfg.newton.damping},
                    {"continuation_depth", cfg.newton.continuation_depth},
                    {"continuation_max_iterations", cfg.newton.continuation_max_iterations}};
  root["seed"] = cfg.seed;
  root["output_dir"] = cfg.output_dir;
  root["snapshot_stride"] = cfg.snapshot_stride;
  root["initial"] = {{"kind", cfg.initial.kind}, {"phi", cfg.initial.phi}, {"q", cfg.initial.q}};
  root["convergence_base_n"] = cfg.convergence_base_n;
  return root.dump(2) + "\n";
}

ScalarField experiment1_phi_field() {
  return {[](const Point2& x) {
            return 0.25 * std::cos(kTwoPi * x.x()) * std::cos(kTwoPi * x.y()) + 0.5;
          },
          [](const Point2& x) {
            return Point2(-0.25 * kTwoPi * std::sin(kTwoPi * x.x()) * std::cos(kTwoPi * x.y()),
                          -0.25 * kTwoPi * std::cos(kTwoPi * x.x()) * std::sin(kTwoPi * x.y()));
          }};
}

ScalarField experiment1_q_field() {
  return {[](const Point2& x) {
            return 0.01 * std::sin(kTwoPi * x.x()) * std::sin(kTwoPi * x.y());
          },
          [](const Point2& x) {
            return Point2(0.01 * kTwoPi * std::cos(kTwoPi * x.x()) * std::sin(kTwoPi * x.y()),
                          0.01 * kTwoPi * std::sin(kTwoPi * x.x()) * std::cos(kTwoPi * x.y()));
          }};
}

InitialData make_initial_data(const SpacePtr& space, const std::string& preset,
                              std::uint64_t seed) {
  if (preset == "experiment1" || preset == "custom") {
    return {project(space, ProjectionKind::H1, experiment1_phi_field()),
            project(space, ProjectionKind::L2, experiment1_q_field())};
  }
  if (preset == "experiment2") {
    constexpr double amplitude = 0.0025;
    std::mt19937_64 gen(seed);
    Vector phi(space->dof_count());
    for (Index i = 0; i < space->dof_count(); ++i) {
      const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
      phi[i] = 0.4 + amplitude * (2.0 * u - 1.0);
    }
    return {FEFunction(space, std::move(phi)), FEFunction::zero(space)};
  }
  throw ConfigError("unknown preset '" + preset + "'");
}

InitialData initial_data_for(const RunConfig& config, const SpacePtr& space) {
  if (config.initial.kind == "constant") {
    return {FEFunction::constant(space, config.initial.phi),
            FEFunction::constant(space, config.initial.q)};
  }
  return make_initial_data(space, config.preset, config.seed);
}

FamilyParameters family_for(const RunConfig& config, double initial_mass) {
  if (config.preset == "experiment1") return experiment1_parameters();
  if (config.preset == "experiment2") return experiment2_parameters(initial_mass);
  if (config.preset != "custom") throw ConfigError("unknown preset '" + config.preset + "'");

  FamilyParameters p = experiment1_parameters();
  p.phi_star = initial_mass;
  const std::map<std::string, double*> slots = {
      {"gamma", &p.gamma},
      {"epsilon", &p.epsilon},
      {"d0", &p.d0},
      {"c_scale", &p.c_scale},
      {"potential_scale", &p.potential_scale},
      {"well_low", &p.well_low},
      {"well_high", &p.well_high},
      {"kappa_scale", &p.kappa_scale},
      {"A_amplitude", &p.A_amplitude},
      {"A_steepness", &p.A_steepness},
      {"phi_star", &p.phi_star},
      {"clamp_delta", &p.clamp_delta}};
  for (const auto& [key, value] : config.coefficients) {
    const auto it = slots.find(key);
    if (it == slots.end()) throw ConfigError("unknown config key 'coefficients." + key + "'");
    *it->second = value;
  }
  return p;
}

ModelCoefficients coefficients_for(const RunConfig& config, const FEFunction& phi0) {
  const double mass = functional(*phi0.space, FunctionalKind::integral, phi0);
  try {
    return make_coefficients(family_for(config, mass), config.preset);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(std::string("invalid coefficients: ") + err.what());
  }
}

std::string format_diagnostics_csv(const std::vector<DiagnosticsRecord>& records) {
  std::string out = "step,t,mass,energy,dissipation,identity_residual,newton_iters\n";
  for (const auto& r : records) {
    out += std::to_string(r.step);
    out += ',' + num17(r.t) + ',' + num17(r.mass) + ',' + num17(r.energy) + ',';
    if (r.step > 0) out += num17(r.dissipation);
    out += ',';
    if (r.step > 0) out += num17(r.identity_residual);
    out += ',' + std::to_string(r.newton_iterations) + '\n';
  }
  return out;
}

void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<DiagnosticsRecord>& records) {
  std::ofstream out = open_for_write(path);
  out << format_diagnostics_csv(records);
  finish_write(out, path);
}

void write_snapshot_vtk(const std::filesystem::path& path, const FEFunction& phi,
                        const FEFunction& q, const FEFunction& mu) {
  const FESpace& space = *phi.space;
  if (q.space.get() != &space || mu.space.get() != &space) {
    throw std::invalid_argument("snapshot fields must share one space");
  }
  const Index ne = space.element_count();
  const long npoints = 6L * ne;
  const long ncells = 4L * ne;
  // Sub-triangles over local nodes (vertices 0-2, midpoints 3-5).
  constexpr int sub[4][3] = {{0, 3, 5}, {3, 1, 4}, {5, 4, 2}, {3, 4, 5}};

  std::string s;
  s.reserve(static_cast<std::size_t>(npoints) * 96);
  s += "# vtk DataFile Version 3.0\n";
  s += "vpsfem snapshot\n";
  s += "ASCII\n";
  s += "DATASET UNSTRUCTURED_GRID\n";
  s += "POINTS " + std::to_string(npoints) + " double\n";
  for (Index e = 0; e < ne; ++e) {
    for (int k = 0; k < p2::kLocalDofs; ++k) {
      const Point2 x = space.map_to_physical(e, p2::nodes()[k]);
      s += num17(x.x()) + ' ' + num17(x.y()) + " 0\n";
    }
  }
  s += "CELLS " + std::to_string(ncells) + ' ' + std::to_string(4 * ncells) + '\n';
  for (Index e = 0; e < ne; ++e) {
    const long base = 6L * e;
    for (const auto& t : sub) {
      s += "3 " + std::to_string(base + t[0]) + ' ' + std::to_string(base + t[1]) + ' ' +
           std::to_string(base + t[2]) + '\n';
    }
  }
  s += "CELL_TYPES " + std::to_string(ncells) + '\n';
  for (long c = 0; c < ncells; ++c) s += "5\n";
  s += "POINT_DATA " + std::to_string(npoints) + '\n';
  const auto emit = [&](const char* name, const FEFunction& f) {
    s += std::string("SCALARS ") + name + " double 1\nLOOKUP_TABLE default\n";
    for (Index e = 0; e < ne; ++e) {
      for (Index dof : space.element_dofs(e)) s += num17(f.coefficients[dof]) + '\n';
    }
  };
  emit("phi", phi);
  emit("q", q);
  emit("mu", mu);

  std::ofstream out = open_for_write(path);
  out << s;
  finish_write(out, path);
}

}  // namespace vpsfem
