#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vpsfem/assembly.hpp"
#include "vpsfem/model.hpp"
#include "vpsfem/stepper.hpp"

namespace vpsfem {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct InitialDataSpec {
  /// "preset": the preset's own initial data; "constant": phi and q below.
  std::string kind = "preset";
  double phi = 0.5;
  double q = 0.0;
};

/// Parsed run configuration (JSON). Example:
///   {"preset": "experiment1", "mesh_n": 16, "T": 1.0, "N": 16,
///    "newton": {"tolerance": 1e-11, "max_iterations": 25, "damping": true},
///    "seed": 1, "output_dir": "out", "snapshot_stride": 4}
/// "tau" may replace "N" (N = T / tau must then be an integer). Preset
/// "custom" takes a "coefficients" table whose keys are the
/// FamilyParameters fields; missing entries default to experiment1 and
/// phi_star defaults to the initial mass.
struct RunConfig {
  std::string preset = "experiment1";
  std::map<std::string, double> coefficients;
  int mesh_n = 16;
  double T = 1.0;
  int N = 16;
  NewtonConfig newton;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  /// Write a snapshot every this many steps; 0 writes initial and final only.
  int snapshot_stride = 0;
  InitialDataSpec initial;
  /// Coarsest cells per axis of a convergence study.
  int convergence_base_n = 4;

  [[nodiscard]] TimeGrid grid() const { return {T, N}; }
};

/// Throws ConfigError naming the offending key.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& config);

/// Smooth initial fields of the first preset.
ScalarField experiment1_phi_field();
ScalarField experiment1_q_field();

struct InitialData {
  FEFunction phi;
  FEFunction q;
};

/// experiment1: H1 projection of phi0 = 0.25 cos(2 pi x) cos(2 pi y) + 0.5 and
/// L2 projection of q0 = 0.01 sin(2 pi x) sin(2 pi y).
/// experiment2: phi0 = 0.4 + xi per degree of freedom, q0 = 0, where xi is
/// uniform on [-0.0025, 0.0025]. Draws come from std::mt19937_64(seed) in
/// ascending dof order, mapped as u = (x >> 11) * 2^-53, xi = 0.0025 (2u - 1).
/// Throws ConfigError for an unknown preset.
InitialData make_initial_data(const SpacePtr& space, const std::string& preset,
                              std::uint64_t seed);

/// Initial data as selected by a configuration ("custom" uses the smooth fields).
InitialData initial_data_for(const RunConfig& config, const SpacePtr& space);

/// Coefficients for a configuration; phi_star defaults to the mass of phi0
/// for experiment2 and custom.
ModelCoefficients coefficients_for(const RunConfig& config, const FEFunction& phi0);

/// Coefficient family underlying a configuration, with phi_star resolved.
FamilyParameters family_for(const RunConfig& config, double initial_mass);

std::string format_diagnostics_csv(const std::vector<DiagnosticsRecord>& records);
void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<DiagnosticsRecord>& records);

/// Legacy ASCII VTK unstructured grid. Each P2 triangle is written as four
/// linear triangles over its own six nodes (unwrapped coordinates), with
/// point arrays phi, q and mu.
void write_snapshot_vtk(const std::filesystem::path& path, const FEFunction& phi,
                        const FEFunction& q, const FEFunction& mu);

}  // namespace vpsfem
