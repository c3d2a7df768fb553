#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "subflow/flow.hpp"
#include "subflow/model.hpp"

namespace subflow {

struct PotentialSpec {
  /// zero | cosine | rho-squared | ambient-quadratic
  std::string name = "zero";
  double eps = 0.0;
  std::size_t axis = 0;
  double c = 1.0;
  double kappa = 0.0;
  std::vector<double> linear;
};

struct InitialSpec {
  /// winding-perturbed | sphere-perturbed | disk-perturbed | constant | checkpoint
  std::string preset = "winding-perturbed";
  double amplitude = 0.05;
  int modes = 2;
  /// Rows of the winding matrix (torus targets); third entries must be 0.
  std::vector<std::array<long, 3>> winding;
  /// Constant offset (disk) or the point itself (constant).
  std::vector<double> point;
  /// Unit vector index the sphere perturbation starts from.
  std::size_t pole = 2;
  std::optional<std::filesystem::path> checkpoint;
};

struct RunConfig {
  std::string preset;
  std::string model = "heisenberg";
  Grid grid{12, 12, 24};
  std::string target = "torus";
  std::size_t target_dim = 2;
  PotentialSpec potential;
  InitialSpec initial;
  FlowConfig flow;
  std::filesystem::path output = "subflow-out";
  std::uint64_t seed = 1;
};

/// Parses `key = value` lines (`#` starts a comment, values may be double
/// quoted). Unknown keys and invariant violations are collected and thrown
/// together as a ConfigError.
///
/// Keys: preset, model, grid.nx, grid.ny, grid.nz, target, target.dim,
/// potential, potential.eps, potential.axis, potential.c, potential.kappa,
/// potential.linear, initial, initial.amplitude, initial.modes,
/// initial.winding, initial.point, initial.pole, initial.checkpoint, flow.dt,
/// flow.t_max, flow.stop_tolerance, flow.scheme, flow.tension,
/// flow.cfl_safety, flow.energy_tolerance, flow.max_halvings,
/// flow.snapshot_stride, record_stride, output, seed.
///
/// A `preset` line seeds every other key with the preset's values.
RunConfig parse_config(const std::string &text);

/// Checks the cross-key invariants; returns one message per violation.
std::vector<std::string> validate_config(const RunConfig &config);

/// Echo of a config in the same key-value format.
std::string format_config(const RunConfig &config);

struct PresetInfo {
  std::string name;
  std::string exercises;
};

const std::vector<PresetInfo> &preset_catalogue();
/// Throws ConfigError for unknown names.
RunConfig preset_config(const std::string &name);

/// Parses "12x12x24".
Grid parse_grid(const std::string &text);

} // namespace subflow
