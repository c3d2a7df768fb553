#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "subflow/operators.hpp"

namespace subflow {

enum class Representation { extrinsic_ambient, extrinsic_tubular, intrinsic_chart };

std::string to_string(Representation r);
Representation representation_from_string(const std::string &s);

/// Integer periods of a lifted map: row a, column c is the jump of component
/// a along lattice generator c. The third column must vanish because the
/// generator (0,0,1) is a commutator.
using WindingMatrix = Eigen::Matrix<long, Eigen::Dynamic, 3>;

/// A map from the grid into a target representation at flow time t.
struct MapState {
  Representation representation = Representation::extrinsic_ambient;
  std::vector<ScalarField> components;
  WindingMatrix winding;
  double t = 0.0;

  MapState() = default;
  MapState(Representation rep, std::vector<ScalarField> comps, double time = 0.0);

  std::size_t dimension() const { return components.size(); }
  std::size_t nodes() const {
    return components.empty() ? 0 : static_cast<std::size_t>(components.front().size());
  }
  std::array<long, 3> winding_row(std::size_t a) const;
  bool has_winding() const { return winding.size() != 0 && winding.cwiseAbs().sum() != 0; }

  Eigen::VectorXd value(std::size_t p) const;
  void set_value(std::size_t p, const Eigen::VectorXd &v);

  bool all_finite() const;
};

/// Writes `<stem>.bin` (one binary field record per component) and
/// `<stem>.json` (t, winding, representation, component count).
void save_checkpoint(const std::filesystem::path &stem, const Grid &grid,
                     const MapState &state);
MapState load_checkpoint(const std::filesystem::path &stem, Grid &grid_out);

} // namespace subflow
