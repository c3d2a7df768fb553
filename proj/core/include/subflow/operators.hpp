#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "subflow/model.hpp"

namespace subflow {

/// One real value per grid node, z-fastest node order.
using ScalarField = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct SparseOperator {
  SparseMatrix matrix;
  bool symmetric = false;
  bool negative_semidefinite = false;

  ScalarField operator()(const ScalarField &f) const { return matrix * f; }
  Eigen::Index size() const { return matrix.rows(); }
};

/// Forward-difference discretisation of one frame field together with the
/// constant contributions a lifted (winding) map picks up when the stencil
/// crosses the fundamental domain: offsets[c] is the value D applies to the
/// lift per unit winding along lattice generator c.
struct FrameDerivative {
  SparseOperator op;
  std::array<ScalarField, 3> offsets;
};

/// Discrete e_A: coefficients evaluated at the row node, neighbours reached
/// through the twisted lattice identification.
SparseOperator assemble_first_order(const GroupModel &model, const Grid &grid,
                                    std::size_t frame_index);

FrameDerivative assemble_frame_derivative(const GroupModel &model, const Grid &grid,
                                          std::size_t frame_index);

/// Δ_H = −Σ_i D_iᵀ D_i over the horizontal frame.
SparseOperator assemble_sub_laplacian(const GroupModel &model, const Grid &grid);

/// Largest Gershgorin row sum of a matrix.
double gershgorin_radius(const SparseMatrix &m);

/// Assembled operators for one (model, grid) pair. Immutable after
/// construction; all methods are const and safe for concurrent use.
class Discretization {
public:
  Discretization(GroupModel model, Grid grid);

  const GroupModel &model() const { return model_; }
  const Grid &grid() const { return grid_; }
  std::size_t size() const { return grid_.size(); }
  std::size_t horizontal_rank() const { return model_.horizontal_rank(); }

  const FrameDerivative &derivative(std::size_t frame_index) const {
    return derivatives_.at(frame_index);
  }
  const SparseOperator &sub_laplacian() const { return laplacian_; }

  /// D_A applied to a lift whose lattice periods are `winding` (one integer
  /// per lattice generator; zero for single-valued fields).
  ScalarField apply_derivative(std::size_t frame_index, const ScalarField &u,
                               const std::array<long, 3> &winding = {0, 0, 0}) const;
  ScalarField apply_sub_laplacian(const ScalarField &u,
                                  const std::array<long, 3> &winding = {0, 0, 0}) const;
  /// D_Aᵀ g with respect to the uniform node measure.
  ScalarField apply_transpose(std::size_t frame_index, const ScalarField &g) const;

  /// Frame components (D_1 u, ..., D_m u) of ∇^H u.
  std::vector<ScalarField> horizontal_gradient(const ScalarField &u) const;

  /// h_x h_y h_z Σ_p u(p).
  double integrate(const ScalarField &u) const;

  /// Explicit-Euler time-step bound 2/ρ(−Δ_H) using the Gershgorin estimate
  /// of the spectral radius.
  double spectral_radius_bound() const { return gershgorin_; }

  /// Samples a function of the coordinates at every node.
  ScalarField sample(const std::function<double(const Eigen::Vector3d &)> &f) const;

private:
  GroupModel model_;
  Grid grid_;
  std::vector<FrameDerivative> derivatives_;
  SparseOperator laplacian_;
  std::array<ScalarField, 3> laplacian_offsets_;
  double gershgorin_ = 0.0;
};

/// Smooth bump b(x) = sin⁶(πx) vanishing to fifth order at x = 0. Fields
/// b(x)·g(y, z) with g periodic are smooth on the twisted quotient.
double seam_bump(double x);

/// Lattice-periodic trigonometric probes used by the commutator check.
std::vector<std::function<double(const Eigen::Vector3d &)>> commutator_probes();

/// sup-norm of (D_1 D_2 − D_2 D_1 − D_3) f for one probe.
double commutator_defect_on(const Discretization &disc,
                            const std::function<double(const Eigen::Vector3d &)> &probe);

/// Max of commutator_defect_on over commutator_probes(). Requires a model
/// with two horizontal fields and one vertical field.
double commutator_defect(const Discretization &disc);

/// Binary field snapshot: 4-byte magic "SUBF", then N_x, N_y, N_z as
/// little-endian uint32, then N little-endian float64 values in node order.
inline constexpr std::uint32_t kFieldMagic = 0x46425553u; // "SUBF"

void write_field(std::ostream &os, const Grid &grid, const ScalarField &f);
ScalarField read_field(std::istream &is, Grid &grid_out);
void save_field(const std::filesystem::path &path, const Grid &grid, const ScalarField &f);
ScalarField load_field(const std::filesystem::path &path, Grid &grid_out);

} // namespace subflow
