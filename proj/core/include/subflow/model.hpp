#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "subflow/polynomial.hpp"

namespace subflow {

/// One frame vector field. Fields built from polynomials carry their symbolic
/// form; fields built from an opaque callable can be discretised but not
/// bracketed symbolically.
class FrameField {
public:
  FrameField(std::string name, VectorField symbolic);
  FrameField(std::string name,
             std::function<Eigen::Vector3d(const Eigen::Vector3d &)> numeric);

  const std::string &name() const { return name_; }
  Eigen::Vector3d operator()(const Eigen::Vector3d &p) const;
  const std::optional<VectorField> &symbolic() const { return symbolic_; }

private:
  std::string name_;
  std::optional<VectorField> symbolic_;
  std::function<Eigen::Vector3d(const Eigen::Vector3d &)> numeric_;
};

/// Element of the integer lattice Γ acting on the left.
using LatticeElement = std::array<long, 3>;

/// Compact quotient Γ\G of a three-dimensional group with an adapted frame.
///
/// The frame e_1..e_m (horizontal) followed by e_{m+1}..e_{m+d} (vertical) is
/// declared orthonormal, which fixes the Riemannian extension g. Lattice
/// elements compose as (a,b,c)(a',b',c') = (a+a', b+b', c+c' + twist·a·b');
/// twist = 1 is the polarized Heisenberg group, twist = 0 the flat torus.
class GroupModel {
public:
  GroupModel(std::string name, std::vector<FrameField> horizontal,
             std::vector<FrameField> vertical, VectorField mean_curvature,
             int twist);

  /// H³ with X1 = ∂x, X2 = ∂y + x∂z horizontal, X3 = ∂z vertical.
  static GroupModel heisenberg();
  /// Flat 3-torus with H = span{∂x, ∂y}; not bracket generating.
  static GroupModel degenerate_torus();
  /// Flat 3-torus with the full tangent bundle declared horizontal.
  static GroupModel full_rank_torus();
  /// Lookup by configuration name ("heisenberg", "torus-degenerate").
  static GroupModel from_name(const std::string &name);

  const std::string &name() const { return name_; }
  std::size_t horizontal_rank() const { return horizontal_.size(); }
  std::size_t vertical_rank() const { return vertical_.size(); }
  std::size_t frame_size() const { return horizontal_.size() + vertical_.size(); }
  /// Frame index A in [0, m+d): horizontal first.
  const FrameField &frame(std::size_t a) const;
  const std::vector<FrameField> &horizontal() const { return horizontal_; }
  const std::vector<FrameField> &vertical() const { return vertical_; }
  const VectorField &mean_curvature() const { return zeta_; }
  int twist() const { return twist_; }
  double volume_density() const { return 1.0; }

  /// Coefficient matrix whose column A is e_A(p) in coordinates.
  Eigen::Matrix3d frame_matrix(const Eigen::Vector3d &p) const;

  LatticeElement compose(const LatticeElement &g, const LatticeElement &h) const;
  /// γ·p for a point p in coordinates.
  Eigen::Vector3d act(const LatticeElement &g, const Eigen::Vector3d &p) const;

private:
  std::string name_;
  std::vector<FrameField> horizontal_;
  std::vector<FrameField> vertical_;
  VectorField zeta_;
  int twist_;
};

/// Uniform node grid on the fundamental domain [0,1)³.
/// Node order is z-fastest: p = (i·N_y + j)·N_z + k.
struct Grid {
  int nx = 0, ny = 0, nz = 0;

  Grid() = default;
  Grid(int nx_, int ny_, int nz_) : nx(nx_), ny(ny_), nz(nz_) {}

  /// Throws DomainError if counts are not positive or, for twisted models,
  /// N_y does not divide N_z.
  void validate(const GroupModel &model) const;

  std::size_t size() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  double hx() const { return 1.0 / nx; }
  double hy() const { return 1.0 / ny; }
  double hz() const { return 1.0 / nz; }
  double h_min() const;
  double h_max() const;
  double cell_volume() const { return hx() * hy() * hz(); }
  std::array<double, 3> spacing() const { return {hx(), hy(), hz()}; }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * ny + j) * nz + k;
  }
  std::array<int, 3> node(std::size_t p) const;
  Eigen::Vector3d coords(std::size_t p) const;

  friend bool operator==(const Grid &a, const Grid &b) {
    return a.nx == b.nx && a.ny == b.ny && a.nz == b.nz;
  }
};

/// A node reached by an arbitrary integer index triple, resolved to its
/// fundamental-domain representative p0 and the lattice element with
/// (i hx, j hy, k hz) = γ·p0.
struct WrappedNode {
  std::size_t index;
  LatticeElement gamma;
};

WrappedNode wrap(const GroupModel &model, const Grid &grid, long i, long j, long k);

/// All Lie brackets [e_A, e_B] of the full frame, kept symbolically.
class BracketTable {
public:
  explicit BracketTable(const GroupModel &model);

  const VectorField &bracket(std::size_t a, std::size_t b) const {
    return brackets_[a][b];
  }
  /// Components c^C of [e_A, e_B](p) = Σ_C c^C e_C(p), i.e. ⟨[e_A,e_B], e_C⟩_g.
  Eigen::VectorXd frame_coefficients(std::size_t a, std::size_t b,
                                     const Eigen::Vector3d &p) const;
  std::size_t size() const { return brackets_.size(); }

private:
  const GroupModel *model_;
  std::vector<std::vector<VectorField>> brackets_;
};

/// Throws UnsupportedModel if a frame field has no polynomial form.
BracketTable frame_bracket_table(const GroupModel &model);

/// Smallest r such that horizontal fields and their brackets up to order r
/// span the tangent space at every sample point. Throws NotBracketGenerating
/// if the span does not fill up to max_depth.
int verify_bracket_generating(const GroupModel &model, int max_depth = 4);

/// η(v) = Σ_{i≤j} ⟨[e_i,e_j](p), v⟩² for a vertical vector v given in
/// vertical-frame components. v must have unit length within 1e-12.
double eta_at(const GroupModel &model, const Eigen::VectorXd &v,
              const Eigen::Vector3d &p);

/// Minimum of η over grid nodes and sampled unit vertical vectors. For d = 1
/// the sample set is exactly {±e_{m+1}}.
double eta_min(const GroupModel &model, const Grid &grid, int sphere_samples);

} // namespace subflow
