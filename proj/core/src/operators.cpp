#include "subflow/operators.hpp"

#include <bit>
#include <cmath>
#include <fstream>

#include "subflow/error.hpp"

namespace subflow {

namespace {

using Triplet = Eigen::Triplet<double>;

// Reading/writing little-endian scalars independent of host byte order.
template <typename T> void put_le(std::ostream &os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = std::bit_cast<U>(value);
  char buf[sizeof(U)];
  for (std::size_t b = 0; b < sizeof(U); ++b)
    buf[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  os.write(buf, sizeof(U));
}

template <typename T> T get_le(std::istream &is) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char buf[sizeof(U)];
  is.read(reinterpret_cast<char *>(buf), sizeof(U));
  if (!is)
    throw IoError("truncated field data");
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(U); ++b)
    bits |= static_cast<U>(buf[b]) << (8 * b);
  return std::bit_cast<T>(bits);
}

} // namespace

FrameDerivative assemble_frame_derivative(const GroupModel &model, const Grid &grid,
                                          std::size_t frame_index) {
  grid.validate(model);
  const auto n = static_cast<Eigen::Index>(grid.size());
  const auto h = grid.spacing();
  const FrameField &field = model.frame(frame_index);

  std::vector<Triplet> triplets;
  triplets.reserve(grid.size() * 4);
  FrameDerivative out;
  for (auto &o : out.offsets)
    o = ScalarField::Zero(n);

  for (std::size_t p = 0; p < grid.size(); ++p) {
    const auto [i, j, k] = grid.node(p);
    const Eigen::Vector3d a = field(grid.coords(p));
    double diag = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
      if (a[axis] == 0.0)
        continue;
      const double w = a[axis] / h[static_cast<std::size_t>(axis)];
      const WrappedNode q = wrap(model, grid, i + (axis == 0), j + (axis == 1),
                                 k + (axis == 2));
      triplets.emplace_back(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q.index), w);
      diag -= w;
      for (int c = 0; c < 3; ++c)
        out.offsets[static_cast<std::size_t>(c)][static_cast<Eigen::Index>(p)] +=
            w * static_cast<double>(q.gamma[static_cast<std::size_t>(c)]);
    }
    if (diag != 0.0)
      triplets.emplace_back(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p), diag);
  }
  out.op.matrix.resize(n, n);
  out.op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  out.op.matrix.makeCompressed();
  return out;
}

SparseOperator assemble_first_order(const GroupModel &model, const Grid &grid,
                                    std::size_t frame_index) {
  return assemble_frame_derivative(model, grid, frame_index).op;
}

SparseOperator assemble_sub_laplacian(const GroupModel &model, const Grid &grid) {
  if (!model.mean_curvature().is_zero())
    throw UnsupportedModel("sub-Laplacian assembly requires ζ ≡ 0");
  const auto n = static_cast<Eigen::Index>(grid.size());
  SparseMatrix lap(n, n);
  for (std::size_t i = 0; i < model.horizontal_rank(); ++i) {
    const SparseMatrix d = assemble_first_order(model, grid, i).matrix;
    const SparseMatrix dtd = SparseMatrix(d.transpose()) * d;
    lap -= dtd;
  }
  // Sparse products may accumulate (p,r) and (r,p) in different orders.
  lap = 0.5 * (lap + SparseMatrix(lap.transpose()));
  lap.prune(0.0);
  lap.makeCompressed();
  return {std::move(lap), true, true};
}

double gershgorin_radius(const SparseMatrix &m) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(m, r); it; ++it)
      s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

Discretization::Discretization(GroupModel model, Grid grid)
    : model_(std::move(model)), grid_(grid) {
  grid_.validate(model_);
  for (std::size_t a = 0; a < model_.frame_size(); ++a)
    derivatives_.push_back(assemble_frame_derivative(model_, grid_, a));
  laplacian_ = assemble_sub_laplacian(model_, grid_);
  const auto n = static_cast<Eigen::Index>(grid_.size());
  for (std::size_t c = 0; c < 3; ++c) {
    laplacian_offsets_[c] = ScalarField::Zero(n);
    for (std::size_t i = 0; i < model_.horizontal_rank(); ++i)
      laplacian_offsets_[c] -=
          derivatives_[i].op.matrix.transpose() * derivatives_[i].offsets[c];
  }
  gershgorin_ = gershgorin_radius(laplacian_.matrix);
}

ScalarField Discretization::apply_derivative(std::size_t frame_index, const ScalarField &u,
                                             const std::array<long, 3> &winding) const {
  const FrameDerivative &d = derivatives_.at(frame_index);
  ScalarField out = d.op.matrix * u;
  for (std::size_t c = 0; c < 3; ++c)
    if (winding[c] != 0)
      out += static_cast<double>(winding[c]) * d.offsets[c];
  return out;
}

ScalarField Discretization::apply_sub_laplacian(const ScalarField &u,
                                                const std::array<long, 3> &winding) const {
  ScalarField out = laplacian_.matrix * u;
  for (std::size_t c = 0; c < 3; ++c)
    if (winding[c] != 0)
      out += static_cast<double>(winding[c]) * laplacian_offsets_[c];
  return out;
}

ScalarField Discretization::apply_transpose(std::size_t frame_index,
                                            const ScalarField &g) const {
  return derivatives_.at(frame_index).op.matrix.transpose() * g;
}

std::vector<ScalarField> Discretization::horizontal_gradient(const ScalarField &u) const {
  std::vector<ScalarField> out;
  out.reserve(horizontal_rank());
  for (std::size_t i = 0; i < horizontal_rank(); ++i)
    out.push_back(derivatives_[i].op.matrix * u);
  return out;
}

double Discretization::integrate(const ScalarField &u) const {
  return grid_.cell_volume() * u.sum();
}

ScalarField
Discretization::sample(const std::function<double(const Eigen::Vector3d &)> &f) const {
  ScalarField out(static_cast<Eigen::Index>(size()));
  for (std::size_t p = 0; p < size(); ++p)
    out[static_cast<Eigen::Index>(p)] = f(grid_.coords(p));
  return out;
}

double seam_bump(double x) {
  const double s = std::sin(M_PI * x);
  const double s2 = s * s;
  return s2 * s2 * s2;
}

std::vector<std::function<double(const Eigen::Vector3d &)>> commutator_probes() {
  constexpr double tau = 2.0 * M_PI;
  return {
      [](const Eigen::Vector3d &p) { return std::sin(tau * p[0]); },
      [](const Eigen::Vector3d &p) { return std::cos(tau * (p[0] + p[1])); },
      [](const Eigen::Vector3d &p) { return seam_bump(p[0]) * std::sin(tau * p[2]); },
      [](const Eigen::Vector3d &p) {
        return seam_bump(p[0]) * std::cos(tau * (p[1] + p[2]));
      },
  };
}

double commutator_defect_on(const Discretization &disc,
                            const std::function<double(const Eigen::Vector3d &)> &probe) {
  if (disc.model().horizontal_rank() != 2 || disc.model().vertical_rank() != 1)
    throw UnsupportedModel("commutator defect needs m = 2, d = 1");
  const ScalarField f = disc.sample(probe);
  const SparseMatrix &d1 = disc.derivative(0).op.matrix;
  const SparseMatrix &d2 = disc.derivative(1).op.matrix;
  const SparseMatrix &d3 = disc.derivative(2).op.matrix;
  const ScalarField r = d1 * (d2 * f) - d2 * (d1 * f) - d3 * f;
  return r.cwiseAbs().maxCoeff();
}

double commutator_defect(const Discretization &disc) {
  double worst = 0.0;
  for (const auto &probe : commutator_probes())
    worst = std::max(worst, commutator_defect_on(disc, probe));
  return worst;
}

void write_field(std::ostream &os, const Grid &grid, const ScalarField &f) {
  if (static_cast<std::size_t>(f.size()) != grid.size())
    throw IoError("field size does not match grid");
  put_le<std::uint32_t>(os, kFieldMagic);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(grid.nx));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(grid.ny));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(grid.nz));
  for (Eigen::Index p = 0; p < f.size(); ++p)
    put_le<double>(os, f[p]);
  if (!os)
    throw IoError("failed writing field data");
}

ScalarField read_field(std::istream &is, Grid &grid_out) {
  if (get_le<std::uint32_t>(is) != kFieldMagic)
    throw IoError("bad field magic");
  grid_out.nx = static_cast<int>(get_le<std::uint32_t>(is));
  grid_out.ny = static_cast<int>(get_le<std::uint32_t>(is));
  grid_out.nz = static_cast<int>(get_le<std::uint32_t>(is));
  ScalarField f(static_cast<Eigen::Index>(grid_out.size()));
  for (Eigen::Index p = 0; p < f.size(); ++p)
    f[p] = get_le<double>(is);
  return f;
}

void save_field(const std::filesystem::path &path, const Grid &grid, const ScalarField &f) {
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw IoError("cannot open " + path.string() + " for writing");
  write_field(os, grid, f);
}

ScalarField load_field(const std::filesystem::path &path, Grid &grid_out) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw IoError("cannot open " + path.string());
  return read_field(is, grid_out);
}

} // namespace subflow
