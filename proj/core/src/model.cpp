#include "subflow/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/LU>

#include "subflow/error.hpp"

namespace subflow {

namespace {

long floor_div(long a, long b) {
  long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0)))
    --q;
  return q;
}

VectorField coordinate_field(int axis) {
  VectorField v;
  v.coeff[axis] = Polynomial::constant(1.0);
  return v;
}

// Sample points used for pointwise rank checks; generic enough that
// polynomial degeneracies on coordinate planes are avoided.
std::vector<Eigen::Vector3d> rank_sample_points() {
  return {{0.0, 0.0, 0.0},
          {0.5, 0.25, 0.75},
          {0.137, 0.711, 0.293},
          {0.9, 0.6, 0.1},
          {0.31, 0.05, 0.58}};
}

int span_rank(const std::vector<VectorField> &fields, const Eigen::Vector3d &p) {
  if (fields.empty())
    return 0;
  Eigen::MatrixXd m(3, static_cast<Eigen::Index>(fields.size()));
  for (std::size_t c = 0; c < fields.size(); ++c)
    m.col(static_cast<Eigen::Index>(c)) = fields[c](p);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  lu.setThreshold(1e-10);
  return static_cast<int>(lu.rank());
}

} // namespace

FrameField::FrameField(std::string name, VectorField symbolic)
    : name_(std::move(name)), symbolic_(std::move(symbolic)) {
  numeric_ = [f = *symbolic_](const Eigen::Vector3d &p) { return f(p); };
}

FrameField::FrameField(std::string name,
                       std::function<Eigen::Vector3d(const Eigen::Vector3d &)> numeric)
    : name_(std::move(name)), numeric_(std::move(numeric)) {}

Eigen::Vector3d FrameField::operator()(const Eigen::Vector3d &p) const {
  return numeric_(p);
}

GroupModel::GroupModel(std::string name, std::vector<FrameField> horizontal,
                       std::vector<FrameField> vertical, VectorField mean_curvature,
                       int twist)
    : name_(std::move(name)), horizontal_(std::move(horizontal)),
      vertical_(std::move(vertical)), zeta_(std::move(mean_curvature)),
      twist_(twist) {
  if (frame_size() != 3)
    throw UnsupportedModel("model '" + name_ + "': frame must have 3 fields, got " +
                           std::to_string(frame_size()));
}

GroupModel GroupModel::heisenberg() {
  VectorField x2 = coordinate_field(1);
  x2.coeff[2] = Polynomial::coordinate(0);
  return GroupModel("heisenberg",
                    {FrameField("X1", coordinate_field(0)), FrameField("X2", x2)},
                    {FrameField("X3", coordinate_field(2))}, VectorField{}, 1);
}

GroupModel GroupModel::degenerate_torus() {
  return GroupModel("torus-degenerate",
                    {FrameField("dx", coordinate_field(0)),
                     FrameField("dy", coordinate_field(1))},
                    {FrameField("dz", coordinate_field(2))}, VectorField{}, 0);
}

GroupModel GroupModel::full_rank_torus() {
  return GroupModel("torus-full",
                    {FrameField("dx", coordinate_field(0)),
                     FrameField("dy", coordinate_field(1)),
                     FrameField("dz", coordinate_field(2))},
                    {}, VectorField{}, 0);
}

GroupModel GroupModel::from_name(const std::string &name) {
  if (name == "heisenberg")
    return heisenberg();
  if (name == "torus-degenerate")
    return degenerate_torus();
  if (name == "torus-full")
    return full_rank_torus();
  throw UnsupportedModel("unknown model '" + name + "'");
}

const FrameField &GroupModel::frame(std::size_t a) const {
  if (a < horizontal_.size())
    return horizontal_[a];
  return vertical_.at(a - horizontal_.size());
}

Eigen::Matrix3d GroupModel::frame_matrix(const Eigen::Vector3d &p) const {
  Eigen::Matrix3d m;
  for (std::size_t a = 0; a < 3; ++a)
    m.col(static_cast<Eigen::Index>(a)) = frame(a)(p);
  return m;
}

LatticeElement GroupModel::compose(const LatticeElement &g,
                                   const LatticeElement &h) const {
  return {g[0] + h[0], g[1] + h[1], g[2] + h[2] + twist_ * g[0] * h[1]};
}

Eigen::Vector3d GroupModel::act(const LatticeElement &g, const Eigen::Vector3d &p) const {
  return {static_cast<double>(g[0]) + p[0], static_cast<double>(g[1]) + p[1],
          static_cast<double>(g[2]) + p[2] + twist_ * static_cast<double>(g[0]) * p[1]};
}

void Grid::validate(const GroupModel &model) const {
  if (nx <= 0 || ny <= 0 || nz <= 0)
    throw DomainError("grid node counts must be positive");
  if (model.twist() != 0 && nz % ny != 0)
    throw DomainError("grid: N_y = " + std::to_string(ny) + " must divide N_z = " +
                      std::to_string(nz) + " for the twisted lattice");
}

double Grid::h_min() const { return std::min({hx(), hy(), hz()}); }
double Grid::h_max() const { return std::max({hx(), hy(), hz()}); }

std::array<int, 3> Grid::node(std::size_t p) const {
  const int k = static_cast<int>(p % nz);
  const std::size_t r = p / nz;
  return {static_cast<int>(r / ny), static_cast<int>(r % ny), k};
}

Eigen::Vector3d Grid::coords(std::size_t p) const {
  const auto [i, j, k] = node(p);
  return {i * hx(), j * hy(), k * hz()};
}

WrappedNode wrap(const GroupModel &model, const Grid &grid, long i, long j, long k) {
  const long a = floor_div(i, grid.nx);
  const long i0 = i - a * grid.nx;
  const long b = floor_div(j, grid.ny);
  const long j0 = j - b * grid.ny;
  long kk = k;
  if (model.twist() != 0)
    kk -= model.twist() * a * j0 * (grid.nz / grid.ny);
  const long c = floor_div(kk, grid.nz);
  const long k0 = kk - c * grid.nz;
  return {grid.index(static_cast<int>(i0), static_cast<int>(j0), static_cast<int>(k0)),
          {a, b, c}};
}

BracketTable::BracketTable(const GroupModel &model) : model_(&model) {
  const std::size_t n = model.frame_size();
  for (std::size_t a = 0; a < n; ++a)
    if (!model.frame(a).symbolic())
      throw UnsupportedModel("frame field '" + model.frame(a).name() +
                             "' has no polynomial coefficients");
  brackets_.assign(n, std::vector<VectorField>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      brackets_[a][b] =
          lie_bracket(*model.frame(a).symbolic(), *model.frame(b).symbolic());
}

Eigen::VectorXd BracketTable::frame_coefficients(std::size_t a, std::size_t b,
                                                 const Eigen::Vector3d &p) const {
  const Eigen::Matrix3d f = model_->frame_matrix(p);
  Eigen::FullPivLU<Eigen::Matrix3d> lu(f);
  if (!lu.isInvertible())
    throw UnsupportedModel("frame is degenerate at the evaluation point");
  return lu.solve(brackets_[a][b](p));
}

BracketTable frame_bracket_table(const GroupModel &model) { return BracketTable(model); }

int verify_bracket_generating(const GroupModel &model, int max_depth) {
  std::vector<VectorField> level;
  for (const auto &f : model.horizontal()) {
    if (!f.symbolic())
      throw UnsupportedModel("frame field '" + f.name() +
                             "' has no polynomial coefficients");
    level.push_back(*f.symbolic());
  }
  const std::vector<VectorField> first = level;
  std::vector<VectorField> span = level;
  const auto points = rank_sample_points();
  for (int r = 1; r <= max_depth; ++r) {
    const bool full = std::all_of(points.begin(), points.end(),
                                  [&](const auto &p) { return span_rank(span, p) == 3; });
    if (full)
      return r;
    std::vector<VectorField> next;
    for (const auto &e : first)
      for (const auto &w : level) {
        VectorField br = lie_bracket(e, w);
        if (!br.is_zero())
          next.push_back(std::move(br));
      }
    if (next.empty())
      break;
    span.insert(span.end(), next.begin(), next.end());
    level = std::move(next);
  }
  throw NotBracketGenerating("model '" + model.name() +
                             "': horizontal brackets do not span the tangent space "
                             "up to depth " + std::to_string(max_depth));
}

namespace {

double eta_with_table(const GroupModel &model, const BracketTable &table,
                      const Eigen::VectorXd &v, const Eigen::Vector3d &p) {
  const std::size_t m = model.horizontal_rank();
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      const Eigen::VectorXd c = table.frame_coefficients(i, j, p);
      double pair = 0.0;
      for (std::size_t al = 0; al < model.vertical_rank(); ++al)
        pair += c[static_cast<Eigen::Index>(m + al)] * v[static_cast<Eigen::Index>(al)];
      s += pair * pair;
    }
  return s;
}

void require_unit_vertical(const GroupModel &model, const Eigen::VectorXd &v) {
  if (static_cast<std::size_t>(v.size()) != model.vertical_rank())
    throw DomainError("vertical vector has " + std::to_string(v.size()) +
                      " components, model has d = " +
                      std::to_string(model.vertical_rank()));
  if (std::abs(v.norm() - 1.0) > 1e-12)
    throw DomainError("vertical vector is not unit length (|v| = " +
                      std::to_string(v.norm()) + ")");
}

std::vector<Eigen::VectorXd> vertical_sphere_samples(std::size_t d, int count) {
  std::vector<Eigen::VectorXd> out;
  if (d == 1) {
    out.push_back(Eigen::VectorXd::Constant(1, 1.0));
    out.push_back(Eigen::VectorXd::Constant(1, -1.0));
    return out;
  }
  if (d == 2) {
    for (int s = 0; s < count; ++s) {
      const double th = 2.0 * M_PI * s / count;
      Eigen::VectorXd v(2);
      v << std::cos(th), std::sin(th);
      out.push_back(v);
    }
    return out;
  }
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  for (int s = 0; s < count; ++s) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    for (auto &c : v)
      c = normal(rng);
    out.push_back(v.normalized());
  }
  return out;
}

} // namespace

double eta_at(const GroupModel &model, const Eigen::VectorXd &v,
              const Eigen::Vector3d &p) {
  require_unit_vertical(model, v);
  const BracketTable table(model);
  return eta_with_table(model, table, v, p);
}

double eta_min(const GroupModel &model, const Grid &grid, int sphere_samples) {
  if (model.vertical_rank() == 0)
    throw DomainError("eta_min needs a model with d >= 1");
  if (sphere_samples <= 0)
    throw DomainError("sphere_samples must be positive");
  const BracketTable table(model);
  const auto samples = vertical_sphere_samples(model.vertical_rank(), sphere_samples);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const Eigen::Vector3d x = grid.coords(p);
    for (const auto &v : samples)
      best = std::min(best, eta_with_table(model, table, v, x));
  }
  return best;
}

} // namespace subflow
