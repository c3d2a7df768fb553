#include "subflow/map_state.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "subflow/error.hpp"

namespace subflow {

std::string to_string(Representation r) {
  switch (r) {
  case Representation::extrinsic_ambient:
    return "extrinsic-ambient";
  case Representation::extrinsic_tubular:
    return "extrinsic-tubular";
  case Representation::intrinsic_chart:
    return "intrinsic-chart";
  }
  return "unknown";
}

Representation representation_from_string(const std::string &s) {
  if (s == "extrinsic-ambient")
    return Representation::extrinsic_ambient;
  if (s == "extrinsic-tubular")
    return Representation::extrinsic_tubular;
  if (s == "intrinsic-chart")
    return Representation::intrinsic_chart;
  throw IoError("unknown representation tag '" + s + "'");
}

MapState::MapState(Representation rep, std::vector<ScalarField> comps, double time)
    : representation(rep), components(std::move(comps)),
      winding(WindingMatrix::Zero(static_cast<Eigen::Index>(components.size()), 3)),
      t(time) {}

std::array<long, 3> MapState::winding_row(std::size_t a) const {
  if (winding.rows() == 0)
    return {0, 0, 0};
  const auto r = static_cast<Eigen::Index>(a);
  return {winding(r, 0), winding(r, 1), winding(r, 2)};
}

Eigen::VectorXd MapState::value(std::size_t p) const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dimension()));
  for (std::size_t a = 0; a < dimension(); ++a)
    v[static_cast<Eigen::Index>(a)] = components[a][static_cast<Eigen::Index>(p)];
  return v;
}

void MapState::set_value(std::size_t p, const Eigen::VectorXd &v) {
  for (std::size_t a = 0; a < dimension(); ++a)
    components[a][static_cast<Eigen::Index>(p)] = v[static_cast<Eigen::Index>(a)];
}

bool MapState::all_finite() const {
  for (const auto &c : components)
    if (!c.allFinite())
      return false;
  return true;
}

void save_checkpoint(const std::filesystem::path &stem, const Grid &grid,
                     const MapState &state) {
  auto bin = stem;
  bin += ".bin";
  {
    std::ofstream os(bin, std::ios::binary);
    if (!os)
      throw IoError("cannot open " + bin.string() + " for writing");
    for (const auto &c : state.components)
      write_field(os, grid, c);
  }
  nlohmann::json side;
  side["t"] = state.t;
  side["representation"] = to_string(state.representation);
  side["components"] = state.components.size();
  side["grid"] = {grid.nx, grid.ny, grid.nz};
  nlohmann::json w = nlohmann::json::array();
  for (Eigen::Index r = 0; r < state.winding.rows(); ++r)
    w.push_back({state.winding(r, 0), state.winding(r, 1), state.winding(r, 2)});
  side["winding"] = w;
  auto meta = stem;
  meta += ".json";
  std::ofstream os(meta);
  if (!os)
    throw IoError("cannot open " + meta.string() + " for writing");
  os << side.dump(2) << '\n';
  if (!os)
    throw IoError("failed writing " + meta.string());
}

MapState load_checkpoint(const std::filesystem::path &stem, Grid &grid_out) {
  auto meta = stem;
  meta += ".json";
  std::ifstream ms(meta);
  if (!ms)
    throw IoError("cannot open " + meta.string());
  nlohmann::json side;
  try {
    ms >> side;
  } catch (const nlohmann::json::exception &e) {
    throw IoError("malformed checkpoint sidecar: " + std::string(e.what()));
  }
  const auto count = side.at("components").get<std::size_t>();
  auto bin = stem;
  bin += ".bin";
  std::ifstream bs(bin, std::ios::binary);
  if (!bs)
    throw IoError("cannot open " + bin.string());
  std::vector<ScalarField> comps;
  for (std::size_t a = 0; a < count; ++a)
    comps.push_back(read_field(bs, grid_out));
  MapState state(representation_from_string(side.at("representation").get<std::string>()),
                 std::move(comps), side.at("t").get<double>());
  const auto &w = side.at("winding");
  if (w.size() != count)
    throw IoError("winding rows do not match component count");
  for (std::size_t r = 0; r < count; ++r)
    for (std::size_t c = 0; c < 3; ++c)
      state.winding(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          w.at(r).at(c).get<long>();
  return state;
}

} // namespace subflow
