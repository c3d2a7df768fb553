#include "subflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>

#include "subflow/error.hpp"

namespace subflow {

namespace {

using Index = Eigen::Index;

Index ix(std::size_t i) { return static_cast<Index>(i); }

Vector node_vector(const std::vector<ScalarField> &c, std::size_t p) {
  Vector v(ix(c.size()));
  for (std::size_t a = 0; a < c.size(); ++a)
    v[ix(a)] = c[a][ix(p)];
  return v;
}

// −Σ_i D_iᵀ g_i over the horizontal frame.
ScalarField divergence(const Discretization &disc, const std::vector<ScalarField> &g) {
  ScalarField out = ScalarField::Zero(ix(disc.size()));
  for (std::size_t i = 0; i < disc.horizontal_rank(); ++i)
    out -= disc.apply_transpose(i, g[i]);
  return out;
}

} // namespace

std::string to_string(Scheme s) {
  return s == Scheme::projected_euler ? "projected-euler" : "tubular-euler";
}

std::string to_string(TensionScheme s) {
  return s == TensionScheme::variational ? "variational" : "pointwise";
}

double stable_dt(const Discretization &disc, double cfl_safety) {
  return cfl_safety * 2.0 / disc.spectral_radius_bound();
}

void validate_flow_config(const FlowConfig &config, const Discretization &disc) {
  if (!(config.cfl_safety > 0.0 && config.cfl_safety <= 1.0))
    throw DomainError("cfl_safety must lie in (0, 1]");
  if (!(config.dt >= 0.0) || !std::isfinite(config.dt))
    throw DomainError("dt must be positive (or 0 for automatic)");
  if (!(config.t_max >= 0.0) || !std::isfinite(config.t_max))
    throw DomainError("t_max must be nonnegative");
  if (!(config.stop_tolerance > 0.0))
    throw DomainError("stop_tolerance must be positive");
  if (config.record_stride < 1)
    throw DomainError("record_stride must be at least 1");
  if (config.snapshot_stride < 0)
    throw DomainError("snapshot_stride must be nonnegative");
  if (config.max_halvings < 0)
    throw DomainError("max_halvings must be nonnegative");
  const double limit = stable_dt(disc, config.cfl_safety);
  if (config.dt > limit * (1.0 + 1e-12))
    throw DomainError("dt = " + std::to_string(config.dt) +
                      " exceeds the stability limit " + std::to_string(limit));
}

void validate_map(const Target &target, const MapState &u) {
  if (u.dimension() != target.components())
    throw DomainError("map has " + std::to_string(u.dimension()) + " components, target " +
                      target.name() + " needs " + std::to_string(target.components()));
  const std::size_t n = u.nodes();
  for (const auto &c : u.components)
    if (static_cast<std::size_t>(c.size()) != n)
      throw DomainError("map components have different lengths");
  if (!u.all_finite())
    throw DomainError("map contains non-finite values");
  if (u.winding.rows() != 0) {
    if (static_cast<std::size_t>(u.winding.rows()) != u.dimension())
      throw DomainError("winding matrix has wrong row count");
    if (u.winding.col(2).cwiseAbs().sum() != 0)
      throw DomainError("winding along the central generator must vanish");
    if (u.has_winding() && !target.supports_winding())
      throw DomainError("target " + target.name() + " does not carry winding data");
  }
  if (!target.is_embedded()) {
    if (u.representation != Representation::intrinsic_chart)
      throw DomainError("intrinsic target needs an intrinsic-chart map");
    const auto &intr = static_cast<const IntrinsicTarget &>(target);
    for (std::size_t p = 0; p < n; ++p)
      if (!intr.in_chart(node_vector(u.components, p)))
        throw DomainError("map leaves the chart of " + target.name());
    return;
  }
  const auto &emb = static_cast<const EmbeddedTarget &>(target);
  if (u.representation == Representation::intrinsic_chart)
    throw DomainError("embedded target needs an extrinsic map");
  if (target.supports_winding())
    return;
  for (std::size_t p = 0; p < n; ++p) {
    const Vector y = node_vector(u.components, p);
    if (u.representation == Representation::extrinsic_ambient) {
      if (!emb.on_manifold(y))
        throw DomainError("map value off " + target.name() + " (distance " +
                          std::to_string(emb.distance_to_manifold(y)) + ")");
    } else if (!emb.within_tube(y)) {
      throw DomainError("map value outside the tubular neighbourhood of " + target.name());
    }
  }
}

Evaluation evaluate(const Discretization &disc, const Target &target,
                    const Potential &potential, const MapState &u, TensionScheme scheme) {
  validate_map(target, u);
  const std::size_t K = u.dimension();
  const std::size_t n = u.nodes();
  const std::size_t m = disc.horizontal_rank();
  const std::size_t F = disc.model().frame_size();
  if (n != disc.size())
    throw DomainError("map and discretisation have different node counts");

  // grads[A][a] = D_A u^a
  std::vector<std::vector<ScalarField>> grads(F, std::vector<ScalarField>(K));
  for (std::size_t A = 0; A < F; ++A)
    for (std::size_t a = 0; a < K; ++a)
      grads[A][a] = disc.apply_derivative(A, u.components[a], u.winding_row(a));

  ScalarField eH = ScalarField::Zero(ix(n));
  ScalarField eV = ScalarField::Zero(ix(n));
  ScalarField G(ix(n));
  ScalarField tau_sq(ix(n));
  TensionField tau(K, ScalarField::Zero(ix(n)));
  double defect = 0.0;

  const auto gradient_at = [&](std::size_t A, std::size_t p) {
    Vector g(ix(K));
    for (std::size_t a = 0; a < K; ++a)
      g[ix(a)] = grads[A][a][ix(p)];
    return g;
  };

  if (!target.is_embedded()) {
    const auto &intr = static_cast<const IntrinsicTarget &>(target);
    std::vector<Matrix> metric(n);
    for (std::size_t p = 0; p < n; ++p)
      metric[p] = intr.metric(node_vector(u.components, p));
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t A = 0; A < F; ++A) {
        const Vector g = gradient_at(A, p);
        const double e = 0.5 * g.dot(metric[p] * g);
        (A < m ? eH : eV)[ix(p)] += e;
      }
    }
    if (scheme == TensionScheme::variational) {
      // flux[K][i] = h_KJ(u) D_i u^J
      std::vector<ScalarField> div(K);
      for (std::size_t k = 0; k < K; ++k) {
        std::vector<ScalarField> flux(m, ScalarField(ix(n)));
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < n; ++p)
            flux[i][ix(p)] = metric[p].row(ix(k)).dot(gradient_at(i, p));
        div[k] = divergence(disc, flux);
      }
      for (std::size_t p = 0; p < n; ++p) {
        const Vector w = node_vector(u.components, p);
        const Tensor3 dh = intr.metric_derivative(w);
        Vector rhs = potential.differential(w);
        for (std::size_t k = 0; k < K; ++k) {
          rhs[ix(k)] += div[k][ix(p)];
          for (std::size_t i = 0; i < m; ++i) {
            const Vector g = gradient_at(i, p);
            rhs[ix(k)] -= 0.5 * g.dot(dh[k] * g);
          }
        }
        const Vector t = metric[p].ldlt().solve(rhs);
        for (std::size_t k = 0; k < K; ++k)
          tau[k][ix(p)] = t[ix(k)];
      }
    } else {
      for (std::size_t k = 0; k < K; ++k)
        tau[k] = disc.apply_sub_laplacian(u.components[k]);
      for (std::size_t p = 0; p < n; ++p) {
        const Vector w = node_vector(u.components, p);
        const Tensor3 gamma = intr.christoffel(w);
        const Vector grad_G = intr.inverse_metric(w) * potential.differential(w);
        for (std::size_t k = 0; k < K; ++k) {
          double s = grad_G[ix(k)];
          for (std::size_t i = 0; i < m; ++i) {
            const Vector g = gradient_at(i, p);
            s += g.dot(gamma[k] * g);
          }
          tau[k][ix(p)] += s;
        }
      }
    }
    for (std::size_t p = 0; p < n; ++p) {
      const Vector w = node_vector(u.components, p);
      const Vector t = node_vector(tau, p);
      G[ix(p)] = potential.value(w);
      tau_sq[ix(p)] = t.dot(metric[p] * t);
    }
  } else {
    const auto &emb = static_cast<const EmbeddedTarget &>(target);
    for (std::size_t A = 0; A < F; ++A)
      for (std::size_t a = 0; a < K; ++a)
        (A < m ? eH : eV) += 0.5 * grads[A][a].array().square().matrix();

    std::vector<ScalarField> lap(K);
    for (std::size_t a = 0; a < K; ++a) {
      std::vector<ScalarField> g(m);
      for (std::size_t i = 0; i < m; ++i)
        g[i] = grads[i][a];
      lap[a] = divergence(disc, g);
    }

    if (target.supports_winding()) {
      for (std::size_t p = 0; p < n; ++p) {
        const Vector y = node_vector(u.components, p);
        const Vector d = potential.differential(y);
        for (std::size_t a = 0; a < K; ++a)
          tau[a][ix(p)] = lap[a][ix(p)] + d[ix(a)];
      }
    } else if (scheme == TensionScheme::variational) {
      // τ = Δu − (Δ Π(u) − dΠ(u) Δu) + dΠ(u) DḠ(u)
      std::vector<ScalarField> proj(K, ScalarField(ix(n)));
      for (std::size_t p = 0; p < n; ++p) {
        const Vector q = emb.project(node_vector(u.components, p));
        for (std::size_t a = 0; a < K; ++a)
          proj[a][ix(p)] = q[ix(a)];
      }
      std::vector<ScalarField> lap_proj(K);
      for (std::size_t a = 0; a < K; ++a)
        lap_proj[a] = divergence(disc, disc.horizontal_gradient(proj[a]));
      for (std::size_t p = 0; p < n; ++p) {
        const Vector y = node_vector(u.components, p);
        const Matrix J = emb.jets_at(y).first;
        const Vector t = J * (node_vector(lap, p) + potential.differential(y));
        for (std::size_t a = 0; a < K; ++a)
          tau[a][ix(p)] = lap[a][ix(p)] - lap_proj[a][ix(p)] + t[ix(a)];
      }
    } else {
      for (std::size_t p = 0; p < n; ++p) {
        const Vector y = node_vector(u.components, p);
        const ProjectionJets j = emb.jets_at(y);
        const Vector t = j.first * potential.differential(y);
        for (std::size_t a = 0; a < K; ++a) {
          double s = lap[a][ix(p)] + t[ix(a)];
          for (std::size_t i = 0; i < m; ++i) {
            const Vector g = gradient_at(i, p);
            s -= g.dot(j.second[a] * g);
          }
          tau[a][ix(p)] = s;
        }
      }
    }
    double defect_sum = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const Vector y = node_vector(u.components, p);
      G[ix(p)] = potential.value(y);
      tau_sq[ix(p)] = node_vector(tau, p).squaredNorm();
      if (!target.supports_winding())
        defect_sum += (y - emb.project(y)).squaredNorm();
    }
    defect = disc.grid().cell_volume() * defect_sum;
  }

  Evaluation out;
  EnergyReport &r = out.report;
  r.E_H = disc.integrate(eH);
  r.E_V = disc.integrate(eV);
  r.E_P = -disc.integrate(G);
  r.E_G = r.E_H + r.E_P;
  r.E = r.E_H + r.E_V;
  r.sup_e = (eH + eV).maxCoeff();
  r.sup_tau = std::sqrt(tau_sq.maxCoeff());
  r.sup_ut = r.sup_tau;
  r.int_tau_sq = disc.integrate(tau_sq);
  r.normal_defect = defect;
  out.tau = std::move(tau);
  return out;
}

TensionField tension_field(const Discretization &disc, const Target &target,
                           const Potential &potential, const MapState &u,
                           TensionScheme scheme) {
  return evaluate(disc, target, potential, u, scheme).tau;
}

double tension_pairing(const Discretization &disc, const Target &target, const MapState &u,
                       const TensionField &tau, const std::vector<ScalarField> &v) {
  if (tau.size() != u.dimension() || v.size() != u.dimension())
    throw DomainError("pairing arguments have mismatched component counts");
  if (target.is_embedded()) {
    double s = 0.0;
    for (std::size_t a = 0; a < tau.size(); ++a)
      s += tau[a].dot(v[a]);
    return disc.grid().cell_volume() * s;
  }
  const auto &intr = static_cast<const IntrinsicTarget &>(target);
  double s = 0.0;
  for (std::size_t p = 0; p < u.nodes(); ++p)
    s += node_vector(tau, p).dot(intr.metric(node_vector(u.components, p)) *
                                 node_vector(v, p));
  return disc.grid().cell_volume() * s;
}

MapState advance(const Target &target, const MapState &u, const TensionField &tau,
                 double dt, Scheme scheme) {
  MapState next = u;
  for (std::size_t a = 0; a < u.dimension(); ++a)
    next.components[a] += dt * tau[a];
  next.t = u.t + dt;
  if (!next.all_finite())
    throw DomainError("numerical blow-up: non-finite values after step");
  if (!target.is_embedded()) {
    const auto &intr = static_cast<const IntrinsicTarget &>(target);
    for (std::size_t p = 0; p < next.nodes(); ++p)
      if (!intr.in_chart(node_vector(next.components, p)))
        throw DomainError("chart exit at node " + std::to_string(p));
    return next;
  }
  if (target.supports_winding())
    return next;
  const auto &emb = static_cast<const EmbeddedTarget &>(target);
  for (std::size_t p = 0; p < next.nodes(); ++p) {
    Vector y = node_vector(next.components, p);
    if (!emb.within_tube(y))
      throw DomainError("tube exit at node " + std::to_string(p) + " (distance " +
                        std::to_string(emb.distance_to_manifold(y)) + ")");
    if (scheme == Scheme::projected_euler) {
      y = emb.project(y);
      for (std::size_t a = 0; a < next.dimension(); ++a)
        next.components[a][ix(p)] = y[ix(a)];
    }
  }
  return next;
}

MapState step(const Discretization &disc, const MapState &u, const FlowConfig &config,
              const Target &target, const Potential &potential) {
  validate_flow_config(config, disc);
  const double dt = config.dt > 0.0 ? config.dt : stable_dt(disc, config.cfl_safety);
  const TensionField tau = tension_field(disc, target, potential, u, config.tension);
  return advance(target, u, tau, dt, config.scheme);
}

FlowResult run_flow(const Discretization &disc, const MapState &initial,
                    const FlowConfig &config, const Target &target,
                    const Potential &potential) {
  validate_flow_config(config, disc);
  if (config.scheme == Scheme::tubular_euler && !target.is_embedded())
    throw DomainError("tubular scheme needs an embedded target");
  double dt = config.dt > 0.0 ? config.dt : stable_dt(disc, config.cfl_safety);

  FlowResult res;
  res.final_state = initial;
  {
    std::ostringstream echo;
    echo.precision(17);
    echo << "scheme=" << to_string(config.scheme)
         << ";tension=" << to_string(config.tension) << ";dt=" << dt
         << ";t_max=" << config.t_max << ";stop_tolerance=" << config.stop_tolerance;
    res.ledger.config_echo = echo.str();
  }

  Evaluation ev = evaluate(disc, target, potential, initial, config.tension);
  res.ledger.record(initial.t, ev.report);
  if (config.snapshot_stride > 0)
    res.snapshots.push_back(initial);

  MapState &u = res.final_state;
  bool recorded_last = true;
  const double t_end = initial.t + config.t_max;
  const auto finish = [&](Outcome o, std::string msg) {
    if (!recorded_last)
      res.ledger.record(u.t, ev.report);
    res.outcome = o;
    res.ledger.outcome = o;
    res.message = std::move(msg);
  };

  for (;;) {
    if (ev.report.sup_tau < config.stop_tolerance) {
      finish(Outcome::converged, "sup|tau| below stop tolerance");
      break;
    }
    const double remaining = t_end - u.t;
    if (remaining <= 1e-12 * std::max(1.0, std::abs(t_end))) {
      finish(Outcome::budget_exhausted, "reached t_max");
      break;
    }
    double h = std::min(dt, remaining);
    MapState next;
    Evaluation ev_next;
    try {
      int halvings = 0;
      for (;;) {
        next = advance(target, u, ev.tau, h, config.scheme);
        ev_next = evaluate(disc, target, potential, next, config.tension);
        const bool increased =
            ev_next.report.E_G > ev.report.E_G + config.energy_tolerance;
        if (!increased || config.scheme != Scheme::projected_euler)
          break;
        if (halvings == config.max_halvings) {
          ++res.unresolved_increases;
          break;
        }
        ++halvings;
        ++res.halvings;
        h *= 0.5;
        dt = std::min(dt, h);
      }
    } catch (const DomainError &e) {
      finish(Outcome::aborted, e.what());
      break;
    }
    if (!std::isfinite(ev_next.report.E_G) || !std::isfinite(ev_next.report.sup_tau)) {
      finish(Outcome::aborted, "numerical blow-up: non-finite energy");
      break;
    }
    double dq = 0.0;
    for (std::size_t a = 0; a < u.dimension(); ++a)
      dq = std::max(dq, (next.components[a] - u.components[a]).cwiseAbs().maxCoeff());
    ev_next.report.sup_difference_quotient = dq / h;
    if (next.t <= u.t) {
      finish(Outcome::aborted, "time step underflow");
      break;
    }
    u = std::move(next);
    ev = std::move(ev_next);
    ++res.steps;
    recorded_last = false;
    if (res.steps % static_cast<std::size_t>(config.record_stride) == 0) {
      res.ledger.record(u.t, ev.report);
      recorded_last = true;
    }
    if (config.snapshot_stride > 0 &&
        res.steps % static_cast<std::size_t>(config.snapshot_stride) == 0)
      res.snapshots.push_back(u);
  }
  return res;
}

bool homotopy_check(const Target &target, const MapState &a, const MapState &b) {
  if (!target.supports_winding())
    throw UnsupportedOperation("homotopy_check needs a torus target with lifted maps");
  if (a.winding.rows() != b.winding.rows())
    return false;
  return a.winding == b.winding;
}

} // namespace subflow
