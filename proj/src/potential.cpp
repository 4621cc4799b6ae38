#include "zrp/potential.hpp"

#include <Eigen/Dense>
#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zrp/rng.hpp"

namespace zrp {

double ring_capacity(std::int64_t L, std::int64_t x, std::int64_t y) {
  if (L < 2) throw std::invalid_argument("ring_capacity: L must be at least 2");
  std::int64_t d = std::abs(y - x) % L;
  if (d == 0) throw std::domain_error("ring_capacity: coinciding sites");
  return 1.0 / (static_cast<double>(d) * static_cast<double>(L - d));
}

double ring_harmonic(std::int64_t L, std::int64_t y, std::int64_t z) {
  if (y < 1 || y >= L || z < 0 || z >= L) throw std::invalid_argument("ring_harmonic: bad site");
  if (z < y) return 1.0 - static_cast<double>(z) / static_cast<double>(y);
  return static_cast<double>(z - y) / static_cast<double>(L - y);
}

namespace {

constexpr std::int64_t kDirectSolveLimit = 200000;

using SpMat = Eigen::SparseMatrix<double>;

/* solve M x = rhs for the Dirichlet-type systems below; direct for small,
 * diagonally preconditioned BiCGSTAB beyond */
Eigen::VectorXd solve_system(const SpMat& M, const Eigen::VectorXd& rhs, double tol,
                             const char* who) {
  Eigen::VectorXd x;
  if (M.rows() <= kDirectSolveLimit) {
    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(M);
    lu.factorize(M);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error(std::string(who) + ": singular system (disconnected states?)");
    x = lu.solve(rhs);
  } else {
    Eigen::BiCGSTAB<SpMat, Eigen::DiagonalPreconditioner<double>> it;
    it.setTolerance(tol * 1e-2);
    it.setMaxIterations(20000);
    it.compute(M);
    x = it.solve(rhs);
    if (it.info() != Eigen::Success)
      throw std::runtime_error(std::string(who) + ": iterative solve did not converge");
  }
  double nb = rhs.norm();
  double res = (M * x - rhs).norm() / (nb > 0.0 ? nb : 1.0);
  if (res > tol)
    throw std::runtime_error(std::string(who) + ": residual " + std::to_string(res) +
                             " above tolerance");
  return x;
}

}  // namespace

CapacityResult generic_capacity(const ChainSpec& chain, std::span<const std::int64_t> A,
                                std::span<const std::int64_t> B, int variational_checks) {
  const std::int64_t n = chain.size();
  if (A.empty() || B.empty()) throw std::invalid_argument("generic_capacity: empty set");
  std::vector<std::int8_t> tag(static_cast<std::size_t>(n), 0);  // 1=A, 2=B
  for (auto i : A) tag[static_cast<std::size_t>(i)] = 1;
  for (auto i : B) {
    if (tag[static_cast<std::size_t>(i)] == 1)
      throw std::invalid_argument("generic_capacity: A and B intersect");
    tag[static_cast<std::size_t>(i)] = 2;
  }

  std::vector<std::int64_t> interior;
  std::vector<std::int64_t> pos(static_cast<std::size_t>(n), -1);
  for (std::int64_t i = 0; i < n; ++i)
    if (tag[static_cast<std::size_t>(i)] == 0) {
      pos[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(interior.size());
      interior.push_back(i);
    }

  CapacityResult out;
  out.h.assign(static_cast<std::size_t>(n), 0.0);
  for (auto i : A) out.h[static_cast<std::size_t>(i)] = 1.0;

  if (!interior.empty()) {
    const std::int64_t m = static_cast<std::int64_t>(interior.size());
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (std::int64_t k = 0; k < m; ++k) {
      std::int64_t i = interior[static_cast<std::size_t>(k)];
      double diag = 0.0;
      for (const auto& [j, r] : chain.row(i)) {
        diag += r;
        switch (tag[static_cast<std::size_t>(j)]) {
          case 0:
            trip.emplace_back(static_cast<int>(k), static_cast<int>(pos[static_cast<std::size_t>(j)]), -r);
            break;
          case 1:
            rhs[k] += r;
            break;
          default:
            break;
        }
      }
      trip.emplace_back(static_cast<int>(k), static_cast<int>(k), diag);
    }
    SpMat M(m, m);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd hI = solve_system(M, rhs, 1e-10, "generic_capacity");
    out.residual = (M * hI - rhs).norm() / std::max(rhs.norm(), 1e-300);
    for (std::int64_t k = 0; k < m; ++k)
      out.h[static_cast<std::size_t>(interior[static_cast<std::size_t>(k)])] =
          std::clamp(hI[k], 0.0, 1.0);
  }

  out.cap = dirichlet_form(chain, out.h);

  /* variational sanity: every feasible profile must dominate the capacity */
  if (variational_checks > 0) {
    RngStream rng(0x5eedf00dULL, static_cast<std::uint64_t>(n) * 1000003ULL + A.size());
    std::vector<double> f(static_cast<std::size_t>(n));
    for (int c = 0; c < variational_checks; ++c) {
      for (std::int64_t i = 0; i < n; ++i) {
        switch (tag[static_cast<std::size_t>(i)]) {
          case 1: f[static_cast<std::size_t>(i)] = 1.0; break;
          case 2: f[static_cast<std::size_t>(i)] = 0.0; break;
          default: f[static_cast<std::size_t>(i)] = rng.uniform(); break;
        }
      }
      double d = dirichlet_form(chain, f);
      if (d < out.cap * (1.0 - 1e-9) - 1e-300)
        throw std::logic_error("generic_capacity: variational principle violated");
    }
  }
  return out;
}

ChainSpec trace_chain(const ChainSpec& chain, std::span<const std::int64_t> E) {
  const std::int64_t n = chain.size();
  if (E.empty()) throw std::invalid_argument("trace_chain: empty target set");
  const std::int64_t ne = static_cast<std::int64_t>(E.size());
  std::vector<std::int64_t> epos(static_cast<std::size_t>(n), -1);
  for (std::int64_t k = 0; k < ne; ++k) {
    if (epos[static_cast<std::size_t>(E[static_cast<std::size_t>(k)])] >= 0)
      throw std::invalid_argument("trace_chain: duplicate state in E");
    epos[static_cast<std::size_t>(E[static_cast<std::size_t>(k)])] = k;
  }
  std::vector<std::int64_t> delta;
  std::vector<std::int64_t> dpos(static_cast<std::size_t>(n), -1);
  for (std::int64_t i = 0; i < n; ++i)
    if (epos[static_cast<std::size_t>(i)] < 0) {
      dpos[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(delta.size());
      delta.push_back(i);
    }

  ChainSpec out(ne);
  for (std::int64_t k = 0; k < ne; ++k)
    out.set_weight(k, chain.weight(E[static_cast<std::size_t>(k)]));

  const std::int64_t nd = static_cast<std::int64_t>(delta.size());
  Eigen::MatrixXd H;  // absorption probabilities: H(d, e) = P_d[enter E at E[e]]
  if (nd > 0) {
    if (nd > kDirectSolveLimit)
      throw std::length_error("trace_chain: excursion set too large for direct solve");
    if (nd * ne > 50000000)
      throw std::length_error("trace_chain: absorption table exceeds budget");
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(nd, ne);
    for (std::int64_t k = 0; k < nd; ++k) {
      std::int64_t i = delta[static_cast<std::size_t>(k)];
      double diag = 0.0;
      for (const auto& [j, r] : chain.row(i)) {
        diag += r;
        std::int64_t ej = epos[static_cast<std::size_t>(j)];
        if (ej >= 0)
          rhs(k, ej) += r;
        else
          trip.emplace_back(static_cast<int>(k), static_cast<int>(dpos[static_cast<std::size_t>(j)]), -r);
      }
      if (diag <= 0.0) throw std::runtime_error("trace_chain: absorbing excursion state");
      trip.emplace_back(static_cast<int>(k), static_cast<int>(k), diag);
    }
    SpMat M(nd, nd);
    M.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(M);
    lu.factorize(M);
    if (lu.info() != Eigen::Success)
      throw std::runtime_error("trace_chain: excursion system singular (no path back?)");
    H = lu.solve(rhs);
    double res = (M * H - rhs).norm() / std::max(rhs.norm(), 1e-300);
    if (res > 1e-10)
      throw std::runtime_error("trace_chain: absorption solve residual above tolerance");
  }

  std::vector<double> acc(static_cast<std::size_t>(ne));
  for (std::int64_t k = 0; k < ne; ++k) {
    std::fill(acc.begin(), acc.end(), 0.0);
    std::int64_t i = E[static_cast<std::size_t>(k)];
    for (const auto& [j, r] : chain.row(i)) {
      std::int64_t ej = epos[static_cast<std::size_t>(j)];
      if (ej >= 0) {
        acc[static_cast<std::size_t>(ej)] += r;
      } else {
        std::int64_t dj = dpos[static_cast<std::size_t>(j)];
        for (std::int64_t e = 0; e < ne; ++e) acc[static_cast<std::size_t>(e)] += r * H(dj, e);
      }
    }
    for (std::int64_t e = 0; e < ne; ++e) {
      if (e == k) continue;  // an excursion returning home is not a move
      double v = acc[static_cast<std::size_t>(e)];
      if (v > 1e-300) out.add_rate(k, e, v);
    }
  }
  return out;
}

ChainSpec restricted_chain(const ChainSpec& chain, std::span<const std::int64_t> well) {
  const std::int64_t n = chain.size();
  if (well.empty()) throw std::invalid_argument("restricted_chain: empty set");
  std::vector<std::int64_t> pos(static_cast<std::size_t>(n), -1);
  const std::int64_t m = static_cast<std::int64_t>(well.size());
  for (std::int64_t k = 0; k < m; ++k)
    pos[static_cast<std::size_t>(well[static_cast<std::size_t>(k)])] = k;
  ChainSpec out(m);
  for (std::int64_t k = 0; k < m; ++k) {
    std::int64_t i = well[static_cast<std::size_t>(k)];
    out.set_weight(k, chain.weight(i));
    for (const auto& [j, r] : chain.row(i)) {
      std::int64_t pj = pos[static_cast<std::size_t>(j)];
      if (pj >= 0) out.add_rate(k, pj, r);
    }
  }
  if (!out.connected())
    throw std::runtime_error("restricted_chain: restriction is not connected");
  return out;
}

double spectral_gap(const ChainSpec& chain, double rel_tol) {
  const std::int64_t n = chain.size();
  if (n < 2) throw std::invalid_argument("spectral_gap: need at least two states");

  /* symmetrized negative generator: diag = exit rate,
   * offdiag = -r_ij sqrt(pi_i/pi_j) */
  if (n <= 2000) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (std::int64_t i = 0; i < n; ++i) {
      A(i, i) = chain.exit_rate(i);
      for (const auto& [j, r] : chain.row(i))
        A(i, j) -= r * std::sqrt(chain.weight(i) / chain.weight(j));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
    if (es.info() != Eigen::Success) throw std::runtime_error("spectral_gap: eigensolve failed");
    return es.eigenvalues()[1];
  }

  /* deflated power iteration on c*I - A restricted to the complement of the
   * known ground state sqrt(pi) */
  std::vector<Eigen::Triplet<double>> trip;
  double c = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double diag = chain.exit_rate(i), offsum = 0.0;
    trip.emplace_back(static_cast<int>(i), static_cast<int>(i), diag);
    for (const auto& [j, r] : chain.row(i)) {
      double v = r * std::sqrt(chain.weight(i) / chain.weight(j));
      trip.emplace_back(static_cast<int>(i), static_cast<int>(j), -v);
      offsum += v;
    }
    c = std::max(c, diag + offsum);
  }
  SpMat A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::VectorXd v0(n);
  for (std::int64_t i = 0; i < n; ++i) v0[i] = std::sqrt(chain.weight(i));
  v0.normalize();

  RngStream rng(0x9a9ab7ULL, static_cast<std::uint64_t>(n));
  Eigen::VectorXd x(n);
  for (std::int64_t i = 0; i < n; ++i) x[i] = rng.uniform() - 0.5;
  x -= v0 * v0.dot(x);
  x.normalize();

  double prev = -1.0;
  const int max_iter = 200000;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd y = c * x - A * x;
    y -= v0 * v0.dot(y);
    double ny = y.norm();
    if (ny == 0.0) throw std::runtime_error("spectral_gap: iteration collapsed");
    x = y / ny;
    double lam = x.dot(A * x);  // Rayleigh quotient in the deflated subspace
    if (it > 8 && std::fabs(lam - prev) <= rel_tol * std::max(std::fabs(lam), 1e-300))
      return lam;
    prev = lam;
  }
  throw std::runtime_error("spectral_gap: no convergence after " + std::to_string(max_iter) +
                           " iterations");
}

WellSystem build_well_system(const ModelParams& mp, const WellPartition& wp,
                             std::int64_t budget) {
  WellSystem ws;
  ws.mp = mp;
  ws.wp = wp;
  ws.se = enumerate_states(mp.L, mp.N, budget);
  ws.chain = zrp_chain(ws.se, mp.b);

  ws.wells.assign(static_cast<std::size_t>(mp.L), {});
  Configuration cfg;
  for (std::int64_t i = 0; i < ws.se.size(); ++i) {
    const auto& st = ws.se.states[static_cast<std::size_t>(i)];
    cfg.occ.assign(st.begin(), st.end());
    Classification cl = classify(cfg, mp, wp);
    if (cl.kind == Classification::Kind::Well) {
      ws.wells[static_cast<std::size_t>(cl.site)].push_back(i);
      ws.well_states.push_back(i);
      ws.well_mass += ws.chain.weight(i);
    }
  }
  for (std::int64_t x = 0; x < mp.L; ++x)
    if (ws.wells[static_cast<std::size_t>(x)].empty())
      throw std::runtime_error("build_well_system: empty well, partition too tight");

  ws.trace = trace_chain(ws.chain, ws.well_states);
  ws.trace_well_of.assign(ws.well_states.size(), -1);
  std::vector<std::int64_t> full_to_trace(static_cast<std::size_t>(ws.se.size()), -1);
  for (std::size_t k = 0; k < ws.well_states.size(); ++k)
    full_to_trace[static_cast<std::size_t>(ws.well_states[k])] = static_cast<std::int64_t>(k);
  for (std::int64_t x = 0; x < mp.L; ++x)
    for (auto i : ws.wells[static_cast<std::size_t>(x)])
      ws.trace_well_of[static_cast<std::size_t>(full_to_trace[static_cast<std::size_t>(i)])] = x;
  for (auto w : ws.trace_well_of)
    if (w < 0) throw std::logic_error("build_well_system: trace state without a well");
  return ws;
}

namespace {
std::vector<std::int64_t> trace_indices_of_well(const WellSystem& ws, std::int64_t x) {
  std::vector<std::int64_t> out;
  for (std::size_t k = 0; k < ws.trace_well_of.size(); ++k)
    if (ws.trace_well_of[k] == x) out.push_back(static_cast<std::int64_t>(k));
  return out;
}
}  // namespace

std::vector<double> well_hop_rates_exact(const WellSystem& ws, std::int64_t base_well) {
  const std::int64_t L = ws.mp.L;
  std::vector<std::int64_t> base = trace_indices_of_well(ws, base_well);
  double mass = 0.0;
  for (auto k : base) mass += ws.trace.weight(k);
  std::vector<double> flow(static_cast<std::size_t>(L), 0.0);
  for (auto k : base) {
    double w = ws.trace.weight(k);
    for (const auto& [j, r] : ws.trace.row(k)) {
      std::int64_t z = (ws.trace_well_of[static_cast<std::size_t>(j)] - base_well + L) % L;
      flow[static_cast<std::size_t>(z)] += w * r;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(L - 1));
  for (std::int64_t z = 1; z < L; ++z) out[static_cast<std::size_t>(z - 1)] = flow[static_cast<std::size_t>(z)] / mass;
  return out;
}

IdentityCheck rate_capacity_identity(const WellSystem& ws, std::int64_t z) {
  const std::int64_t L = ws.mp.L;
  if (z <= 0 || z >= L) throw std::invalid_argument("rate_capacity_identity: bad displacement");
  std::vector<std::int64_t> w0 = trace_indices_of_well(ws, 0);
  std::vector<std::int64_t> wz = trace_indices_of_well(ws, z);

  double mass0 = 0.0;
  for (auto k : w0) mass0 += ws.trace.weight(k);
  double hop = well_hop_rates_exact(ws, 0)[static_cast<std::size_t>(z - 1)];

  /* everything normalized by the well-union mass so both sides live under
   * the trace stationary law */
  double lhs = (mass0 / ws.well_mass) * hop;

  auto rest_of = [&](const std::vector<std::int64_t>& keep) {
    std::vector<char> in(ws.trace_well_of.size(), 0);
    for (auto k : keep) in[static_cast<std::size_t>(k)] = 1;
    std::vector<std::int64_t> rest;
    for (std::size_t k = 0; k < in.size(); ++k)
      if (!in[k]) rest.push_back(static_cast<std::int64_t>(k));
    return rest;
  };
  std::vector<std::int64_t> w0z = w0;
  w0z.insert(w0z.end(), wz.begin(), wz.end());

  /* capacity toward an empty target is 0: the constant-one potential is
   * admissible and has vanishing Dirichlet form (happens when the pair of
   * wells already covers the whole trace space, i.e. L = 2) */
  auto cap_to_rest = [&](const std::vector<std::int64_t>& from) {
    std::vector<std::int64_t> rest = rest_of(from);
    if (rest.empty()) return 0.0;
    return generic_capacity(ws.trace, from, rest).cap;
  };
  double cap0 = cap_to_rest(w0) / ws.well_mass;
  double capz = cap_to_rest(wz) / ws.well_mass;
  double capu = cap_to_rest(w0z) / ws.well_mass;

  IdentityCheck c;
  c.lhs = lhs;
  c.rhs = 0.5 * (cap0 + capz - capu);
  c.rel_err = std::fabs(c.lhs - c.rhs) / std::max({std::fabs(c.lhs), std::fabs(c.rhs), 1e-300});
  return c;
}

double trace_capacity_consistency(const WellSystem& ws, std::int64_t z) {
  const std::int64_t L = ws.mp.L;
  if (z <= 0 || z >= L) throw std::invalid_argument("trace_capacity_consistency: bad displacement");
  const auto& w0_full = ws.wells[0];
  const auto& wz_full = ws.wells[static_cast<std::size_t>(z)];
  double cap_full = generic_capacity(ws.chain, w0_full, wz_full).cap;
  double cap_trace = generic_capacity(ws.trace, trace_indices_of_well(ws, 0),
                                      trace_indices_of_well(ws, z))
                         .cap;
  return std::fabs(cap_trace - cap_full) / std::max(cap_full, 1e-300);
}

}  // namespace zrp
