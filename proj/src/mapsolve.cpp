#include "pmap/mapsolve.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pmap/oracle.hpp"

namespace pmap {

SolveMethod parse_solve_method(const std::string& name) {
  if (name == "brute") return SolveMethod::Brute;
  if (name == "graphcut") return SolveMethod::GraphCut;
  if (name == "mplp") return SolveMethod::Mplp;
  throw std::invalid_argument("unknown solve method '" + name + "'");
}

std::string solve_method_name(SolveMethod m) {
  switch (m) {
    case SolveMethod::Brute: return "brute";
    case SolveMethod::GraphCut: return "graphcut";
    case SolveMethod::Mplp: return "mplp";
  }
  return "?";
}

bool edge_supermodular(const Edge& e) {
  const double d00 = e.at(0, 0), d11 = e.at(1, 1);
  if (is_forbidden(d00) || is_forbidden(d11)) return false;
  const double lhs = d00 + d11;
  const double rhs = e.at(0, 1) + e.at(1, 0);  // -inf allowed, absorbs
  return lhs >= rhs;
}

bool graphcut_eligible(const PairwiseModel& m) {
  for (int c : m.cards()) {
    if (c != 2) return false;
  }
  for (const Edge& e : m.edges()) {
    if (!edge_supermodular(e)) return false;
  }
  return true;
}

MapResult brute_map(const PairwiseModel& m) {
  oracle::MapSolution sol = oracle::exact_map(m);
  MapResult r;
  r.assignment = std::move(sol.assignment);
  r.value = m.score(r.assignment);
  r.solver_id = "brute";
  return r;
}

// ---------------------------------------------------------------------------
// Graph cut
//
// Maximizing phi is minimizing the energy E = -phi. Each pairwise energy
// block A=E(0,0) B=E(0,1) C=E(1,0) D=E(1,1) with B+C >= A+D splits as
//   A  +  (C-A)[y_i=1]  +  (D-C)[y_j=1]  +  (B+C-A-D)[y_i=0][y_j=1]
// Label 0 is the source side, so [y_i=0 and y_j=1] is exactly "arc i->j is
// cut". Node costs c[v] for label 1 become s->v arcs (c>=0) or v->t arcs
// with the constant adjusted (c<0). Excluded entries turn into arcs with a
// capacity exceeding every finite cut, i.e. hard constraints.

MapResult graphcut_map(const PairwiseModel& m) {
  if (!graphcut_eligible(m)) {
    throw PreconditionError(
        "graphcut_map requires a binary model with supermodular edges");
  }
  const int n = m.num_vars();
  const double kInf = std::numeric_limits<double>::infinity();

  std::vector<double> node_cost(n, 0.0);  // cost of label 1, may be +-inf
  double constant = 0.0;
  double finite_mag = 1.0;

  auto energy = [](double v) { return is_forbidden(v) ? std::numeric_limits<double>::infinity() : -v; };

  for (int i = 0; i < n; ++i) {
    const double e0 = energy(m.unary(i)[0]);
    const double e1 = energy(m.unary(i)[1]);
    if (std::isinf(e0) && std::isinf(e1)) {
      throw PreconditionError("variable " + std::to_string(i) +
                              " has both labels excluded");
    }
    if (std::isinf(e0)) {
      node_cost[i] = -kInf;  // label 1 forced
      constant += e1;
    } else {
      constant += e0;
      node_cost[i] += e1 - e0;  // may be +inf (label 0 forced)
    }
  }

  struct CutArc {
    int i, j;
    double cap;  // may be +inf until the finite bound is known
  };
  std::vector<CutArc> pair_arcs;
  pair_arcs.reserve(m.edges().size());
  for (const Edge& e : m.edges()) {
    const double a = energy(e.at(0, 0));
    const double b = energy(e.at(0, 1));
    const double c = energy(e.at(1, 0));
    const double d = energy(e.at(1, 1));
    constant += a;
    node_cost[e.i] += c - a;
    node_cost[e.j] += d - c;
    const double w = (std::isinf(b) || std::isinf(c)) ? kInf : b + c - a - d;
    // Tiny negatives can appear from reparameterization rounding.
    pair_arcs.push_back({e.i, e.j, std::isinf(w) ? w : std::max(w, 0.0)});
  }

  for (double c : node_cost) {
    if (std::isfinite(c)) finite_mag += std::fabs(c);
  }
  for (const CutArc& a : pair_arcs) {
    if (std::isfinite(a.cap)) finite_mag += a.cap;
  }
  const double hard = 2.0 * finite_mag + 1.0;  // exceeds any finite cut

  FlowNetwork net;
  net.num_nodes = n + 2;
  net.source = n;
  net.sink = n + 1;
  for (int i = 0; i < n; ++i) {
    double c = node_cost[i];
    if (std::isinf(c)) c = (c > 0) ? hard : -hard;
    if (c >= 0.0) {
      if (c > 0.0) net.add_arc(net.source, i, c);
    } else {
      constant += c;
      net.add_arc(i, net.sink, -c);
    }
  }
  for (const CutArc& a : pair_arcs) {
    double w = a.cap;
    if (std::isinf(w)) w = hard;
    if (w > 0.0) net.add_arc(a.i, a.j, w);
  }

  MaxFlowResult mf = max_flow(net);

  MapResult r;
  r.assignment.assign(n, 0);
  for (int i = 0; i < n; ++i) r.assignment[i] = mf.source_side[i] ? 0 : 1;
  r.value = m.score(r.assignment);
  r.solver_id = "graphcut";
  r.iterations = mf.phases;
  (void)constant;  // value is reported via score(), not -(constant + flow)
  return r;
}

// ---------------------------------------------------------------------------
// MPLP
//
// Messages lambda[e -> i](y_i), one block per edge. With
//   delta_i^{-j}(y_i) = theta_i(y_i) + sum_{k in N(i) \ j} lambda[ki -> i](y_i)
// the edge (i,j) block update is
//   lambda[ij->i](y_i) = -1/2 delta_i^{-j}(y_i)
//                        + 1/2 max_{y_j} { theta_ij(y_i,y_j) + delta_j^{-i}(y_j) }
// and symmetrically for j. The dual
//   g = sum_i max b_i  +  sum_e max_{a,b} [theta_e(a,b) - lambda_i(a) - lambda_j(b)]
// with b_i = theta_i + sum incoming messages is a valid MAP upper bound for
// any messages, and the update never increases it. Excluded entries are
// clamped to a large negative surrogate so message arithmetic stays finite;
// decoded values are always reported against the true model.

namespace {

constexpr double kMplpSurrogate = -1e30;

double clamp_pot(double v) { return is_forbidden(v) ? kMplpSurrogate : v; }

}  // namespace

MapResult mplp_map(const PairwiseModel& m, const MplpOptions& opts,
                   MplpTrace* trace) {
  if (opts.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  const int n = m.num_vars();
  const int ne = static_cast<int>(m.edges().size());

  std::vector<std::vector<double>> theta(n);
  bool clamped = false;
  for (int i = 0; i < n; ++i) {
    theta[i].resize(m.card(i));
    for (int k = 0; k < m.card(i); ++k) {
      theta[i][k] = clamp_pot(m.unary(i)[k]);
      clamped |= is_forbidden(m.unary(i)[k]);
    }
  }
  std::vector<std::vector<double>> etab(ne);
  for (int e = 0; e < ne; ++e) {
    etab[e].resize(m.edges()[e].table.size());
    for (std::size_t k = 0; k < etab[e].size(); ++k) {
      etab[e][k] = clamp_pot(m.edges()[e].table[k]);
      clamped |= is_forbidden(m.edges()[e].table[k]);
    }
  }

  // msg[e][0] targets edge endpoint i, msg[e][1] targets j.
  std::vector<std::array<std::vector<double>, 2>> msg(ne);
  // in[i](y_i) = theta_i + sum of incoming messages, kept incrementally.
  std::vector<std::vector<double>> in(theta);
  for (int e = 0; e < ne; ++e) {
    msg[e][0].assign(m.card(m.edges()[e].i), 0.0);
    msg[e][1].assign(m.card(m.edges()[e].j), 0.0);
  }

  auto decode = [&](Assignment& y) {
    y.resize(n);
    for (int i = 0; i < n; ++i) {
      int best = 0;
      for (int k = 1; k < m.card(i); ++k) {
        if (in[i][k] > in[i][best]) best = k;  // ties to lowest label
      }
      y[i] = best;
    }
  };

  auto dual_value = [&]() {
    double g = 0.0;
    for (int i = 0; i < n; ++i) {
      g += *std::max_element(in[i].begin(), in[i].end());
    }
    for (int e = 0; e < ne; ++e) {
      const Edge& ed = m.edges()[e];
      const int ci = m.card(ed.i), cj = m.card(ed.j);
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < ci; ++a) {
        for (int b = 0; b < cj; ++b) {
          best = std::max(best, etab[e][static_cast<std::size_t>(a) * cj + b] -
                                    msg[e][0][a] - msg[e][1][b]);
        }
      }
      g += best;
    }
    return g;
  };

  MapResult result;
  result.solver_id = "mplp";
  Assignment y;
  decode(y);
  result.assignment = y;
  result.value = m.score(y);
  bool have_value = !is_forbidden(result.value);

  double prev_dual = std::numeric_limits<double>::infinity();
  MplpTrace local_trace;
  MplpTrace& tr = trace ? *trace : local_trace;
  tr.forbidden_clamped = clamped;

  std::vector<double> di, dj;
  int sweep = 0;
  for (sweep = 1; sweep <= opts.max_iters; ++sweep) {
    for (int e = 0; e < ne; ++e) {
      const Edge& ed = m.edges()[e];
      const int ci = m.card(ed.i), cj = m.card(ed.j);
      di.assign(in[ed.i].begin(), in[ed.i].end());
      dj.assign(in[ed.j].begin(), in[ed.j].end());
      for (int a = 0; a < ci; ++a) di[a] -= msg[e][0][a];
      for (int b = 0; b < cj; ++b) dj[b] -= msg[e][1][b];
      for (int a = 0; a < ci; ++a) {
        double best = -std::numeric_limits<double>::infinity();
        for (int b = 0; b < cj; ++b) {
          best = std::max(best, etab[e][static_cast<std::size_t>(a) * cj + b] + dj[b]);
        }
        const double nm = 0.5 * (best - di[a]);
        in[ed.i][a] += nm - msg[e][0][a];
        msg[e][0][a] = nm;
      }
      for (int b = 0; b < cj; ++b) {
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < ci; ++a) {
          best = std::max(best, etab[e][static_cast<std::size_t>(a) * cj + b] + di[a]);
        }
        const double nm = 0.5 * (best - dj[b]);
        in[ed.j][b] += nm - msg[e][1][b];
        msg[e][1][b] = nm;
      }
    }

    const double g = dual_value();
    tr.dual_per_sweep.push_back(g);
    decode(y);
    const double v = m.score(y);
    if (!is_forbidden(v) && (!have_value || v > result.value)) {
      result.assignment = y;
      result.value = v;
      have_value = true;
    } else if (!have_value) {
      result.assignment = y;  // keep something valid even if excluded
      result.value = v;
    }
    if (prev_dual - g < opts.tol) {
      tr.converged = true;
      break;
    }
    prev_dual = g;
  }
  result.iterations = std::min(sweep, opts.max_iters);
  result.dual_bound = tr.dual_per_sweep.empty()
                          ? dual_value()
                          : tr.dual_per_sweep.back();
  return result;
}

MapResult solve_map(const PairwiseModel& m, SolveMethod method,
                    const MplpOptions& mplp_opts) {
  switch (method) {
    case SolveMethod::Brute: return brute_map(m);
    case SolveMethod::GraphCut: return graphcut_map(m);
    case SolveMethod::Mplp: return mplp_map(m, mplp_opts);
  }
  throw std::invalid_argument("unknown solve method");
}

}  // namespace pmap
