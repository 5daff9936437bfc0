#include "pmap/baselines.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pmap {

namespace {

constexpr double kBpSurrogate = -1e30;

double lse(const std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

struct Graph {
  int n = 0;
  // per-variable list of (edge index, 1 if the variable is endpoint j)
  std::vector<std::vector<std::pair<int, int>>> nbr;
};

Graph adjacency(const PairwiseModel& m) {
  Graph g;
  g.n = m.num_vars();
  g.nbr.resize(g.n);
  for (int e = 0; e < static_cast<int>(m.edges().size()); ++e) {
    g.nbr[m.edges()[e].i].push_back({e, 0});
    g.nbr[m.edges()[e].j].push_back({e, 1});
  }
  return g;
}

// Shared BP/TRBP engine. TRBP with all rho = 1 is plain BP; messages are
// kept in log space and normalized (log-sum-exp zero) every sweep.
BpResult run_message_passing(const PairwiseModel& m,
                             const std::vector<double>& rho,
                             const BpOptions& opts) {
  const int n = m.num_vars();
  const int ne = static_cast<int>(m.edges().size());
  const Graph g = adjacency(m);

  bool clamped = false;
  auto pot = [&](double v) {
    if (is_forbidden(v)) {
      clamped = true;
      return kBpSurrogate;
    }
    return v;
  };
  std::vector<std::vector<double>> theta(n);
  for (int i = 0; i < n; ++i) {
    theta[i].resize(m.card(i));
    for (int k = 0; k < m.card(i); ++k) theta[i][k] = pot(m.unary(i)[k]);
  }
  std::vector<std::vector<double>> etab(ne);
  for (int e = 0; e < ne; ++e) {
    etab[e].resize(m.edges()[e].table.size());
    for (std::size_t k = 0; k < etab[e].size(); ++k) {
      etab[e][k] = pot(m.edges()[e].table[k]);
    }
  }

  // msg[e][side][label]: message from the opposite endpoint into `side`.
  // side 0 receives at edge endpoint i, side 1 at endpoint j.
  std::vector<std::array<std::vector<double>, 2>> msg(ne), fresh(ne);
  for (int e = 0; e < ne; ++e) {
    const Edge& ed = m.edges()[e];
    msg[e][0].assign(m.card(ed.i), 0.0);
    msg[e][1].assign(m.card(ed.j), 0.0);
    fresh[e] = msg[e];
  }

  // Pre-belief at variable i excluding the message along edge `skip_e`:
  // theta_i + sum_k rho_k * msg_k  -  (1 - rho_e) * msg_e  is assembled by
  // the caller from these incoming sums.
  auto incoming_sum = [&](int i, std::vector<double>& out) {
    out = theta[i];
    for (auto [e, side] : g.nbr[i]) {
      const auto& in = msg[e][side];
      for (std::size_t k = 0; k < in.size(); ++k) out[k] += rho[e] * in[k];
    }
  };

  std::vector<std::vector<double>> node_sum(n);
  std::vector<double> from(0), to(0);

  BpResult res;
  double max_delta = 0.0;
  int it = 0;
  for (it = 1; it <= opts.max_iters; ++it) {
    for (int i = 0; i < n; ++i) incoming_sum(i, node_sum[i]);
    max_delta = 0.0;
    for (int e = 0; e < ne; ++e) {
      const Edge& ed = m.edges()[e];
      const int cj = m.card(ed.j);
      for (int side = 0; side < 2; ++side) {
        // message into `side`, i.e. from the opposite endpoint `src`.
        const int src = side == 0 ? ed.j : ed.i;
        const int dst = side == 0 ? ed.i : ed.j;
        const int cs = m.card(src), cd = m.card(dst);
        from.assign(node_sum[src].begin(), node_sum[src].end());
        // remove this edge's own contribution to the source pre-belief
        const auto& back = msg[e][side == 0 ? 1 : 0];
        for (int k = 0; k < cs; ++k) {
          from[k] -= rho[e] * back[k];
          from[k] -= (1.0 - rho[e]) * back[k];  // TRBP -(1-rho) m_{dst->src}
        }
        to.assign(cd, 0.0);
        for (int kd = 0; kd < cd; ++kd) {
          double best = -std::numeric_limits<double>::infinity();
          // log-sum-exp over source labels
          std::vector<double> terms(cs);
          for (int ks = 0; ks < cs; ++ks) {
            const double pair = side == 0
                                    ? etab[e][static_cast<std::size_t>(kd) * cj + ks]
                                    : etab[e][static_cast<std::size_t>(ks) * cj + kd];
            terms[ks] = from[ks] + pair / rho[e];
            best = std::max(best, terms[ks]);
          }
          double s = 0.0;
          for (double t : terms) s += std::exp(t - best);
          to[kd] = best + std::log(s);
        }
        const double norm = lse(to);
        for (double& v : to) v -= norm;
        auto& nf = fresh[e][side];
        for (int kd = 0; kd < cd; ++kd) {
          nf[kd] = opts.damping * msg[e][side][kd] + (1.0 - opts.damping) * to[kd];
        }
        const double renorm = lse(nf);
        for (double& v : nf) v -= renorm;
      }
    }
    for (int e = 0; e < ne; ++e) {
      for (int side = 0; side < 2; ++side) {
        for (std::size_t k = 0; k < msg[e][side].size(); ++k) {
          max_delta = std::max(max_delta,
                               std::fabs(fresh[e][side][k] - msg[e][side][k]));
        }
        msg[e][side] = fresh[e][side];
      }
    }
    if (opts.check_beliefs) {
      for (int i = 0; i < n; ++i) {
        std::vector<double> b;
        incoming_sum(i, b);
        const double z = lse(b);
        double s = 0.0;
        for (double v : b) s += std::exp(v - z);
        assert(std::fabs(s - 1.0) <= 1e-10);
      }
    }
    if (max_delta < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.iterations = std::min(it, opts.max_iters);
  res.forbidden_clamped = clamped;

  // Beliefs and the (tree-reweighted) free energy from the final messages.
  for (int i = 0; i < n; ++i) incoming_sum(i, node_sum[i]);
  double energy = 0.0, node_entropy_term = 0.0, edge_term = 0.0;
  std::vector<std::vector<double>> bel(n);
  for (int i = 0; i < n; ++i) {
    bel[i] = node_sum[i];
    const double z = lse(bel[i]);
    for (double& v : bel[i]) v = std::exp(v - z);
    for (int k = 0; k < m.card(i); ++k) energy += bel[i][k] * theta[i][k];
    node_entropy_term += entropy(bel[i]);
  }
  for (int e = 0; e < ne; ++e) {
    const Edge& ed = m.edges()[e];
    const int ci = m.card(ed.i), cj = m.card(ed.j);
    std::vector<double> lb(static_cast<std::size_t>(ci) * cj);
    // pre-beliefs excluding this edge on both sides
    std::vector<double> pi = node_sum[ed.i];
    std::vector<double> pj;
    for (int k = 0; k < ci; ++k) {
      pi[k] -= rho[e] * msg[e][0][k];
      pi[k] -= (1.0 - rho[e]) * msg[e][0][k];
    }
    pj = node_sum[ed.j];
    for (int k = 0; k < cj; ++k) {
      pj[k] -= rho[e] * msg[e][1][k];
      pj[k] -= (1.0 - rho[e]) * msg[e][1][k];
    }
    for (int a = 0; a < ci; ++a) {
      for (int b = 0; b < cj; ++b) {
        lb[static_cast<std::size_t>(a) * cj + b] =
            etab[e][static_cast<std::size_t>(a) * cj + b] / rho[e] + pi[a] + pj[b];
      }
    }
    const double z = lse(lb);
    std::vector<double> pb(lb.size());
    for (std::size_t k = 0; k < lb.size(); ++k) pb[k] = std::exp(lb[k] - z);
    // pair energy and mutual information w.r.t. the pair belief's marginals
    std::vector<double> mi(ci, 0.0), mj(cj, 0.0);
    double pair_energy = 0.0;
    for (int a = 0; a < ci; ++a) {
      for (int b = 0; b < cj; ++b) {
        const double p = pb[static_cast<std::size_t>(a) * cj + b];
        pair_energy += p * etab[e][static_cast<std::size_t>(a) * cj + b];
        mi[a] += p;
        mj[b] += p;
      }
    }
    energy += pair_energy;
    const double info = entropy(mi) + entropy(mj) - entropy(pb);
    edge_term += rho[e] * info;
  }
  res.log_z = energy + node_entropy_term - edge_term;
  return res;
}

}  // namespace

BpResult bp_log_partition(const PairwiseModel& m, const BpOptions& opts) {
  std::vector<double> rho(m.edges().size(), 1.0);
  return run_message_passing(m, rho, opts);
}

BpResult trbp_log_partition(const PairwiseModel& m,
                            const EdgeAppearance& appearance,
                            const BpOptions& opts) {
  if (appearance.rho.size() != m.edges().size()) {
    throw std::invalid_argument("edge appearance size mismatch");
  }
  for (double r : appearance.rho) {
    if (!(r > 0.0) || r > 1.0) {
      throw std::invalid_argument("edge appearance probabilities must be in (0,1]");
    }
  }
  return run_message_passing(m, appearance.rho, opts);
}

// ---------------------------------------------------------------------------
// Uniform spanning tree edge probabilities.
//
// rho_e = R_eff(u,v) on the unit-conductance graph. Ground node 0, factor
// the reduced Laplacian once (dense Cholesky; oracle-scale graphs only) and
// read R_eff from its inverse.

namespace {

class Cholesky {
 public:
  explicit Cholesky(std::vector<double> a, int n) : n_(n), l_(std::move(a)) {
    for (int j = 0; j < n_; ++j) {
      double d = at(j, j);
      for (int k = 0; k < j; ++k) d -= at(j, k) * at(j, k);
      if (d <= 0.0) throw std::runtime_error("matrix not positive definite");
      at(j, j) = std::sqrt(d);
      for (int i = j + 1; i < n_; ++i) {
        double v = at(i, j);
        for (int k = 0; k < j; ++k) v -= at(i, k) * at(j, k);
        at(i, j) = v / at(j, j);
      }
    }
  }

  // Solve L L^T x = b in place.
  void solve(std::vector<double>& b) const {
    for (int i = 0; i < n_; ++i) {
      double v = b[i];
      for (int k = 0; k < i; ++k) v -= at(i, k) * b[k];
      b[i] = v / at(i, i);
    }
    for (int i = n_ - 1; i >= 0; --i) {
      double v = b[i];
      for (int k = i + 1; k < n_; ++k) v -= at(k, i) * b[k];
      b[i] = v / at(i, i);
    }
  }

 private:
  double& at(int i, int j) { return l_[static_cast<std::size_t>(i) * n_ + j]; }
  double at(int i, int j) const {
    return l_[static_cast<std::size_t>(i) * n_ + j];
  }
  int n_;
  std::vector<double> l_;
};

}  // namespace

EdgeAppearance uniform_spanning_edge_probs(const PairwiseModel& m) {
  const int n = m.num_vars();
  // connectivity
  {
    std::vector<std::vector<int>> adj(n);
    for (const Edge& e : m.edges()) {
      adj[e.i].push_back(e.j);
      adj[e.j].push_back(e.i);
    }
    std::vector<bool> seen(n, false);
    std::vector<int> stack = {0};
    seen[0] = true;
    int count = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (int w : adj[v]) {
        if (!seen[w]) {
          seen[w] = true;
          ++count;
          stack.push_back(w);
        }
      }
    }
    if (count != n) {
      throw std::invalid_argument(
          "uniform_spanning_edge_probs requires a connected graph");
    }
  }

  EdgeAppearance out;
  if (n == 1) return out;

  // Reduced Laplacian with node 0 grounded.
  const int r = n - 1;
  std::vector<double> lap(static_cast<std::size_t>(r) * r, 0.0);
  auto at = [&](int i, int j) -> double& {
    return lap[static_cast<std::size_t>(i) * r + j];
  };
  for (const Edge& e : m.edges()) {
    const int u = e.i, v = e.j;
    if (u > 0) at(u - 1, u - 1) += 1.0;
    if (v > 0) at(v - 1, v - 1) += 1.0;
    if (u > 0 && v > 0) {
      at(u - 1, v - 1) -= 1.0;
      at(v - 1, u - 1) -= 1.0;
    }
  }
  Cholesky chol(std::move(lap), r);

  out.rho.reserve(m.edges().size());
  std::vector<double> b(r);
  for (const Edge& e : m.edges()) {
    std::fill(b.begin(), b.end(), 0.0);
    if (e.i > 0) b[e.i - 1] = 1.0;
    if (e.j > 0) b[e.j - 1] = -1.0;
    chol.solve(b);
    double reff = 0.0;
    if (e.i > 0) reff += b[e.i - 1];
    if (e.j > 0) reff -= b[e.j - 1];
    out.rho.push_back(std::min(reff, 1.0));
  }
  return out;
}

}  // namespace pmap
