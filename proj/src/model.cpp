#include "pmap/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pmap/rng.hpp"

namespace pmap {

namespace {

constexpr std::uint64_t kStateCountSaturated = std::uint64_t(1) << 63;
constexpr std::uint64_t kDomainCheckCap = std::uint64_t(1) << 24;

std::uint64_t count_states(const std::vector<int>& cards) {
  std::uint64_t n = 1;
  for (int c : cards) {
    if (n > kStateCountSaturated / static_cast<std::uint64_t>(c)) {
      return kStateCountSaturated;
    }
    n *= static_cast<std::uint64_t>(c);
  }
  return n;
}

bool entry_ok(double v) { return std::isfinite(v) || is_forbidden(v); }

}  // namespace

double PairwiseModel::score_unchecked(const Assignment& y) const {
  double s = 0.0;
  for (int i = 0; i < num_vars(); ++i) s += unary_[i][y[i]];
  for (const Edge& e : edges_) s += e.at(y[e.i], y[e.j]);
  return s;
}

double PairwiseModel::score(const Assignment& y) const {
  if (static_cast<int>(y.size()) != num_vars()) {
    throw std::out_of_range("assignment length does not match variable count");
  }
  for (int i = 0; i < num_vars(); ++i) {
    if (y[i] < 0 || y[i] >= cards_[i]) {
      throw std::out_of_range("label out of range for variable " +
                              std::to_string(i));
    }
  }
  return score_unchecked(y);
}

double score(const PairwiseModel& m, const Assignment& y) { return m.score(y); }

PairwiseModel build_model(std::vector<int> cards,
                          std::vector<std::vector<double>> unary,
                          std::vector<Edge> edges) {
  const int n = static_cast<int>(cards.size());
  if (n < 1) throw std::invalid_argument("model needs at least one variable");
  for (int i = 0; i < n; ++i) {
    if (cards[i] < 1) {
      throw std::invalid_argument("variable " + std::to_string(i) +
                                  " has cardinality " +
                                  std::to_string(cards[i]));
    }
  }
  if (static_cast<int>(unary.size()) != n) {
    throw std::invalid_argument("expected one unary table per variable");
  }
  bool forbidden = false;
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(unary[i].size()) != cards[i]) {
      throw std::invalid_argument("unary table " + std::to_string(i) +
                                  " has wrong size");
    }
    for (double v : unary[i]) {
      if (!entry_ok(v)) {
        throw std::invalid_argument("unary table " + std::to_string(i) +
                                    " contains a non-finite entry");
      }
      forbidden |= is_forbidden(v);
    }
  }
  for (Edge& e : edges) {
    if (e.i == e.j || e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) {
      throw std::invalid_argument("edge endpoints invalid: (" +
                                  std::to_string(e.i) + "," +
                                  std::to_string(e.j) + ")");
    }
    if (e.i > e.j) {
      // Normalize to i < j, transposing the table.
      Edge t;
      t.i = e.j;
      t.j = e.i;
      t.cols = cards[e.i];
      t.table.resize(e.table.size());
      for (int a = 0; a < cards[e.j]; ++a) {
        for (int b = 0; b < cards[e.i]; ++b) {
          t.table[static_cast<std::size_t>(a) * t.cols + b] =
              e.table[static_cast<std::size_t>(b) * e.cols + a];
        }
      }
      e = std::move(t);
    }
    if (e.cols != cards[e.j] ||
        e.table.size() !=
            static_cast<std::size_t>(cards[e.i]) * cards[e.j]) {
      throw std::invalid_argument("edge (" + std::to_string(e.i) + "," +
                                  std::to_string(e.j) +
                                  ") table shape mismatch");
    }
    for (double v : e.table) {
      if (!entry_ok(v)) {
        throw std::invalid_argument("edge (" + std::to_string(e.i) + "," +
                                    std::to_string(e.j) +
                                    ") contains a non-finite entry");
      }
      forbidden |= is_forbidden(v);
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (edges[k - 1].i == edges[k].i && edges[k - 1].j == edges[k].j) {
      throw std::invalid_argument("duplicate edge (" +
                                  std::to_string(edges[k].i) + "," +
                                  std::to_string(edges[k].j) + ")");
    }
  }

  PairwiseModel m;
  m.cards_ = std::move(cards);
  m.unary_ = std::move(unary);
  m.edges_ = std::move(edges);
  m.num_states_ = count_states(m.cards_);
  m.has_forbidden_ = forbidden;
  m.domain_check_skipped_ = false;

  if (forbidden) {
    if (m.num_states_ > kDomainCheckCap) {
      m.domain_check_skipped_ = true;
    } else {
      Assignment y(m.num_vars(), 0);
      bool found = false;
      for (std::uint64_t s = 0; s < m.num_states_ && !found; ++s) {
        found = std::isfinite(m.score_unchecked(y));
        // odometer, variable n-1 fastest
        for (int i = m.num_vars() - 1; i >= 0; --i) {
          if (++y[i] < m.cards_[i]) break;
          y[i] = 0;
        }
      }
      if (!found) {
        throw std::invalid_argument(
            "model domain is empty: every assignment is excluded");
      }
    }
  }
  return m;
}

// ---------------------------------------------------------------------------

std::vector<std::pair<int, int>> grid_edges(int rows, int cols) {
  std::vector<std::pair<int, int>> e;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int v = r * cols + c;
      if (c + 1 < cols) e.emplace_back(v, v + 1);
      if (r + 1 < rows) e.emplace_back(v, v + cols);
    }
  }
  return e;
}

PairwiseModel gen_spin_glass(const SpinGlassConfig& cfg) {
  if (cfg.rows < 1 || cfg.cols < 1) {
    throw std::invalid_argument("spin glass grid must be at least 1x1");
  }
  if (cfg.field_strength < 0 || cfg.coupling_strength < 0) {
    throw std::invalid_argument("spin glass strengths must be nonnegative");
  }
  const int n = cfg.rows * cfg.cols;
  Rng rng(cfg.seed);

  auto spin = [](int label) { return 2.0 * label - 1.0; };

  std::vector<int> cards(n, 2);
  std::vector<std::vector<double>> unary(n);
  for (int i = 0; i < n; ++i) {
    const double f = cfg.field_strength;
    const double theta = (f == 0.0) ? 0.0 : rng.uniform(-f, f);
    unary[i] = {theta * spin(0), theta * spin(1)};
  }
  std::vector<Edge> edges;
  for (auto [i, j] : grid_edges(cfg.rows, cfg.cols)) {
    const double c = cfg.coupling_strength;
    const double theta = (cfg.mode == CouplingMode::Attractive)
                             ? rng.uniform(0.0, c)
                             : rng.uniform(-c, c);
    Edge e;
    e.i = i;
    e.j = j;
    e.cols = 2;
    e.table = {theta * spin(0) * spin(0), theta * spin(0) * spin(1),
               theta * spin(1) * spin(0), theta * spin(1) * spin(1)};
    edges.push_back(std::move(e));
  }
  return build_model(std::move(cards), std::move(unary), std::move(edges));
}

std::optional<GridShape> detect_grid(const PairwiseModel& m) {
  const int n = m.num_vars();
  std::vector<std::pair<int, int>> have;
  have.reserve(m.edges().size());
  for (const Edge& e : m.edges()) have.emplace_back(e.i, e.j);
  for (int rows = 1; rows <= n; ++rows) {
    if (n % rows != 0) continue;
    const int cols = n / rows;
    auto want = grid_edges(rows, cols);
    for (auto& p : want) {
      if (p.first > p.second) std::swap(p.first, p.second);
    }
    std::sort(want.begin(), want.end());
    if (want == have) return GridShape{rows, cols};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

std::string format_value(double v) {
  if (is_forbidden(v)) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_model(const PairwiseModel& m) {
  std::ostringstream out;
  out << "pmodel v1 " << m.num_vars() << "\n";
  out << "cards";
  for (int c : m.cards()) out << ' ' << c;
  out << "\n";
  for (int i = 0; i < m.num_vars(); ++i) {
    out << "unary " << i;
    for (double v : m.unary(i)) out << ' ' << format_value(v);
    out << "\n";
  }
  for (const Edge& e : m.edges()) {
    out << "edge " << e.i << ' ' << e.j;
    for (double v : e.table) out << ' ' << format_value(v);
    out << "\n";
  }
  return out.str();
}

void save_model(const PairwiseModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << format_model(m);
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

struct LineReader {
  std::istringstream in;
  std::string origin;
  int lineno = 0;
  std::string line;

  LineReader(const std::string& text, std::string org)
      : in(text), origin(std::move(org)) {}

  bool next(std::vector<std::string>& tokens) {
    while (std::getline(in, line)) {
      ++lineno;
      tokens.clear();
      std::istringstream ls(line);
      std::string t;
      while (ls >> t) tokens.push_back(t);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": " +
                             msg);
  }
};

long parse_int(LineReader& r, const std::string& tok, const char* what) {
  char* end = nullptr;
  long v = std::strtol(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0') {
    r.fail(std::string("expected ") + what + ", got '" + tok + "'");
  }
  return v;
}

double parse_value(LineReader& r, const std::string& tok) {
  if (tok == "-inf") return kForbidden;
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || !std::isfinite(v)) {
    r.fail("expected finite number or -inf, got '" + tok + "'");
  }
  return v;
}

}  // namespace

PairwiseModel parse_model(const std::string& text, const std::string& origin) {
  LineReader r(text, origin);
  std::vector<std::string> tok;
  if (!r.next(tok)) r.fail("empty model file");
  if (tok.size() != 3 || tok[0] != "pmodel") {
    r.fail("expected header 'pmodel v1 <n>'");
  }
  if (tok[1] != "v1") r.fail("unsupported model format version '" + tok[1] + "'");
  const int n = static_cast<int>(parse_int(r, tok[2], "variable count"));
  if (n < 1) r.fail("variable count must be positive");

  if (!r.next(tok) || tok[0] != "cards") r.fail("expected 'cards' line");
  if (static_cast<int>(tok.size()) != n + 1) {
    r.fail("expected " + std::to_string(n) + " cardinalities");
  }
  std::vector<int> cards(n);
  for (int i = 0; i < n; ++i) {
    cards[i] = static_cast<int>(parse_int(r, tok[i + 1], "cardinality"));
    if (cards[i] < 1) r.fail("cardinality must be >= 1");
  }

  std::vector<std::vector<double>> unary(n);
  for (int i = 0; i < n; ++i) {
    if (!r.next(tok) || tok[0] != "unary") {
      r.fail("expected 'unary " + std::to_string(i) + "' line");
    }
    if (static_cast<int>(parse_int(r, tok[1], "variable index")) != i) {
      r.fail("unary lines must appear in ascending variable order");
    }
    if (static_cast<int>(tok.size()) != cards[i] + 2) {
      r.fail("unary " + std::to_string(i) + ": expected " +
             std::to_string(cards[i]) + " values");
    }
    unary[i].resize(cards[i]);
    for (int k = 0; k < cards[i]; ++k) unary[i][k] = parse_value(r, tok[k + 2]);
  }

  std::vector<Edge> edges;
  while (r.next(tok)) {
    if (tok[0] != "edge") r.fail("expected 'edge' line, got '" + tok[0] + "'");
    if (tok.size() < 3) r.fail("edge line too short");
    Edge e;
    e.i = static_cast<int>(parse_int(r, tok[1], "edge endpoint"));
    e.j = static_cast<int>(parse_int(r, tok[2], "edge endpoint"));
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) r.fail("edge endpoint out of range");
    if (e.i >= e.j) r.fail("edges must be written with i < j");
    e.cols = cards[e.j];
    const std::size_t want = static_cast<std::size_t>(cards[e.i]) * cards[e.j];
    if (tok.size() != want + 3) {
      r.fail("edge (" + std::to_string(e.i) + "," + std::to_string(e.j) +
             "): expected " + std::to_string(want) + " values");
    }
    e.table.resize(want);
    for (std::size_t k = 0; k < want; ++k) e.table[k] = parse_value(r, tok[k + 3]);
    edges.push_back(std::move(e));
  }

  try {
    return build_model(std::move(cards), std::move(unary), std::move(edges));
  } catch (const std::invalid_argument& ex) {
    throw std::runtime_error(origin + ": " + ex.what());
  }
}

PairwiseModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str(), path);
}

}  // namespace pmap
