#pragma once
// Discrete pairwise graphical models: potential tables, scoring, spin-glass
// benchmark generation, and a line-oriented text format.

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmap {

// One label per variable, labels[i] in [0, cards[i]).
using Assignment = std::vector<int>;

// Domain-exclusion marker. Stored as IEEE -infinity so sums absorb it;
// all other potential entries must be finite (NaN and +inf are rejected at
// construction). Never use a finite sentinel for exclusions.
inline constexpr double kForbidden = -std::numeric_limits<double>::infinity();

inline bool is_forbidden(double v) { return v == kForbidden; }

// Thrown when a solver or estimator is invoked outside its precondition
// class (e.g. graph cuts on a non-supermodular model).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Edge {
  int i = 0, j = 0;           // i < j
  int cols = 0;               // = cards[j]
  std::vector<double> table;  // cards[i] x cards[j], row-major

  double at(int yi, int yj) const {
    return table[static_cast<std::size_t>(yi) * cols + yj];
  }
  double& at(int yi, int yj) {
    return table[static_cast<std::size_t>(yi) * cols + yj];
  }
};

// Immutable after construction; safe to share across threads.
class PairwiseModel {
 public:
  int num_vars() const { return static_cast<int>(cards_.size()); }
  int card(int i) const { return cards_[i]; }
  const std::vector<int>& cards() const { return cards_; }
  const std::vector<double>& unary(int i) const { return unary_[i]; }
  const std::vector<std::vector<double>>& unaries() const { return unary_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool has_forbidden() const { return has_forbidden_; }
  // True when the nonempty-domain invariant could not be enumerated
  // (state space above the construction cap).
  bool domain_check_skipped() const { return domain_check_skipped_; }

  // Joint state count, saturating at 2^63 for models too large to enumerate.
  std::uint64_t num_states() const { return num_states_; }

  // Total potential of an assignment; kForbidden if any touched entry is
  // excluded. Throws std::out_of_range for invalid labels.
  double score(const Assignment& y) const;
  // Same but trusts the caller; used by enumeration loops.
  double score_unchecked(const Assignment& y) const;

  friend PairwiseModel build_model(std::vector<int> cards,
                                   std::vector<std::vector<double>> unary,
                                   std::vector<Edge> edges);

 private:
  std::vector<int> cards_;
  std::vector<std::vector<double>> unary_;
  std::vector<Edge> edges_;
  std::uint64_t num_states_ = 0;
  bool has_forbidden_ = false;
  bool domain_check_skipped_ = false;
};

// Validates shapes, edge endpoints (deduplicated, normalized to i < j and
// sorted so the edge order is canonical), entry finiteness, and -- for
// models with exclusions and at most 2^24 joint states -- that the domain
// is nonempty. Throws std::invalid_argument on violation.
PairwiseModel build_model(std::vector<int> cards,
                          std::vector<std::vector<double>> unary,
                          std::vector<Edge> edges);

double score(const PairwiseModel& m, const Assignment& y);

// ---------------------------------------------------------------------------
// Spin glass benchmark models

enum class CouplingMode { Attractive, Mixed };

struct SpinGlassConfig {
  int rows = 1, cols = 1;
  double field_strength = 1.0;     // f: theta_i ~ U[-f, f]
  double coupling_strength = 1.0;  // c: theta_ij ~ U[0,c] or U[-c,c]
  CouplingMode mode = CouplingMode::Attractive;
  std::uint64_t seed = 0;
};

// Grid Ising model with spins {-1,+1} encoded as labels {0,1} (-1 <-> 0).
// Tables store the products theta_i*y_i and theta_ij*y_i*y_j. Pure function
// of the config: the same seed yields the identical model on any platform.
PairwiseModel gen_spin_glass(const SpinGlassConfig& config);

struct GridShape {
  int rows = 0, cols = 0;
};

// Grid edge list in canonical order: row-major over cells, right edge before
// down edge. gen_spin_glass draws couplings in this order.
std::vector<std::pair<int, int>> grid_edges(int rows, int cols);

// Recovers (rows, cols) if the model's edge set is exactly a grid under
// row-major indexing. Divisor pairs are tried with rows ascending, so a path
// is reported as 1 x n.
std::optional<GridShape> detect_grid(const PairwiseModel& m);

// ---------------------------------------------------------------------------
// Text format, UTF-8, line oriented:
//   pmodel v1 <n>
//   cards <c_1> ... <c_n>
//   unary <i> <v_0> ... <v_{c_i-1}>      (one line per variable, ascending)
//   edge <i> <j> <row-major values>      (i < j)
// Value token "-inf" denotes an excluded entry; numbers are written with 17
// significant digits so a save/load round trip is bit exact.

std::string format_model(const PairwiseModel& m);
void save_model(const PairwiseModel& m, const std::string& path);
PairwiseModel parse_model(const std::string& text,
                          const std::string& origin = "<string>");
PairwiseModel load_model(const std::string& path);

// Full-precision decimal formatting used by every file format in this
// project ("-inf" for exclusions).
std::string format_value(double v);

}  // namespace pmap
