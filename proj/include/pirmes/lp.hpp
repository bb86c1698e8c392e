#pragma once

// Dense revised simplex (two-phase, Dantzig pricing with a Bland fallback on
// degenerate stalls) and a small depth-first branch-and-bound on top of it.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pirmes::lp {

enum class Sense { kLessEqual, kEqual, kGreaterEqual };

enum class Status { kOptimal, kInfeasible, kUnbounded, kIterationLimit, kTimeLimit };

const char* to_string(Status s);

/// min cost^T x  s.t.  A x (sense) rhs,  x >= 0.
struct LinearProgram {
  Eigen::VectorXd cost;
  Eigen::MatrixXd A;
  Eigen::VectorXd rhs;
  std::vector<Sense> sense;

  int num_vars() const { return static_cast<int>(cost.size()); }
  int num_rows() const { return static_cast<int>(rhs.size()); }

  /// Appends a zero column and returns its index.
  int add_variable(double c);
  /// Appends an empty row and returns its index.
  int add_row(Sense s, double b);
};

struct SimplexOptions {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  int refactor_every = 100;
  int degenerate_switch = 50;  ///< degenerate pivots before switching to Bland
  std::int64_t max_iterations = 1'000'000;
  /// Checked every 64 pivots; reports kTimeLimit.
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct Solution {
  Status status = Status::kIterationLimit;
  double objective = 0.0;
  Eigen::VectorXd x;      ///< structural variables
  Eigen::VectorXd duals;  ///< one per row; >= 0 for >= rows of a min problem
  std::int64_t iterations = 0;
};

/// Revised simplex over a fixed row set. Columns may be appended between
/// solves; the previous optimal basis stays primal feasible and is reused.
class Simplex {
 public:
  explicit Simplex(const LinearProgram& lp, SimplexOptions options = {});

  /// Appends a structural column (coefficients in original row orientation).
  int add_column(double cost, const Eigen::VectorXd& coefficients);

  Solution solve();

  int num_rows() const { return rows_; }
  int num_structural() const { return num_structural_; }

 private:
  enum class Kind : std::uint8_t { kStructural, kSlack, kArtificial };

  void refactor();
  bool iterate(const Eigen::VectorXd& cost, bool phase_one, Solution& out);
  void pivot(int entering, int leaving_row, const Eigen::VectorXd& u);
  void drive_out_artificials();
  Eigen::VectorXd phase_cost(bool phase_one) const;
  void append_column(Kind kind, double cost, const Eigen::VectorXd& normalized);

  SimplexOptions options_;
  int rows_ = 0;
  int num_structural_ = 0;
  Eigen::MatrixXd columns_;  ///< normalized standard-form matrix, grows by columns
  int num_columns_ = 0;
  Eigen::VectorXd cost_;
  std::vector<Kind> kind_;
  std::vector<int> structural_index_;  ///< column -> structural id or -1
  std::vector<int> structural_column_;  ///< structural id -> column
  Eigen::VectorXd row_sign_;           ///< +-1 so normalized rhs >= 0
  Eigen::VectorXd rhs_;

  std::vector<int> basis_;  ///< column per row
  std::vector<char> is_basic_;
  Eigen::MatrixXd basis_inverse_;
  Eigen::VectorXd x_basic_;
  bool phase_two_ready_ = false;
  int since_refactor_ = 0;
};

Solution solve(const LinearProgram& lp, const SimplexOptions& options = {});

// ---------------------------------------------------------------------------
// Mixed-integer extension

struct MipOptions {
  SimplexOptions simplex;
  double integrality_tol = 1e-6;
  std::int64_t max_nodes = 200'000;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct MipSolution {
  Status status = Status::kIterationLimit;  ///< kOptimal, kInfeasible, or a limit
  bool has_incumbent = false;
  double objective = 0.0;
  Eigen::VectorXd x;
  std::int64_t nodes = 0;
};

/// Depth-first branch-and-bound; `integer` flags variables that must take
/// integral values. Every node re-solves its LP relaxation from scratch.
MipSolution solve_mip(const LinearProgram& lp, const std::vector<char>& integer,
                      const MipOptions& options = {});

}  // namespace pirmes::lp
