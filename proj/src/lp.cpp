#include "pirmes/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pirmes::lp {

const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal:
      return "optimal";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kUnbounded:
      return "unbounded";
    case Status::kIterationLimit:
      return "iteration-limit";
    case Status::kTimeLimit:
      return "time-limit";
  }
  return "?";
}

int LinearProgram::add_variable(double c) {
  const int j = num_vars();
  cost.conservativeResize(j + 1);
  cost(j) = c;
  A.conservativeResize(num_rows(), j + 1);
  A.col(j).setZero();
  return j;
}

int LinearProgram::add_row(Sense s, double b) {
  const int r = num_rows();
  rhs.conservativeResize(r + 1);
  rhs(r) = b;
  sense.push_back(s);
  A.conservativeResize(r + 1, num_vars());
  A.row(r).setZero();
  return r;
}

// ---------------------------------------------------------------------------
// Simplex

Simplex::Simplex(const LinearProgram& lp, SimplexOptions options)
    : options_(options), rows_(lp.num_rows()) {
  row_sign_ = Eigen::VectorXd::Ones(rows_);
  for (int r = 0; r < rows_; ++r) {
    if (lp.rhs(r) < 0) row_sign_(r) = -1.0;
  }
  rhs_ = lp.rhs.cwiseProduct(row_sign_);
  columns_.resize(rows_, std::max(16, lp.num_vars() + 2 * rows_));
  cost_.resize(columns_.cols());

  for (int j = 0; j < lp.num_vars(); ++j) {
    append_column(Kind::kStructural, lp.cost(j), lp.A.col(j).cwiseProduct(row_sign_));
  }
  basis_.assign(rows_, -1);
  for (int r = 0; r < rows_; ++r) {
    Sense s = lp.sense[r];
    if (row_sign_(r) < 0 && s != Sense::kEqual) {
      s = s == Sense::kLessEqual ? Sense::kGreaterEqual : Sense::kLessEqual;
    }
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(rows_);
    unit(r) = 1.0;
    if (s == Sense::kLessEqual) {
      append_column(Kind::kSlack, 0.0, unit);
      basis_[r] = num_columns_ - 1;
      continue;
    }
    if (s == Sense::kGreaterEqual) append_column(Kind::kSlack, 0.0, -unit);
    append_column(Kind::kArtificial, 0.0, unit);
    basis_[r] = num_columns_ - 1;
  }
  is_basic_.assign(num_columns_, 0);
  for (int c : basis_) is_basic_[c] = 1;
  basis_inverse_ = Eigen::MatrixXd::Identity(rows_, rows_);
  x_basic_ = rhs_;
  phase_two_ready_ = std::none_of(basis_.begin(), basis_.end(),
                                  [&](int c) { return kind_[c] == Kind::kArtificial; });
}

void Simplex::append_column(Kind kind, double cost, const Eigen::VectorXd& normalized) {
  if (num_columns_ == columns_.cols()) {
    const int grown = std::max(16, 2 * num_columns_);
    columns_.conservativeResize(Eigen::NoChange, grown);
    cost_.conservativeResize(grown);
  }
  columns_.col(num_columns_) = normalized;
  cost_(num_columns_) = cost;
  kind_.push_back(kind);
  if (kind == Kind::kStructural) {
    structural_index_.push_back(num_structural_);
    structural_column_.push_back(num_columns_);
    ++num_structural_;
  } else {
    structural_index_.push_back(-1);
  }
  ++num_columns_;
}

int Simplex::add_column(double cost, const Eigen::VectorXd& coefficients) {
  append_column(Kind::kStructural, cost, coefficients.cwiseProduct(row_sign_));
  is_basic_.push_back(0);
  return num_structural_ - 1;
}

Eigen::VectorXd Simplex::phase_cost(bool phase_one) const {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(num_columns_);
  for (int j = 0; j < num_columns_; ++j) {
    if (phase_one) {
      c(j) = kind_[j] == Kind::kArtificial ? 1.0 : 0.0;
    } else {
      c(j) = kind_[j] == Kind::kStructural ? cost_(j) : 0.0;
    }
  }
  return c;
}

void Simplex::refactor() {
  Eigen::MatrixXd basis(rows_, rows_);
  for (int r = 0; r < rows_; ++r) basis.col(r) = columns_.col(basis_[r]);
  basis_inverse_ = basis.partialPivLu().inverse();
  x_basic_ = basis_inverse_ * rhs_;
  for (int r = 0; r < rows_; ++r) {
    if (x_basic_(r) < 0 && x_basic_(r) > -options_.feasibility_tol) x_basic_(r) = 0;
  }
  since_refactor_ = 0;
}

void Simplex::pivot(int entering, int leaving_row, const Eigen::VectorXd& u) {
  const double theta = std::max(0.0, x_basic_(leaving_row)) / u(leaving_row);
  x_basic_ -= theta * u;
  x_basic_(leaving_row) = theta;
  const Eigen::RowVectorXd pivot_row = basis_inverse_.row(leaving_row) / u(leaving_row);
  basis_inverse_.noalias() -= u * pivot_row;
  basis_inverse_.row(leaving_row) = pivot_row;
  is_basic_[basis_[leaving_row]] = 0;
  basis_[leaving_row] = entering;
  is_basic_[entering] = 1;
  ++since_refactor_;
}

bool Simplex::iterate(const Eigen::VectorXd& cost, bool phase_one, Solution& out) {
  bool bland = false;
  int degenerate_run = 0;
  Eigen::VectorXd cost_basic(rows_);
  while (true) {
    if (out.iterations >= options_.max_iterations) {
      out.status = Status::kIterationLimit;
      return false;
    }
    if (options_.deadline && out.iterations % 64 == 0 && std::chrono::steady_clock::now() > *options_.deadline) {
      out.status = Status::kTimeLimit;
      return false;
    }
    if (since_refactor_ >= options_.refactor_every) refactor();
    for (int r = 0; r < rows_; ++r) cost_basic(r) = cost(basis_[r]);
    const Eigen::VectorXd y = basis_inverse_.transpose() * cost_basic;
    const Eigen::VectorXd reduced =
        cost - columns_.leftCols(num_columns_).transpose() * y;

    int entering = -1;
    double best = -options_.optimality_tol;
    for (int j = 0; j < num_columns_; ++j) {
      if (is_basic_[j] || kind_[j] == Kind::kArtificial) continue;
      if (reduced(j) < best) {
        entering = j;
        if (bland) break;
        best = reduced(j);
      }
    }
    if (entering < 0) return true;

    const Eigen::VectorXd u = basis_inverse_ * columns_.col(entering);
    int leaving = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r < rows_; ++r) {
      double ratio;
      if (!phase_one && kind_[basis_[r]] == Kind::kArtificial &&
          std::abs(u(r)) > options_.pivot_tol) {
        ratio = 0.0;  // artificial stays at zero in phase two
      } else if (u(r) > options_.pivot_tol) {
        ratio = std::max(0.0, x_basic_(r)) / u(r);
      } else {
        continue;
      }
      const bool better = ratio < best_ratio - 1e-12;
      const bool tie = !better && ratio <= best_ratio + 1e-12;
      if (better || (tie && leaving >= 0 &&
                     (bland ? basis_[r] < basis_[leaving]
                            : std::abs(u(r)) > std::abs(u(leaving))))) {
        leaving = r;
        best_ratio = std::min(best_ratio, ratio);
      }
    }
    if (leaving < 0) {
      out.status = Status::kUnbounded;
      return false;
    }
    if (best_ratio <= 1e-12) {
      if (++degenerate_run >= options_.degenerate_switch) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }
    pivot(entering, leaving, u);
    ++out.iterations;
  }
}

void Simplex::drive_out_artificials() {
  for (int r = 0; r < rows_; ++r) {
    if (kind_[basis_[r]] != Kind::kArtificial) continue;
    const Eigen::RowVectorXd row = basis_inverse_.row(r) * columns_.leftCols(num_columns_);
    int best = -1;
    for (int j = 0; j < num_columns_; ++j) {
      if (is_basic_[j] || kind_[j] == Kind::kArtificial) continue;
      if (std::abs(row(j)) > 1e-7 && (best < 0 || std::abs(row(j)) > std::abs(row(best)))) {
        best = j;
      }
    }
    if (best >= 0) pivot(best, r, basis_inverse_ * columns_.col(best));
  }
}

Solution Simplex::solve() {
  Solution out;
  refactor();
  if (!phase_two_ready_) {
    const Eigen::VectorXd c1 = phase_cost(true);
    if (!iterate(c1, true, out)) {
      // Phase one is bounded below by zero; only the iteration limit applies.
      return out;
    }
    refactor();
    double infeasibility = 0.0;
    for (int r = 0; r < rows_; ++r) {
      if (kind_[basis_[r]] == Kind::kArtificial) infeasibility += std::max(0.0, x_basic_(r));
    }
    const double scale = std::max(1.0, rhs_.cwiseAbs().maxCoeff());
    if (infeasibility > 1e-7 * scale) {
      out.status = Status::kInfeasible;
      return out;
    }
    drive_out_artificials();
    refactor();
    phase_two_ready_ = true;
  }
  const Eigen::VectorXd c2 = phase_cost(false);
  if (!iterate(c2, false, out)) return out;
  refactor();

  out.status = Status::kOptimal;
  out.x = Eigen::VectorXd::Zero(num_structural_);
  for (int r = 0; r < rows_; ++r) {
    const int id = structural_index_[basis_[r]];
    if (id >= 0) out.x(id) = std::max(0.0, x_basic_(r));
  }
  Eigen::VectorXd cost_basic(rows_);
  for (int r = 0; r < rows_; ++r) cost_basic(r) = c2(basis_[r]);
  out.duals = (basis_inverse_.transpose() * cost_basic).cwiseProduct(row_sign_);
  out.objective = 0.0;
  for (int id = 0; id < num_structural_; ++id) {
    out.objective += cost_(structural_column_[id]) * out.x(id);
  }
  return out;
}

Solution solve(const LinearProgram& lp, const SimplexOptions& options) {
  Simplex simplex(lp, options);
  return simplex.solve();
}

// ---------------------------------------------------------------------------
// Branch and bound

namespace {

struct BoundChange {
  int var;
  bool upper;  ///< x <= value when true, x >= value otherwise
  double value;
};

}  // namespace

MipSolution solve_mip(const LinearProgram& lp, const std::vector<char>& integer,
                      const MipOptions& options) {
  MipSolution best;
  best.objective = std::numeric_limits<double>::infinity();
  bool limit_hit = false;
  std::vector<std::vector<BoundChange>> stack{{}};
  SimplexOptions node_options = options.simplex;
  if (options.deadline && (!node_options.deadline || *options.deadline < *node_options.deadline)) {
    node_options.deadline = options.deadline;
  }
  while (!stack.empty()) {
    if (best.nodes >= options.max_nodes) {
      limit_hit = true;
      best.status = Status::kIterationLimit;
      break;
    }
    if (options.deadline && std::chrono::steady_clock::now() > *options.deadline) {
      limit_hit = true;
      best.status = Status::kTimeLimit;
      break;
    }
    const std::vector<BoundChange> changes = std::move(stack.back());
    stack.pop_back();
    ++best.nodes;

    LinearProgram node = lp;
    for (const auto& bc : changes) {
      const int r = node.add_row(bc.upper ? Sense::kLessEqual : Sense::kGreaterEqual, bc.value);
      node.A(r, bc.var) = 1.0;
    }
    const Solution relaxed = solve(node, node_options);
    if (relaxed.status == Status::kInfeasible) continue;
    if (relaxed.status != Status::kOptimal) {
      // Unbounded relaxations do not occur for the bounded models used here.
      limit_hit = true;
      best.status = relaxed.status;
      break;
    }
    if (relaxed.objective >= best.objective - 1e-9) continue;

    int branch_var = -1;
    double most_fractional = options.integrality_tol;
    for (int j = 0; j < lp.num_vars(); ++j) {
      if (!integer[j]) continue;
      const double frac = std::abs(relaxed.x(j) - std::round(relaxed.x(j)));
      if (frac > most_fractional) {
        most_fractional = frac;
        branch_var = j;
      }
    }
    if (branch_var < 0) {
      best.has_incumbent = true;
      best.objective = relaxed.objective;
      best.x = relaxed.x;
      for (int j = 0; j < lp.num_vars(); ++j) {
        if (integer[j]) best.x(j) = std::round(best.x(j));
      }
      continue;
    }
    const double v = relaxed.x(branch_var);
    auto down = changes;
    down.push_back({branch_var, true, std::floor(v)});
    auto up = changes;
    up.push_back({branch_var, false, std::ceil(v)});
    // Explore the nearer side first.
    if (v - std::floor(v) >= 0.5) {
      stack.push_back(std::move(down));
      stack.push_back(std::move(up));
    } else {
      stack.push_back(std::move(up));
      stack.push_back(std::move(down));
    }
  }
  if (!limit_hit) best.status = best.has_incumbent ? Status::kOptimal : Status::kInfeasible;
  return best;
}

}  // namespace pirmes::lp
