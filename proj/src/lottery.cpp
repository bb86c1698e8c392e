#include "pirmes/lottery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pirmes/mechanisms.hpp"
#include "pirmes/oracle.hpp"
#include "pirmes/random.hpp"
#include "pirmes/sic.hpp"

namespace pirmes {

// ---------------------------------------------------------------------------
// Equal treatment

std::vector<int> restricted_list(const MarketInstance& instance, const RandomMatching<double>& p,
                                 int i, double eps) {
  const auto prefs = instance.preferences(i);
  int last = -1;
  for (int k = 0; k < static_cast<int>(prefs.size()); ++k) {
    if (p(i, prefs[k]) > eps) last = k;
  }
  return {prefs.begin(), prefs.begin() + (last + 1)};
}

std::vector<std::pair<int, int>> IdenticalPairs::pairs() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < flags.rows(); ++i) {
    for (int j = i + 1; j < flags.cols(); ++j) {
      if (flags(i, j)) out.emplace_back(i, j);
    }
  }
  return out;
}

IdenticalPairs identical_pairs(const MarketInstance& instance, const RandomMatching<double>& p) {
  const int n = instance.num_students();
  IdenticalPairs out;
  out.flags.setZero(n, n);
  for (int i = 0; i < n; ++i) out.restricted.push_back(restricted_list(instance, p, i));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (out.restricted[i] != out.restricted[j]) continue;
      bool tied = true;
      for (int s : out.restricted[i]) {
        tied = tied && instance.priority_class(i, s) == instance.priority_class(j, s);
      }
      if (tied) out.flags(i, j) = out.flags(j, i) = 1;
    }
  }
  return out;
}

std::vector<EqualityRow> equality_rows(const IdenticalPairs& pairs) {
  std::vector<EqualityRow> rows;
  for (auto [i, j] : pairs.pairs()) {
    for (int s : pairs.restricted[i]) rows.push_back({i, j, s});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Master

const char* to_string(MasterSolution::Status s) {
  return s == MasterSolution::Status::kOptimal ? "optimal" : "artificial-active";
}

double artificial_cost(const MarketInstance& instance) {
  int max_rank = 0;
  for (int i = 0; i < instance.num_students(); ++i) {
    max_rank = std::max(max_rank, static_cast<int>(instance.preferences(i).size()));
  }
  return (max_rank + 1.0) * std::max(1, instance.num_students()) * 1e3;
}

namespace {

double cumulative_p(const MarketInstance& instance, const RandomMatching<double>& p, int i, int k) {
  double total = 0.0;
  for (int s : instance.preferences(i)) {
    total += p(i, s);
    if (s == k) break;
  }
  if (total > 1.0 + 1e-9) throw Error("random matching gives a student more than unit mass");
  return std::clamp(total, 0.0, 1.0);
}

lp::LinearProgram master_lp(const MarketInstance& instance, const RandomMatching<double>& p,
                            const std::vector<EqualityRow>& rows) {
  if (p.rows() != instance.num_students() || p.cols() != instance.num_schools()) {
    throw Error("random matching dimensions do not match the instance");
  }
  lp::LinearProgram model;
  for (const Edge& e : instance.edges()) {
    model.add_row(lp::Sense::kGreaterEqual, cumulative_p(instance, p, e.student, e.school));
  }
  model.add_row(lp::Sense::kEqual, 1.0);
  for (std::size_t r = 0; r < rows.size(); ++r) model.add_row(lp::Sense::kEqual, 0.0);

  const int v = model.add_variable(artificial_cost(instance));
  for (int e = 0; e < instance.num_edges(); ++e) {
    const Edge& edge = instance.edges()[e];
    model.A(e, v) = instance.rank(edge.student, edge.school);
  }
  model.A(instance.num_edges(), v) = 1.0;
  return model;
}

}  // namespace

MasterProblem::MasterProblem(const MarketInstance& instance, const RandomMatching<double>& p,
                             std::vector<EqualityRow> equal_treatment)
    : instance_(&instance),
      rows_(std::move(equal_treatment)),
      simplex_(master_lp(instance, p, rows_)) {}

Eigen::VectorXd MasterProblem::column(const Matching& m) const {
  const MarketInstance& inst = *instance_;
  const int num_edges = inst.num_edges();
  Eigen::VectorXd col = Eigen::VectorXd::Zero(num_edges + 1 + static_cast<int>(rows_.size()));
  for (int i = 0; i < m.size(); ++i) {
    if (m[i] == kUnassigned) continue;
    const int r = inst.rank(i, m[i]);
    for (int k : inst.preferences(i)) {
      if (inst.rank(i, k) >= r) col(inst.edge_index(i, k)) = 1.0;
    }
  }
  col(num_edges) = 1.0;
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    const auto& row = rows_[r];
    col(num_edges + 1 + r) = (m[row.i] == row.school ? 1.0 : 0.0) - (m[row.j] == row.school ? 1.0 : 0.0);
  }
  return col;
}

bool MasterProblem::add(const Matching& m) {
  if (m.size() != instance_->num_students()) throw Error("matching size does not match instance");
  if (!seen_.insert(m).second) return false;
  simplex_.add_column(total_rank(*instance_, m), column(m));
  support_.push_back(m);
  return true;
}

MasterSolution MasterProblem::solve() {
  const lp::Solution sol = simplex_.solve();
  if (sol.status != lp::Status::kOptimal) {
    throw Error(std::string("master LP failed: ") + lp::to_string(sol.status) + " after " +
                std::to_string(sol.iterations) + " iterations");
  }
  const int num_edges = instance_->num_edges();
  MasterSolution out;
  out.artificial_weight = sol.x(0);
  out.weights = sol.x.tail(sol.x.size() - 1);
  out.duals.mu = sol.duals.head(num_edges).cwiseMax(0.0);
  out.duals.delta = sol.duals(num_edges);
  out.duals.eta = sol.duals.tail(static_cast<int>(rows_.size()));
  out.objective = sol.objective;
  out.iterations = sol.iterations;
  out.status = out.artificial_weight > 1e-9 ? MasterSolution::Status::kArtificialActive
                                            : MasterSolution::Status::kOptimal;
  return out;
}

MasterSolution solve_master(const MarketInstance& instance, const std::vector<Matching>& support,
                            const RandomMatching<double>& p,
                            const std::vector<EqualityRow>& equal_treatment) {
  if (support.empty()) throw Error("master needs a nonempty support");
  MasterProblem master(instance, p, equal_treatment);
  for (const Matching& m : support) master.add(m);
  return master.solve();
}

double reduced_cost(const MarketInstance& instance, const Matching& m, const Duals& duals,
                    const std::vector<EqualityRow>& equal_treatment) {
  double value = duals.delta - total_rank(instance, m);
  for (int i = 0; i < m.size(); ++i) {
    if (m[i] == kUnassigned) continue;
    const int r = instance.rank(i, m[i]);
    for (int k : instance.preferences(i)) {
      if (instance.rank(i, k) >= r) value += duals.mu(instance.edge_index(i, k));
    }
  }
  for (std::size_t r = 0; r < equal_treatment.size(); ++r) {
    const auto& row = equal_treatment[r];
    value += duals.eta(r) *
             ((m[row.i] == row.school ? 1.0 : 0.0) - (m[row.j] == row.school ? 1.0 : 0.0));
  }
  return value;
}

// ---------------------------------------------------------------------------
// Cut-off model

CutoffModel build_cutoff_constraints(const MarketInstance& instance) {
  CutoffModel model;
  model.instance = &instance;
  auto& lp = model.lp;
  const int num_schools = instance.num_schools();
  for (int e = 0; e < instance.num_edges(); ++e) {
    model.edge_var.push_back(lp.add_variable(0.0));
    model.integer.push_back(1);
  }
  for (int j = 0; j < num_schools; ++j) {
    model.cutoff_var.push_back(lp.add_variable(0.0));
    model.integer.push_back(0);
  }
  for (int j = 0; j < num_schools; ++j) {
    model.fill_var.push_back(lp.add_variable(0.0));
    model.integer.push_back(1);
  }

  for (int e = 0; e < instance.num_edges(); ++e) {
    const auto [i, j] = instance.edges()[e];
    const int r = instance.priority_class(i, j);
    const double big = instance.num_priority_classes(j) + 1.0;
    const int y = model.cutoff_var[j];

    int row = lp.add_row(lp::Sense::kGreaterEqual, 0.0);
    lp.A(row, y) = 1.0;
    lp.A(row, model.edge_var[e]) = -r;

    row = lp.add_row(lp::Sense::kLessEqual, r);
    lp.A(row, y) = 1.0;
    for (int k : instance.preferences(i)) {
      lp.A(row, model.edge_var[instance.edge_index(i, k)]) = -big;
      if (k == j) break;
    }

    row = lp.add_row(lp::Sense::kLessEqual, 1.0);
    lp.A(row, model.edge_var[e]) = 1.0;
  }
  for (int j = 0; j < num_schools; ++j) {
    const double big = instance.num_priority_classes(j) + 1.0;
    const int lower = lp.add_row(lp::Sense::kGreaterEqual, 0.0);
    const int upper = lp.add_row(lp::Sense::kLessEqual, instance.capacity(j));
    lp.A(lower, model.fill_var[j]) = -instance.capacity(j);
    const int waste = lp.add_row(lp::Sense::kGreaterEqual, big);
    lp.A(waste, model.cutoff_var[j]) = 1.0;
    lp.A(waste, model.fill_var[j]) = big;
    int row = lp.add_row(lp::Sense::kLessEqual, big);
    lp.A(row, model.cutoff_var[j]) = 1.0;
    row = lp.add_row(lp::Sense::kLessEqual, 1.0);
    lp.A(row, model.fill_var[j]) = 1.0;
    for (int e = 0; e < instance.num_edges(); ++e) {
      if (instance.edges()[e].school != j) continue;
      lp.A(lower, model.edge_var[e]) = 1.0;
      lp.A(upper, model.edge_var[e]) = 1.0;
    }
  }
  for (int i = 0; i < instance.num_students(); ++i) {
    const int row = lp.add_row(lp::Sense::kLessEqual, 1.0);
    for (int k : instance.preferences(i)) lp.A(row, model.edge_var[instance.edge_index(i, k)]) = 1.0;
  }
  return model;
}

namespace {

bool row_holds(lp::Sense sense, double lhs, double rhs) {
  constexpr double tol = 1e-9;
  switch (sense) {
    case lp::Sense::kLessEqual:
      return lhs <= rhs + tol;
    case lp::Sense::kGreaterEqual:
      return lhs >= rhs - tol;
    case lp::Sense::kEqual:
      return std::abs(lhs - rhs) <= tol;
  }
  return false;
}

}  // namespace

bool CutoffModel::admits(const Matching& m) const {
  const int num_vars = lp.num_vars();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(num_vars);
  for (int i = 0; i < m.size(); ++i) {
    if (m[i] == kUnassigned) continue;
    if (!instance->is_edge(i, m[i])) return false;
    x(edge_var[instance->edge_index(i, m[i])]) = 1.0;
  }
  std::vector<char> is_edge_var(num_vars, 0);
  for (int v : edge_var) is_edge_var[v] = 1;

  // Rows without cut-off or fill variables are checked directly.
  std::vector<char> handled(lp.num_rows(), 0);
  for (int r = 0; r < lp.num_rows(); ++r) {
    bool pure = true;
    for (int v = 0; v < num_vars && pure; ++v) pure = is_edge_var[v] || lp.A(r, v) == 0.0;
    if (!pure) continue;
    handled[r] = 1;
    if (!row_holds(lp.sense[r], lp.A.row(r).dot(x), lp.rhs(r))) return false;
  }
  // Each remaining row touches the (y_j, f_j) pair of exactly one school.
  for (std::size_t j = 0; j < cutoff_var.size(); ++j) {
    const int y = cutoff_var[j];
    const int f = fill_var[j];
    bool some_f_works = false;
    for (double fv : {0.0, 1.0}) {
      x(f) = fv;
      x(y) = 0.0;
      double lo = 0.0;
      double hi = std::numeric_limits<double>::infinity();
      bool ok = true;
      for (int r = 0; r < lp.num_rows() && ok; ++r) {
        if (handled[r] || (lp.A(r, y) == 0.0 && lp.A(r, f) == 0.0)) continue;
        const double a = lp.A(r, y);
        const double rest = lp.A.row(r).dot(x);
        const double slack = lp.rhs(r) - rest;
        if (a == 0.0) {
          ok = row_holds(lp.sense[r], rest, lp.rhs(r));
          continue;
        }
        const double bound = slack / a;
        const bool upper = (lp.sense[r] == lp::Sense::kLessEqual) == (a > 0);
        if (lp.sense[r] == lp::Sense::kEqual) {
          lo = std::max(lo, bound);
          hi = std::min(hi, bound);
        } else if (upper) {
          hi = std::min(hi, bound);
        } else {
          lo = std::max(lo, bound);
        }
      }
      if (ok && lo <= hi + 1e-9) some_f_works = true;
    }
    x(f) = 0.0;
    if (!some_f_works) return false;
  }
  return true;
}

Matching matching_from_edges(const MarketInstance& instance, const CutoffModel& model,
                             const Eigen::VectorXd& x) {
  Matching m(instance.num_students());
  for (int e = 0; e < instance.num_edges(); ++e) {
    if (x(model.edge_var[e]) > 0.5) m.assign(instance.edges()[e].student, instance.edges()[e].school);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Pricing

const char* to_string(PricingVariant v) { return v == PricingVariant::kA ? "A" : "B"; }

const char* to_string(PricingBackend b) {
  switch (b) {
    case PricingBackend::kEnumerate:
      return "enumerate";
    case PricingBackend::kMip:
      return "mip";
    case PricingBackend::kSample:
      return "sample";
  }
  return "?";
}

namespace {

/// rc(M) = constant + sum_e coef(e) * M(e).
struct LinearForm {
  double constant = 0.0;
  Eigen::VectorXd coef;
};

LinearForm reduced_cost_form(const MarketInstance& instance, const Duals& duals,
                             const std::vector<EqualityRow>& rows) {
  LinearForm form;
  form.constant = duals.delta;
  form.coef = Eigen::VectorXd::Zero(instance.num_edges());
  for (int i = 0; i < instance.num_students(); ++i) {
    const double unassigned = unassigned_rank(instance, i);
    form.constant -= unassigned;
    const auto prefs = instance.preferences(i);
    // Suffix sums of mu along the list give the weight of each assignment.
    double tail = 0.0;
    for (int k = static_cast<int>(prefs.size()) - 1; k >= 0; --k) {
      const int e = instance.edge_index(i, prefs[k]);
      tail += duals.mu(e);
      form.coef(e) = tail - instance.rank(i, prefs[k]) + unassigned;
    }
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (instance.is_edge(row.i, row.school)) form.coef(instance.edge_index(row.i, row.school)) += duals.eta(r);
    if (instance.is_edge(row.j, row.school)) form.coef(instance.edge_index(row.j, row.school)) -= duals.eta(r);
  }
  return form;
}

/// Variant B objective as a linear form in the edge variables.
LinearForm variant_b_form(const MarketInstance& instance, const Duals& duals, double zeta) {
  LinearForm form;
  form.coef = Eigen::VectorXd::Zero(instance.num_edges());
  const double max_mu = duals.mu.size() > 0 ? duals.mu.maxCoeff() : 0.0;
  for (int e = 0; e < instance.num_edges(); ++e) {
    const auto [i, s] = instance.edges()[e];
    const double bonus = max_mu > 0.0 ? zeta * duals.mu(e) / max_mu : 0.0;
    form.coef(e) = instance.rank(i, s) - bonus - unassigned_rank(instance, i);
  }
  for (int i = 0; i < instance.num_students(); ++i) form.constant += unassigned_rank(instance, i);
  return form;
}

double evaluate(const MarketInstance& instance, const LinearForm& form, const Matching& m) {
  double value = form.constant;
  for (int i = 0; i < m.size(); ++i) {
    if (m[i] != kUnassigned) value += form.coef(instance.edge_index(i, m[i]));
  }
  return value;
}

struct Candidate {
  Matching matching;
  double rc;
  double score;
};

PricingResult select(std::vector<Candidate> candidates, const PricingOptions& options) {
  std::erase_if(candidates, [&](const Candidate& c) { return c.rc <= options.strict_eps; });
  if (options.variant == PricingVariant::kA) {
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.rc > b.rc; });
  } else {
    std::stable_sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
      return a.score != b.score ? a.score < b.score : a.rc > b.rc;
    });
  }
  PricingResult out;
  const std::size_t keep = std::min<std::size_t>(candidates.size(), std::max(1, options.batch_size));
  for (std::size_t k = 0; k < keep; ++k) out.columns.push_back(std::move(candidates[k].matching));
  return out;
}

PricingResult price_enumerate(const MarketInstance& instance, const Duals& duals,
                              const std::vector<EqualityRow>& rows, const PricingOptions& options) {
  StableSet local;
  const StableSet* set = options.stable_set;
  if (set == nullptr) {
    local = enumerate_weakly_stable(instance, options.enumerate_budget);
    set = &local;
  }
  const LinearForm rc = reduced_cost_form(instance, duals, rows);
  const LinearForm b = variant_b_form(instance, duals, options.zeta);
  std::vector<Candidate> candidates;
  for (const Matching& m : set->matchings) {
    candidates.push_back({m, evaluate(instance, rc, m), evaluate(instance, b, m)});
  }
  PricingResult out = select(std::move(candidates), options);
  out.certificate = out.columns.empty();
  return out;
}

PricingResult price_mip(const MarketInstance& instance, const Duals& duals,
                        const std::vector<EqualityRow>& rows, const PricingOptions& options) {
  CutoffModel model = build_cutoff_constraints(instance);
  const LinearForm rc = reduced_cost_form(instance, duals, rows);
  auto& lp = model.lp;
  if (options.variant == PricingVariant::kA) {
    for (int e = 0; e < instance.num_edges(); ++e) lp.cost(model.edge_var[e]) = -rc.coef(e);
  } else {
    const LinearForm b = variant_b_form(instance, duals, options.zeta);
    for (int e = 0; e < instance.num_edges(); ++e) lp.cost(model.edge_var[e]) = b.coef(e);
    const int row = lp.add_row(lp::Sense::kGreaterEqual, options.strict_eps - rc.constant);
    for (int e = 0; e < instance.num_edges(); ++e) lp.A(row, model.edge_var[e]) = rc.coef(e);
  }
  lp::MipOptions mip;
  mip.max_nodes = options.mip_node_limit;
  mip.deadline = options.deadline;
  const lp::MipSolution sol = lp::solve_mip(lp, model.integer, mip);

  PricingResult out;
  out.limit_hit = sol.status == lp::Status::kIterationLimit || sol.status == lp::Status::kTimeLimit;
  if (!sol.has_incumbent) {
    out.certificate = sol.status == lp::Status::kInfeasible;
    return out;
  }
  Matching m = matching_from_edges(instance, model, sol.x);
  if (evaluate(instance, rc, m) > options.strict_eps) {
    out.columns.push_back(std::move(m));
  } else {
    out.certificate = sol.status == lp::Status::kOptimal;
  }
  return out;
}

PricingResult price_sample(const MarketInstance& instance, const Duals& duals,
                           const std::vector<EqualityRow>& rows, const PricingOptions& options) {
  const int n = instance.num_students();
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(n);
  for (int e = 0; e < instance.num_edges(); ++e) weight(instance.edges()[e].student) += duals.mu(e);
  const double max_weight = n > 0 ? weight.maxCoeff() : 0.0;

  const LinearForm rc = reduced_cost_form(instance, duals, rows);
  const LinearForm b = variant_b_form(instance, duals, options.zeta);
  std::unordered_set<Matching, MatchingHash> seen;
  std::vector<Candidate> candidates;
  const int draws = std::max(1, options.batch_size);
  for (int k = 0; k < draws; ++k) {
    if (options.deadline && std::chrono::steady_clock::now() > *options.deadline) break;
    Rng rng(derive_seed(options.seed, k));
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (k % 2 == 0 || max_weight <= 0.0) {
      rng.shuffle(std::span<int>(order));
    } else {
      // Weighted random order: students whose dominance rows bind tend to
      // come first (keys u^(1/w), sorted descending).
      std::vector<double> key(n);
      for (int i = 0; i < n; ++i) {
        const double w = 1.0 + 3.0 * weight(i) / max_weight;
        key[i] = std::pow(std::max(rng.uniform(), 1e-300), 1.0 / w);
      }
      std::stable_sort(order.begin(), order.end(), [&](int a, int c) { return key[a] > key[c]; });
    }
    Matching m = deferred_acceptance(instance, TieBreaking::single(std::move(order)));
    m = resolve_to_constrained_efficient(instance, m, {CyclePolicy::kFirstFound, derive_seed(options.seed, k)});
    if (!seen.insert(m).second) continue;
    candidates.push_back({m, evaluate(instance, rc, m), evaluate(instance, b, m)});
  }
  return select(std::move(candidates), options);
}

}  // namespace

double variant_b_score(const MarketInstance& instance, const Matching& m, const Duals& duals,
                       double zeta) {
  return evaluate(instance, variant_b_form(instance, duals, zeta), m);
}

PricingResult price(const MarketInstance& instance, const Duals& duals,
                    const std::vector<EqualityRow>& equal_treatment, const PricingOptions& options) {
  if (duals.mu.size() != instance.num_edges()) throw Error("duals do not match the instance edges");
  if (duals.eta.size() != static_cast<Eigen::Index>(equal_treatment.size())) {
    throw Error("equal-treatment duals do not match the equality rows");
  }
  switch (options.backend) {
    case PricingBackend::kEnumerate:
      return price_enumerate(instance, duals, equal_treatment, options);
    case PricingBackend::kMip:
      return price_mip(instance, duals, equal_treatment, options);
    case PricingBackend::kSample:
      return price_sample(instance, duals, equal_treatment, options);
  }
  return {};
}

std::optional<Matching> solve_pricing(const MarketInstance& instance, const Duals& duals,
                                      const PricingOptions& options) {
  PricingOptions single = options;
  single.batch_size = 1;
  Duals d = duals;
  if (d.eta.size() != 0) d.eta.resize(0);
  PricingResult res = price(instance, d, {}, single);
  if (res.columns.empty()) return std::nullopt;
  return res.columns.front();
}

// ---------------------------------------------------------------------------
// Column generation

const char* to_string(CgStatus s) {
  switch (s) {
    case CgStatus::kOptimal:
      return "optimal";
    case CgStatus::kTimeLimit:
      return "time-limit";
    case CgStatus::kMaxRounds:
      return "max-rounds";
    case CgStatus::kHeuristicExhausted:
      return "heuristic-exhausted";
    case CgStatus::kArtificialActive:
      return "artificial-active";
  }
  return "?";
}

RandomMatching<double> expand(const MarketInstance& instance, const std::vector<Matching>& support,
                              const std::vector<double>& weights) {
  RandomMatching<double> q = RandomMatching<double>::Zero(instance.num_students(), instance.num_schools());
  for (std::size_t l = 0; l < support.size(); ++l) {
    q.noalias() += weights[l] * indicator<double>(instance, support[l]);
  }
  return q;
}

LotterySolution lottery_from_master(const MarketInstance& instance, const MasterProblem& master,
                                    const MasterSolution& sol, const RandomMatching<double>& p,
                                    double weight_tol) {
  LotterySolution out;
  double total = 0.0;
  for (int l = 0; l < sol.weights.size(); ++l) {
    if (sol.weights(l) <= weight_tol) continue;
    out.support.push_back(master.support()[l]);
    out.weights.push_back(sol.weights(l));
    total += sol.weights(l);
  }
  if (total > 0.0) {
    for (double& w : out.weights) w /= total;
  }
  out.q = out.support.empty() ? p : expand(instance, out.support, out.weights);
  out.duals = sol.duals;
  out.equal_treatment = master.equal_treatment();
  out.objective = 0.0;
  for (std::size_t l = 0; l < out.support.size(); ++l) {
    out.objective += out.weights[l] * total_rank(instance, out.support[l]);
  }
  if (out.support.empty()) out.objective = average_rank(instance, p) * instance.num_students();
  out.average_rank = instance.num_students() > 0 ? out.objective / instance.num_students() : 0.0;
  out.status = sol.status == MasterSolution::Status::kOptimal ? CgStatus::kOptimal
                                                               : CgStatus::kArtificialActive;
  return out;
}

namespace {

Matching drop_dummy(const Matching& m, int dummy) {
  Matching out = m;
  for (int i = 0; i < m.size(); ++i) {
    if (m[i] == dummy) out.assign(i, kUnassigned);
  }
  return out;
}

/// Re-expresses a solution found on the augmented market in terms of the
/// original one.
LotterySolution restrict_to_original(const MarketInstance& original, const MarketInstance& augmented,
                                     LotterySolution sol) {
  const int dummy = *augmented.dummy_school();
  for (Matching& m : sol.support) m = drop_dummy(m, dummy);
  sol.q = sol.q.leftCols(original.num_schools()).eval();
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(original.num_edges());
  for (int e = 0; e < original.num_edges(); ++e) {
    const auto [i, s] = original.edges()[e];
    mu(e) = sol.duals.mu(augmented.edge_index(i, s));
  }
  sol.duals.mu = std::move(mu);
  std::erase_if(sol.equal_treatment, [&](const EqualityRow& r) { return r.school == dummy; });
  return sol;
}

}  // namespace

LotterySolution run_pirmes(const MarketInstance& instance, const RandomMatching<double>& p,
                           const std::vector<Matching>& warm_support, const PirmesConfig& config) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const auto deadline =
      start + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(config.time_limit_seconds));
  if (p.rows() != instance.num_students() || p.cols() != instance.num_schools()) {
    throw Error("random matching dimensions do not match the instance");
  }
  if (config.batch_size < 1) throw Error("batch size must be at least 1");
  if (config.time_limit_seconds <= 0) throw Error("time limit must be positive");

  const bool lift = config.augment && !instance.dummy_school();
  const MarketInstance augmented = lift ? augment_with_dummy(instance) : MarketInstance{};
  const MarketInstance& work = lift ? augmented : instance;
  const RandomMatching<double> p_work = lift ? lift_to_augmented(work, p) : p;

  std::vector<EqualityRow> rows;
  if (config.equal_treatment) rows = equality_rows(identical_pairs(work, p_work));
  MasterProblem master(work, p_work, rows);
  for (const Matching& m0 : warm_support) {
    const Matching m = lift ? lift_to_augmented(work, m0) : m0;
    check_matching(work, m);
    if (!is_weakly_stable(work, m).stable) throw Error("warm support contains an unstable matching");
    master.add(m);
  }

  std::optional<StableSet> stable_cache;
  auto pricing_options = [&](PricingBackend backend, int round, double zeta) {
    PricingOptions opt;
    opt.variant = config.variant;
    opt.backend = backend;
    opt.zeta = zeta;
    opt.batch_size = config.batch_size;
    opt.enumerate_budget = config.enumerate_budget;
    opt.mip_node_limit = config.mip_node_limit;
    opt.deadline = deadline;
    opt.seed = derive_seed(config.seed, static_cast<std::uint64_t>(round));
    if (backend == PricingBackend::kEnumerate) {
      if (!stable_cache) stable_cache = enumerate_weakly_stable(work, config.enumerate_budget);
      opt.stable_set = &*stable_cache;
    }
    return opt;
  };

  const double base_rank = average_rank(work, p_work);
  const double n = std::max(1, work.num_students());
  CgStatus status = CgStatus::kMaxRounds;
  MasterSolution sol;
  std::vector<IterationLog> log;
  int round = 0;
  while (true) {
    sol = master.solve();
    const bool artificial = sol.status == MasterSolution::Status::kArtificialActive;
    log.push_back({round, sol.objective / n, static_cast<int>(master.support().size()), 0, artificial,
                   std::chrono::duration<double>(Clock::now() - start).count()});
    if (round >= config.max_rounds) {
      status = CgStatus::kMaxRounds;
      break;
    }
    if (Clock::now() > deadline) {
      status = CgStatus::kTimeLimit;
      break;
    }
    const double zeta = config.zeta.value_or(artificial ? base_rank : sol.objective / n);
    PricingResult res = price(work, sol.duals, rows, pricing_options(config.backend, round, zeta));
    if (res.columns.empty() && !res.certificate && !res.limit_hit && config.fallback) {
      res = price(work, sol.duals, rows, pricing_options(*config.fallback, round, zeta));
    }
    if (res.columns.empty()) {
      status = res.certificate ? CgStatus::kOptimal
               : res.limit_hit ? CgStatus::kTimeLimit
                               : CgStatus::kHeuristicExhausted;
      break;
    }
    int added = 0;
    for (Matching& m : res.columns) {
      if (config.post_process) m = resolve_to_constrained_efficient(work, m);
      added += master.add(m) ? 1 : 0;
    }
    log.back().columns_added = added;
    ++round;
    if (added == 0) {
      // Every priced column was already present: numerical stall.
      sol = master.solve();
      status = CgStatus::kHeuristicExhausted;
      break;
    }
  }

  LotterySolution out = lottery_from_master(work, master, sol, p_work, config.weight_tol);
  out.log = std::move(log);
  out.rounds = round;
  if (sol.status == MasterSolution::Status::kArtificialActive) {
    out.support.clear();
    out.weights.clear();
    out.q = p_work;
    out.objective = base_rank * work.num_students();
    out.average_rank = base_rank;
    out.status = CgStatus::kArtificialActive;
  } else {
    out.status = status;
  }
  return lift ? restrict_to_original(instance, work, std::move(out)) : out;
}

LotterySolution pirmes_heur(const MarketInstance& instance, const RandomMatching<double>& p,
                            const std::vector<Matching>& warm_support, PirmesConfig config) {
  config.max_rounds = 0;
  return run_pirmes(instance, p, warm_support, config);
}

Matching draw_matching(const LotterySolution& solution, std::uint64_t seed) {
  if (solution.support.empty()) throw Error("lottery has an empty support");
  Rng rng(seed);
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t l = 0; l < solution.support.size(); ++l) {
    acc += solution.weights[l];
    if (u < acc) return solution.support[l];
  }
  return solution.support.back();
}

}  // namespace pirmes
