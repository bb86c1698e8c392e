#pragma once

// Column generation over weakly stable matchings: the master LP that finds a
// minimum-rank lottery sd-dominating p, its duals, pricing (two variants,
// three backends) and the outer loop.

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>

#include "pirmes/lp.hpp"
#include "pirmes/market.hpp"

namespace pirmes {

struct StableSet;

// ---------------------------------------------------------------------------
// Equal treatment

/// Schools weakly better than the worst school i receives with positive
/// probability under p, in preference order. Empty when p gives i no mass.
std::vector<int> restricted_list(const MarketInstance& instance, const RandomMatching<double>& p,
                                 int i, double eps = 1e-12);

struct IdenticalPairs {
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> flags;  ///< symmetric
  std::vector<std::vector<int>> restricted;                   ///< per student

  bool operator()(int i, int j) const { return flags(i, j) != 0; }
  /// Flagged pairs with i < j.
  std::vector<std::pair<int, int>> pairs() const;
};

/// Pair (i, j) is flagged iff the restricted lists coincide and every school
/// on them puts i and j in the same priority class.
IdenticalPairs identical_pairs(const MarketInstance& instance, const RandomMatching<double>& p);

/// q(i, s) = q(j, s) for one flagged pair and one school of their list.
struct EqualityRow {
  int i;
  int j;
  int school;
};

std::vector<EqualityRow> equality_rows(const IdenticalPairs& pairs);

// ---------------------------------------------------------------------------
// Master problem

struct Duals {
  Eigen::VectorXd mu;   ///< per edge (instance.edges() order), >= 0
  double delta = 0.0;   ///< convexity row
  Eigen::VectorXd eta;  ///< per equality row
};

struct MasterSolution {
  enum class Status { kOptimal, kArtificialActive };

  Status status = Status::kOptimal;
  Eigen::VectorXd weights;  ///< per support matching
  double artificial_weight = 0.0;
  Duals duals;
  double objective = 0.0;  ///< expected total rank, artificial cost included
  std::int64_t iterations = 0;
};

const char* to_string(MasterSolution::Status s);

/// Cost charged to the all-ones artificial column.
double artificial_cost(const MarketInstance& instance);

/// Master LP with the artificial column always present. Columns can be added
/// between solves; the simplex basis is kept as a warm start.
class MasterProblem {
 public:
  MasterProblem(const MarketInstance& instance, const RandomMatching<double>& p,
                std::vector<EqualityRow> equal_treatment = {});

  /// Returns false when m is already in the support.
  bool add(const Matching& m);
  MasterSolution solve();

  const std::vector<Matching>& support() const { return support_; }
  const std::vector<EqualityRow>& equal_treatment() const { return rows_; }

  /// Column of m in the row order edges, convexity, equality rows.
  Eigen::VectorXd column(const Matching& m) const;

 private:
  const MarketInstance* instance_;
  std::vector<EqualityRow> rows_;
  std::vector<Matching> support_;
  std::unordered_set<Matching, MatchingHash> seen_;
  lp::Simplex simplex_;
};

/// Throws Error on an empty support.
MasterSolution solve_master(const MarketInstance& instance, const std::vector<Matching>& support,
                            const RandomMatching<double>& p,
                            const std::vector<EqualityRow>& equal_treatment = {});

/// y^T a(M) - rank(M): positive means M would enter the master.
double reduced_cost(const MarketInstance& instance, const Matching& m, const Duals& duals,
                    const std::vector<EqualityRow>& equal_treatment = {});

// ---------------------------------------------------------------------------
// Cut-off rank stability model

/// Variables: one binary per edge, a cut-off y_j per school, a binary fill
/// flag f_j per school. Its 0/1 points are exactly the weakly stable
/// matchings. Bounds are explicit rows, so `lp` carries only constraints.
struct CutoffModel {
  lp::LinearProgram lp;
  std::vector<char> integer;
  std::vector<int> edge_var;    ///< per edge
  std::vector<int> cutoff_var;  ///< per school
  std::vector<int> fill_var;    ///< per school

  /// Whether some (y, f) completes the 0/1 edge vector of m.
  bool admits(const Matching& m) const;

  const MarketInstance* instance = nullptr;
};

CutoffModel build_cutoff_constraints(const MarketInstance& instance);

/// Reads a matching off an edge-variable vector (values rounded).
Matching matching_from_edges(const MarketInstance& instance, const CutoffModel& model,
                             const Eigen::VectorXd& x);

// ---------------------------------------------------------------------------
// Pricing

enum class PricingVariant { kA, kB };
enum class PricingBackend { kEnumerate, kMip, kSample };

const char* to_string(PricingVariant v);
const char* to_string(PricingBackend b);

struct PricingOptions {
  PricingVariant variant = PricingVariant::kB;
  PricingBackend backend = PricingBackend::kEnumerate;
  double zeta = 0.0;            ///< variant B bonus scale
  double strict_eps = 1e-7;     ///< "reduced cost > 0" threshold
  int batch_size = 1;
  std::int64_t enumerate_budget = 20'000'000;
  std::int64_t mip_node_limit = 200'000;
  std::optional<std::chrono::steady_clock::time_point> deadline;
  std::uint64_t seed = 0;
  /// Stable set reused across rounds by the enumerate backend.
  const StableSet* stable_set = nullptr;
};

struct PricingResult {
  std::vector<Matching> columns;  ///< best first
  /// No improving column exists. Only exact backends can certify this.
  bool certificate = false;
  bool limit_hit = false;
};

PricingResult price(const MarketInstance& instance, const Duals& duals,
                    const std::vector<EqualityRow>& equal_treatment,
                    const PricingOptions& options);

/// Single-column convenience form.
std::optional<Matching> solve_pricing(const MarketInstance& instance, const Duals& duals,
                                      const PricingOptions& options);

/// Variant B score: sum over assigned edges of rank - zeta * mu / max mu,
/// with the bonus dropped when every mu is zero.
double variant_b_score(const MarketInstance& instance, const Matching& m, const Duals& duals,
                       double zeta);

// ---------------------------------------------------------------------------
// Column generation

enum class CgStatus {
  kOptimal,             ///< pricing certificate
  kTimeLimit,
  kMaxRounds,
  kHeuristicExhausted,  ///< heuristic found nothing and no exact fallback ran
  kArtificialActive,    ///< p could not be covered; p is returned
};

const char* to_string(CgStatus s);

struct PirmesConfig {
  PricingVariant variant = PricingVariant::kB;
  PricingBackend backend = PricingBackend::kEnumerate;
  /// Exact backend tried when the heuristic finds nothing.
  std::optional<PricingBackend> fallback;
  int batch_size = 500;
  double time_limit_seconds = 600.0;
  int max_rounds = 1'000'000;
  std::optional<double> zeta;  ///< default: current best average rank
  bool equal_treatment = false;
  bool post_process = true;  ///< SIC-resolve every generated column
  bool augment = true;       ///< work on the dummy-augmented instance
  std::uint64_t seed = 0;
  std::int64_t enumerate_budget = 20'000'000;
  std::int64_t mip_node_limit = 200'000;
  double weight_tol = 1e-12;
};

struct IterationLog {
  int round = 0;
  double average_rank = 0.0;
  int support_size = 0;
  int columns_added = 0;
  bool artificial_active = false;
  double seconds = 0.0;
};

struct LotterySolution {
  std::vector<Matching> support;  ///< positive weight only
  std::vector<double> weights;
  RandomMatching<double> q;
  Duals duals;
  std::vector<EqualityRow> equal_treatment;
  double objective = 0.0;  ///< expected total rank of q
  double average_rank = 0.0;
  CgStatus status = CgStatus::kOptimal;
  std::vector<IterationLog> log;
  int rounds = 0;
};

/// Weighted sum of support indicators.
RandomMatching<double> expand(const MarketInstance& instance, const std::vector<Matching>& support,
                              const std::vector<double>& weights);

/// Packs a solved master into a lottery; weights at or below `weight_tol`
/// are dropped and the rest renormalized.
LotterySolution lottery_from_master(const MarketInstance& instance, const MasterProblem& master,
                                    const MasterSolution& sol, const RandomMatching<double>& p,
                                    double weight_tol);

/// STEP 1 and the bookkeeping of STEP 2. Matchings in `warm_support` that
/// are not weakly stable are rejected with an Error. Outputs refer to
/// `instance` even when the loop ran on the augmented market.
LotterySolution run_pirmes(const MarketInstance& instance, const RandomMatching<double>& p,
                           const std::vector<Matching>& warm_support,
                           const PirmesConfig& config = {});

/// Master over the warm support only.
LotterySolution pirmes_heur(const MarketInstance& instance, const RandomMatching<double>& p,
                            const std::vector<Matching>& warm_support, PirmesConfig config = {});

/// STEP 2: one matching drawn with probability equal to its weight.
Matching draw_matching(const LotterySolution& solution, std::uint64_t seed);

}  // namespace pirmes
