#pragma once

// Method matrix (DA, EE, EADA and the PIRMES variants on top of each),
// metrics against the DA baseline, and parameter sweeps over generated
// markets.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pirmes/instance_gen.hpp"
#include "pirmes/lottery.hpp"
#include "pirmes/market.hpp"
#include "pirmes/mechanisms.hpp"

namespace pirmes {

struct MethodReport {
  std::string method;
  double average_rank = 0.0;
  double fraction_improving = 0.0;   ///< students whose expected rank drops vs the base
  double average_improvement = 0.0;  ///< among improving students; 0 if none
  double expected_blocking_pairs = 0.0;
  double runtime_seconds = 0.0;
  std::string status = "ok";
};

/// A student improves iff their expected rank drops by more than eps.
/// Blocking pairs are counted on `instance` and weighted by the decomposition.
MethodReport compute_metrics(const MarketInstance& instance, const RandomMatching<double>& base,
                             const RandomMatching<double>& q,
                             const std::vector<Matching>& support,
                             const std::vector<double>& weights, double eps = 1e-9);

/// Fractions only; expected blocking pairs left at 0.
MethodReport compute_metrics(const MarketInstance& instance, const RandomMatching<double>& base,
                             const RandomMatching<double>& q, double eps = 1e-9);

enum class BaseMethod { kDA, kEE, kEADA };
enum class Solver { kNone, kHeur, kCG, kSampled };

struct MethodSpec {
  BaseMethod base = BaseMethod::kDA;
  Solver solver = Solver::kNone;
  int extra_samples = 0;  ///< for kSampled

  /// "DA", "EE", "EADA", "X-PIRMES-heur", "X-PIRMES-CG", "X-PIRMES-<N>".
  static MethodSpec parse(const std::string& name);
  std::string name() const;
};

const char* to_string(BaseMethod b);

struct ExperimentParams {
  TieBreaking::Mode mode = TieBreaking::Mode::kSingle;
  int samples = 1000;
  /// Enumerate every single tie-breaking instead of sampling (small n only).
  bool exact = false;
  std::int64_t exact_budget = 40320;
  PirmesConfig pirmes;
  int threads = 1;
};

/// Per-draw outcomes of DA, EE and EADA over one shared set of tie-breakings.
struct Baselines {
  std::vector<Matching> da;
  std::vector<Matching> ee;
  std::vector<Matching> eada;
  DaDistribution da_dist;
  DaDistribution ee_dist;
  DaDistribution eada_dist;
  double da_seconds = 0.0;
  double ee_seconds = 0.0;
  double eada_seconds = 0.0;
};

Baselines compute_baselines(const MarketInstance& instance, const ExperimentParams& params,
                            std::uint64_t seed);

struct MethodResult {
  RandomMatching<double> q;
  std::vector<Matching> support;
  std::vector<double> weights;
  MethodReport report;
  std::optional<LotterySolution> lottery;
};

MethodResult run_method(const MarketInstance& instance, const Baselines& baselines,
                        const MethodSpec& method, const ExperimentParams& params,
                        std::uint64_t seed);

MethodResult run_method(const MarketInstance& instance, const MethodSpec& method,
                        const ExperimentParams& params, std::uint64_t seed);

/// All methods on one instance, sharing the baselines.
std::vector<MethodResult> run_methods(const MarketInstance& instance,
                                      const std::vector<MethodSpec>& methods,
                                      const ExperimentParams& params, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Sweeps

struct GridCell {
  int n_students = 40;
  int n_schools = 8;
  double alpha = 0.0;
  double beta = 0.2;
};

struct SweepConfig {
  std::vector<GridCell> cells;
  std::vector<MethodSpec> methods;
  int seeds = 10;
  std::uint64_t base_seed = 0;
  CapacityRule capacity_rule = CapacityRule::kEqualSplit;
  ExperimentParams params;
  int threads = 1;  ///< instances solved concurrently
};

struct SweepRow {
  GridCell cell;
  int seed_index = 0;
  MethodReport report;
};

struct SummaryStat {
  double mean = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

struct SweepSummary {
  GridCell cell;
  std::string method;
  int runs = 0;
  int failures = 0;
  SummaryStat average_rank;
  SummaryStat fraction_improving;
  SummaryStat average_improvement;
  SummaryStat expected_blocking_pairs;
  SummaryStat runtime_seconds;
};

struct SweepResult {
  std::vector<SweepRow> rows;  ///< ordered by cell, seed, method
  std::vector<SweepSummary> summary;
  bool all_completed() const;
};

SweepResult sweep(const SweepConfig& config);

/// Linear-interpolation quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);

void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_summary_csv(std::ostream& out, const std::vector<SweepSummary>& summary);

/// Grid file: CSV with header n,m,alpha,beta.
std::vector<GridCell> parse_grid_csv(std::istream& in);

}  // namespace pirmes
