#include "pirmes/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "pirmes/sic.hpp"

namespace pirmes {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

MethodReport compute_metrics(const MarketInstance& instance, const RandomMatching<double>& base,
                             const RandomMatching<double>& q, double eps) {
  MethodReport r;
  const int n = instance.num_students();
  r.average_rank = average_rank(instance, q);
  int improving = 0;
  double gain = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = expected_rank(instance, base, i) - expected_rank(instance, q, i);
    if (d > eps) {
      ++improving;
      gain += d;
    }
  }
  r.fraction_improving = n == 0 ? 0.0 : static_cast<double>(improving) / n;
  r.average_improvement = improving == 0 ? 0.0 : gain / improving;
  return r;
}

MethodReport compute_metrics(const MarketInstance& instance, const RandomMatching<double>& base,
                             const RandomMatching<double>& q,
                             const std::vector<Matching>& support,
                             const std::vector<double>& weights, double eps) {
  if (support.size() != weights.size()) throw Error("decomposition weights do not match its support");
  if (support.empty()) throw Error("blocking-pair count needs a decomposition");
  MethodReport r = compute_metrics(instance, base, q, eps);
  for (std::size_t l = 0; l < support.size(); ++l) {
    r.expected_blocking_pairs +=
        weights[l] * static_cast<double>(is_weakly_stable(instance, support[l]).blocking_pairs.size());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Method names

const char* to_string(BaseMethod b) {
  switch (b) {
    case BaseMethod::kDA: return "DA";
    case BaseMethod::kEE: return "EE";
    case BaseMethod::kEADA: return "EADA";
  }
  return "?";
}

MethodSpec MethodSpec::parse(const std::string& name) {
  MethodSpec spec;
  const auto dash = name.find('-');
  const std::string head = name.substr(0, dash);
  if (head == "DA") spec.base = BaseMethod::kDA;
  else if (head == "EE") spec.base = BaseMethod::kEE;
  else if (head == "EADA") spec.base = BaseMethod::kEADA;
  else throw Error("unknown method '" + name + "'");
  if (dash == std::string::npos) return spec;

  const std::string prefix = head + "-PIRMES-";
  if (name.rfind(prefix, 0) != 0) throw Error("unknown method '" + name + "'");
  const std::string tail = name.substr(prefix.size());
  if (tail == "heur") {
    spec.solver = Solver::kHeur;
  } else if (tail == "CG") {
    spec.solver = Solver::kCG;
  } else {
    spec.solver = Solver::kSampled;
    std::size_t used = 0;
    try {
      spec.extra_samples = std::stoi(tail, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (tail.empty() || used != tail.size() || spec.extra_samples < 0) throw Error("unknown method '" + name + "'");
  }
  return spec;
}

std::string MethodSpec::name() const {
  std::string out = to_string(base);
  switch (solver) {
    case Solver::kNone: return out;
    case Solver::kHeur: return out + "-PIRMES-heur";
    case Solver::kCG: return out + "-PIRMES-CG";
    case Solver::kSampled: return out + "-PIRMES-" + std::to_string(extra_samples);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Baselines

namespace {

std::vector<TieBreaking> all_single_tie_breakings(int n, std::int64_t budget) {
  const std::int64_t count = [&] {
    std::int64_t c = 1;
    for (int k = 2; k <= n; ++k) {
      if (c > budget) break;
      c *= k;
    }
    return c;
  }();
  if (count > budget) {
    throw Error("exact enumeration of " + std::to_string(n) + "! orderings exceeds the budget; sample instead");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<TieBreaking> out;
  out.reserve(static_cast<std::size_t>(count));
  do {
    out.push_back(TieBreaking::single(order));
  } while (std::next_permutation(order.begin(), order.end()));
  return out;
}

template <typename F>
void parallel_for(int count, int threads, F&& body) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int k = next++; k < count; k = next++) body(k);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

Baselines compute_baselines(const MarketInstance& instance, const ExperimentParams& params,
                            std::uint64_t seed) {
  std::vector<TieBreaking> draws;
  DaDistribution::Provenance prov;
  prov.mode = params.mode;
  if (params.exact) {
    if (params.mode != TieBreaking::Mode::kSingle) throw Error("exact baselines support single tie-breaking only");
    draws = all_single_tie_breakings(instance.num_students(), params.exact_budget);
    prov.exact = true;
  } else {
    if (params.samples < 1) throw Error("at least one tie-breaking sample is needed");
    draws = sample_tie_breakings(instance, params.mode, params.samples, seed);
    prov.exact = false;
    prov.seed = seed;
  }
  prov.draws = static_cast<std::int64_t>(draws.size());
  const int count = static_cast<int>(draws.size());

  Baselines b;
  b.da.resize(count, Matching(instance.num_students()));
  b.ee = b.da;
  b.eada = b.da;
  std::vector<double> da_time(count), ee_time(count), eada_time(count);
  parallel_for(count, params.threads, [&](int k) {
    auto t = Clock::now();
    b.da[k] = deferred_acceptance(instance, draws[k]);
    da_time[k] = seconds_since(t);
    t = Clock::now();
    ResolveOptions opt;
    opt.seed = derive_seed(seed ^ 0x5eedULL, static_cast<std::uint64_t>(k));
    b.ee[k] = resolve_to_constrained_efficient(instance, b.da[k], opt);
    ee_time[k] = seconds_since(t);
    t = Clock::now();
    b.eada[k] = eada(instance, draws[k]);
    eada_time[k] = seconds_since(t);
  });
  b.da_seconds = std::accumulate(da_time.begin(), da_time.end(), 0.0);
  b.ee_seconds = b.da_seconds + std::accumulate(ee_time.begin(), ee_time.end(), 0.0);
  b.eada_seconds = std::accumulate(eada_time.begin(), eada_time.end(), 0.0);
  b.da_dist = distribution_from_draws(instance, b.da, prov);
  b.ee_dist = distribution_from_draws(instance, b.ee, prov);
  b.eada_dist = distribution_from_draws(instance, b.eada, prov);
  return b;
}

// ---------------------------------------------------------------------------
// Methods

namespace {

const DaDistribution& base_distribution(const Baselines& b, BaseMethod base) {
  switch (base) {
    case BaseMethod::kDA: return b.da_dist;
    case BaseMethod::kEE: return b.ee_dist;
    case BaseMethod::kEADA: return b.eada_dist;
  }
  return b.da_dist;
}

double base_seconds(const Baselines& b, BaseMethod base) {
  switch (base) {
    case BaseMethod::kDA: return b.da_seconds;
    case BaseMethod::kEE: return b.ee_seconds;
    case BaseMethod::kEADA: return b.eada_seconds;
  }
  return 0.0;
}

void unpack(const DaDistribution& dist, std::vector<Matching>& support, std::vector<double>& weights) {
  for (const auto& wm : dist.support) {
    support.push_back(wm.matching);
    weights.push_back(to_double(wm.weight));
  }
}

void append_unique(std::vector<Matching>& out, const std::vector<Matching>& extra) {
  std::unordered_set<Matching, MatchingHash> seen(out.begin(), out.end());
  for (const Matching& m : extra) {
    if (seen.insert(m).second) out.push_back(m);
  }
}

}  // namespace

MethodResult run_method(const MarketInstance& instance, const Baselines& baselines,
                        const MethodSpec& method, const ExperimentParams& params,
                        std::uint64_t seed) {
  const RandomMatching<double> da = baselines.da_dist.prob.cast<double>();
  const DaDistribution& base = base_distribution(baselines, method.base);
  const RandomMatching<double> p = base.prob.cast<double>();

  MethodResult out;
  if (method.solver == Solver::kNone) {
    unpack(base, out.support, out.weights);
    out.q = p;
    out.report = compute_metrics(instance, da, out.q, out.support, out.weights);
    out.report.runtime_seconds = base_seconds(baselines, method.base);
    out.report.method = method.name();
    return out;
  }

  const auto start = Clock::now();
  std::vector<Matching> warm;
  for (const auto& wm : baselines.da_dist.support) warm.push_back(wm.matching);
  std::vector<Matching> ee;
  for (const auto& wm : baselines.ee_dist.support) ee.push_back(wm.matching);
  append_unique(warm, ee);
  if (method.solver == Solver::kSampled && method.extra_samples > 0) {
    const auto extra = sample_tie_breakings(instance, params.mode, method.extra_samples,
                                            derive_seed(seed, 0xe7a5ULL));
    std::vector<Matching> sampled;
    for (std::size_t k = 0; k < extra.size(); ++k) {
      const Matching m = deferred_acceptance(instance, extra[k]);
      ResolveOptions opt;
      opt.seed = derive_seed(seed ^ 0xa11ULL, k);
      sampled.push_back(m);
      sampled.push_back(resolve_to_constrained_efficient(instance, m, opt));
    }
    append_unique(warm, sampled);
  }

  PirmesConfig config = params.pirmes;
  config.seed = derive_seed(seed, 0xc0deULL);
  LotterySolution sol = method.solver == Solver::kCG ? run_pirmes(instance, p, warm, config)
                                                     : pirmes_heur(instance, p, warm, config);
  out.q = sol.q;
  if (sol.status == CgStatus::kArtificialActive) {
    // p is returned unchanged; its own decomposition carries the metrics.
    unpack(base, out.support, out.weights);
    out.q = p;
  } else {
    out.support = sol.support;
    out.weights = sol.weights;
  }
  out.report = compute_metrics(instance, da, out.q, out.support, out.weights);
  out.report.runtime_seconds = seconds_since(start);
  out.report.method = method.name();
  switch (sol.status) {
    case CgStatus::kArtificialActive: out.report.status = "infeasible"; break;
    case CgStatus::kOptimal: out.report.status = "ok"; break;
    default: out.report.status = to_string(sol.status); break;
  }
  out.lottery = std::move(sol);
  return out;
}

MethodResult run_method(const MarketInstance& instance, const MethodSpec& method,
                        const ExperimentParams& params, std::uint64_t seed) {
  return run_method(instance, compute_baselines(instance, params, seed), method, params, seed);
}

std::vector<MethodResult> run_methods(const MarketInstance& instance,
                                      const std::vector<MethodSpec>& methods,
                                      const ExperimentParams& params, std::uint64_t seed) {
  const Baselines b = compute_baselines(instance, params, seed);
  std::vector<MethodResult> out;
  for (const auto& m : methods) out.push_back(run_method(instance, b, m, params, seed));
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

bool SweepResult::all_completed() const {
  return std::none_of(rows.begin(), rows.end(),
                      [](const SweepRow& r) { return r.report.status.rfind("error", 0) == 0; });
}

namespace {

SummaryStat summarize(const std::vector<double>& values) {
  SummaryStat s;
  if (values.empty()) return {std::nan(""), std::nan(""), std::nan("")};
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.q1 = quantile(values, 0.25);
  s.q3 = quantile(values, 0.75);
  return s;
}

}  // namespace

SweepResult sweep(const SweepConfig& config) {
  if (config.cells.empty()) throw Error("sweep grid is empty");
  if (config.methods.empty()) throw Error("no methods selected");
  if (config.seeds < 1) throw Error("at least one seed is needed");
  const int jobs = static_cast<int>(config.cells.size()) * config.seeds;
  std::vector<std::vector<SweepRow>> results(jobs);

  parallel_for(jobs, config.threads, [&](int job) {
    const int c = job / config.seeds;
    const int k = job % config.seeds;
    const GridCell& cell = config.cells[c];
    const std::uint64_t seed = config.base_seed + static_cast<std::uint64_t>(k);
    auto& rows = results[job];
    try {
      GenConfig gen{cell.n_students, cell.n_schools, cell.alpha, cell.beta, seed, config.capacity_rule};
      const MarketInstance instance = generate(gen);
      const Baselines b = compute_baselines(instance, config.params, derive_seed(seed, 1));
      for (const auto& m : config.methods) {
        SweepRow row{cell, k, {}};
        try {
          row.report = run_method(instance, b, m, config.params, derive_seed(seed, 2)).report;
        } catch (const std::exception& e) {
          row.report.method = m.name();
          row.report.status = std::string("error: ") + e.what();
        }
        rows.push_back(std::move(row));
      }
    } catch (const std::exception& e) {
      for (const auto& m : config.methods) {
        SweepRow row{cell, k, {}};
        row.report.method = m.name();
        row.report.status = std::string("error: ") + e.what();
        rows.push_back(std::move(row));
      }
    }
  });

  SweepResult out;
  for (const auto& rows : results) out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  for (std::size_t c = 0; c < config.cells.size(); ++c) {
    for (const auto& m : config.methods) {
      const std::string name = m.name();
      SweepSummary s;
      s.cell = config.cells[c];
      s.method = name;
      std::vector<double> rank, frac, impr, bp, time;
      for (std::size_t j = c * config.seeds; j < (c + 1) * config.seeds; ++j) {
        for (const auto& r : results[j]) {
          if (r.report.method != name) continue;
        ++s.runs;
        if (r.report.status.rfind("error", 0) == 0 || r.report.status == "infeasible") {
          ++s.failures;
          continue;
        }
        rank.push_back(r.report.average_rank);
        frac.push_back(r.report.fraction_improving);
        impr.push_back(r.report.average_improvement);
        bp.push_back(r.report.expected_blocking_pairs);
        time.push_back(r.report.runtime_seconds);
        }
      }
      s.average_rank = summarize(rank);
      s.fraction_improving = summarize(frac);
      s.average_improvement = summarize(impr);
      s.expected_blocking_pairs = summarize(bp);
      s.runtime_seconds = summarize(time);
      out.summary.push_back(std::move(s));
    }
  }
  return out;
}

namespace {

void write_cell(std::ostream& out, const GridCell& c) {
  out << c.n_students << ',' << c.n_schools << ',' << c.alpha << ',' << c.beta;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

}  // namespace

void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "n,m,alpha,beta,seed,method,avg_rank,frac_improving,avg_improvement,expected_bp,runtime_s,status\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    write_cell(out, r.cell);
    out << ',' << r.seed_index << ',' << r.report.method << ',' << r.report.average_rank << ','
        << r.report.fraction_improving << ',' << r.report.average_improvement << ','
        << r.report.expected_blocking_pairs << ',' << r.report.runtime_seconds << ','
        << csv_quote(r.report.status) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SweepSummary>& summary) {
  out << "n,m,alpha,beta,method,runs,failures";
  for (const char* metric : {"avg_rank", "frac_improving", "avg_improvement", "expected_bp", "runtime_s"}) {
    out << ',' << metric << "_mean," << metric << "_q1," << metric << "_q3";
  }
  out << '\n' << std::setprecision(10);
  for (const auto& s : summary) {
    write_cell(out, s.cell);
    out << ',' << s.method << ',' << s.runs << ',' << s.failures;
    for (const SummaryStat* st : {&s.average_rank, &s.fraction_improving, &s.average_improvement,
                                  &s.expected_blocking_pairs, &s.runtime_seconds}) {
      out << ',' << st->mean << ',' << st->q1 << ',' << st->q3;
    }
    out << '\n';
  }
}

std::vector<GridCell> parse_grid_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("grid: missing header row");
  std::vector<std::string> header;
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) {
      cell.erase(std::remove_if(cell.begin(), cell.end(), ::isspace), cell.end());
      header.push_back(cell);
    }
  }
  auto column = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(std::string("grid: missing column '") + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cn = column("n"), cm = column("m"), ca = column("alpha"), cb = column("beta");
  std::vector<GridCell> cells;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<std::string> v;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) v.push_back(cell);
    try {
      GridCell g;
      g.n_students = std::stoi(v.at(cn));
      g.n_schools = std::stoi(v.at(cm));
      g.alpha = std::stod(v.at(ca));
      g.beta = std::stod(v.at(cb));
      cells.push_back(g);
    } catch (const std::exception&) {
      throw Error("grid line " + std::to_string(line_no) + ": malformed row");
    }
  }
  return cells;
}

}  // namespace pirmes
