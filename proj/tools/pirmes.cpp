// Command-line front end: instance generation and ingestion, DA lotteries,
// stable improvement cycles, PIRMES, oracle checks and experiment sweeps.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pirmes/experiments.hpp"
#include "pirmes/instance_gen.hpp"
#include "pirmes/io.hpp"
#include "pirmes/lottery.hpp"
#include "pirmes/mechanisms.hpp"
#include "pirmes/oracle.hpp"
#include "pirmes/sic.hpp"

namespace fs = std::filesystem;
using pirmes::io::Json;

namespace {

void emit(const Json& doc, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << doc.dump(2) << "\n";
  } else {
    pirmes::io::write_json(out, doc);
  }
}

pirmes::TieBreaking::Mode parse_mode(const std::string& s) {
  return s == "multiple" ? pirmes::TieBreaking::Mode::kMultiple : pirmes::TieBreaking::Mode::kSingle;
}

pirmes::PricingBackend parse_backend(const std::string& s) {
  if (s == "mip") return pirmes::PricingBackend::kMip;
  if (s == "sample") return pirmes::PricingBackend::kSample;
  return pirmes::PricingBackend::kEnumerate;
}

const std::map<std::string, std::string> kBackends{{"enumerate", "enumerate"}, {"mip", "mip"}, {"sample", "sample"}};

// --------------------------------------------------------------------------

struct GenArgs {
  pirmes::GenConfig config;
  std::string capacity = "equal";
  std::string out;
};

int run_gen(const GenArgs& a) {
  pirmes::GenConfig config = a.config;
  config.capacity_rule = a.capacity == "ceil" ? pirmes::CapacityRule::kCeil : pirmes::CapacityRule::kEqualSplit;
  emit(pirmes::io::instance_to_json(pirmes::generate(config)), a.out);
  return 0;
}

struct IngestArgs {
  std::string records, schools, sib = "sib", dist = "reldist", out;
};

int run_ingest(const IngestArgs& a) {
  const auto instance = pirmes::estonian_priorities(
      pirmes::load_records_csv(a.records), pirmes::load_schools_csv(a.schools),
      a.sib == "nosib" ? pirmes::SiblingRule::kNoSib : pirmes::SiblingRule::kSib,
      a.dist == "dist3" ? pirmes::DistanceRule::kDist3 : pirmes::DistanceRule::kRelDist);
  emit(pirmes::io::instance_to_json(instance), a.out);
  return 0;
}

struct DaArgs {
  std::string instance, mode = "single", out;
  int n = 1000;
  std::uint64_t seed = 0;
  bool exact = false;
  int threads = 1;
};

int run_da_sample(const DaArgs& a) {
  const auto instance = pirmes::io::load_instance(a.instance);
  const auto mode = parse_mode(a.mode);
  const auto dist = a.exact ? pirmes::exact_da_distribution(instance, mode)
                            : pirmes::sample_da_distribution(instance, mode, a.n, a.seed, a.threads);
  emit(pirmes::io::distribution_to_json(instance, dist), a.out);
  return 0;
}

struct EeArgs {
  std::string instance, matching, policy = "first-found", out;
  std::optional<std::uint64_t> seed;
};

int run_ee(const EeArgs& a) {
  const auto instance = pirmes::io::load_instance(a.instance);
  const auto m = pirmes::io::matching_from_json(instance, pirmes::io::read_json(a.matching));
  pirmes::ResolveOptions opt;
  opt.policy = a.policy == "greedy" ? pirmes::CyclePolicy::kGreedyBestSet : pirmes::CyclePolicy::kFirstFound;
  opt.seed = a.seed;
  const auto result = pirmes::resolve_with_trace(instance, m, opt);
  Json doc;
  doc["initial_average_rank"] = pirmes::format_rational(pirmes::average_rank(instance, m));
  Json trace = Json::array();
  for (const auto& step : result.trace) {
    Json cycles = Json::array();
    for (const auto& c : step.cycles) {
      Json ids = Json::array();
      for (int i : c.students) ids.push_back(instance.student_id(i));
      cycles.push_back(std::move(ids));
    }
    trace.push_back({{"cycles", std::move(cycles)},
                     {"average_rank", pirmes::format_rational(step.average_rank)}});
  }
  doc["trace"] = std::move(trace);
  doc["matching"] = pirmes::io::matching_to_json(instance, result.matching);
  doc["average_rank"] = pirmes::format_rational(pirmes::average_rank(instance, result.matching));
  emit(doc, a.out);
  return 0;
}

struct PirmesArgs {
  std::string instance, p, out, variant = "B", backend = "enumerate", fallback;
  std::vector<std::string> warm;
  int samples = 1000;
  int batch = 500;
  double time_limit = 600;
  int max_rounds = 1'000'000;
  bool heur = false;
  bool equal_treatment = false;
  bool no_post_process = false;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> draw;
};

int run_pirmes_cmd(const PirmesArgs& a) {
  const auto instance = pirmes::io::load_instance(a.instance);
  pirmes::RandomMatching<double> p;
  std::vector<pirmes::Matching> warm;
  auto add_support = [&](const Json& doc) {
    if (doc.value("format", std::string()) != "pirmes-da-distribution") return;
    for (const auto& wm : pirmes::io::distribution_from_json(instance, doc).support) {
      if (!pirmes::is_weakly_stable(instance, wm.matching).stable) continue;
      warm.push_back(wm.matching);
      warm.push_back(pirmes::resolve_to_constrained_efficient(instance, wm.matching));
    }
  };
  if (a.p.empty()) {
    const auto mode = pirmes::TieBreaking::Mode::kSingle;
    const bool small = pirmes::count_tie_breakings(instance, mode) >= 0 &&
                       pirmes::count_tie_breakings(instance, mode) <= 40320;
    const auto dist = small ? pirmes::exact_da_distribution(instance, mode)
                            : pirmes::sample_da_distribution(instance, mode, a.samples, a.seed);
    const Json doc = pirmes::io::distribution_to_json(instance, dist);
    p = dist.prob.cast<double>();
    add_support(doc);
  } else {
    const Json doc = pirmes::io::read_json(a.p);
    p = pirmes::io::random_matching_from_document(instance, doc);
    add_support(doc);
  }
  for (const auto& w : a.warm) add_support(pirmes::io::read_json(w));
  if (warm.empty()) throw pirmes::Error("no weakly stable warm-start matchings; pass a DA distribution");

  pirmes::PirmesConfig config;
  config.variant = a.variant == "A" ? pirmes::PricingVariant::kA : pirmes::PricingVariant::kB;
  config.backend = parse_backend(a.backend);
  if (!a.fallback.empty()) config.fallback = parse_backend(a.fallback);
  config.batch_size = a.batch;
  config.time_limit_seconds = a.time_limit;
  config.max_rounds = a.max_rounds;
  config.equal_treatment = a.equal_treatment;
  config.post_process = !a.no_post_process;
  config.seed = a.seed;
  const auto sol = a.heur ? pirmes::pirmes_heur(instance, p, warm, config)
                          : pirmes::run_pirmes(instance, p, warm, config);
  Json doc = pirmes::io::lottery_to_json(instance, sol);
  doc["base_average_rank"] = pirmes::average_rank(instance, p);
  doc["sd_verdict"] = pirmes::to_string(pirmes::sd_compare(instance, sol.q, p));
  if (a.draw) {
    if (sol.support.empty()) {
      doc["drawn"] = nullptr;
    } else {
      doc["drawn"] = pirmes::io::matching_to_json(instance, pirmes::draw_matching(sol, *a.draw));
    }
  }
  emit(doc, a.out);
  std::cerr << "status " << pirmes::to_string(sol.status) << ", average rank " << sol.average_rank << " (base "
            << pirmes::average_rank(instance, p) << ")\n";
  return 0;
}

struct OracleArgs {
  std::string instance, check = "enumerate", p, out;
  bool equal_treatment = false;
};

int run_oracle(const OracleArgs& a) {
  const auto instance = pirmes::io::load_instance(a.instance);
  const auto set = pirmes::enumerate_weakly_stable(instance);
  Json doc;
  if (a.check == "enumerate") {
    doc["count"] = set.matchings.size();
    Json list = Json::array();
    for (const auto& m : set.matchings) list.push_back(pirmes::io::matching_to_json(instance, m));
    doc["matchings"] = std::move(list);
    emit(doc, a.out);
    return 0;
  }
  if (a.p.empty()) throw pirmes::Error("--p is required for " + a.check);
  const auto p = pirmes::io::random_matching_from_document(instance, pirmes::io::read_json(a.p));
  if (a.check == "ex-post") {
    const auto r = pirmes::is_ex_post_stable(instance, p, set);
    doc["ex_post_stable"] = r.ex_post_stable;
    Json witness = Json::array();
    for (std::size_t l = 0; l < r.matchings.size(); ++l) {
      witness.push_back({{"weight", r.weights[l]}, {"matching", pirmes::io::matching_to_json(instance, r.matchings[l])}});
    }
    doc["witness"] = std::move(witness);
  } else {
    const auto r = pirmes::exact_constrained_optimum(instance, p, set, a.equal_treatment);
    doc["dominated_by_ex_post_stable"] = r.dominated_by_ex_post_stable;
    doc["constrained_sd_efficient"] = r.constrained_sd_efficient;
    doc["optimum"] = pirmes::io::lottery_to_json(instance, r.solution);
  }
  emit(doc, a.out);
  return 0;
}

struct ExperimentArgs {
  std::string grid, methods = "DA,EE,DA-PIRMES-heur,DA-PIRMES-CG", out = "results", backend = "sample",
                    fallback, mode = "single";
  int seeds = 10;
  std::uint64_t seed = 0;
  int samples = 1000;
  double time_limit = 60;
  int threads = 1;
  std::string capacity = "equal";
};

int run_experiment(const ExperimentArgs& a) {
  pirmes::SweepConfig config;
  {
    std::ifstream in(a.grid);
    if (!in) throw pirmes::Error("cannot open '" + a.grid + "'");
    config.cells = pirmes::parse_grid_csv(in);
  }
  std::stringstream names(a.methods);
  for (std::string m; std::getline(names, m, ',');) {
    if (!m.empty()) config.methods.push_back(pirmes::MethodSpec::parse(m));
  }
  config.seeds = a.seeds;
  config.base_seed = a.seed;
  config.threads = a.threads;
  config.capacity_rule = a.capacity == "ceil" ? pirmes::CapacityRule::kCeil : pirmes::CapacityRule::kEqualSplit;
  config.params.samples = a.samples;
  config.params.mode = parse_mode(a.mode);
  config.params.pirmes.backend = parse_backend(a.backend);
  if (!a.fallback.empty()) config.params.pirmes.fallback = parse_backend(a.fallback);
  config.params.pirmes.time_limit_seconds = a.time_limit;

  const auto result = pirmes::sweep(config);
  fs::create_directories(a.out);
  {
    std::ofstream rows(fs::path(a.out) / "runs.csv");
    pirmes::write_rows_csv(rows, result.rows);
    std::ofstream summary(fs::path(a.out) / "summary.csv");
    pirmes::write_summary_csv(summary, result.summary);
  }
  for (const auto& s : result.summary) {
    std::cout << s.cell.n_students << "x" << s.cell.n_schools << " alpha=" << s.cell.alpha << " beta=" << s.cell.beta
              << "  " << s.method << ": avg rank " << s.average_rank.mean << ", improving "
              << s.fraction_improving.mean << ", runs " << s.runs << ", failures " << s.failures << "\n";
  }
  return result.all_completed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"School choice lotteries over weakly stable matchings"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic market");
  gen_cmd->add_option("--n", gen.config.n_students, "Students")->default_val(40);
  gen_cmd->add_option("--m", gen.config.n_schools, "Schools")->default_val(8);
  gen_cmd->add_option("--alpha", gen.config.alpha, "Preference correlation")->default_val(0.0);
  gen_cmd->add_option("--beta", gen.config.beta, "Distance weight")->default_val(0.2);
  gen_cmd->add_option("--seed", gen.config.seed)->default_val(0);
  gen_cmd->add_option("--capacity", gen.capacity)->check(CLI::IsMember({"equal", "ceil"}));
  gen_cmd->add_option("--out", gen.out);

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Build an instance from admission records");
  ingest_cmd->add_option("--records", ingest.records)->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--schools", ingest.schools, "CSV with id,capacity")->required()->check(CLI::ExistingFile);
  ingest_cmd->add_option("--sib", ingest.sib)->check(CLI::IsMember({"sib", "nosib"}));
  ingest_cmd->add_option("--dist", ingest.dist)->check(CLI::IsMember({"reldist", "dist3"}));
  ingest_cmd->add_option("--out", ingest.out);

  DaArgs da;
  auto* da_cmd = app.add_subcommand("da-sample", "DA lottery under random tie-breaking");
  da_cmd->add_option("--instance", da.instance)->required()->check(CLI::ExistingFile);
  da_cmd->add_option("--n", da.n)->default_val(1000);
  da_cmd->add_option("--seed", da.seed)->default_val(0);
  da_cmd->add_option("--mode", da.mode)->check(CLI::IsMember({"single", "multiple"}));
  da_cmd->add_flag("--exact", da.exact, "Enumerate every tie-breaking");
  da_cmd->add_option("--threads", da.threads)->default_val(1);
  da_cmd->add_option("--out", da.out);

  EeArgs ee;
  auto* ee_cmd = app.add_subcommand("ee", "Resolve stable improvement cycles");
  ee_cmd->add_option("--instance", ee.instance)->required()->check(CLI::ExistingFile);
  ee_cmd->add_option("--matching", ee.matching)->required()->check(CLI::ExistingFile);
  ee_cmd->add_option("--policy", ee.policy)->check(CLI::IsMember({"first-found", "greedy"}));
  ee_cmd->add_option("--seed", ee.seed);
  ee_cmd->add_option("--out", ee.out);

  PirmesArgs pa;
  auto* pirmes_cmd = app.add_subcommand("pirmes", "Minimum-rank ex-post stable lottery dominating p");
  pirmes_cmd->add_option("--instance", pa.instance)->required()->check(CLI::ExistingFile);
  pirmes_cmd->add_option("--p", pa.p, "Base random matching (default: DA lottery)")->check(CLI::ExistingFile);
  pirmes_cmd->add_option("--warm", pa.warm, "Extra DA distributions for the warm start")->check(CLI::ExistingFile);
  pirmes_cmd->add_option("--samples", pa.samples, "Tie-breakings when p is sampled")->default_val(1000);
  pirmes_cmd->add_option("--variant", pa.variant)->check(CLI::IsMember({"A", "B"}));
  pirmes_cmd->add_option("--backend", pa.backend)->check(CLI::IsMember(kBackends));
  pirmes_cmd->add_option("--fallback", pa.fallback)->check(CLI::IsMember(kBackends));
  pirmes_cmd->add_option("--batch", pa.batch)->default_val(500);
  pirmes_cmd->add_option("--time-limit", pa.time_limit)->default_val(600);
  pirmes_cmd->add_option("--max-rounds", pa.max_rounds);
  pirmes_cmd->add_flag("--heur", pa.heur, "Master over the warm support only");
  pirmes_cmd->add_flag("--equal-treatment", pa.equal_treatment);
  pirmes_cmd->add_flag("--no-post-process", pa.no_post_process);
  pirmes_cmd->add_option("--seed", pa.seed)->default_val(0);
  pirmes_cmd->add_option("--draw", pa.draw, "Draw one matching with this seed");
  pirmes_cmd->add_option("--out", pa.out);

  OracleArgs oa;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustive checks on small instances");
  oracle_cmd->add_option("--instance", oa.instance)->required()->check(CLI::ExistingFile);
  oracle_cmd->add_option("--check", oa.check)->check(CLI::IsMember({"ex-post", "csd-eff", "enumerate"}));
  oracle_cmd->add_option("--p", oa.p)->check(CLI::ExistingFile);
  oracle_cmd->add_flag("--equal-treatment", oa.equal_treatment);
  oracle_cmd->add_option("--out", oa.out);

  ExperimentArgs ea;
  auto* exp_cmd = app.add_subcommand("experiment", "Sweep generated markets");
  exp_cmd->add_option("--grid", ea.grid, "CSV with n,m,alpha,beta")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--methods", ea.methods, "Comma-separated");
  exp_cmd->add_option("--seeds", ea.seeds)->default_val(10);
  exp_cmd->add_option("--seed", ea.seed, "First instance seed")->default_val(0);
  exp_cmd->add_option("--samples", ea.samples)->default_val(1000);
  exp_cmd->add_option("--time-limit", ea.time_limit)->default_val(60);
  exp_cmd->add_option("--backend", ea.backend)->check(CLI::IsMember(kBackends));
  exp_cmd->add_option("--fallback", ea.fallback)->check(CLI::IsMember(kBackends));
  exp_cmd->add_option("--mode", ea.mode)->check(CLI::IsMember({"single", "multiple"}));
  exp_cmd->add_option("--capacity", ea.capacity)->check(CLI::IsMember({"equal", "ceil"}));
  exp_cmd->add_option("--threads", ea.threads)->default_val(1);
  exp_cmd->add_option("--out", ea.out);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen_cmd) return run_gen(gen);
    if (*ingest_cmd) return run_ingest(ingest);
    if (*da_cmd) return run_da_sample(da);
    if (*ee_cmd) return run_ee(ee);
    if (*pirmes_cmd) return run_pirmes_cmd(pa);
    if (*oracle_cmd) return run_oracle(oa);
    if (*exp_cmd) return run_experiment(ea);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
