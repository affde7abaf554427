// Command-line front end: demo generation, skill discovery, benchmark
// evaluation, the five-variant ablation sweep, library inspection, and
// episode replay.  Exit codes: 0 success, 1 data error, 2 usage error.

#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gsl/evaluation.hpp"

namespace {

using namespace gsl;

// --benchmark takes a config file; task files live beside it.
std::pair<std::string, std::string> split_benchmark_path(const std::string& flag) {
  std::string path = flag;
  if (path.empty()) path = resolve_config_dir() + "/benchmark_default.cfg";
  auto slash = path.find_last_of('/');
  if (slash == std::string::npos) return {".", path};
  return {path.substr(0, slash), path.substr(slash + 1)};
}

Benchmark load_benchmark_flag(const std::string& flag) {
  auto [dir, name] = split_benchmark_path(flag);
  return load_benchmark(dir, name);
}

int default_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

struct EpisodeRow {
  std::string variant, axis, task;
  int rollout = 0;
  std::uint64_t seed = 0;
  bool success = false;
};

// Episode seeds use the full 64-bit range, wider than detail::parse_int.
std::uint64_t parse_u64(const std::string& s, const std::string& path) {
  char* end = nullptr;
  unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == nullptr || *end != '\0' || s.empty())
    throw IoError(path, "bad unsigned integer '" + s + "'");
  return v;
}

std::vector<EpisodeRow> read_episode_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  std::string line;
  if (!std::getline(in, line) ||
      line != "variant,split,task,rollout,seed,magnitude,success,steps,error_kind")
    throw IoError(path, "not an episodes file");
  std::vector<EpisodeRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = detail::split(line, ',');
    if (f.size() != 9) throw IoError(path, "malformed episode row");
    EpisodeRow r;
    r.variant = f[0];
    r.axis = f[1];
    r.task = f[2];
    r.rollout = static_cast<int>(detail::parse_int(f[3], path));
    r.seed = parse_u64(f[4], path);
    r.success = f[6] == "1";
    rows.push_back(r);
  }
  return rows;
}

int cmd_gen_demos(const std::string& benchmark, const std::string& out,
                  std::uint64_t seed, bool seed_set) {
  SimConfig cfg;
  Benchmark bench = load_benchmark_flag(benchmark);
  if (seed_set) bench.cfg.demo_seed = seed;
  std::vector<Demo> demos = make_demos(bench, cfg);
  save_demos(demos, out);
  std::printf("wrote %zu demos to %s\n", demos.size(), out.c_str());
  return 0;
}

int cmd_discover(const std::string& demos_path, const std::string& out,
                 const std::string& anchor, int augment, std::uint64_t seed) {
  SimConfig cfg;
  std::vector<Demo> demos = load_demos(demos_path, cfg);
  DiscoveryOptions opt;
  opt.anchor = anchor == "random" ? AnchorMode::random_on_object
                                  : AnchorMode::centroid;
  opt.augment_count = augment;
  for (std::size_t di = 0; di < demos.size(); ++di) {
    std::vector<Segment> segs = segment_demo(demos[di], cfg, opt);
    for (const ConfidenceFlag& flag : flag_low_confidence(demos[di], segs, cfg))
      std::fprintf(stderr, "warning: demo %zu (%s) segment %d: %s\n", di,
                   demos[di].task_id.c_str(), flag.segment_index,
                   to_string(flag.reason));
  }
  SkillLibrary lib = build_library(demos, opt, cfg, seed);
  save_library(lib, out);
  std::printf("wrote %zu skills to %s\n", lib.entries.size(), out.c_str());
  return 0;
}

int cmd_eval(const std::string& library, const std::string& benchmark,
             const std::string& ablation, int rollouts, std::uint64_t seed,
             bool seed_set, const std::string& out, int workers) {
  SimConfig cfg;
  Benchmark bench = load_benchmark_flag(benchmark);
  if (rollouts > 0) bench.cfg.rollouts_per_task = rollouts;
  if (seed_set) bench.cfg.eval_seed = seed;
  SkillLibrary lib = load_library(library);
  AblationVariant variant = *variant_from_string(ablation);
  BenchmarkRun run;
  run.variants = {variant};
  run.episodes = run_variant_episodes(bench, lib, variant, cfg, workers);
  write_report(run, bench, out);
  int succ = 0;
  for (const EpisodeOutcome& ep : run.episodes) succ += ep.result.success ? 1 : 0;
  std::printf("%s: %d/%zu episodes succeeded; report in %s\n",
              to_string(variant), succ, run.episodes.size(), out.c_str());
  return 0;
}

int cmd_ablate(const std::string& demos_path, const std::string& benchmark,
               const std::string& out, int workers) {
  SimConfig cfg;
  Benchmark bench = load_benchmark_flag(benchmark);
  std::vector<Demo> demos = load_demos(demos_path, cfg);
  BenchmarkRun run;
  for (AblationVariant v : all_variants()) {
    run.variants.push_back(v);
    SkillLibrary lib = build_library(demos, apply_ablation(v).discovery, cfg);
    std::vector<EpisodeOutcome> eps =
        run_variant_episodes(bench, lib, v, cfg, workers);
    run.episodes.insert(run.episodes.end(), eps.begin(), eps.end());
  }
  write_report(run, bench, out);
  OrderingReport rep = ordering_check(aggregate_results(run));
  for (const auto& [variant, mean] : rep.test_mean)
    std::printf("%-22s %.4f\n", variant.c_str(), mean);
  std::printf("ordering: complete > regular_skill > max(others) => %s\n",
              rep.ordered ? "PASS" : "FAIL");
  std::printf("report in %s\n", out.c_str());
  return 0;
}

int cmd_inspect(const std::string& library, const std::string& skill) {
  SkillLibrary lib = load_library(library);
  std::map<std::string, int> per_label;
  for (const CanonicalSkill& e : lib.entries) per_label[to_string(e.label)] += 1;
  std::printf("entries: %zu\n", lib.entries.size());
  for (const auto& [label, n] : per_label)
    std::printf("  %-10s %d\n", label.c_str(), n);
  for (std::size_t i = 0; i < lib.entries.size(); ++i) {
    const CanonicalSkill& e = lib.entries[i];
    if (!skill.empty() && skill != to_string(e.label)) continue;
    std::printf("[%zu] %s from %s#%d: %zu points, %zu steps, anchor (%g, %g, %g)\n",
                i, to_string(e.label), e.source_task.c_str(), e.source_segment,
                e.cloud.points.size(), e.trajectory.steps.size(), e.anchor.x,
                e.anchor.y, e.anchor.z);
  }
  return 0;
}

int cmd_replay(const std::string& results, int episode,
               const std::string& benchmark) {
  SimConfig cfg;
  std::vector<EpisodeRow> rows = read_episode_rows(results);
  if (episode < 0 || episode >= static_cast<int>(rows.size()))
    throw IoError(results, "episode index out of range (have " +
                               std::to_string(rows.size()) + " rows)");
  const EpisodeRow& row = rows[static_cast<std::size_t>(episode)];
  auto variant = variant_from_string(row.variant);
  if (!variant) throw IoError(results, "unknown variant '" + row.variant + "'");

  Benchmark bench = load_benchmark_flag(benchmark);
  if (bench.families.count(row.task) == 0)
    throw IoError(results, "task '" + row.task + "' not in this benchmark");
  std::vector<Demo> demos = make_demos(bench, cfg);
  SkillLibrary lib = build_library(demos, apply_ablation(*variant).discovery, cfg);
  SampledInstance inst =
      build_task_instance(bench.families.at(row.task), true, row.seed);
  ExecOptions opt;
  opt.pipeline = apply_ablation(*variant);
  EpisodeResult r = execute_task(inst.task, lib, row.seed, cfg, opt);

  std::printf("episode %d: %s %s rollout %d seed %llu\n", episode,
              row.variant.c_str(), row.task.c_str(), row.rollout,
              static_cast<unsigned long long>(row.seed));
  for (const StepLog& step : r.log)
    std::printf("  step %d: %s target=%d entry=%d distance=%.6g waypoints=%d\n",
                step.plan_step, to_string(step.label), step.target_id, step.entry,
                step.retrieval_distance, step.waypoints);
  if (r.success)
    std::printf("outcome: success after %d steps\n", r.steps_completed);
  else
    std::printf("outcome: failure after %d steps%s%s\n", r.steps_completed,
                r.error_kind.empty() ? "" : ", ", r.error_kind.c_str());
  if (r.success != row.success) {
    std::fprintf(stderr,
                 "error: replay disagrees with the recorded outcome "
                 "(recorded %s)\n",
                 row.success ? "success" : "failure");
    return 1;
  }
  std::printf("replay matches the recorded outcome\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"object-centric skill discovery and composition pipeline"};
  app.require_subcommand(1);

  std::string benchmark, out, demos_path, library, results_path;
  std::string anchor = "centroid", ablation = "complete", skill;
  std::uint64_t seed = 0;
  int augment = 0, rollouts = 0, workers = default_workers(), episode = 0;

  std::vector<std::string> variant_names;
  for (gsl::AblationVariant v : gsl::all_variants())
    variant_names.push_back(gsl::to_string(v));

  CLI::App* gen = app.add_subcommand("gen-demos", "generate expert demos");
  gen->add_option("--config", benchmark, "benchmark config file");
  gen->add_option("--out", out, "demo file to write")->required();
  gen->add_option("--seed", seed, "demo seed stream");

  CLI::App* disc = app.add_subcommand("discover", "build a skill library");
  disc->add_option("--demos", demos_path, "demo file")->required();
  disc->add_option("--out", out, "library file to write")->required();
  disc->add_option("--anchor", anchor, "anchor mode")
      ->check(CLI::IsMember({"centroid", "random"}));
  disc->add_option("--augment", augment, "extra random anchors per segment")
      ->check(CLI::NonNegativeNumber);
  disc->add_option("--seed", seed, "augmentation seed")->default_val(7);

  CLI::App* ev = app.add_subcommand("eval", "run the benchmark for one variant");
  ev->add_option("--library", library, "skill library file")->required();
  ev->add_option("--benchmark", benchmark, "benchmark config file");
  ev->add_option("--ablation", ablation, "pipeline variant")
      ->check(CLI::IsMember(variant_names));
  ev->add_option("--rollouts", rollouts, "override rollouts per task")
      ->check(CLI::PositiveNumber);
  ev->add_option("--seed", seed, "override evaluation seed");
  ev->add_option("--out", out, "report directory")->required();
  ev->add_option("--workers", workers, "episode pool size");

  CLI::App* abl = app.add_subcommand("ablate", "run all five variants");
  abl->add_option("--demos", demos_path, "demo file")->required();
  abl->add_option("--benchmark", benchmark, "benchmark config file");
  abl->add_option("--out", out, "report directory")->required();
  abl->add_option("--workers", workers, "episode pool size");

  CLI::App* ins = app.add_subcommand("inspect", "print library statistics");
  ins->add_option("--library", library, "skill library file")->required();
  ins->add_option("--skill", skill, "only entries with this label")
      ->check(CLI::IsMember({"press", "pick", "place", "lift", "screw",
                             "pull_out", "push_back", "open", "close"}));

  CLI::App* rep = app.add_subcommand("replay", "re-execute one recorded episode");
  rep->add_option("--results", results_path, "episodes.csv from a report")
      ->required();
  rep->add_option("--episode", episode, "row index")->required();
  rep->add_option("--benchmark", benchmark, "benchmark config file");

  try {
    app.parse(argc, argv);
    if (gen->parsed())
      return cmd_gen_demos(benchmark, out, seed, gen->count("--seed") > 0);
    if (disc->parsed()) return cmd_discover(demos_path, out, anchor, augment, seed);
    if (ev->parsed())
      return cmd_eval(library, benchmark, ablation, rollouts, seed,
                      ev->count("--seed") > 0, out, workers);
    if (abl->parsed()) return cmd_ablate(demos_path, benchmark, out, workers);
    if (ins->parsed()) return cmd_inspect(library, skill);
    if (rep->parsed()) return cmd_replay(results_path, episode, benchmark);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const gsl::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
