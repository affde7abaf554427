#pragma once
// Benchmark harness: loads a benchmark directory, generates the shared demo
// set, builds one library per ablation variant, rolls out every (variant,
// task, rollout) episode, and writes the report files.  Episode seeds depend
// only on task position and rollout index, so every variant sees the same
// scenes and every rerun reproduces the same bytes.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gsl/ablation.hpp"
#include "gsl/demonstrations.hpp"
#include "gsl/executor.hpp"
#include "gsl/pool.hpp"
#include "gsl/task_config.hpp"

namespace gsl {

struct Benchmark {
  BenchmarkConfig cfg;
  std::map<std::string, TaskFamily> families;  // train + variants, by id
};

struct EvalTask {
  std::string axis;  // "train" or a split axis
  std::string id;
};

inline std::vector<EvalTask> flatten_eval_tasks(const BenchmarkConfig& cfg) {
  std::vector<EvalTask> out;
  for (const std::string& id : cfg.train) out.push_back({"train", id});
  for (const auto& [axis, ids] : cfg.splits)
    for (const std::string& id : ids) out.push_back({axis, id});
  return out;
}

inline std::uint64_t demo_seed_of(const BenchmarkConfig& cfg, int family_index,
                                  int demo_index) {
  return mix_seed(cfg.demo_seed,
                  static_cast<std::uint64_t>(family_index) * 1000 +
                      static_cast<std::uint64_t>(demo_index));
}

inline std::uint64_t episode_seed_of(const BenchmarkConfig& cfg, int task_index,
                                     int rollout) {
  return mix_seed(cfg.eval_seed, static_cast<std::uint64_t>(task_index) * 10000 +
                                     static_cast<std::uint64_t>(rollout));
}

// Leak checks: every axis must actually move away from its base family, and
// the default seed streams must never evaluate on an exact demo placement.
inline void validate_benchmark(const Benchmark& bench) {
  const BenchmarkConfig& cfg = bench.cfg;
  std::set<std::string> train_ids(cfg.train.begin(), cfg.train.end());
  if (train_ids.size() != cfg.train.size())
    throw ConfigError(cfg.source, 0, "duplicate train family");

  std::set<std::string> train_descriptions;
  for (const std::string& id : cfg.train) {
    const TaskFamily& f = bench.families.at(id);
    if (!f.base.empty() || !f.axis.empty())
      throw ConfigError(f.source, 0, "train family '" + id + "' declares base/axis");
    if (f.scale_lo != 1.0 || f.scale_hi != 1.0)
      throw ConfigError(f.source, 0, "train family '" + id + "' must use scale 1");
    train_descriptions.insert(f.description);
  }

  for (const auto& [axis, ids] : cfg.splits) {
    for (const std::string& id : ids) {
      const TaskFamily& f = bench.families.at(id);
      if (f.axis != axis)
        throw ConfigError(f.source, 0,
                          "task '" + id + "' declares axis '" + f.axis +
                              "' but is listed under '" + axis + "'");
      if (train_ids.count(f.base) == 0)
        throw ConfigError(f.source, 0,
                          "task '" + id + "' names unknown base '" + f.base + "'");
      const TaskFamily& base = bench.families.at(f.base);
      if (axis == "spatial") {
        bool x_disjoint =
            f.eval_x[1] < base.train_x[0] || f.eval_x[0] > base.train_x[1];
        bool y_disjoint =
            f.eval_y[1] < base.train_y[0] || f.eval_y[0] > base.train_y[1];
        if (!x_disjoint && !y_disjoint)
          throw ConfigError(f.source, 0,
                            "spatial task '" + id +
                                "' overlaps the training placement range");
      } else if (axis == "appearance") {
        if (f.scale_hi <= f.scale_lo)
          throw ConfigError(f.source, 0,
                            "appearance task '" + id + "' has a degenerate scale");
      } else if (axis == "distractor") {
        if (f.objects.size() <= base.objects.size())
          throw ConfigError(f.source, 0,
                            "distractor task '" + id + "' adds no objects");
      } else if (axis == "compositional") {
        if (train_descriptions.count(f.description) > 0)
          throw ConfigError(f.source, 0,
                            "compositional task '" + id +
                                "' repeats a training description");
      }
    }
  }

  // Demo placements and evaluation placements must never coincide exactly.
  std::map<std::string, std::vector<std::pair<double, double>>> demo_xy;
  for (std::size_t fi = 0; fi < cfg.train.size(); ++fi)
    for (int di = 0; di < cfg.demos_per_family; ++di) {
      SampledInstance s =
          build_task_instance(bench.families.at(cfg.train[fi]), false,
                              demo_seed_of(cfg, static_cast<int>(fi), di));
      demo_xy[cfg.train[fi]].emplace_back(s.x, s.y);
    }
  std::vector<EvalTask> tasks = flatten_eval_tasks(cfg);
  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    const TaskFamily& f = bench.families.at(tasks[ti].id);
    const std::string& lineage = f.base.empty() ? f.id : f.base;
    auto it = demo_xy.find(lineage);
    if (it == demo_xy.end()) continue;
    for (int r = 0; r < cfg.rollouts_per_task; ++r) {
      SampledInstance s = build_task_instance(
          f, true, episode_seed_of(cfg, static_cast<int>(ti), r));
      for (const auto& [dx, dy] : it->second)
        if (dx == s.x && dy == s.y)
          throw ConfigError(f.source, 0,
                            "evaluation placement of '" + f.id +
                                "' collides with a demo placement");
    }
  }
}

inline Benchmark load_benchmark(const std::string& dir,
                                const std::string& name = "benchmark_default.cfg") {
  Benchmark bench;
  bench.cfg = load_benchmark_config(dir + "/" + name);
  for (const EvalTask& t : flatten_eval_tasks(bench.cfg))
    if (bench.families.count(t.id) == 0)
      bench.families.emplace(t.id, load_task_family(dir + "/" + t.id + ".task"));
  validate_benchmark(bench);
  return bench;
}

// ---------------------------------------------------------------------------
// Episodes

struct EpisodeSpec {
  std::string variant;
  std::string axis;
  std::string task;
  int rollout = 0;
  std::uint64_t seed = 0;
};

struct EpisodeOutcome {
  EpisodeSpec spec;
  double magnitude = 0.0;  // how far along the axis this episode sits
  EpisodeResult result;
};

inline std::vector<Demo> make_demos(const Benchmark& bench, const SimConfig& cfg) {
  std::vector<Demo> demos;
  for (std::size_t fi = 0; fi < bench.cfg.train.size(); ++fi) {
    const TaskFamily& fam = bench.families.at(bench.cfg.train[fi]);
    for (int di = 0; di < bench.cfg.demos_per_family; ++di) {
      std::uint64_t seed = demo_seed_of(bench.cfg, static_cast<int>(fi), di);
      SampledInstance inst = build_task_instance(fam, false, seed);
      demos.push_back(generate_demo(inst.task, seed, cfg));
    }
  }
  return demos;
}

namespace detail {

inline double episode_magnitude(const Benchmark& bench, const TaskFamily& fam,
                                const std::string& axis,
                                const SampledInstance& inst) {
  if (axis == "spatial") {
    const TaskFamily& base = bench.families.at(fam.base);
    double cx = 0.5 * (base.train_x[0] + base.train_x[1]);
    double cy = 0.5 * (base.train_y[0] + base.train_y[1]);
    return std::hypot(inst.x - cx, inst.y - cy);
  }
  if (axis == "appearance") return std::abs(inst.scale - 1.0);
  if (axis == "distractor") {
    int n = 0;
    for (const ObjectTemplate& t : fam.objects) n += t.role == "distractor" ? 1 : 0;
    return n;
  }
  if (axis == "compositional")
    return static_cast<double>(parse_task(fam.description).steps.size());
  return 0.0;
}

}  // namespace detail

// Rolls out every evaluation task for one variant against a fixed library.
inline std::vector<EpisodeOutcome> run_variant_episodes(
    const Benchmark& bench, const SkillLibrary& lib, AblationVariant variant,
    const SimConfig& cfg, int workers = 1, const PipelineOptions& base = {}) {
  PipelineOptions pipeline = apply_ablation(variant, base);
  std::vector<EvalTask> tasks = flatten_eval_tasks(bench.cfg);
  std::vector<EpisodeSpec> specs;
  for (std::size_t ti = 0; ti < tasks.size(); ++ti)
    for (int r = 0; r < bench.cfg.rollouts_per_task; ++r)
      specs.push_back({to_string(variant), tasks[ti].axis, tasks[ti].id, r,
                       episode_seed_of(bench.cfg, static_cast<int>(ti), r)});

  return parallel_map<EpisodeOutcome>(
      static_cast<int>(specs.size()), workers, [&](int i) {
        const EpisodeSpec& spec = specs[static_cast<std::size_t>(i)];
        const TaskFamily& fam = bench.families.at(spec.task);
        SampledInstance inst = build_task_instance(fam, true, spec.seed);
        EpisodeOutcome out;
        out.spec = spec;
        out.magnitude = detail::episode_magnitude(bench, fam, spec.axis, inst);
        ExecOptions opt;
        opt.pipeline = pipeline;
        out.result = execute_task(inst.task, lib, spec.seed, cfg, opt);
        return out;
      });
}

struct BenchmarkRun {
  std::vector<AblationVariant> variants;
  std::vector<EpisodeOutcome> episodes;  // grouped by variant, in spec order
};

inline BenchmarkRun run_benchmark(const Benchmark& bench, const SimConfig& cfg,
                                  const std::vector<AblationVariant>& variants,
                                  int workers = 1, const PipelineOptions& base = {}) {
  std::vector<Demo> demos = make_demos(bench, cfg);
  BenchmarkRun run;
  run.variants = variants;
  for (AblationVariant v : variants) {
    SkillLibrary lib =
        build_library(demos, apply_ablation(v, base).discovery, cfg);
    std::vector<EpisodeOutcome> eps =
        run_variant_episodes(bench, lib, v, cfg, workers, base);
    run.episodes.insert(run.episodes.end(), eps.begin(), eps.end());
  }
  return run;
}

// ---------------------------------------------------------------------------
// Aggregation and reports

struct ResultRow {
  std::string variant;
  std::string axis;
  std::string task;
  int successes = 0;
  int rollouts = 0;
  double rate = 0.0;
};

inline std::vector<ResultRow> aggregate_results(const BenchmarkRun& run) {
  std::vector<ResultRow> rows;
  for (const EpisodeOutcome& ep : run.episodes) {
    if (rows.empty() || rows.back().variant != ep.spec.variant ||
        rows.back().task != ep.spec.task || rows.back().axis != ep.spec.axis)
      rows.push_back({ep.spec.variant, ep.spec.axis, ep.spec.task, 0, 0, 0.0});
    rows.back().rollouts += 1;
    rows.back().successes += ep.result.success ? 1 : 0;
  }
  for (ResultRow& r : rows)
    r.rate = r.rollouts > 0 ? static_cast<double>(r.successes) / r.rollouts : 0.0;
  return rows;
}

// Mean success over the test splits (everything but the train axis).
struct OrderingReport {
  bool has_all_variants = false;
  bool ordered = false;
  std::map<std::string, double> test_mean;
  double gap_regular = 0.0;   // complete - regular_skill
  double gap_no_canon = 0.0;  // complete - no_canonicalization
};

inline OrderingReport ordering_check(const std::vector<ResultRow>& rows) {
  OrderingReport rep;
  std::map<std::string, std::pair<int, int>> tally;  // variant -> (succ, n)
  for (const ResultRow& r : rows) {
    if (r.axis == "train") continue;
    auto& t = tally[r.variant];
    t.first += r.successes;
    t.second += r.rollouts;
  }
  for (const auto& [variant, t] : tally)
    rep.test_mean[variant] =
        t.second > 0 ? static_cast<double>(t.first) / t.second : 0.0;

  rep.has_all_variants = true;
  for (int vi = 0; vi < kVariantCount; ++vi)
    if (rep.test_mean.count(to_string(static_cast<AblationVariant>(vi))) == 0)
      rep.has_all_variants = false;
  if (!rep.has_all_variants) return rep;

  double complete = rep.test_mean.at("complete");
  double regular = rep.test_mean.at("regular_skill");
  double others = std::max({rep.test_mean.at("heatmap_interface"),
                            rep.test_mean.at("no_canonicalization"),
                            rep.test_mean.at("action_interface")});
  rep.ordered = complete > regular && regular > others;
  rep.gap_regular = complete - regular;
  rep.gap_no_canon = complete - rep.test_mean.at("no_canonicalization");
  return rep;
}

namespace detail {

inline std::string fmt_rate(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", r);
  return buf;
}

}  // namespace detail

inline void write_report(const BenchmarkRun& run, const Benchmark& bench,
                         const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<ResultRow> rows = aggregate_results(run);

  {
    std::ofstream out(out_dir + "/results.csv");
    out << "variant,split,task,successes,rollouts,rate\n";
    for (const ResultRow& r : rows)
      out << r.variant << ',' << r.axis << ',' << r.task << ',' << r.successes
          << ',' << r.rollouts << ',' << detail::fmt_rate(r.rate) << '\n';
  }
  {
    std::ofstream out(out_dir + "/episodes.csv");
    out << "variant,split,task,rollout,seed,magnitude,success,steps,error_kind\n";
    for (const EpisodeOutcome& ep : run.episodes)
      out << ep.spec.variant << ',' << ep.spec.axis << ',' << ep.spec.task << ','
          << ep.spec.rollout << ',' << ep.spec.seed << ','
          << detail::fmt_real(ep.magnitude) << ',' << (ep.result.success ? 1 : 0)
          << ',' << ep.result.steps_completed << ',' << ep.result.error_kind
          << '\n';
  }
  for (const auto& [axis, ids] : bench.cfg.splits) {
    std::ofstream out(out_dir + "/plot_" + axis + ".csv");
    out << "variant,task,magnitude,success\n";
    for (const EpisodeOutcome& ep : run.episodes)
      if (ep.spec.axis == axis)
        out << ep.spec.variant << ',' << ep.spec.task << ','
            << detail::fmt_real(ep.magnitude) << ','
            << (ep.result.success ? 1 : 0) << '\n';
  }
  {
    OrderingReport rep = ordering_check(rows);
    std::ofstream out(out_dir + "/summary.txt");
    out << "benchmark summary\n";
    out << "variants: " << run.variants.size() << ", episodes: "
        << run.episodes.size() << "\n\n";
    out << "mean success (train | test):\n";
    for (AblationVariant v : run.variants) {
      const std::string name = to_string(v);
      std::pair<int, int> train{0, 0}, test{0, 0};
      for (const ResultRow& r : rows) {
        if (r.variant != name) continue;
        auto& t = r.axis == "train" ? train : test;
        t.first += r.successes;
        t.second += r.rollouts;
      }
      auto mean = [](std::pair<int, int> t) {
        return t.second > 0 ? static_cast<double>(t.first) / t.second : 0.0;
      };
      out << "  " << name << ' ' << detail::fmt_rate(mean(train)) << " | "
          << detail::fmt_rate(mean(test)) << '\n';
    }
    out << "\nper-axis test means:\n";
    for (const auto& [axis, ids] : bench.cfg.splits) {
      out << "  " << axis << ':';
      for (AblationVariant v : run.variants) {
        const std::string name = to_string(v);
        std::pair<int, int> t{0, 0};
        for (const ResultRow& r : rows)
          if (r.variant == name && r.axis == axis) {
            t.first += r.successes;
            t.second += r.rollouts;
          }
        out << ' ' << name << '='
            << detail::fmt_rate(
                   t.second > 0 ? static_cast<double>(t.first) / t.second : 0.0);
      }
      out << '\n';
    }
    if (rep.has_all_variants) {
      out << "\nordering: complete > regular_skill > "
             "max(heatmap_interface, no_canonicalization, action_interface) => "
          << (rep.ordered ? "PASS" : "FAIL") << '\n';
      out << "gap complete-regular_skill: " << detail::fmt_rate(rep.gap_regular)
          << " (want >= 0.25)\n";
      out << "gap complete-no_canonicalization: "
          << detail::fmt_rate(rep.gap_no_canon) << " (want >= 0.40)\n";
    }
  }
  {
    std::ofstream out(out_dir + "/run_meta.txt");
    out << "demos_per_family " << bench.cfg.demos_per_family << '\n';
    out << "rollouts_per_task " << bench.cfg.rollouts_per_task << '\n';
    out << "demo_seed " << bench.cfg.demo_seed << '\n';
    out << "eval_seed " << bench.cfg.eval_seed << '\n';
    out << "train";
    for (const std::string& id : bench.cfg.train) out << ' ' << id;
    out << '\n';
    for (const auto& [axis, ids] : bench.cfg.splits) {
      out << "split " << axis;
      for (const std::string& id : ids) out << ' ' << id;
      out << '\n';
    }
    out << "variants";
    for (AblationVariant v : run.variants) out << ' ' << to_string(v);
    out << '\n';
  }
}

inline std::vector<ResultRow> parse_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open");
  std::string line;
  if (!std::getline(in, line) ||
      line != "variant,split,task,successes,rollouts,rate")
    throw IoError(path, "not a results file");
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f = detail::split(line, ',');
    if (f.size() != 6)
      throw IoError(path, "line " + std::to_string(lineno) + ": want 6 fields");
    ResultRow r;
    r.variant = f[0];
    r.axis = f[1];
    r.task = f[2];
    r.successes = static_cast<int>(detail::parse_int(f[3], path));
    r.rollouts = static_cast<int>(detail::parse_int(f[4], path));
    r.rate = detail::parse_real(f[5], path);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace gsl
