#pragma once

#include <random>
#include <string>

#include "recap/cloud.hpp"
#include "recap/dag.hpp"
#include "recap/system.hpp"

namespace testutil {

inline recap::CloudScenario fixed_scenario(long mips = 12500) {
  recap::CloudScenario sc;
  sc.mips.mode = recap::MipsModel::Mode::FIXED;
  sc.mips.fixed_mips = mips;
  sc.flavors = recap::CloudScenario::default_flavors();
  sc.images.push_back({"img-default", "default-image", {}});
  sc.mips.reseed();
  return sc;
}

inline recap::CloudScenario dynamic_scenario(long mips = 12500) {
  recap::CloudScenario sc = fixed_scenario(mips);
  sc.lifecycle = recap::Lifecycle::DYNAMIC;
  return sc;
}

/// Diamond workflow writing real files: split fans out to two counters
/// which merge. Compute mode.
inline recap::SubmitFiles wordcount_compute(const std::string& c = "data",
                                            int par = 1) {
  std::string p = par > 1 ? " par=" + std::to_string(par) : "";
  recap::SubmitFiles f;
  f.dag = "job split mi=120000" + p + " in=" + c + ":input/book.txt out=" + c +
          ":work/part1 out=" + c + ":work/part2\n"
          "job count1 mi=120000" + p + " in=" + c + ":work/part1 out=" + c +
          ":work/count1\n"
          "job count2 mi=60000" + p + " in=" + c + ":work/part2 out=" + c +
          ":work/count2\n"
          "job merge mi=60000" + p + " in=" + c + ":work/count1 in=" + c +
          ":work/count2 out=" + c + ":out/total\n"
          "edge split count1\nedge split count2\n"
          "edge count1 merge\nedge count2 merge\n";
  f.site = "[site]\ncontainer=" + c + "\n";
  f.tc = "wordcount: split count1 count2 merge\n";
  f.props = "run=test\n";
  return f;
}

/// Same shape in sleep mode: 120/120/60/60 seconds.
inline recap::SubmitFiles wordcount_sleep(const std::string& c = "data") {
  recap::SubmitFiles f;
  f.dag = "job split sleep=120 in=" + c + ":input/book.txt out=" + c +
          ":work/part1 out=" + c + ":work/part2\n"
          "job count1 sleep=120 in=" + c + ":work/part1 out=" + c +
          ":work/count1\n"
          "job count2 sleep=60 in=" + c + ":work/part2 out=" + c +
          ":work/count2\n"
          "job merge sleep=60 in=" + c + ":work/count1 in=" + c +
          ":work/count2 out=" + c + ":out/total\n"
          "edge split count1\nedge split count2\n"
          "edge count1 merge\nedge count2 merge\n";
  f.site = "[site]\ncontainer=" + c + "\n";
  f.tc = "wordcount: split count1 count2 merge\n";
  f.props = "run=test\n";
  return f;
}

/// Seeded random DAG of sleep jobs (no files), edges only forward.
inline recap::WorkflowDAG random_dag(std::uint32_t seed, int max_jobs = 35) {
  std::mt19937 rng(seed);
  int n = 1 + int(rng() % std::uint32_t(max_jobs));
  recap::WorkflowDAG dag;
  std::uniform_real_distribution<double> dur(0.5, 3.0);
  for (int i = 0; i < n; ++i) {
    recap::JobSpec j;
    j.name = "j" + std::to_string(i);
    j.fixed_duration_s = dur(rng);
    dag.jobs.push_back(j);
  }
  std::uniform_real_distribution<double> p(0.0, 1.0);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      if (p(rng) < 0.15) dag.edges.emplace_back("j" + std::to_string(a),
                                                "j" + std::to_string(b));
  return dag;
}

}  // namespace testutil
