#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recap/dag.hpp"
#include "recap/errors.hpp"
#include "recap/store.hpp"

namespace recap {

enum class CompareResult { EQUAL, DIFFERENT, INCOMPARABLE };

inline std::string to_string(CompareResult r) {
  switch (r) {
    case CompareResult::EQUAL: return "EQUAL";
    case CompareResult::DIFFERENT: return "DIFFERENT";
    case CompareResult::INCOMPARABLE: return "INCOMPARABLE";
  }
  return "?";
}

struct ComparisonComponent {
  CompareResult result = CompareResult::EQUAL;
  std::vector<std::string> details;
};

/// Three-level reproducibility verdict: workflow structure, execution
/// infrastructure and outputs.
struct ComparisonReport {
  ComparisonComponent structure;
  ComparisonComponent infrastructure;
  ComparisonComponent outputs;

  bool reproduced() const {
    return structure.result == CompareResult::EQUAL &&
           infrastructure.result == CompareResult::EQUAL &&
           outputs.result == CompareResult::EQUAL;
  }

  nlohmann::json to_json() const {
    auto comp = [](const ComparisonComponent& c) {
      return nlohmann::json{{"result", to_string(c.result)},
                            {"details", c.details}};
    };
    return {{"structure", comp(structure)},
            {"infrastructure", comp(infrastructure)},
            {"outputs", comp(outputs)},
            {"verdict", reproduced() ? "REPRODUCED" : "NOT_REPRODUCED"}};
  }
};

/// Labeled-DAG equality: job-name sets and edge sets must match.
inline ComparisonComponent compare_structure(const std::string& dag_text_a,
                                             const std::string& dag_text_b) {
  WorkflowDAG a = parse_dag(dag_text_a);
  WorkflowDAG b = parse_dag(dag_text_b);
  ComparisonComponent out;
  std::set<std::string> names_a, names_b;
  for (const auto& j : a.jobs) names_a.insert(j.name);
  for (const auto& j : b.jobs) names_b.insert(j.name);
  if (names_a != names_b) {
    out.result = CompareResult::DIFFERENT;
    out.details.push_back("job sets differ (" + std::to_string(names_a.size()) +
                          " vs " + std::to_string(names_b.size()) + " jobs)");
  }
  std::set<std::pair<std::string, std::string>> edges_a(a.edges.begin(),
                                                        a.edges.end());
  std::set<std::pair<std::string, std::string>> edges_b(b.edges.begin(),
                                                        b.edges.end());
  if (edges_a != edges_b) {
    out.result = CompareResult::DIFFERENT;
    for (const auto& e : edges_a)
      if (!edges_b.count(e))
        out.details.push_back("edge only in first: " + e.first + "->" + e.second);
    for (const auto& e : edges_b)
      if (!edges_a.count(e))
        out.details.push_back("edge only in second: " + e.first + "->" + e.second);
  }
  return out;
}

/// Join CAP records by job name; EQUAL iff every pair matches on
/// (flavor_id, min_ram, min_hd, min_cpu, image_id). Nodenames are excluded
/// since replays rename hosts.
inline ComparisonComponent compare_infrastructure(
    const std::vector<CAPRecord>& cap_a, const std::vector<CAPRecord>& cap_b) {
  if (cap_a.empty() || cap_b.empty())
    throw IncompleteProvenance("both workflows need CAP records to compare");
  ComparisonComponent out;
  std::map<std::string, CAPRecord> by_name;
  for (const auto& r : cap_b) by_name[r.job_name] = r;
  std::set<std::string> seen;
  for (const auto& ra : cap_a) {
    auto it = by_name.find(ra.job_name);
    if (it == by_name.end()) {
      out.result = CompareResult::DIFFERENT;
      out.details.push_back("job " + ra.job_name + " has no counterpart");
      continue;
    }
    seen.insert(ra.job_name);
    if (!ra.same_resource(it->second)) {
      out.result = CompareResult::DIFFERENT;
      std::ostringstream d;
      d << "job " << ra.job_name << ": flavor " << ra.flavor_id << "/"
        << ra.min_ram_mb << "/" << ra.min_hd_gb << "/" << ra.min_cpu
        << " image " << ra.image_id << " vs flavor " << it->second.flavor_id
        << "/" << it->second.min_ram_mb << "/" << it->second.min_hd_gb << "/"
        << it->second.min_cpu << " image " << it->second.image_id;
      out.details.push_back(d.str());
    }
  }
  for (const auto& rb : cap_b)
    if (!seen.count(rb.job_name)) {
      out.result = CompareResult::DIFFERENT;
      out.details.push_back("job " + rb.job_name + " only in second workflow");
    }
  return out;
}

/// Pair declared outputs by (job_name, basename of keyname) and compare
/// MD5s; a missing counterpart makes the component INCOMPARABLE.
inline ComparisonComponent compare_outputs(
    const std::vector<std::pair<JobCloudFile, CloudFileRow>>& files_a,
    const std::vector<std::pair<JobCloudFile, CloudFileRow>>& files_b) {
  auto index = [](const std::vector<std::pair<JobCloudFile, CloudFileRow>>& fs) {
    std::map<std::pair<std::string, std::string>, std::string> out;
    for (const auto& [jf, cf] : fs) {
      std::string base = jf.keyname.substr(jf.keyname.find_last_of('/') + 1);
      out[{jf.job_name, base}] = cf.md5;
    }
    return out;
  };
  auto ia = index(files_a), ib = index(files_b);
  ComparisonComponent out;
  bool missing = false, differs = false;
  for (const auto& [key, md5] : ia) {
    auto it = ib.find(key);
    if (it == ib.end()) {
      missing = true;
      out.details.push_back("no counterpart for " + key.first + ":" + key.second);
    } else if (it->second != md5) {
      differs = true;
      out.details.push_back("md5 differs for " + key.first + ":" + key.second +
                            " (" + md5 + " vs " + it->second + ")");
    }
  }
  for (const auto& [key, md5] : ib)
    if (!ia.count(key)) {
      missing = true;
      out.details.push_back("no counterpart for " + key.first + ":" + key.second);
    }
  out.result = missing ? CompareResult::INCOMPARABLE
             : differs ? CompareResult::DIFFERENT
                       : CompareResult::EQUAL;
  return out;
}

/// Full three-level comparison of two stored workflows.
inline ComparisonReport compare_workflows(const Store& store, long wf_a, long wf_b) {
  ComparisonReport rep;
  WorkflowSource a = store.get_source(wf_a);
  WorkflowSource b = store.get_source(wf_b);
  rep.structure = compare_structure(a.wf_dag, b.wf_dag);
  rep.infrastructure = compare_infrastructure(store.get_cap(wf_a),
                                              store.get_cap(wf_b));
  rep.outputs = compare_outputs(store.get_job_files(wf_a),
                                store.get_job_files(wf_b));
  return rep;
}

}  // namespace recap
