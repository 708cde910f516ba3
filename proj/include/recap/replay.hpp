#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "recap/dag.hpp"
#include "recap/errors.hpp"
#include "recap/store.hpp"
#include "recap/system.hpp"

namespace recap {

struct ResourceRequest {
  std::string nodename;  // original nodename + "-rep"
  int flavor_id = 0;
  std::string flavor_name;
  std::string image_id;
  std::string image_name;
};

struct ReplayPlan {
  long source_wf_id = 0;
  std::vector<ResourceRequest> requests;  // one per distinct original VM
  WorkflowDAG dag;
  SubmitFiles files;
};

struct ReplayOptions {
  /// Manual flavor substitution, for degraded/upgraded-resource runs.
  std::optional<std::string> flavor_override;
  /// Replacement bytes for primary inputs, keyed "container:keyname";
  /// inputs not listed are reused from the original object store.
  std::map<std::string, std::string> input_override;
};

/// Group the captured CAP records by nodename into unique re-provisioning
/// requests. Requires complete provenance for every DAG job.
inline ReplayPlan build_plan(const Store& store, long wf_id) {
  WorkflowSource src = store.get_source(wf_id);
  ReplayPlan plan;
  plan.source_wf_id = wf_id;
  plan.dag = parse_dag(src.wf_dag);
  plan.files = {src.wf_dag, src.wf_site, src.wf_tc, src.wf_props};

  auto caps = store.get_cap(wf_id);
  std::set<std::string> mapped;
  for (const auto& c : caps) mapped.insert(c.job_name);
  for (const auto& j : plan.dag.jobs)
    if (!mapped.count(j.name))
      throw IncompleteProvenance("job " + j.name + " has no CAP record");

  std::map<std::string, ResourceRequest> by_node;
  for (const auto& c : caps)
    by_node.emplace(c.nodename,
                    ResourceRequest{c.nodename + "-rep", c.flavor_id,
                                    c.flavor_name, c.image_id, c.image_name});
  for (const auto& [node, req] : by_node) plan.requests.push_back(req);
  return plan;
}

/// Rewrite every container reference so the replay writes into its own
/// prefix; output pairing in the comparator is by basename, not container.
inline WorkflowDAG remap_containers(const WorkflowDAG& dag,
                                    const std::string& suffix) {
  WorkflowDAG out = dag;
  for (auto& j : out.jobs) {
    for (auto& i : j.inputs) i.container += suffix;
    for (auto& o : j.outputs) o.container += suffix;
  }
  return out;
}

/// Re-provision the captured infrastructure, re-execute the stored DAG and
/// capture the replay's own provenance. Requests resolve by image_id;
/// catalog drift surfaces as UnknownFlavor/UnknownImage.
inline SubmitResult execute_replay(RecapSystem& sys, const ReplayPlan& plan,
                                   const ReplayOptions& opts = {}) {
  Cloud& cloud = sys.cloud();
  std::vector<VirtualMachine> provisioned;
  for (const auto& req : plan.requests) {
    const Flavor& flavor = opts.flavor_override
                               ? cloud.flavor_by_name(*opts.flavor_override)
                               : cloud.flavor_by_id(req.flavor_id);
    const MachineImage& image = cloud.image_by_id(req.image_id);
    provisioned.push_back(cloud.provision(flavor.name, image.name, req.nodename));
  }

  std::string suffix = "-rep" + std::to_string(sys.store().max_wms_counter() + 1);
  WorkflowDAG replay_dag = remap_containers(plan.dag, suffix);

  // Stage primary inputs into the replay containers; by default the
  // original bytes are reused.
  for (const auto& in : plan.dag.primary_inputs()) {
    std::string key = in.container + ":" + in.keyname;
    auto it = opts.input_override.find(key);
    std::string bytes = it != opts.input_override.end()
                            ? it->second
                            : cloud.storage().get(in.container, in.keyname).first;
    cloud.storage().put(in.container + suffix, in.keyname, bytes);
  }

  SubmitFiles files{dag_to_text(replay_dag), plan.files.site, plan.files.tc,
                    plan.files.props};
  SubmitResult res = sys.submit(files);
  sys.run_to_completion(res.wms_wfid);
  sys.aggregate(res.wf_id);
  return res;
}

/// CLI `reproduce` entry point.
inline SubmitResult reproduce(RecapSystem& sys, long wf_id,
                              const ReplayOptions& opts = {}) {
  return execute_replay(sys, build_plan(sys.store(), wf_id), opts);
}

}  // namespace recap
