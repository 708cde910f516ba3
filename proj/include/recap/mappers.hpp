#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "recap/cloud.hpp"
#include "recap/errors.hpp"
#include "recap/store.hpp"
#include "recap/wms.hpp"

namespace recap {

enum class MappingStrategyKind { STATIC, EAGER, LAZY, SNOHI };

inline MappingStrategyKind parse_strategy(const std::string& s) {
  if (s == "static") return MappingStrategyKind::STATIC;
  if (s == "eager") return MappingStrategyKind::EAGER;
  if (s == "lazy") return MappingStrategyKind::LAZY;
  if (s == "snohi") return MappingStrategyKind::SNOHI;
  throw ConfigError("unknown MAPPING_TYPE '" + s + "'");
}

inline std::string to_string(MappingStrategyKind k) {
  switch (k) {
    case MappingStrategyKind::STATIC: return "static";
    case MappingStrategyKind::EAGER: return "eager";
    case MappingStrategyKind::LAZY: return "lazy";
    case MappingStrategyKind::SNOHI: return "snohi";
  }
  return "?";
}

enum class UnmappedReason { NO_HOST_INFO, VM_GONE, NO_OBSERVATION };

inline std::string to_string(UnmappedReason r) {
  switch (r) {
    case UnmappedReason::NO_HOST_INFO: return "NO_HOST_INFO";
    case UnmappedReason::VM_GONE: return "VM_GONE";
    case UnmappedReason::NO_OBSERVATION: return "NO_OBSERVATION";
  }
  return "?";
}

struct MappingOutcome {
  std::vector<CAPRecord> mapped;
  std::vector<std::pair<std::string, UnmappedReason>> unmapped;

  std::size_t total() const { return mapped.size() + unmapped.size(); }
};

inline CAPRecord cap_from_vm(long wf_id, const std::string& job_name,
                             const VirtualMachine& vm) {
  return {wf_id,
          job_name,
          vm.nodename,
          vm.flavor.flavor_id,
          vm.flavor.name,
          vm.flavor.ram_mb,
          vm.flavor.disk_gb,
          vm.flavor.vcpus,
          vm.image.name,
          vm.image.image_id,
          vm.extra_json()};
}

// ---------------------------------------------------------------------------
// Static approach: join finished jobs to the live VM snapshot by IP.

inline MappingOutcome static_map(long wf_id, const std::vector<JobRecord>& wf_jobs,
                                 const std::vector<VirtualMachine>& vm_list) {
  MappingOutcome out;
  for (const auto& job : wf_jobs) {
    if (!job.host_ip) {
      out.unmapped.emplace_back(job.name, UnmappedReason::NO_HOST_INFO);
      continue;
    }
    const VirtualMachine* hit = nullptr;
    for (const auto& vm : vm_list)
      if (vm.ip == *job.host_ip) hit = &vm;
    if (hit)
      out.mapped.push_back(cap_from_vm(wf_id, job.name, *hit));
    else
      out.unmapped.emplace_back(job.name, UnmappedReason::VM_GONE);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Eager approach: temporary mappings recorded while jobs run (phase 1),
// promoted at finalize (phase 2).

class EagerMonitor {
 public:
  EagerMonitor(Store& store, Wms& wms, Cloud& cloud, long wf_id,
               std::string wms_wfid)
      : store_(store), wms_(wms), cloud_(cloud), wf_id_(wf_id),
        wms_wfid_(std::move(wms_wfid)) {}

  /// Phase 1: resolve each RUNNING job's host via the live Condor view and
  /// upsert the temporary mapping. Lookup misses are skipped this tick.
  void tick(double now) {
    for (const auto& job : wms_.get_job_records(wms_wfid_)) {
      if (job.state != JobState::RUNNING || job.condor_id < 0) continue;
      std::string ip;
      try {
        ip = wms_.condor_lookup(job.condor_id).host_ip;
      } catch (const NotRunning&) {
        continue;
      }
      auto vm = cloud_.find_running_by_ip(ip);
      if (!vm) continue;
      auto existing = store_.peek_temp_mapping(wf_id_, job.name);
      if (existing && existing->vm_id == vm->vm_id) continue;  // vmMappingExists
      TempMapping t;
      t.cap = cap_from_vm(wf_id_, job.name, *vm);
      t.vm_id = vm->vm_id;
      t.capture_time = now;
      store_.upsert_temp_mapping(t);
    }
  }

  /// Phase 2: per job, prefer the live VM matching the recorded host IP,
  /// fall back to the temporary mapping; consumed temp rows are deleted.
  MappingOutcome finalize(const std::vector<JobRecord>& wf_jobs) {
    MappingOutcome out;
    auto vm_list = cloud_.list_vms();
    for (const auto& job : wf_jobs) {
      std::optional<CAPRecord> cap;
      if (job.host_ip) {
        for (const auto& vm : vm_list)
          if (vm.ip == *job.host_ip) cap = cap_from_vm(wf_id_, job.name, vm);
      }
      auto temp = store_.take_temp_mapping(wf_id_, job.name);
      if (!cap && temp) cap = temp->cap;
      if (cap)
        out.mapped.push_back(*cap);
      else
        out.unmapped.emplace_back(job.name, UnmappedReason::NO_HOST_INFO);
    }
    return out;
  }

 private:
  Store& store_;
  Wms& wms_;
  Cloud& cloud_;
  long wf_id_;
  std::string wms_wfid_;
};

// ---------------------------------------------------------------------------
// Lazy approach: periodic VM observations, joined to jobs at finalize by
// (ip, nearest created_at to the job's start time).

class LazyMonitor {
 public:
  LazyMonitor(Store& store, Cloud& cloud) : store_(store), cloud_(cloud) {}

  void tick(double now) {
    for (const auto& vm : cloud_.list_vms()) {
      LazyVmObservation o{vm.vm_id,
                          vm.ip,
                          vm.nodename,
                          vm.flavor.flavor_id,
                          vm.flavor.name,
                          vm.flavor.ram_mb,
                          vm.flavor.disk_gb,
                          vm.flavor.vcpus,
                          vm.image.name,
                          vm.image.image_id,
                          vm.created_at,
                          now,
                          now};
      store_.record_vm_observation(o);  // upsert keyed on (vm_id, created_at)
    }
  }

  MappingOutcome finalize(long wf_id, const std::vector<JobRecord>& wf_jobs) {
    MappingOutcome out;
    for (const auto& job : wf_jobs) {
      if (!job.host_ip) {
        out.unmapped.emplace_back(job.name, UnmappedReason::NO_HOST_INFO);
        continue;
      }
      auto obs = store_.find_vm_by_ip_near(*job.host_ip, job.start_time);
      if (!obs) {
        out.unmapped.emplace_back(job.name, UnmappedReason::NO_OBSERVATION);
        continue;
      }
      out.mapped.push_back({wf_id, job.name, obs->nodename, obs->flavor_id,
                            obs->flavor_name, obs->min_ram_mb, obs->min_hd_gb,
                            obs->min_cpu, obs->image_name, obs->image_id, "{}"});
    }
    return out;
  }

 private:
  Store& store_;
  Cloud& cloud_;
};

// ---------------------------------------------------------------------------
// SNoHi approach: host info scraped from instrumented job logs.

struct SnohiParseIssue {
  std::string job_name;
  std::string message;
};

/// Extract `RECAP_HOST ip=... hostname=...` lines from job stdout into the
/// JobHostTempMap table. A present-but-unparseable line is reported and the
/// job is left without a host row.
inline std::vector<SnohiParseIssue> snohi_parse_logs(
    Store& store, long wf_id, const std::vector<JobRecord>& wf_jobs) {
  std::vector<SnohiParseIssue> issues;
  for (const auto& job : wf_jobs) {
    std::istringstream in(job.stdout_log);
    std::string line;
    while (std::getline(in, line)) {
      if (line.rfind("RECAP_HOST", 0) != 0) continue;
      std::istringstream tok(line);
      std::string tag, ipf, hostf;
      tok >> tag >> ipf >> hostf;
      if (ipf.rfind("ip=", 0) != 0 || hostf.rfind("hostname=", 0) != 0 ||
          ipf.size() <= 3 || hostf.size() <= 9) {
        issues.push_back({job.name, "malformed host line: " + line});
        break;
      }
      store.upsert_job_host(
          {wf_id, job.name, ipf.substr(3), hostf.substr(9)});
      break;
    }
  }
  return issues;
}

/// Join JobHostTempMap rows with the VM snapshot by IP. When no RUNNING VM
/// holds the IP (the VM was torn down with its job), fall back to the VM
/// history matching both the IP and the logged hostname, newest first; the
/// logged name disambiguates recycled IPs. Consumed temp rows are deleted.
inline MappingOutcome snohi_finalize(Store& store, Cloud& cloud, long wf_id,
                                     const std::vector<JobRecord>& wf_jobs) {
  MappingOutcome out;
  auto vm_list = cloud.list_vms();
  auto all_vms = cloud.list_all_vms();
  for (const auto& job : wf_jobs) {
    auto host = store.get_job_host(wf_id, job.name);
    if (!host) {
      out.unmapped.emplace_back(job.name, UnmappedReason::NO_HOST_INFO);
      continue;
    }
    const VirtualMachine* hit = nullptr;
    for (const auto& vm : vm_list)
      if (vm.ip == host->host_ip) hit = &vm;
    if (!hit)
      for (const auto& vm : all_vms)
        if (vm.ip == host->host_ip && vm.nodename == host->hostname) hit = &vm;
    if (hit) {
      out.mapped.push_back(cap_from_vm(wf_id, job.name, *hit));
      store.delete_job_host(wf_id, job.name);
    } else {
      out.unmapped.emplace_back(job.name, UnmappedReason::VM_GONE);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Provenance Aggregator: dispatch to the configured strategy and persist
// CAP records, CPU specs and file links.

struct AggregateContext {
  Store& store;
  Wms& wms;
  Cloud& cloud;
  EagerMonitor* eager = nullptr;  // required for EAGER
};

inline MappingOutcome aggregate(AggregateContext ctx, long wf_id,
                                MappingStrategyKind strategy) {
  WorkflowSource src = ctx.store.get_source(wf_id);
  if (ctx.wms.get_workflow_state(src.wms_wfid) == WorkflowState::RUNNING)
    throw WorkflowStillRunning("workflow " + src.wms_wfid + " still running");
  auto records = ctx.wms.get_job_records(src.wms_wfid);

  MappingOutcome out;
  switch (strategy) {
    case MappingStrategyKind::STATIC:
      out = static_map(wf_id, records, ctx.cloud.list_vms());
      break;
    case MappingStrategyKind::EAGER:
      if (!ctx.eager) throw Error("eager strategy requires a running monitor");
      out = ctx.eager->finalize(records);
      break;
    case MappingStrategyKind::LAZY: {
      LazyMonitor lazy(ctx.store, ctx.cloud);
      out = lazy.finalize(wf_id, records);
      break;
    }
    case MappingStrategyKind::SNOHI: {
      snohi_parse_logs(ctx.store, wf_id, records);
      out = snohi_finalize(ctx.store, ctx.cloud, wf_id, records);
      break;
    }
  }

  auto mips = ctx.wms.pool_mips();
  const WorkflowDAG& dag = ctx.wms.dag_of(src.wms_wfid);
  for (const auto& cap : out.mapped) {
    if (ctx.store.cap_exists(wf_id, cap.job_name)) continue;  // idempotent rerun
    ctx.store.insert_cap_record(cap);
    auto mi = mips.find(cap.nodename);
    if (mi != mips.end())
      ctx.store.insert_cpu_spec(
          {wf_id, cap.job_name, "x86_64", "Linux", mi->second.first,
           mi->second.second});
    if (const JobSpec* spec = dag.find(cap.job_name)) {
      for (const auto& o : spec->outputs) {
        for (const auto& rec : ctx.cloud.storage().list(o.container, o.keyname)) {
          if (rec.keyname != o.keyname) continue;
          nlohmann::json meta = nlohmann::json::object();
          for (const auto& [k, v] : rec.metadata) meta[k] = v;
          ctx.store.upsert_file_catalog({rec.container, rec.keyname, rec.md5,
                                         meta.dump(), rec.created, rec.modified});
          ctx.store.link_job_file({wf_id, cap.job_name, o.container, o.keyname});
        }
      }
    }
  }
  return out;
}

}  // namespace recap
