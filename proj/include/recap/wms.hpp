#pragma once

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "recap/cloud.hpp"
#include "recap/dag.hpp"
#include "recap/digest.hpp"
#include "recap/engine.hpp"
#include "recap/errors.hpp"

namespace recap {

enum class HostInfoProfile { FULL, NO_HOST_INFO, VOLATILE };
enum class JobState { QUEUED, RUNNING, SUCCEEDED, FAILED };
enum class WorkflowState { RUNNING, DONE, FAILED };

inline std::string to_string(JobState s) {
  switch (s) {
    case JobState::QUEUED: return "QUEUED";
    case JobState::RUNNING: return "RUNNING";
    case JobState::SUCCEEDED: return "SUCCEEDED";
    case JobState::FAILED: return "FAILED";
  }
  return "?";
}

inline std::string to_string(WorkflowState s) {
  switch (s) {
    case WorkflowState::RUNNING: return "RUNNING";
    case WorkflowState::DONE: return "DONE";
    case WorkflowState::FAILED: return "FAILED";
  }
  return "?";
}

/// WMS-side execution provenance for one job.
struct JobRecord {
  int job_id = 0;
  std::string wms_wfid;
  std::string name;
  long condor_id = -1;
  JobState state = JobState::QUEUED;
  std::optional<std::string> host_ip;
  double start_time = 0.0;
  double end_time = 0.0;
  std::string stdout_log;
  std::string stderr_log;
};

struct WmsRunResult {
  std::string wms_wfid;
  double makespan_s = 0.0;
  std::vector<JobRecord> job_records;
  std::string submit_output;
};

/// Site file stand-in: storage container, provenance profile and the
/// execution-model knobs.
struct SiteConfig {
  std::string container = "data";
  HostInfoProfile profile = HostInfoProfile::FULL;
  double os_overhead_mb = 64.0;
  double dispatch_latency_s = 0.0;
  double instr_delay_s = 0.0418;
  std::string dynamic_flavor = "m1.small";  // flavor name or "random"
  std::string dynamic_image;                // defaults to first catalog image
  std::uint32_t seed = 1;

  static SiteConfig parse(const IniFile& ini) {
    SiteConfig sc;
    sc.container = ini.get_or("site", "container", sc.container);
    std::string p = ini.get_or("site", "profile", "full");
    if (p == "full") sc.profile = HostInfoProfile::FULL;
    else if (p == "no_host_info") sc.profile = HostInfoProfile::NO_HOST_INFO;
    else if (p == "volatile") sc.profile = HostInfoProfile::VOLATILE;
    else throw ConfigError("unknown profile " + p);
    sc.os_overhead_mb = ini.get_double("site", "os_overhead_mb", sc.os_overhead_mb);
    sc.dispatch_latency_s =
        ini.get_double("site", "dispatch_latency_s", sc.dispatch_latency_s);
    sc.instr_delay_s = ini.get_double("site", "instr_delay_s", sc.instr_delay_s);
    sc.dynamic_flavor = ini.get_or("site", "dynamic_flavor", sc.dynamic_flavor);
    sc.dynamic_image = ini.get_or("site", "dynamic_image", sc.dynamic_image);
    sc.seed = std::uint32_t(ini.get_int("site", "seed", sc.seed));
    return sc;
  }

  static SiteConfig parse_text(const std::string& text) {
    return parse(IniFile::parse(text));
  }
};

/// RAM admission predicate: a job fits on a flavor iff its requirement
/// leaves room for the OS share of the VM's memory.
inline bool job_fits_ram(int ram_req_mb, int flavor_ram_mb, double os_overhead_mb) {
  return double(ram_req_mb) <= double(flavor_ram_mb) - os_overhead_mb;
}

/// Job duration model: fixed sleep, or length over effective throughput.
inline double job_duration(const JobSpec& job, const VirtualMachine& vm) {
  if (job.fixed_duration_s) return *job.fixed_duration_s;
  int cores = std::min(job.max_parallelism, vm.flavor.vcpus);
  return *job.length_mi / (double(vm.cpu_spec.mips) * double(cores));
}

/// Simulated workflow management system: plans a DAG, schedules jobs onto
/// the VM pool (greedy earliest-available VM, nodename tie-break), executes
/// them under the MIPS/RAM cost model and records WMS-side provenance.
class Wms {
 public:
  Wms(SimEngine& engine, Cloud& cloud) : engine_(engine), cloud_(cloud) {}

  void set_wfid_base(long base) { wf_counter_ = base; }

  std::string plan_and_submit(const WorkflowDAG& dag, const SiteConfig& site,
                              bool instrumented = false) {
    std::vector<std::string> topo = dag.validate();
    if (!dag.jobs.empty() && cloud_.lifecycle() == Lifecycle::STATIC &&
        cloud_.list_vms().empty())
      throw NoResources("no RUNNING VMs and lifecycle is static");

    std::string wfid = "wms-" + std::to_string(++wf_counter_);
    Workflow& wf = workflows_[wfid];
    wf.wms_wfid = wfid;
    wf.dag = dag;
    wf.site = site;
    wf.instrumented = instrumented;
    wf.rng.seed(site.seed);

    std::ostringstream plan;
    plan << "plan: workflow " << wfid << " with " << dag.jobs.size() << " jobs\n";
    int id = 0;
    for (const auto& j : dag.jobs) {
      JobRecord rec;
      rec.job_id = ++id;
      rec.wms_wfid = wfid;
      rec.name = j.name;
      wf.records[j.name] = rec;
      wf.pending[j.name] = int(dag.parents_of(j.name).size());
      plan << "plan: job " << j.name << "\n";
    }
    wf.submit_output = plan.str();
    for (const auto& name : topo)
      if (wf.pending[name] == 0) wf.ready.push_back(name);

    if (dag.jobs.empty()) {
      finish_workflow(wf);
    } else {
      engine_.schedule_in(0.0, [this, wfid]() { dispatch(wfid); });
    }
    return wfid;
  }

  WorkflowState get_workflow_state(const std::string& wfid) const {
    return find(wfid).state;
  }

  std::vector<JobRecord> get_job_records(const std::string& wfid) const {
    const Workflow& wf = find(wfid);
    std::vector<JobRecord> out;
    for (const auto& j : wf.dag.jobs) out.push_back(wf.records.at(j.name));
    return out;
  }

  WmsRunResult get_result(const std::string& wfid) const {
    const Workflow& wf = find(wfid);
    if (wf.state == WorkflowState::RUNNING)
      throw WorkflowStillRunning("workflow " + wfid + " still running");
    WmsRunResult res;
    res.wms_wfid = wfid;
    res.makespan_s = wf.makespan;
    res.job_records = get_job_records(wfid);
    res.submit_output = wf.submit_output;
    return res;
  }

  const WorkflowDAG& dag_of(const std::string& wfid) const { return find(wfid).dag; }
  const SiteConfig& site_of(const std::string& wfid) const { return find(wfid).site; }
  bool instrumented(const std::string& wfid) const { return find(wfid).instrumented; }

  /// Live Condor view: host of a currently RUNNING job, regardless of the
  /// WMS provenance profile.
  struct CondorInfo {
    std::string host_ip;
    std::string state;
  };
  CondorInfo condor_lookup(long condor_id) const {
    for (const auto& [wfid, wf] : workflows_)
      for (const auto& [name, run] : wf.running)
        if (run.condor_id == condor_id) return {run.ip, "RUNNING"};
    throw NotRunning("condor id " + std::to_string(condor_id) + " not running");
  }

  /// Benchmark view of the pool: one entry per RUNNING VM.
  std::map<std::string, std::pair<long, long>> pool_mips() const {
    std::map<std::string, std::pair<long, long>> out;
    for (const auto& vm : cloud_.list_vms())
      out[vm.nodename] = {vm.cpu_spec.mips, vm.cpu_spec.kflops};
    return out;
  }

  void on_workflow_done(const std::string& wfid, std::function<void()> cb) {
    Workflow& wf = workflows_.at(wfid);
    if (wf.state != WorkflowState::RUNNING) cb();
    else wf.callbacks.push_back(std::move(cb));
  }

  /// Drive the engine until this workflow settles.
  void run_to_completion(const std::string& wfid) {
    engine_.run_while([this, &wfid]() {
      return find(wfid).state == WorkflowState::RUNNING;
    });
    if (find(wfid).state == WorkflowState::RUNNING)
      throw Error("event queue drained with workflow " + wfid + " still running");
  }

  /// One-shot execution of a job on a given VM, outside any workflow.
  JobRecord execute_job(const JobSpec& job, const VirtualMachine& vm,
                        const SiteConfig& site, bool instrumented = false) {
    if (!cloud_.is_running(vm.vm_id))
      throw VmNotRunning("VM " + vm.vm_id + " is not RUNNING");
    JobRecord rec;
    rec.job_id = 1;
    rec.name = job.name;
    rec.condor_id = ++condor_counter_;
    rec.start_time = engine_.now();
    if (!job_fits_ram(job.ram_req_mb, vm.flavor.ram_mb, site.os_overhead_mb)) {
      rec.state = JobState::FAILED;
      rec.end_time = rec.start_time;
      rec.stderr_log = "job exceeds available RAM on flavor " + vm.flavor.name + "\n";
      return rec;
    }
    double dur = job_duration(job, vm);
    if (instrumented) dur += site.instr_delay_s;
    rec.end_time = rec.start_time + dur;
    rec.state = JobState::SUCCEEDED;
    rec.stdout_log = run_kernel(job, vm, instrumented, rec.stderr_log);
    if (!rec.stderr_log.empty()) {
      rec.state = JobState::FAILED;
      rec.stdout_log.clear();
    }
    if (site.profile != HostInfoProfile::NO_HOST_INFO &&
        rec.state == JobState::SUCCEEDED)
      rec.host_ip = vm.ip;
    return rec;
  }

 private:
  struct RunningInfo {
    std::string vm_id;
    std::string ip;
    std::string nodename;
    long condor_id = -1;
  };

  struct Workflow {
    std::string wms_wfid;
    WorkflowDAG dag;
    SiteConfig site;
    bool instrumented = false;
    std::map<std::string, JobRecord> records;
    std::map<std::string, int> pending;
    std::deque<std::string> ready;
    std::map<std::string, RunningInfo> running;
    std::map<std::string, std::set<std::string>> attempted;  // job -> vm_ids
    std::set<std::string> unreachable;
    WorkflowState state = WorkflowState::RUNNING;
    double makespan = 0.0;
    std::string submit_output;
    std::vector<std::function<void()>> callbacks;
    std::mt19937 rng;
    int dyn_counter = 0;
  };

  const Workflow& find(const std::string& wfid) const {
    auto it = workflows_.find(wfid);
    if (it == workflows_.end()) throw UnknownWorkflow("no workflow " + wfid);
    return it->second;
  }

  bool vm_busy(const std::string& vm_id) const { return busy_.count(vm_id) > 0; }

  std::optional<VirtualMachine> pick_vm(Workflow& wf, const std::string& job_name) {
    const auto& excluded = wf.attempted[job_name];
    if (cloud_.lifecycle() == Lifecycle::DYNAMIC) {
      std::string flavor = wf.site.dynamic_flavor;
      if (flavor == "random") {
        const auto& flavors = cloud_.flavors();
        std::uniform_int_distribution<std::size_t> dist(0, flavors.size() - 1);
        flavor = flavors[dist(wf.rng)].name;
      }
      std::string image = wf.site.dynamic_image.empty()
                              ? cloud_.scenario().images.front().name
                              : wf.site.dynamic_image;
      std::string node = wf.wms_wfid + "-dyn-" + std::to_string(++wf.dyn_counter);
      return cloud_.provision(flavor, image, node);
    }
    std::vector<VirtualMachine> candidates;
    for (const auto& vm : cloud_.list_vms())
      if (!vm_busy(vm.vm_id) && !excluded.count(vm.vm_id)) candidates.push_back(vm);
    if (candidates.empty()) return std::nullopt;
    std::sort(candidates.begin(), candidates.end(),
              [](const VirtualMachine& a, const VirtualMachine& b) {
                return a.nodename < b.nodename;
              });
    return candidates.front();
  }

  void dispatch(const std::string& wfid) {
    auto it = workflows_.find(wfid);
    if (it == workflows_.end()) return;
    Workflow& wf = it->second;
    if (wf.state != WorkflowState::RUNNING) return;
    std::deque<std::string> waiting;
    while (!wf.ready.empty()) {
      std::string name = wf.ready.front();
      wf.ready.pop_front();
      auto vm = pick_vm(wf, name);
      if (!vm) {
        waiting.push_back(name);
        continue;
      }
      start_job(wf, name, *vm);
    }
    wf.ready = std::move(waiting);
    check_completion(wf);
  }

  void start_job(Workflow& wf, const std::string& name, const VirtualMachine& vm) {
    busy_.insert(vm.vm_id);
    const JobSpec& spec = *wf.dag.find(name);
    JobRecord& rec = wf.records[name];
    rec.state = JobState::RUNNING;
    rec.condor_id = ++condor_counter_;
    rec.start_time = engine_.now() + wf.site.dispatch_latency_s;
    wf.attempted[name].insert(vm.vm_id);
    wf.running[name] = {vm.vm_id, vm.ip, vm.nodename, rec.condor_id};

    std::string wfid = wf.wms_wfid;
    if (!job_fits_ram(spec.ram_req_mb, vm.flavor.ram_mb, wf.site.os_overhead_mb)) {
      // Instant admission failure: never observed running on Condor.
      engine_.schedule_at(rec.start_time,
                          [this, wfid, name]() { finish_job(wfid, name, false); });
      return;
    }
    double dur = job_duration(spec, vm);
    if (wf.instrumented) dur += wf.site.instr_delay_s;
    engine_.schedule_at(rec.start_time + dur,
                        [this, wfid, name]() { finish_job(wfid, name, true); });
  }

  void finish_job(const std::string& wfid, const std::string& name, bool fits_ram) {
    auto it = workflows_.find(wfid);
    if (it == workflows_.end()) return;
    Workflow& wf = it->second;
    RunningInfo run = wf.running.at(name);
    wf.running.erase(name);
    const JobSpec& spec = *wf.dag.find(name);
    JobRecord& rec = wf.records[name];
    rec.end_time = engine_.now();

    bool ok = fits_ram;
    std::string stdout_log, stderr_log;
    auto vm = cloud_.find_vm(run.vm_id);
    if (ok && vm) {
      stdout_log = run_kernel(spec, *vm, wf.instrumented, stderr_log);
      if (!stderr_log.empty()) ok = false;
    }
    if (!fits_ram)
      stderr_log = "insufficient RAM for job " + name + "\n";

    // Cloud teardown precedes the WMS provenance write in dynamic mode,
    // which is what starves the Lazy mapper of host info.
    if (cloud_.lifecycle() == Lifecycle::DYNAMIC && cloud_.is_running(run.vm_id))
      cloud_.destroy(run.vm_id);
    busy_.erase(run.vm_id);

    if (ok) {
      rec.state = JobState::SUCCEEDED;
      rec.stdout_log = stdout_log;
      rec.stderr_log = stderr_log;
      switch (wf.site.profile) {
        case HostInfoProfile::FULL:
          rec.host_ip = run.ip;
          break;
        case HostInfoProfile::VOLATILE:
          if (cloud_.is_running(run.vm_id)) rec.host_ip = run.ip;
          break;
        case HostInfoProfile::NO_HOST_INFO:
          break;
      }
      for (const auto& child : wf.dag.children_of(name))
        if (--wf.pending[child] == 0 && !wf.unreachable.count(child))
          wf.ready.push_back(child);
    } else {
      rec.stderr_log = stderr_log;
      // One reschedule attempt onto a different VM, if one can exist.
      bool can_retry = wf.attempted[name].size() < 2 && retry_possible(wf, name);
      if (can_retry) {
        rec.state = JobState::QUEUED;
        wf.ready.push_back(name);
      } else {
        rec.state = JobState::FAILED;
        mark_unreachable(wf, name);
      }
    }
    dispatch(wf.wms_wfid);
  }

  bool retry_possible(const Workflow& wf, const std::string& name) const {
    if (cloud_.lifecycle() == Lifecycle::DYNAMIC) return true;
    for (const auto& vm : cloud_.list_vms())
      if (!wf.attempted.at(name).count(vm.vm_id)) return true;
    return false;
  }

  void mark_unreachable(Workflow& wf, const std::string& failed) {
    std::deque<std::string> frontier{failed};
    while (!frontier.empty()) {
      std::string n = frontier.front();
      frontier.pop_front();
      for (const auto& child : wf.dag.children_of(n))
        if (wf.unreachable.insert(child).second) frontier.push_back(child);
    }
  }

  void check_completion(Workflow& wf) {
    if (wf.state != WorkflowState::RUNNING) return;
    if (!wf.running.empty() || !wf.ready.empty()) return;
    for (const auto& j : wf.dag.jobs) {
      JobState s = wf.records[j.name].state;
      if (s == JobState::QUEUED && !wf.unreachable.count(j.name) &&
          !wf.dag.jobs.empty())
        return;  // still schedulable later (waiting on a VM)
    }
    finish_workflow(wf);
  }

  void finish_workflow(Workflow& wf) {
    bool all_ok = true;
    double min_start = 0.0, max_end = 0.0;
    bool any = false;
    for (const auto& j : wf.dag.jobs) {
      const JobRecord& rec = wf.records[j.name];
      if (rec.state != JobState::SUCCEEDED) all_ok = false;
      if (rec.state == JobState::SUCCEEDED || rec.state == JobState::FAILED) {
        if (!any || rec.start_time < min_start) min_start = rec.start_time;
        if (!any || rec.end_time > max_end) max_end = rec.end_time;
        any = true;
      }
    }
    wf.makespan = any ? max_end - min_start : 0.0;
    wf.state = all_ok ? WorkflowState::DONE : WorkflowState::FAILED;
    auto cbs = std::move(wf.callbacks);
    wf.callbacks.clear();
    for (auto& cb : cbs) cb();
  }

  /// Synthetic job kernel: outputs are a deterministic digest of the input
  /// bytes, the argument list and the output's basename, so replays with
  /// identical inputs reproduce identical files. Returns stdout text;
  /// failures are reported through `stderr_log`.
  std::string run_kernel(const JobSpec& spec, const VirtualMachine& vm,
                         bool instrumented, std::string& stderr_log) {
    std::ostringstream out;
    if (instrumented)
      out << "RECAP_HOST ip=" << vm.ip << " hostname=" << vm.nodename << "\n";
    std::string combined;
    for (const auto& in : spec.inputs) {
      if (!cloud_.storage().exists(in.container, in.keyname)) {
        stderr_log = "missing input " + in.container + "/" + in.keyname + "\n";
        return "";
      }
      combined += cloud_.storage().get(in.container, in.keyname).first;
      combined.push_back('\x1f');
    }
    for (const auto& a : spec.args) {
      combined += a;
      combined.push_back('\x1f');
    }
    for (const auto& o : spec.outputs) {
      std::string base = o.keyname.substr(o.keyname.find_last_of('/') + 1);
      std::string bytes = md5_hex(combined + base) + "\n";
      auto rec = cloud_.storage().put(o.container, o.keyname, bytes,
                                      {{"producer", spec.name}});
      out << "wrote " << o.container << "/" << o.keyname << " md5=" << rec.md5
          << "\n";
    }
    out << "job " << spec.name << " done\n";
    return out.str();
  }

  SimEngine& engine_;
  Cloud& cloud_;
  std::map<std::string, Workflow> workflows_;
  std::set<std::string> busy_;
  long wf_counter_ = 0;
  long condor_counter_ = 0;
};

}  // namespace recap
