#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "recap/wms.hpp"

using namespace recap;

namespace {

struct Rig {
  SimEngine eng;
  Cloud cloud;
  Wms wms;
  explicit Rig(CloudScenario sc = testutil::fixed_scenario())
      : cloud(eng, std::move(sc)), wms(eng, cloud) {}
};

JobRecord record_of(Rig& rig, const std::string& wfid, const std::string& job) {
  for (const auto& r : rig.wms.get_job_records(wfid))
    if (r.name == job) return r;
  REQUIRE(false);
  return {};
}

}  // namespace

TEST_CASE("ram admission boundary sits at flavor ram minus os overhead") {
  CHECK(job_fits_ram(448, 512, 64.0));
  CHECK_FALSE(job_fits_ram(449, 512, 64.0));
  CHECK(job_fits_ram(960, 1024, 64.0));
  CHECK_FALSE(job_fits_ram(961, 1024, 64.0));
}

TEST_CASE("duration model: compute scales with mips and effective cores") {
  VirtualMachine vm;
  vm.flavor = {4, "m1.large", 4, 4096, 40};
  vm.cpu_spec.mips = 1000;
  JobSpec job;
  job.length_mi = 8000;
  CHECK(job_duration(job, vm) == 8.0);
  job.max_parallelism = 4;
  CHECK(job_duration(job, vm) == 2.0);
  job.max_parallelism = 8;  // capped by vcpus
  CHECK(job_duration(job, vm) == 2.0);
  JobSpec sleeper;
  sleeper.fixed_duration_s = 42.0;
  sleeper.max_parallelism = 4;
  CHECK(job_duration(sleeper, vm) == 42.0);
}

TEST_CASE("single job run records timing, host and kernel output") {
  Rig rig;
  auto vm = rig.cloud.provision("m1.small", "default-image", "node-1");
  rig.cloud.storage().put("data", "in/x", "payload");
  std::string wfid = rig.wms.plan_and_submit(
      parse_dag("job j mi=125000 in=data:in/x out=data:out/y\n"),
      SiteConfig{});
  rig.wms.run_to_completion(wfid);

  auto rec = record_of(rig, wfid, "j");
  CHECK(rec.state == JobState::SUCCEEDED);
  CHECK(rec.start_time == 0.0);
  CHECK(rec.end_time == 10.0);  // 125000 / 12500
  CHECK(rec.condor_id >= 1);
  CHECK(*rec.host_ip == vm.ip);
  std::string md5 = rig.cloud.storage().get("data", "out/y").second.md5;
  CHECK(rec.stdout_log == "wrote data/out/y md5=" + md5 + "\njob j done\n");
  CHECK(rec.stderr_log.empty());
  CHECK(rig.wms.get_workflow_state(wfid) == WorkflowState::DONE);
  CHECK(rig.wms.get_result(wfid).makespan_s == 10.0);
}

TEST_CASE("the kernel is deterministic and input-sensitive") {
  auto run = [](const std::string& input) {
    Rig rig;
    rig.cloud.provision("m1.small", "default-image", "node-1");
    rig.cloud.storage().put("data", "in/x", input);
    std::string wfid = rig.wms.plan_and_submit(
        parse_dag("job j mi=1000 in=data:in/x arg=-v out=data:out/y\n"),
        SiteConfig{});
    rig.wms.run_to_completion(wfid);
    return rig.cloud.storage().get("data", "out/y").second.md5;
  };
  CHECK(run("payload") == run("payload"));
  CHECK(run("payload") != run("paYload"));
}

TEST_CASE("instrumented jobs log the host line and pay the delay") {
  Rig rig;
  auto vm = rig.cloud.provision("m1.small", "default-image", "node-1");
  std::string wfid = rig.wms.plan_and_submit(
      parse_dag("job j sleep=10\n"), SiteConfig{}, true);
  rig.wms.run_to_completion(wfid);
  auto rec = record_of(rig, wfid, "j");
  CHECK(rec.end_time == 10.0 + 0.0418);
  CHECK(rec.stdout_log.rfind("RECAP_HOST ip=" + vm.ip + " hostname=node-1\n",
                             0) == 0);
}

TEST_CASE("host info profiles control the provenance field") {
  for (auto profile : {HostInfoProfile::FULL, HostInfoProfile::NO_HOST_INFO,
                       HostInfoProfile::VOLATILE}) {
    Rig rig;
    rig.cloud.provision("m1.small", "default-image", "node-1");
    SiteConfig site;
    site.profile = profile;
    std::string wfid =
        rig.wms.plan_and_submit(parse_dag("job j sleep=1\n"), site);
    rig.wms.run_to_completion(wfid);
    auto rec = record_of(rig, wfid, "j");
    // static lifecycle: the VM survives, so volatile behaves like full
    CHECK(rec.host_ip.has_value() == (profile != HostInfoProfile::NO_HOST_INFO));
  }
}

TEST_CASE("ram failures are instant and carry no host info") {
  Rig rig;
  rig.cloud.provision("m1.tiny", "default-image", "node-1");
  std::string wfid = rig.wms.plan_and_submit(
      parse_dag("job big sleep=5 ram=500\njob child sleep=1\nedge big child\n"),
      SiteConfig{});
  rig.wms.run_to_completion(wfid);
  auto rec = record_of(rig, wfid, "big");
  CHECK(rec.state == JobState::FAILED);
  CHECK(rec.start_time == rec.end_time);
  CHECK_FALSE(rec.host_ip.has_value());
  CHECK(rec.stderr_log.find("RAM") != std::string::npos);
  // descendants of the failure never run
  CHECK(record_of(rig, wfid, "child").state == JobState::QUEUED);
  CHECK(rig.wms.get_workflow_state(wfid) == WorkflowState::FAILED);
}

TEST_CASE("a failed job is retried once on a different VM") {
  Rig rig;
  rig.cloud.provision("m1.tiny", "default-image", "a-node");
  rig.cloud.provision("m1.medium", "default-image", "b-node");
  // greedy tie-break by nodename sends the first attempt to a-node (tiny)
  std::string wfid = rig.wms.plan_and_submit(
      parse_dag("job j sleep=5 ram=500\n"), SiteConfig{});
  rig.wms.run_to_completion(wfid);
  auto rec = record_of(rig, wfid, "j");
  CHECK(rec.state == JobState::SUCCEEDED);
  CHECK(*rec.host_ip == "10.0.0.2");  // the medium VM
  CHECK(rig.wms.get_workflow_state(wfid) == WorkflowState::DONE);
}

TEST_CASE("only one retry: a job failing twice stays failed") {
  Rig rig;
  rig.cloud.provision("m1.tiny", "default-image", "a-node");
  rig.cloud.provision("m1.tiny", "default-image", "b-node");
  std::string wfid = rig.wms.plan_and_submit(
      parse_dag("job j sleep=5 ram=500\n"), SiteConfig{});
  rig.wms.run_to_completion(wfid);
  CHECK(record_of(rig, wfid, "j").state == JobState::FAILED);
}

TEST_CASE("missing input fails the job through stderr") {
  Rig rig;
  rig.cloud.provision("m1.small", "default-image", "node-1");
  std::string wfid = rig.wms.plan_and_submit(
      parse_dag("job j sleep=1 in=data:ghost\n"), SiteConfig{});
  rig.wms.run_to_completion(wfid);
  auto rec = record_of(rig, wfid, "j");
  CHECK(rec.state == JobState::FAILED);
  CHECK(rec.stderr_log == "missing input data/ghost\n");
  CHECK(rec.stdout_log.empty());
}

TEST_CASE("static submission without VMs is rejected up front") {
  Rig rig;
  CHECK_THROWS_AS(
      rig.wms.plan_and_submit(parse_dag("job j sleep=1\n"), SiteConfig{}),
      NoResources);
}

TEST_CASE("the empty workflow finishes immediately") {
  Rig rig;
  std::string wfid = rig.wms.plan_and_submit(WorkflowDAG{}, SiteConfig{});
  CHECK(rig.wms.get_workflow_state(wfid) == WorkflowState::DONE);
  CHECK(rig.wms.get_result(wfid).makespan_s == 0.0);
  CHECK(rig.wms.get_result(wfid).submit_output.rfind("plan:", 0) == 0);
}

TEST_CASE("get_result refuses while the workflow is running") {
  Rig rig;
  rig.cloud.provision("m1.small", "default-image", "node-1");
  std::string wfid =
      rig.wms.plan_and_submit(parse_dag("job j sleep=10\n"), SiteConfig{});
  CHECK_THROWS_AS(rig.wms.get_result(wfid), WorkflowStillRunning);
  CHECK_THROWS_AS(rig.wms.get_result("wms-999"), UnknownWorkflow);
  rig.wms.run_to_completion(wfid);
  CHECK_NOTHROW(rig.wms.get_result(wfid));
}

TEST_CASE("sleep wordcount on two VMs has a 300 second makespan") {
  Rig rig;
  rig.cloud.provision("m1.medium", "default-image", "node-1");
  rig.cloud.provision("m1.medium", "default-image", "node-2");
  rig.cloud.storage().put("data", "input/book.txt", "corpus\n");
  auto files = testutil::wordcount_sleep();
  std::string wfid =
      rig.wms.plan_and_submit(parse_dag(files.dag), SiteConfig{});
  rig.wms.run_to_completion(wfid);
  CHECK(rig.wms.get_result(wfid).makespan_s == 300.0);
  // count1 and count2 ran in parallel
  CHECK(record_of(rig, wfid, "count1").start_time == 120.0);
  CHECK(record_of(rig, wfid, "count2").start_time == 120.0);
  CHECK(record_of(rig, wfid, "merge").start_time == 240.0);
}

TEST_CASE("greedy scheduling prefers the lowest nodename") {
  Rig rig;
  rig.cloud.provision("m1.small", "default-image", "beta");
  rig.cloud.provision("m1.small", "default-image", "alpha");
  std::string wfid =
      rig.wms.plan_and_submit(parse_dag("job j sleep=1\n"), SiteConfig{});
  rig.wms.run_to_completion(wfid);
  CHECK(*record_of(rig, wfid, "j").host_ip == "10.0.0.2");  // alpha's ip
}

TEST_CASE("jobs serialize on a single VM in declaration order") {
  Rig rig;
  rig.cloud.provision("m1.small", "default-image", "node-1");
  std::string wfid = rig.wms.plan_and_submit(
      parse_dag("job a sleep=3\njob b sleep=4\njob c sleep=5\n"), SiteConfig{});
  rig.wms.run_to_completion(wfid);
  CHECK(record_of(rig, wfid, "a").start_time == 0.0);
  CHECK(record_of(rig, wfid, "b").start_time == 3.0);
  CHECK(record_of(rig, wfid, "c").start_time == 7.0);
  CHECK(rig.wms.get_result(wfid).makespan_s == 12.0);
}

TEST_CASE("dispatch latency shifts job start times") {
  Rig rig;
  rig.cloud.provision("m1.small", "default-image", "node-1");
  SiteConfig site;
  site.dispatch_latency_s = 2.5;
  std::string wfid =
      rig.wms.plan_and_submit(parse_dag("job j sleep=1\n"), site);
  rig.wms.run_to_completion(wfid);
  CHECK(record_of(rig, wfid, "j").start_time == 2.5);
  CHECK(record_of(rig, wfid, "j").end_time == 3.5);
}

TEST_CASE("condor lookup exposes running jobs only") {
  Rig rig;
  rig.cloud.provision("m1.small", "default-image", "node-1");
  std::string wfid =
      rig.wms.plan_and_submit(parse_dag("job j sleep=10\n"), SiteConfig{});
  rig.eng.run_until(4.0);
  auto rec = record_of(rig, wfid, "j");
  REQUIRE(rec.state == JobState::RUNNING);
  auto info = rig.wms.condor_lookup(rec.condor_id);
  CHECK(info.state == "RUNNING");
  CHECK(info.host_ip == "10.0.0.1");
  rig.wms.run_to_completion(wfid);
  CHECK_THROWS_AS(rig.wms.condor_lookup(rec.condor_id), NotRunning);
  CHECK_THROWS_AS(rig.wms.condor_lookup(424242), NotRunning);
}

TEST_CASE("pool_mips reports one row per running VM") {
  Rig rig;
  rig.cloud.provision("m1.small", "default-image", "node-1");
  rig.cloud.provision("m1.large", "default-image", "node-2");
  auto mips = rig.wms.pool_mips();
  REQUIRE(mips.size() == 2);
  CHECK(mips.at("node-1").first == 12500);
  CHECK(mips.at("node-2").second == 1250000);
}

TEST_CASE("dynamic lifecycle provisions per job and tears down after") {
  Rig rig{testutil::dynamic_scenario()};
  SiteConfig site;
  site.profile = HostInfoProfile::VOLATILE;
  std::string wfid = rig.wms.plan_and_submit(
      parse_dag("job a sleep=5\njob b sleep=5\nedge a b\n"), site);
  rig.wms.run_to_completion(wfid);
  CHECK(rig.wms.get_workflow_state(wfid) == WorkflowState::DONE);
  CHECK(rig.cloud.list_vms().empty());
  CHECK(rig.cloud.list_all_vms().size() == 2);
  // teardown precedes the record write, so volatile drops the host ip
  CHECK_FALSE(record_of(rig, wfid, "a").host_ip.has_value());
  CHECK_FALSE(record_of(rig, wfid, "b").host_ip.has_value());
}

TEST_CASE("dynamic lifecycle keeps host ips under the full profile") {
  Rig rig{testutil::dynamic_scenario()};
  std::string wfid =
      rig.wms.plan_and_submit(parse_dag("job a sleep=5\n"), SiteConfig{});
  rig.wms.run_to_completion(wfid);
  CHECK(record_of(rig, wfid, "a").host_ip.has_value());
}

TEST_CASE("execute_job runs one job outside any workflow") {
  Rig rig;
  auto vm = rig.cloud.provision("m1.small", "default-image", "node-1");
  JobSpec job;
  job.name = "solo";
  job.fixed_duration_s = 3.0;
  auto rec = rig.wms.execute_job(job, vm, SiteConfig{});
  CHECK(rec.state == JobState::SUCCEEDED);
  CHECK(rec.end_time == 3.0);
  CHECK(*rec.host_ip == vm.ip);
  rig.cloud.destroy(vm.vm_id);
  CHECK_THROWS_AS(rig.wms.execute_job(job, vm, SiteConfig{}), VmNotRunning);
}

TEST_CASE("site file parsing covers profiles and knobs") {
  auto site = SiteConfig::parse_text(
      "[site]\ncontainer=wf\nprofile=volatile\nos_overhead_mb=128\n"
      "instr_delay_s=0.05\ndynamic_flavor=random\nseed=9\n");
  CHECK(site.container == "wf");
  CHECK(site.profile == HostInfoProfile::VOLATILE);
  CHECK(site.os_overhead_mb == 128.0);
  CHECK(site.instr_delay_s == 0.05);
  CHECK(site.dynamic_flavor == "random");
  CHECK(site.seed == 9);
  CHECK_THROWS_AS(SiteConfig::parse_text("[site]\nprofile=bogus\n"),
                  ConfigError);
}
