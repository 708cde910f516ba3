// Command line front end: submit workflows, inspect captured provenance,
// reproduce past runs, compare runs and drive the built-in experiments.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "recap/compare.hpp"
#include "recap/config.hpp"
#include "recap/replay.hpp"
#include "recap/service.hpp"
#include "recap/system.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw recap::ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

recap::CloudScenario load_scenario(const recap::RecapConfig& cfg) {
  recap::CloudScenario sc;
  if (!cfg.scenario_path.empty()) {
    sc = recap::CloudScenario::parse_file(cfg.scenario_path);
  } else {
    sc.flavors = recap::CloudScenario::default_flavors();
    sc.images.push_back({"img-default", "default-image", {}});
    sc.mips.reseed();
  }
  if (!cfg.object_store_path.empty())
    sc.object_store_path = cfg.object_store_path;
  return sc;
}

std::unique_ptr<recap::RecapSystem> make_system(const recap::RecapConfig& cfg) {
  return std::make_unique<recap::RecapSystem>(load_scenario(cfg),
                                              cfg.store_path(),
                                              cfg.mapping_type);
}

void print_outcome(const recap::MappingOutcome& out) {
  std::cout << "mapped " << out.mapped.size() << "/" << out.total()
            << " jobs\n";
  for (const auto& [job, why] : out.unmapped)
    std::cout << "  unmapped " << job << ": " << to_string(why) << "\n";
}

// -- experiments ------------------------------------------------------------

recap::SubmitFiles wordcount_files(const std::string& container) {
  recap::SubmitFiles f;
  f.dag = "job split mi=120000 in=" + container + ":input/book.txt out=" +
          container + ":work/part1 out=" + container + ":work/part2\n"
          "job count1 mi=120000 in=" + container + ":work/part1 out=" +
          container + ":work/count1\n"
          "job count2 mi=120000 in=" + container + ":work/part2 out=" +
          container + ":work/count2\n"
          "job merge mi=60000 in=" + container + ":work/count1 in=" +
          container + ":work/count2 out=" + container + ":out/total\n"
          "edge split count1\nedge split count2\n"
          "edge count1 merge\nedge count2 merge\n";
  f.site = "[site]\ncontainer=" + container + "\n";
  f.tc = "wordcount: split count1 count2 merge\n";
  f.props = "experiment=1\n";
  return f;
}

recap::CloudScenario fixed_scenario(long mips = 12500) {
  recap::CloudScenario sc;
  sc.mips.mode = recap::MipsModel::Mode::FIXED;
  sc.mips.fixed_mips = mips;
  sc.flavors = recap::CloudScenario::default_flavors();
  sc.images.push_back({"img-default", "default-image", {}});
  sc.mips.reseed();
  return sc;
}

int run_experiment(const std::string& name, const std::string& out_path) {
  std::ofstream csv(out_path);
  if (!csv) throw recap::ConfigError("cannot open " + out_path);

  if (name == "ram-sweep") {
    csv << "flavor,ram_req_mb,repeat,state\n";
    int failures = 0, runs = 0;
    for (const std::string& flavor : {"m1.tiny", "m1.small", "m1.medium"}) {
      for (int ram = 100; ram <= 700; ram += 100) {
        for (int rep = 0; rep < 5; ++rep) {
          recap::RecapSystem sys(fixed_scenario());
          sys.cloud().provision(flavor, "default-image", "node-1");
          recap::SubmitFiles f;
          f.dag = "job probe mi=1000 ram=" + std::to_string(ram) + "\n";
          f.site = "[site]\n container=data\n";
          f.tc = "probe\n";
          f.props = "x=1\n";
          auto res = sys.submit(f);
          sys.run_to_completion(res.wms_wfid);
          auto state = sys.wms().get_job_records(res.wms_wfid)[0].state;
          csv << flavor << "," << ram << "," << rep << ","
              << to_string(state) << "\n";
          ++runs;
          if (state == recap::JobState::FAILED) ++failures;
        }
      }
    }
    std::cout << "ram-sweep: " << failures << " failures in " << runs
              << " runs\n";
    return 0;
  }

  if (name == "mips-sweep") {
    csv << "scale,runtime_s\n";
    double base = 0.0;
    for (double k : {0.5, 1.0, 2.0, 4.0}) {
      recap::RecapSystem sys(fixed_scenario());
      sys.cloud().provision("m1.small", "default-image", "node-1");
      sys.cloud().scale_mips(k);
      recap::SubmitFiles f{"job bench mi=1000000\n", "[site]\ncontainer=data\n",
                           "bench\n", "x=1\n"};
      auto res = sys.submit(f);
      sys.run_to_completion(res.wms_wfid);
      double t = sys.wms().get_result(res.wms_wfid).makespan_s;
      if (k == 0.5) base = t * 0.5;
      csv << k << "," << t << "\n";
    }
    std::cout << "mips-sweep: baseline runtime " << base << " s at scale 1\n";
    return 0;
  }

  if (name == "flavor-sweep") {
    csv << "flavor,makespan_s\n";
    for (const std::string& flavor : {"m1.small", "m1.medium", "m1.large"}) {
      recap::RecapSystem sys(fixed_scenario());
      sys.cloud().provision(flavor, "default-image", "node-1");
      recap::SubmitFiles f{"job bench mi=1000000 par=4\n",
                           "[site]\ncontainer=data\n", "bench\n", "x=1\n"};
      auto res = sys.submit(f);
      sys.run_to_completion(res.wms_wfid);
      csv << flavor << "," << sys.wms().get_result(res.wms_wfid).makespan_s
          << "\n";
    }
    std::cout << "flavor-sweep: wrote " << out_path << "\n";
    return 0;
  }

  if (name == "overhead") {
    csv << "strategy,instrumented,makespan_s\n";
    for (const std::string& strat : {"static", "eager", "lazy", "snohi"}) {
      recap::RecapSystem sys(fixed_scenario(), ":memory:",
                             recap::parse_strategy(strat));
      sys.cloud().provision("m1.medium", "default-image", "node-1");
      sys.cloud().provision("m1.medium", "default-image", "node-2");
      auto f = wordcount_files("data");
      sys.cloud().storage().put("data", "input/book.txt", "corpus\n");
      auto res = sys.submit(f);
      sys.run_to_completion(res.wms_wfid);
      sys.aggregate(res.wf_id);
      csv << strat << "," << (strat == "snohi" ? 1 : 0) << ","
          << sys.wms().get_result(res.wms_wfid).makespan_s << "\n";
    }
    std::cout << "overhead: wrote " << out_path << "\n";
    return 0;
  }

  if (name == "replay-roundtrip") {
    csv << "level,result\n";
    recap::RecapSystem sys(fixed_scenario(), ":memory:",
                           recap::MappingStrategyKind::STATIC);
    auto vm1 = sys.cloud().provision("m1.medium", "default-image", "node-1");
    auto vm2 = sys.cloud().provision("m1.medium", "default-image", "node-2");
    sys.cloud().storage().put("data", "input/book.txt", "corpus\n");
    auto res = sys.submit_run_aggregate(wordcount_files("data"));
    sys.cloud().destroy(vm1.vm_id);
    sys.cloud().destroy(vm2.vm_id);
    auto rep = recap::reproduce(sys, res.wf_id);
    auto report = recap::compare_workflows(sys.store(), res.wf_id, rep.wf_id);
    csv << "structure," << to_string(report.structure.result) << "\n";
    csv << "infrastructure," << to_string(report.infrastructure.result) << "\n";
    csv << "outputs," << to_string(report.outputs.result) << "\n";
    std::cout << "replay-roundtrip: "
              << (report.reproduced() ? "REPRODUCED" : "NOT_REPRODUCED") << "\n";
    return report.reproduced() ? 0 : 1;
  }

  throw recap::ConfigError("unknown experiment " + name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cloud provenance capture and workflow reproduction toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  bool as_json = false;
  app.add_option("--config", config_path, "operator configuration file");
  app.add_flag("--json", as_json, "machine readable output");

  auto* sub = app.add_subcommand("submit", "plan, run and capture a workflow");
  std::string dag_path, site_path, tc_path, props_path;
  bool instrumented = false;
  sub->add_option("dag", dag_path, "workflow DAG file")->required();
  sub->add_option("site", site_path, "site file")->required();
  sub->add_option("tc", tc_path, "transformation catalog")->required();
  sub->add_option("props", props_path, "properties file")->required();
  sub->add_flag("--instrumented", instrumented, "prepend host info to job stdout");

  auto* st = app.add_subcommand("status", "show captured provenance");
  long status_wf = 0;
  st->add_option("wf_id", status_wf, "workflow id")->required();

  auto* rp = app.add_subcommand("reproduce", "re-provision and re-run");
  long reproduce_wf = 0;
  std::string flavor_override;
  rp->add_option("wf_id", reproduce_wf, "workflow id")->required();
  rp->add_option("--flavor", flavor_override, "substitute flavor for every VM");

  auto* cp = app.add_subcommand("compare", "three-level comparison of two runs");
  long wf_a = 0, wf_b = 0;
  cp->add_option("wf_a", wf_a, "first workflow id")->required();
  cp->add_option("wf_b", wf_b, "second workflow id")->required();

  auto* sv = app.add_subcommand("serve", "run the WMS wrapper service");
  int serve_port = 5000;
  sv->add_option("--port", serve_port, "listen port");

  auto* ex = app.add_subcommand("experiment", "run a built-in experiment");
  std::string exp_name, exp_out = "experiment.csv";
  ex->add_option("name", exp_name,
                 "ram-sweep | mips-sweep | flavor-sweep | overhead | "
                 "replay-roundtrip")->required();
  ex->add_option("--out", exp_out, "CSV output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ex->parsed()) return run_experiment(exp_name, exp_out);

    if (config_path.empty())
      throw recap::ConfigError("--config is required for this command");
    recap::RecapConfig cfg = recap::RecapConfig::load_file(config_path);

    if (sub->parsed()) {
      auto sys = make_system(cfg);
      recap::SubmitFiles files{read_file(dag_path), read_file(site_path),
                               read_file(tc_path), read_file(props_path)};
      auto res = sys->submit(files, instrumented);
      sys->run_to_completion(res.wms_wfid);
      auto out = sys->aggregate(res.wf_id);
      if (as_json) {
        std::cout << nlohmann::json{{"wf_id", res.wf_id},
                                    {"wms_wfid", res.wms_wfid},
                                    {"mapped", out.mapped.size()},
                                    {"total", out.total()}}.dump() << "\n";
      } else {
        std::cout << "wf_id " << res.wf_id << " (" << res.wms_wfid << ")\n";
        print_outcome(out);
      }
      return 0;
    }

    if (st->parsed()) {
      recap::Store store(cfg.store_path());
      if (as_json) {
        std::cout << store.export_workflow(status_wf).dump(2) << "\n";
        return 0;
      }
      auto src = store.get_source(status_wf);
      std::cout << "workflow " << src.wf_id << " (" << src.wms_wfid << ")\n";
      for (const auto& r : store.get_cap(status_wf))
        std::cout << "  " << r.job_name << " on " << r.nodename << " flavor "
                  << r.flavor_name << " (" << r.flavor_id << "/" << r.min_ram_mb
                  << "/" << r.min_hd_gb << "/" << r.min_cpu << ") image "
                  << r.image_id << "\n";
      for (const auto& [jf, cf] : store.get_job_files(status_wf))
        std::cout << "  " << jf.job_name << " wrote " << jf.container << "/"
                  << jf.keyname << " md5=" << cf.md5 << "\n";
      return 0;
    }

    if (rp->parsed()) {
      auto sys = make_system(cfg);
      recap::ReplayOptions opts;
      if (!flavor_override.empty()) opts.flavor_override = flavor_override;
      auto res = recap::reproduce(*sys, reproduce_wf, opts);
      auto report =
          recap::compare_workflows(sys->store(), reproduce_wf, res.wf_id);
      if (as_json) {
        nlohmann::json j = report.to_json();
        j["wf_id"] = res.wf_id;
        std::cout << j.dump() << "\n";
      } else {
        std::cout << "replayed as wf_id " << res.wf_id << ": "
                  << (report.reproduced() ? "REPRODUCED" : "NOT_REPRODUCED")
                  << "\n";
      }
      return 0;
    }

    if (cp->parsed()) {
      recap::Store store(cfg.store_path());
      auto report = recap::compare_workflows(store, wf_a, wf_b);
      if (as_json) {
        std::cout << report.to_json().dump() << "\n";
      } else {
        std::cout << "structure:      " << to_string(report.structure.result) << "\n";
        std::cout << "infrastructure: " << to_string(report.infrastructure.result) << "\n";
        std::cout << "outputs:        " << to_string(report.outputs.result) << "\n";
        for (const auto* comp :
             {&report.structure, &report.infrastructure, &report.outputs})
          for (const auto& d : comp->details) std::cout << "  " << d << "\n";
        std::cout << (report.reproduced() ? "REPRODUCED" : "NOT_REPRODUCED")
                  << "\n";
      }
      return report.reproduced() ? 0 : 1;
    }

    if (sv->parsed()) {
      auto sys = make_system(cfg);
      recap::WrapperService service(*sys, cfg.service_user,
                                    cfg.service_password);
      service.server().bind_to_port("127.0.0.1", serve_port);
      std::cout << "listening on 127.0.0.1:" << serve_port << "\n";
      service.server().listen_after_bind();
      return 0;
    }
  } catch (const recap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
