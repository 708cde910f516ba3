#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "recap/cloud.hpp"
#include "recap/engine.hpp"
#include "recap/errors.hpp"
#include "recap/mappers.hpp"
#include "recap/store.hpp"
#include "recap/wms.hpp"

namespace recap {

struct SubmitFiles {
  std::string dag;
  std::string site;
  std::string tc;
  std::string props;
};

struct SubmitResult {
  long wf_id = 0;
  std::string wms_wfid;
};

/// Wires the simulated cloud, the WMS, the store and the monitors behind
/// one facade. The wrapper service, the CLI and the replay engine all run
/// on top of this.
class RecapSystem {
 public:
  RecapSystem(CloudScenario scenario, const std::string& store_path = ":memory:",
              MappingStrategyKind strategy = MappingStrategyKind::STATIC,
              double poll_interval_s = 5.0)
      : cloud_(engine_, std::move(scenario)),
        wms_(engine_, cloud_),
        store_(store_path),
        strategy_(strategy),
        poll_interval_(poll_interval_s) {
    // Keep wms_wfids unique across CLI invocations sharing one store file.
    wms_.set_wfid_base(store_.max_wms_counter() * 1000);
  }

  SimEngine& engine() { return engine_; }
  Cloud& cloud() { return cloud_; }
  Wms& wms() { return wms_; }
  Store& store() { return store_; }
  MappingStrategyKind strategy() const { return strategy_; }
  std::mutex& mutex() { return mu_; }

  /// Validate, submit to the WMS, persist the source files and start the
  /// monitor for the configured strategy. No side effects when validation
  /// fails.
  SubmitResult submit(const SubmitFiles& files, bool instrumented = false) {
    WorkflowDAG dag = parse_dag(files.dag);
    SiteConfig site = SiteConfig::parse_text(files.site);
    if (strategy_ == MappingStrategyKind::SNOHI) instrumented = true;
    std::string wms_wfid = wms_.plan_and_submit(dag, site, instrumented);
    long wf_id = store_.register_source(wms_wfid, files.dag, files.site,
                                        files.tc, files.props);
    start_monitor(strategy_, wf_id, wms_wfid);
    return {wf_id, wms_wfid};
  }

  /// Register a periodic monitor task for `kind`; cancelled when the
  /// workflow settles. STATIC and SNOHI need no monitor.
  void start_monitor(MappingStrategyKind kind, long wf_id,
                     const std::string& wms_wfid) {
    SimEngine::PeriodicHandle handle;
    if (kind == MappingStrategyKind::EAGER) {
      auto mon = std::make_shared<EagerMonitor>(store_, wms_, cloud_, wf_id,
                                                wms_wfid);
      eager_monitors_[wf_id] = mon;
      handle = engine_.every(poll_interval_,
                             [this, mon]() { mon->tick(engine_.now()); });
    } else if (kind == MappingStrategyKind::LAZY) {
      auto mon = std::make_shared<LazyMonitor>(store_, cloud_);
      handle = engine_.every(poll_interval_,
                             [this, mon]() { mon->tick(engine_.now()); });
    } else {
      return;
    }
    wms_.on_workflow_done(wms_wfid, [handle]() mutable { handle.cancel(); });
  }

  void run_to_completion(const std::string& wms_wfid) {
    wms_.run_to_completion(wms_wfid);
  }

  EagerMonitor* eager_monitor(long wf_id) {
    auto it = eager_monitors_.find(wf_id);
    return it == eager_monitors_.end() ? nullptr : it->second.get();
  }

  MappingOutcome aggregate(long wf_id) { return aggregate(wf_id, strategy_); }

  MappingOutcome aggregate(long wf_id, MappingStrategyKind kind) {
    AggregateContext ctx{store_, wms_, cloud_, eager_monitor(wf_id)};
    return recap::aggregate(ctx, wf_id, kind);
  }

  /// submit + drive to completion + aggregate; the CLI happy path.
  SubmitResult submit_run_aggregate(const SubmitFiles& files,
                                    bool instrumented = false) {
    SubmitResult res = submit(files, instrumented);
    run_to_completion(res.wms_wfid);
    aggregate(res.wf_id);
    return res;
  }

 private:
  SimEngine engine_;
  Cloud cloud_;
  Wms wms_;
  Store store_;
  MappingStrategyKind strategy_;
  double poll_interval_;
  std::map<long, std::shared_ptr<EagerMonitor>> eager_monitors_;
  std::mutex mu_;
};

}  // namespace recap
