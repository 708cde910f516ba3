#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "recap/digest.hpp"
#include "recap/errors.hpp"
#include "recap/system.hpp"

namespace recap {

inline constexpr const char* kApiBase = "/service_wrapper/api/v1.0";

/// RESTful WMS Wrapper Service. Every mutation funnels through the shared
/// system mutex; auth is checked before any side effect.
class WrapperService {
 public:
  WrapperService(RecapSystem& system, std::string user, std::string password)
      : system_(system),
        expected_auth_("Basic " + base64_encode(user + ":" + password)) {
    install_routes();
  }

  ~WrapperService() { stop(); }

  /// Bind to an OS-assigned port on `host`; returns the port.
  int start(const std::string& host = "127.0.0.1") {
    int port = server_.bind_to_any_port(host);
    if (port <= 0) throw Error("wrapper service failed to bind");
    thread_ = std::thread([this]() { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return port;
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  httplib::Server& server() { return server_; }

 private:
  bool authorized(const httplib::Request& req, httplib::Response& res) const {
    if (req.get_header_value("Authorization") == expected_auth_) return true;
    res.status = 401;
    res.set_content(R"({"error":"Unauthorized"})", "application/json");
    return false;
  }

  static void fail(httplib::Response& res, int status, const std::string& code) {
    res.status = status;
    res.set_content(nlohmann::json{{"error", code}}.dump(), "application/json");
  }

  void install_routes() {
    std::string base = kApiBase;

    server_.Post(base + "/submit", [this](const httplib::Request& req,
                                          httplib::Response& res) {
      if (!authorized(req, res)) return;
      SubmitFiles files;
      for (auto [field, dst] : {std::pair{"dag", &files.dag},
                                std::pair{"site", &files.site},
                                std::pair{"tc", &files.tc},
                                std::pair{"props", &files.props}}) {
        if (!req.has_file(field)) return fail(res, 400, "MissingFile");
        *dst = req.get_file_value(field).content;
      }
      bool instrumented = req.has_file("instrumented") &&
                          req.get_file_value("instrumented").content == "true";
      try {
        std::lock_guard lock(system_.mutex());
        SubmitResult r = system_.submit(files, instrumented);
        res.set_content(nlohmann::json{{"wms_wfid", r.wms_wfid},
                                       {"wf_id", r.wf_id}}.dump(),
                        "application/json");
      } catch (const CyclicDag&) {
        fail(res, 400, "CyclicDag");
      } catch (const DagFormatError&) {
        fail(res, 400, "DagFormatError");
      } catch (const ConfigError&) {
        fail(res, 400, "ConfigError");
      } catch (const NoResources&) {
        fail(res, 503, "NoResources");
      } catch (const DuplicateWmsWfid&) {
        fail(res, 409, "DuplicateWmsWfid");
      }
    });

    server_.Get(base + "/wms_get_file", [this](const httplib::Request& req,
                                               httplib::Response& res) {
      if (!authorized(req, res)) return;
      std::string wfid = req.get_param_value("wfid");
      std::string job = req.get_param_value("job");
      std::string kind = req.get_param_value("kind");
      std::lock_guard lock(system_.mutex());
      try {
        if (kind == "submit_output") {
          res.set_content(system_.wms().get_result(wfid).submit_output,
                          "text/plain");
          return;
        }
        for (const auto& rec : system_.wms().get_job_records(wfid)) {
          if (rec.name != job) continue;
          if (kind == "stdout") res.set_content(rec.stdout_log, "text/plain");
          else if (kind == "stderr") res.set_content(rec.stderr_log, "text/plain");
          else return fail(res, 400, "BadKind");
          return;
        }
        fail(res, 404, "UnknownJob");
      } catch (const UnknownWorkflow&) {
        fail(res, 404, "UnknownWorkflow");
      } catch (const WorkflowStillRunning&) {
        fail(res, 404, "WorkflowStillRunning");
      }
    });

    server_.Get(base + "/jobmon", [this](const httplib::Request& req,
                                         httplib::Response& res) {
      if (!authorized(req, res)) return;
      long condor_id = 0;
      try {
        condor_id = std::stol(req.get_param_value("condor_id"));
      } catch (...) {
        return fail(res, 400, "BadCondorId");
      }
      std::lock_guard lock(system_.mutex());
      try {
        auto info = system_.wms().condor_lookup(condor_id);
        res.set_content(nlohmann::json{{"state", info.state},
                                       {"host_ip", info.host_ip}}.dump(),
                        "application/json");
      } catch (const NotRunning&) {
        fail(res, 404, "NotRunning");
      }
    });

    server_.Get(base + "/cpool_mips", [this](const httplib::Request& req,
                                             httplib::Response& res) {
      if (!authorized(req, res)) return;
      std::lock_guard lock(system_.mutex());
      nlohmann::json out = nlohmann::json::object();
      for (const auto& [node, mk] : system_.wms().pool_mips())
        out[node] = {{"mips", mk.first}, {"kflops", mk.second}};
      res.set_content(out.dump(), "application/json");
    });
  }

  RecapSystem& system_;
  std::string expected_auth_;
  httplib::Server server_;
  std::thread thread_;
};

/// Synchronous client for the wrapper service; used by the other
/// components instead of talking to the WMS directly.
class WsClient {
 public:
  WsClient(const std::string& host, int port, std::string user,
           std::string password)
      : client_(host, port) {
    client_.set_basic_auth(user, password);
  }

  SubmitResult submit(const SubmitFiles& files, bool instrumented = false) {
    httplib::MultipartFormDataItems items = {
        {"dag", files.dag, "workflow.dag", "text/plain"},
        {"site", files.site, "site.ini", "text/plain"},
        {"tc", files.tc, "tc.txt", "text/plain"},
        {"props", files.props, "props.txt", "text/plain"},
        {"instrumented", instrumented ? "true" : "false", "", "text/plain"},
    };
    auto res = client_.Post(std::string(kApiBase) + "/submit", items);
    require(res, 200);
    auto j = nlohmann::json::parse(res->body);
    return {j.at("wf_id").get<long>(), j.at("wms_wfid").get<std::string>()};
  }

  std::string get_file(const std::string& wfid, const std::string& job,
                       const std::string& kind) {
    auto res = client_.Get(std::string(kApiBase) + "/wms_get_file?wfid=" + wfid +
                           "&job=" + job + "&kind=" + kind);
    require(res, 200);
    return res->body;
  }

  std::pair<std::string, std::string> jobmon(long condor_id) {
    auto res = client_.Get(std::string(kApiBase) +
                           "/jobmon?condor_id=" + std::to_string(condor_id));
    require(res, 200);
    auto j = nlohmann::json::parse(res->body);
    return {j.at("state").get<std::string>(), j.at("host_ip").get<std::string>()};
  }

  std::map<std::string, std::pair<long, long>> cpool_mips() {
    auto res = client_.Get(std::string(kApiBase) + "/cpool_mips");
    require(res, 200);
    std::map<std::string, std::pair<long, long>> out;
    nlohmann::json body = nlohmann::json::parse(res->body);
    for (const auto& [node, mk] : body.items())
      out[node] = {mk.at("mips").get<long>(), mk.at("kflops").get<long>()};
    return out;
  }

  httplib::Client& raw() { return client_; }

 private:
  static void require(const httplib::Result& res, int status) {
    if (!res) throw Error("wrapper service unreachable");
    if (res->status != status)
      throw Error("wrapper service returned " + std::to_string(res->status) +
                  ": " + res->body);
  }

  httplib::Client client_;
};

}  // namespace recap
