#pragma once

#include <sqlite3.h>

#include <cmath>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recap/errors.hpp"

namespace recap {

struct WorkflowSource {
  long wf_id = 0;
  std::string wms_wfid;
  std::string wf_dag;
  std::string wf_site;
  std::string wf_tc;
  std::string wf_props;
};

/// One row of Cloud-aware provenance: a job joined to the flavor/image of
/// the VM that executed it.
struct CAPRecord {
  long wf_id = 0;
  std::string job_name;
  std::string nodename;
  int flavor_id = 0;
  std::string flavor_name;
  int min_ram_mb = 0;
  int min_hd_gb = 0;
  int min_cpu = 0;
  std::string image_name;
  std::string image_id;
  std::string extra;  // canonical JSON text

  bool same_resource(const CAPRecord& o) const {
    return flavor_id == o.flavor_id && min_ram_mb == o.min_ram_mb &&
           min_hd_gb == o.min_hd_gb && min_cpu == o.min_cpu &&
           image_id == o.image_id;
  }
};

struct TempMapping {
  CAPRecord cap;
  std::string vm_id;
  double capture_time = 0.0;
};

struct JobHostTemp {
  long wf_id = 0;
  std::string job_name;
  std::string host_ip;
  std::string hostname;
};

struct CpuSpecRow {
  long wf_id = 0;
  std::string job_name;
  std::string arch;
  std::string os;
  long mips = 0;
  long kflops = 0;
};

struct JobCloudFile {
  long wf_id = 0;
  std::string job_name;
  std::string container;
  std::string keyname;
};

struct CloudFileRow {
  std::string container;
  std::string keyname;
  std::string md5;
  std::string metadata;  // JSON text
  double created = 0.0;
  double modified = 0.0;
};

struct LazyVmObservation {
  std::string vm_id;
  std::string ip;
  std::string nodename;
  int flavor_id = 0;
  std::string flavor_name;
  int min_ram_mb = 0;
  int min_hd_gb = 0;
  int min_cpu = 0;
  std::string image_name;
  std::string image_id;
  double created_at = 0.0;
  double first_seen = 0.0;
  double last_seen = 0.0;
};

inline const char* kStoreSchema = R"sql(
CREATE TABLE IF NOT EXISTS WorkflowSource (
  wfID      INTEGER PRIMARY KEY AUTOINCREMENT,
  wms_wfid  TEXT NOT NULL UNIQUE,
  wfDAG     TEXT NOT NULL,
  wfSite    TEXT NOT NULL,
  wfTC      TEXT NOT NULL,
  wfProps   TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS WfCloudMapping (
  wfID        INTEGER NOT NULL,
  job_name    TEXT NOT NULL,
  nodename    TEXT NOT NULL,
  flavorid    INTEGER NOT NULL,
  flavorname  TEXT NOT NULL,
  minRAM      INTEGER NOT NULL,
  minHD       INTEGER NOT NULL,
  minCPU      INTEGER NOT NULL,
  image_name  TEXT NOT NULL,
  image_id    TEXT NOT NULL,
  extra       TEXT NOT NULL DEFAULT '{}',
  UNIQUE (wfID, job_name)
);
CREATE TABLE IF NOT EXISTS WfCloudTempMapping (
  wfID         INTEGER NOT NULL,
  job_name     TEXT NOT NULL,
  nodename     TEXT NOT NULL,
  flavorid     INTEGER NOT NULL,
  flavorname   TEXT NOT NULL,
  minRAM       INTEGER NOT NULL,
  minHD        INTEGER NOT NULL,
  minCPU       INTEGER NOT NULL,
  image_name   TEXT NOT NULL,
  image_id     TEXT NOT NULL,
  extra        TEXT NOT NULL DEFAULT '{}',
  vm_id        TEXT NOT NULL,
  capture_time REAL NOT NULL,
  UNIQUE (wfID, job_name)
);
CREATE TABLE IF NOT EXISTS JobHostTempMap (
  wfID     INTEGER NOT NULL,
  job_name TEXT NOT NULL,
  host_ip  TEXT NOT NULL,
  hostname TEXT NOT NULL,
  UNIQUE (wfID, job_name)
);
CREATE TABLE IF NOT EXISTS CPUSpecs (
  id       INTEGER PRIMARY KEY AUTOINCREMENT,
  wfID     INTEGER NOT NULL,
  job_name TEXT NOT NULL,
  arch     TEXT NOT NULL,
  os       TEXT NOT NULL,
  mips     INTEGER NOT NULL,
  kflops   INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS JobCloudFile (
  wfID      INTEGER NOT NULL,
  job_name  TEXT NOT NULL,
  container TEXT NOT NULL,
  keyname   TEXT NOT NULL,
  UNIQUE (wfID, job_name, container, keyname)
);
CREATE TABLE IF NOT EXISTS CloudFileCatalog (
  container TEXT NOT NULL,
  keyname   TEXT NOT NULL,
  md5       TEXT NOT NULL,
  metadata  TEXT NOT NULL DEFAULT '{}',
  created   REAL NOT NULL,
  modified  REAL NOT NULL,
  UNIQUE (container, keyname)
);
CREATE TABLE IF NOT EXISTS LazyVmObservation (
  vm_id      TEXT NOT NULL,
  ip         TEXT NOT NULL,
  nodename   TEXT NOT NULL,
  flavorid   INTEGER NOT NULL,
  flavorname TEXT NOT NULL,
  minRAM     INTEGER NOT NULL,
  minHD      INTEGER NOT NULL,
  minCPU     INTEGER NOT NULL,
  image_name TEXT NOT NULL,
  image_id   TEXT NOT NULL,
  created_at REAL NOT NULL,
  first_seen REAL NOT NULL,
  last_seen  REAL NOT NULL,
  UNIQUE (vm_id, created_at)
);
)sql";

/// Persistence layer over the ReCAP relational schema, backed by a
/// single-file SQLite database (":memory:" for tests). Thread-safe:
/// every operation takes the store mutex.
class Store {
 public:
  explicit Store(const std::string& path = ":memory:") {
    if (sqlite3_open_v2(path.c_str(), &db_,
                        SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE |
                            SQLITE_OPEN_FULLMUTEX,
                        nullptr) != SQLITE_OK)
      throw StoreError("cannot open store at " + path);
    exec(kStoreSchema);
  }

  ~Store() { sqlite3_close(db_); }
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // -- WorkflowSource ------------------------------------------------------

  long register_source(const std::string& wms_wfid, const std::string& dag,
                       const std::string& site, const std::string& tc,
                       const std::string& props) {
    if (dag.empty() || site.empty() || tc.empty() || props.empty())
      throw StoreError("all four workflow source files must be non-empty");
    std::lock_guard lock(mu_);
    Stmt s(db_,
           "INSERT INTO WorkflowSource (wms_wfid, wfDAG, wfSite, wfTC, wfProps) "
           "VALUES (?,?,?,?,?)");
    s.bind_text(1, wms_wfid).bind_text(2, dag).bind_text(3, site)
        .bind_text(4, tc).bind_text(5, props);
    if (s.step() != SQLITE_DONE) {
      if (sqlite3_errcode(db_) == SQLITE_CONSTRAINT)
        throw DuplicateWmsWfid("wms_wfid " + wms_wfid + " already registered");
      throw StoreError(sqlite3_errmsg(db_));
    }
    return sqlite3_last_insert_rowid(db_);
  }

  WorkflowSource get_source(long wf_id) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT wfID, wms_wfid, wfDAG, wfSite, wfTC, wfProps "
                "FROM WorkflowSource WHERE wfID=?");
    s.bind_int64(1, wf_id);
    if (s.step() != SQLITE_ROW)
      throw UnknownWorkflow("no workflow with wf_id " + std::to_string(wf_id));
    return {s.col_int64(0), s.col_text(1), s.col_text(2),
            s.col_text(3), s.col_text(4), s.col_text(5)};
  }

  std::optional<long> find_wf_id(const std::string& wms_wfid) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT wfID FROM WorkflowSource WHERE wms_wfid=?");
    s.bind_text(1, wms_wfid);
    if (s.step() != SQLITE_ROW) return std::nullopt;
    return s.col_int64(0);
  }

  long count_workflows() const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT COUNT(*) FROM WorkflowSource");
    s.step();
    return s.col_int64(0);
  }

  long max_wms_counter() const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT COALESCE(MAX(wfID), 0) FROM WorkflowSource");
    s.step();
    return s.col_int64(0);
  }

  bool workflow_exists(long wf_id) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT 1 FROM WorkflowSource WHERE wfID=?");
    s.bind_int64(1, wf_id);
    return s.step() == SQLITE_ROW;
  }

  // -- WfCloudMapping ------------------------------------------------------

  void insert_cap_record(const CAPRecord& r) {
    if (!workflow_exists(r.wf_id))
      throw UnknownWorkflow("no workflow with wf_id " + std::to_string(r.wf_id));
    std::lock_guard lock(mu_);
    Stmt s(db_,
           "INSERT INTO WfCloudMapping (wfID, job_name, nodename, flavorid, "
           "flavorname, minRAM, minHD, minCPU, image_name, image_id, extra) "
           "VALUES (?,?,?,?,?,?,?,?,?,?,?)");
    bind_cap(s, r);
    if (s.step() != SQLITE_DONE) {
      if (sqlite3_errcode(db_) == SQLITE_CONSTRAINT)
        throw DuplicateMapping("mapping for (" + std::to_string(r.wf_id) + ", " +
                               r.job_name + ") already exists");
      throw StoreError(sqlite3_errmsg(db_));
    }
  }

  bool cap_exists(long wf_id, const std::string& job_name) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT 1 FROM WfCloudMapping WHERE wfID=? AND job_name=?");
    s.bind_int64(1, wf_id).bind_text(2, job_name);
    return s.step() == SQLITE_ROW;
  }

  std::vector<CAPRecord> get_cap(long wf_id) const {
    std::lock_guard lock(mu_);
    Stmt s(db_,
           "SELECT wfID, job_name, nodename, flavorid, flavorname, minRAM, "
           "minHD, minCPU, image_name, image_id, extra FROM WfCloudMapping "
           "WHERE wfID=? ORDER BY job_name");
    s.bind_int64(1, wf_id);
    std::vector<CAPRecord> out;
    while (s.step() == SQLITE_ROW) out.push_back(read_cap(s));
    return out;
  }

  // -- WfCloudTempMapping --------------------------------------------------

  void upsert_temp_mapping(const TempMapping& t) {
    std::lock_guard lock(mu_);
    Stmt s(db_,
           "INSERT INTO WfCloudTempMapping (wfID, job_name, nodename, flavorid, "
           "flavorname, minRAM, minHD, minCPU, image_name, image_id, extra, "
           "vm_id, capture_time) VALUES (?,?,?,?,?,?,?,?,?,?,?,?,?) "
           "ON CONFLICT (wfID, job_name) DO UPDATE SET "
           "nodename=excluded.nodename, flavorid=excluded.flavorid, "
           "flavorname=excluded.flavorname, minRAM=excluded.minRAM, "
           "minHD=excluded.minHD, minCPU=excluded.minCPU, "
           "image_name=excluded.image_name, image_id=excluded.image_id, "
           "extra=excluded.extra, vm_id=excluded.vm_id, "
           "capture_time=excluded.capture_time");
    bind_cap(s, t.cap);
    s.bind_text(12, t.vm_id).bind_double(13, t.capture_time);
    if (s.step() != SQLITE_DONE) throw StoreError(sqlite3_errmsg(db_));
  }

  std::optional<TempMapping> peek_temp_mapping(long wf_id,
                                               const std::string& job) const {
    std::lock_guard lock(mu_);
    return peek_temp_locked(wf_id, job);
  }

  /// Return-and-delete, atomic under the store mutex.
  std::optional<TempMapping> take_temp_mapping(long wf_id, const std::string& job) {
    std::lock_guard lock(mu_);
    auto t = peek_temp_locked(wf_id, job);
    if (t) {
      Stmt d(db_, "DELETE FROM WfCloudTempMapping WHERE wfID=? AND job_name=?");
      d.bind_int64(1, wf_id).bind_text(2, job);
      d.step();
    }
    return t;
  }

  long count_temp_mappings(long wf_id) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT COUNT(*) FROM WfCloudTempMapping WHERE wfID=?");
    s.bind_int64(1, wf_id);
    s.step();
    return s.col_int64(0);
  }

  // -- JobHostTempMap ------------------------------------------------------

  void upsert_job_host(const JobHostTemp& j) {
    std::lock_guard lock(mu_);
    Stmt s(db_,
           "INSERT INTO JobHostTempMap (wfID, job_name, host_ip, hostname) "
           "VALUES (?,?,?,?) ON CONFLICT (wfID, job_name) DO UPDATE SET "
           "host_ip=excluded.host_ip, hostname=excluded.hostname");
    s.bind_int64(1, j.wf_id).bind_text(2, j.job_name).bind_text(3, j.host_ip)
        .bind_text(4, j.hostname);
    if (s.step() != SQLITE_DONE) throw StoreError(sqlite3_errmsg(db_));
  }

  std::optional<JobHostTemp> get_job_host(long wf_id, const std::string& job) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT wfID, job_name, host_ip, hostname FROM JobHostTempMap "
                "WHERE wfID=? AND job_name=?");
    s.bind_int64(1, wf_id).bind_text(2, job);
    if (s.step() != SQLITE_ROW) return std::nullopt;
    return JobHostTemp{s.col_int64(0), s.col_text(1), s.col_text(2), s.col_text(3)};
  }

  void delete_job_host(long wf_id, const std::string& job) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "DELETE FROM JobHostTempMap WHERE wfID=? AND job_name=?");
    s.bind_int64(1, wf_id).bind_text(2, job);
    s.step();
  }

  long count_job_hosts(long wf_id) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT COUNT(*) FROM JobHostTempMap WHERE wfID=?");
    s.bind_int64(1, wf_id);
    s.step();
    return s.col_int64(0);
  }

  // -- LazyVmObservation ---------------------------------------------------

  bool has_vm_observation(const std::string& vm_id, double created_at) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT 1 FROM LazyVmObservation WHERE vm_id=? AND created_at=?");
    s.bind_text(1, vm_id).bind_double(2, created_at);
    return s.step() == SQLITE_ROW;
  }

  void record_vm_observation(const LazyVmObservation& o) {
    std::lock_guard lock(mu_);
    Stmt s(db_,
           "INSERT INTO LazyVmObservation (vm_id, ip, nodename, flavorid, "
           "flavorname, minRAM, minHD, minCPU, image_name, image_id, "
           "created_at, first_seen, last_seen) VALUES (?,?,?,?,?,?,?,?,?,?,?,?,?) "
           "ON CONFLICT (vm_id, created_at) DO UPDATE SET "
           "last_seen=excluded.last_seen");
    s.bind_text(1, o.vm_id).bind_text(2, o.ip).bind_text(3, o.nodename)
        .bind_int64(4, o.flavor_id).bind_text(5, o.flavor_name)
        .bind_int64(6, o.min_ram_mb).bind_int64(7, o.min_hd_gb)
        .bind_int64(8, o.min_cpu).bind_text(9, o.image_name)
        .bind_text(10, o.image_id).bind_double(11, o.created_at)
        .bind_double(12, o.first_seen).bind_double(13, o.last_seen);
    if (s.step() != SQLITE_DONE) throw StoreError(sqlite3_errmsg(db_));
  }

  /// Observation with matching ip minimizing |created_at - t|, preferring
  /// created_at <= t on distance ties.
  std::optional<LazyVmObservation> find_vm_by_ip_near(const std::string& ip,
                                                      double t) const {
    std::lock_guard lock(mu_);
    Stmt s(db_,
           "SELECT vm_id, ip, nodename, flavorid, flavorname, minRAM, minHD, "
           "minCPU, image_name, image_id, created_at, first_seen, last_seen "
           "FROM LazyVmObservation WHERE ip=?");
    s.bind_text(1, ip);
    std::optional<LazyVmObservation> best;
    while (s.step() == SQLITE_ROW) {
      LazyVmObservation o{s.col_text(0),       s.col_text(1),
                          s.col_text(2),       int(s.col_int64(3)),
                          s.col_text(4),       int(s.col_int64(5)),
                          int(s.col_int64(6)), int(s.col_int64(7)),
                          s.col_text(8),       s.col_text(9),
                          s.col_double(10),    s.col_double(11),
                          s.col_double(12)};
      if (!best) {
        best = o;
        continue;
      }
      double db_ = std::fabs(best->created_at - t), dn = std::fabs(o.created_at - t);
      if (dn < db_ || (dn == db_ && o.created_at <= t && best->created_at > t))
        best = o;
    }
    return best;
  }

  // -- CPUSpecs ------------------------------------------------------------

  void insert_cpu_spec(const CpuSpecRow& r) {
    std::lock_guard lock(mu_);
    Stmt s(db_, "INSERT INTO CPUSpecs (wfID, job_name, arch, os, mips, kflops) "
                "VALUES (?,?,?,?,?,?)");
    s.bind_int64(1, r.wf_id).bind_text(2, r.job_name).bind_text(3, r.arch)
        .bind_text(4, r.os).bind_int64(5, r.mips).bind_int64(6, r.kflops);
    if (s.step() != SQLITE_DONE) throw StoreError(sqlite3_errmsg(db_));
  }

  std::vector<CpuSpecRow> get_cpu_specs(long wf_id) const {
    std::lock_guard lock(mu_);
    Stmt s(db_, "SELECT wfID, job_name, arch, os, mips, kflops FROM CPUSpecs "
                "WHERE wfID=? ORDER BY job_name");
    s.bind_int64(1, wf_id);
    std::vector<CpuSpecRow> out;
    while (s.step() == SQLITE_ROW)
      out.push_back({s.col_int64(0), s.col_text(1), s.col_text(2), s.col_text(3),
                     s.col_int64(4), s.col_int64(5)});
    return out;
  }

  // -- JobCloudFile / CloudFileCatalog --------------------------------------

  void upsert_file_catalog(const CloudFileRow& r) {
    std::lock_guard lock(mu_);
    Stmt s(db_,
           "INSERT INTO CloudFileCatalog (container, keyname, md5, metadata, "
           "created, modified) VALUES (?,?,?,?,?,?) "
           "ON CONFLICT (container, keyname) DO UPDATE SET md5=excluded.md5, "
           "metadata=excluded.metadata, modified=excluded.modified");
    s.bind_text(1, r.container).bind_text(2, r.keyname).bind_text(3, r.md5)
        .bind_text(4, r.metadata).bind_double(5, r.created)
        .bind_double(6, r.modified);
    if (s.step() != SQLITE_DONE) throw StoreError(sqlite3_errmsg(db_));
  }

  void link_job_file(const JobCloudFile& j) {
    std::lock_guard lock(mu_);
    Stmt s(db_,
           "INSERT OR IGNORE INTO JobCloudFile (wfID, job_name, container, "
           "keyname) VALUES (?,?,?,?)");
    s.bind_int64(1, j.wf_id).bind_text(2, j.job_name).bind_text(3, j.container)
        .bind_text(4, j.keyname);
    if (s.step() != SQLITE_DONE) throw StoreError(sqlite3_errmsg(db_));
  }

  /// Declared job outputs joined with the file catalog.
  std::vector<std::pair<JobCloudFile, CloudFileRow>> get_job_files(long wf_id) const {
    std::lock_guard lock(mu_);
    Stmt s(db_,
           "SELECT j.wfID, j.job_name, j.container, j.keyname, c.md5, "
           "c.metadata, c.created, c.modified FROM JobCloudFile j "
           "JOIN CloudFileCatalog c ON j.container=c.container AND "
           "j.keyname=c.keyname WHERE j.wfID=? ORDER BY j.job_name, j.keyname");
    s.bind_int64(1, wf_id);
    std::vector<std::pair<JobCloudFile, CloudFileRow>> out;
    while (s.step() == SQLITE_ROW) {
      JobCloudFile j{s.col_int64(0), s.col_text(1), s.col_text(2), s.col_text(3)};
      CloudFileRow c{j.container,      j.keyname,        s.col_text(4),
                     s.col_text(5),    s.col_double(6),  s.col_double(7)};
      out.emplace_back(j, c);
    }
    return out;
  }

  // -- export / import -----------------------------------------------------

  nlohmann::json export_workflow(long wf_id) const {
    WorkflowSource src = get_source(wf_id);
    nlohmann::json j;
    j["source"] = {{"wf_id", src.wf_id},    {"wms_wfid", src.wms_wfid},
                   {"wf_dag", src.wf_dag},  {"wf_site", src.wf_site},
                   {"wf_tc", src.wf_tc},    {"wf_props", src.wf_props}};
    j["cap"] = nlohmann::json::array();
    for (const auto& r : get_cap(wf_id))
      j["cap"].push_back({{"job_name", r.job_name},
                          {"nodename", r.nodename},
                          {"flavor_id", r.flavor_id},
                          {"flavor_name", r.flavor_name},
                          {"min_ram_mb", r.min_ram_mb},
                          {"min_hd_gb", r.min_hd_gb},
                          {"min_cpu", r.min_cpu},
                          {"image_name", r.image_name},
                          {"image_id", r.image_id},
                          {"extra", r.extra}});
    j["cpu_specs"] = nlohmann::json::array();
    for (const auto& r : get_cpu_specs(wf_id))
      j["cpu_specs"].push_back({{"job_name", r.job_name},
                                {"arch", r.arch},
                                {"os", r.os},
                                {"mips", r.mips},
                                {"kflops", r.kflops}});
    j["files"] = nlohmann::json::array();
    for (const auto& [jf, cf] : get_job_files(wf_id))
      j["files"].push_back({{"job_name", jf.job_name},
                            {"container", jf.container},
                            {"keyname", jf.keyname},
                            {"md5", cf.md5},
                            {"metadata", cf.metadata},
                            {"created", cf.created},
                            {"modified", cf.modified}});
    return j;
  }

  long import_workflow(const nlohmann::json& j) {
    const auto& src = j.at("source");
    long wf_id = register_source(src.at("wms_wfid"), src.at("wf_dag"),
                                 src.at("wf_site"), src.at("wf_tc"),
                                 src.at("wf_props"));
    for (const auto& r : j.at("cap")) {
      CAPRecord cap{wf_id,
                    r.at("job_name"),
                    r.at("nodename"),
                    r.at("flavor_id"),
                    r.at("flavor_name"),
                    r.at("min_ram_mb"),
                    r.at("min_hd_gb"),
                    r.at("min_cpu"),
                    r.at("image_name"),
                    r.at("image_id"),
                    r.at("extra")};
      insert_cap_record(cap);
    }
    for (const auto& r : j.at("cpu_specs"))
      insert_cpu_spec({wf_id, r.at("job_name"), r.at("arch"), r.at("os"),
                       r.at("mips"), r.at("kflops")});
    for (const auto& r : j.at("files")) {
      upsert_file_catalog({r.at("container"), r.at("keyname"), r.at("md5"),
                           r.at("metadata"), r.at("created"), r.at("modified")});
      link_job_file({wf_id, r.at("job_name"), r.at("container"), r.at("keyname")});
    }
    return wf_id;
  }

 private:
  class Stmt {
   public:
    Stmt(sqlite3* db, const char* sql) {
      if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
        throw StoreError(std::string("prepare failed: ") + sqlite3_errmsg(db));
    }
    ~Stmt() { sqlite3_finalize(stmt_); }
    Stmt& bind_text(int i, const std::string& v) {
      sqlite3_bind_text(stmt_, i, v.c_str(), int(v.size()), SQLITE_TRANSIENT);
      return *this;
    }
    Stmt& bind_int64(int i, long v) {
      sqlite3_bind_int64(stmt_, i, v);
      return *this;
    }
    Stmt& bind_double(int i, double v) {
      sqlite3_bind_double(stmt_, i, v);
      return *this;
    }
    int step() { return sqlite3_step(stmt_); }
    std::string col_text(int i) const {
      const unsigned char* p = sqlite3_column_text(stmt_, i);
      return p ? reinterpret_cast<const char*>(p) : "";
    }
    long col_int64(int i) const { return long(sqlite3_column_int64(stmt_, i)); }
    double col_double(int i) const { return sqlite3_column_double(stmt_, i); }

   private:
    sqlite3_stmt* stmt_ = nullptr;
  };

  static void bind_cap(Stmt& s, const CAPRecord& r) {
    s.bind_int64(1, r.wf_id).bind_text(2, r.job_name).bind_text(3, r.nodename)
        .bind_int64(4, r.flavor_id).bind_text(5, r.flavor_name)
        .bind_int64(6, r.min_ram_mb).bind_int64(7, r.min_hd_gb)
        .bind_int64(8, r.min_cpu).bind_text(9, r.image_name)
        .bind_text(10, r.image_id).bind_text(11, r.extra);
  }

  static CAPRecord read_cap(Stmt& s) {
    return {s.col_int64(0),       s.col_text(1),       s.col_text(2),
            int(s.col_int64(3)),  s.col_text(4),       int(s.col_int64(5)),
            int(s.col_int64(6)),  int(s.col_int64(7)), s.col_text(8),
            s.col_text(9),        s.col_text(10)};
  }

  std::optional<TempMapping> peek_temp_locked(long wf_id,
                                              const std::string& job) const {
    Stmt s(db_,
           "SELECT wfID, job_name, nodename, flavorid, flavorname, minRAM, "
           "minHD, minCPU, image_name, image_id, extra, vm_id, capture_time "
           "FROM WfCloudTempMapping WHERE wfID=? AND job_name=?");
    s.bind_int64(1, wf_id).bind_text(2, job);
    if (s.step() != SQLITE_ROW) return std::nullopt;
    TempMapping t;
    t.cap = read_cap(s);
    t.vm_id = s.col_text(11);
    t.capture_time = s.col_double(12);
    return t;
  }

  void exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown";
      sqlite3_free(err);
      throw StoreError("schema init failed: " + msg);
    }
  }

  sqlite3* db_ = nullptr;
  mutable std::mutex mu_;
};

}  // namespace recap
