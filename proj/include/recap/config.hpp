#pragma once

#include <string>
#include <vector>

#include "recap/errors.hpp"
#include "recap/ini.hpp"
#include "recap/mappers.hpp"

namespace recap {

/// Operator configuration, seven sections as in the deployment config.
struct RecapConfig {
  IniFile ini;
  MappingStrategyKind mapping_type = MappingStrategyKind::STATIC;
  std::string scenario_path;       // cloud_settings.scenario
  std::string object_store_path;   // storage_settings.object_store_path
  std::string db_url;              // recapdb_settings.dburl
  std::string wms_monitor;         // WMS_settings.wms_monitor
  std::string wms_parser;          // WMS_settings.wms_parser
  std::string endpoint;            // WrapperService.endpoint
  std::string service_user;
  std::string service_password;
  std::string log_conf;

  static RecapConfig load(const IniFile& ini) {
    static const char* kSections[] = {
        "cloud_settings",  "storage_settings", "wmsdb_settings",
        "recapdb_settings", "WMS_settings",     "WrapperService",
        "log_settings"};
    for (const char* s : kSections)
      if (!ini.has_section(s)) throw ConfigError("missing section [" + std::string(s) + "]");
    RecapConfig cfg;
    cfg.ini = ini;
    cfg.mapping_type = parse_strategy(ini.get("cloud_settings", "MAPPING_TYPE"));
    cfg.scenario_path = ini.get_or("cloud_settings", "scenario", "");
    cfg.object_store_path = ini.get_or("storage_settings", "object_store_path", "");
    cfg.db_url = ini.get("recapdb_settings", "dburl");
    cfg.wms_monitor = ini.get_or("WMS_settings", "wms_monitor", "SimMonitor");
    cfg.wms_parser = ini.get_or("WMS_settings", "wms_parser", "SimParser");
    cfg.endpoint = ini.get_or("WrapperService", "endpoint",
                              "http://127.0.0.1:5000/service_wrapper/api/v1.0");
    cfg.service_user = ini.get("WrapperService", "service_user");
    cfg.service_password = ini.get("WrapperService", "service_password");
    cfg.log_conf = ini.get_or("log_settings", "log_conf", "");
    return cfg;
  }

  static RecapConfig load_text(const std::string& text) {
    return load(IniFile::parse(text));
  }

  static RecapConfig load_file(const std::string& path) {
    return load(IniFile::parse_file(path));
  }

  /// sqlite path from the dburl; accepts plain paths and sqlite:/// urls.
  std::string store_path() const {
    const std::string prefix = "sqlite:///";
    if (db_url.rfind(prefix, 0) == 0) return db_url.substr(prefix.size());
    return db_url;
  }
};

}  // namespace recap
