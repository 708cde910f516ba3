#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "recap/digest.hpp"
#include "recap/engine.hpp"
#include "recap/errors.hpp"
#include "recap/ini.hpp"

namespace recap {

// ---------------------------------------------------------------------------
// IaaS resource model

struct Flavor {
  int flavor_id = 0;
  std::string name;
  int vcpus = 1;
  int ram_mb = 1;
  int disk_gb = 1;
};

struct MachineImage {
  std::string image_id;
  std::string name;
  std::set<std::string> software_manifest;
};

struct CpuSpec {
  std::string arch = "x86_64";
  std::string os = "Linux";
  long mips = 0;
  long kflops = 0;
};

enum class VmState { BUILDING, RUNNING, SHUTOFF, DESTROYED };

struct VirtualMachine {
  std::string vm_id;
  std::string nodename;
  std::string ip;
  Flavor flavor;
  MachineImage image;
  CpuSpec cpu_spec;
  VmState state = VmState::BUILDING;
  double created_at = 0.0;
  std::map<std::string, std::string> extra;

  std::string extra_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : extra) j[k] = v;
    return j.dump();
  }
};

struct CloudFileRecord {
  std::string container;
  std::string keyname;
  std::string md5;
  std::map<std::string, std::string> metadata;
  double created = 0.0;
  double modified = 0.0;
};

// ---------------------------------------------------------------------------
// IPv4 pool: lowest-free-address allocation with recycling after destroy.

class IpPool {
 public:
  explicit IpPool(const std::string& cidr = "10.0.0.0/24") {
    auto slash = cidr.find('/');
    if (slash == std::string::npos) throw ConfigError("bad CIDR: " + cidr);
    network_ = parse_ipv4(cidr.substr(0, slash));
    int prefix = std::stoi(cidr.substr(slash + 1));
    if (prefix < 8 || prefix > 30) throw ConfigError("bad CIDR prefix: " + cidr);
    std::uint32_t mask = prefix == 0 ? 0 : ~std::uint32_t(0) << (32 - prefix);
    network_ &= mask;
    first_ = network_ + 1;              // skip network address
    last_ = (network_ | ~mask) - 1;     // skip broadcast address
    next_ = first_;
  }

  std::string allocate() {
    std::uint32_t addr;
    if (!recycled_.empty() && (*recycled_.begin() < next_ || next_ > last_)) {
      addr = *recycled_.begin();
      recycled_.erase(recycled_.begin());
    } else if (next_ <= last_) {
      addr = next_++;
    } else {
      throw PoolExhausted("no free IPs in pool");
    }
    return format_ipv4(addr);
  }

  void release(const std::string& ip) { recycled_.insert(parse_ipv4(ip)); }

  std::size_t capacity() const { return last_ - first_ + 1; }

  static std::uint32_t parse_ipv4(const std::string& s) {
    std::uint32_t out = 0;
    std::istringstream in(s);
    std::string part;
    int n = 0;
    while (std::getline(in, part, '.')) {
      int v = std::stoi(part);
      if (v < 0 || v > 255) throw ConfigError("bad IPv4: " + s);
      out = (out << 8) | std::uint32_t(v);
      ++n;
    }
    if (n != 4) throw ConfigError("bad IPv4: " + s);
    return out;
  }

  static std::string format_ipv4(std::uint32_t a) {
    return std::to_string((a >> 24) & 255) + "." + std::to_string((a >> 16) & 255) +
           "." + std::to_string((a >> 8) & 255) + "." + std::to_string(a & 255);
  }

 private:
  std::uint32_t network_ = 0, first_ = 0, last_ = 0, next_ = 0;
  std::set<std::uint32_t> recycled_;
};

// ---------------------------------------------------------------------------
// Per-VM CPU benchmark generator.

struct MipsModel {
  enum class Mode { FIXED, UNIFORM, TABLE };
  Mode mode = Mode::UNIFORM;
  long fixed_mips = 12500;
  long center = 12500;
  long spread = 1500;
  std::uint32_t seed = 42;
  std::vector<std::pair<long, long>> table;  // (mips, kflops) consumed in order
  double scale = 1.0;

  CpuSpec next() {
    CpuSpec spec;
    switch (mode) {
      case Mode::FIXED:
        spec.mips = fixed_mips;
        spec.kflops = fixed_mips * 100;
        break;
      case Mode::UNIFORM: {
        std::uniform_int_distribution<long> dist(center - spread, center + spread);
        spec.mips = dist(rng_);
        spec.kflops = spec.mips * 100;
        break;
      }
      case Mode::TABLE: {
        if (table.empty()) throw ConfigError("mips table is empty");
        auto [m, k] = table[table_pos_ % table.size()];
        ++table_pos_;
        spec.mips = m;
        spec.kflops = k;
        break;
      }
    }
    spec.mips = long(double(spec.mips) * scale);
    spec.kflops = long(double(spec.kflops) * scale);
    return spec;
  }

  void reseed() { rng_.seed(seed); table_pos_ = 0; }

 private:
  std::mt19937 rng_{seed};
  std::size_t table_pos_ = 0;
};

// ---------------------------------------------------------------------------
// Scenario definition: flavors, images, IP CIDR, MIPS distribution and the
// static/dynamic lifecycle mode.

enum class Lifecycle { STATIC, DYNAMIC };

struct CloudScenario {
  std::string ip_cidr = "10.0.0.0/24";
  Lifecycle lifecycle = Lifecycle::STATIC;
  MipsModel mips;
  std::vector<Flavor> flavors;
  std::vector<MachineImage> images;
  std::string object_store_path;  // optional JSON-backed persistence

  /// Default catalog; tiny's 512 MB partners the RAM-failure experiments.
  static std::vector<Flavor> default_flavors() {
    return {{1, "m1.tiny", 1, 512, 5},
            {2, "m1.small", 1, 1024, 10},
            {3, "m1.medium", 2, 2048, 20},
            {4, "m1.large", 4, 4096, 40}};
  }

  static CloudScenario parse(const IniFile& ini) {
    CloudScenario sc;
    sc.ip_cidr = ini.get_or("cloud", "ip_cidr", sc.ip_cidr);
    std::string mode = ini.get_or("cloud", "lifecycle", "static");
    if (mode == "static") sc.lifecycle = Lifecycle::STATIC;
    else if (mode == "dynamic") sc.lifecycle = Lifecycle::DYNAMIC;
    else throw ConfigError("lifecycle must be static or dynamic, got " + mode);

    std::string mm = ini.get_or("cloud", "mips_mode", "uniform");
    if (mm == "fixed") sc.mips.mode = MipsModel::Mode::FIXED;
    else if (mm == "uniform") sc.mips.mode = MipsModel::Mode::UNIFORM;
    else if (mm == "table") sc.mips.mode = MipsModel::Mode::TABLE;
    else throw ConfigError("unknown mips_mode " + mm);
    sc.mips.fixed_mips = ini.get_int("cloud", "mips_fixed", sc.mips.fixed_mips);
    sc.mips.center = ini.get_int("cloud", "mips_center", sc.mips.center);
    sc.mips.spread = ini.get_int("cloud", "mips_spread", sc.mips.spread);
    sc.mips.seed = std::uint32_t(ini.get_int("cloud", "mips_seed", sc.mips.seed));
    if (ini.has("cloud", "mips_table")) {
      for (const auto& entry : IniFile::split(ini.get("cloud", "mips_table"), ',')) {
        auto parts = IniFile::split(entry, ':');
        if (parts.size() != 2) throw ConfigError("bad mips_table entry " + entry);
        sc.mips.table.emplace_back(std::stol(parts[0]), std::stol(parts[1]));
      }
    }
    sc.mips.reseed();
    sc.object_store_path = ini.get_or("cloud", "object_store_path", "");

    if (ini.has_section("flavors")) {
      for (const auto& [name, val] : ini.section("flavors")) {
        auto f = IniFile::split(val, ',');
        if (f.size() != 4)
          throw ConfigError("flavor " + name + " needs id,vcpus,ram_mb,disk_gb");
        Flavor fl{std::stoi(f[0]), name, std::stoi(f[1]), std::stoi(f[2]),
                  std::stoi(f[3])};
        if (fl.vcpus < 1 || fl.ram_mb < 1 || fl.disk_gb < 1)
          throw ConfigError("flavor " + name + " fields must be positive");
        sc.flavors.push_back(fl);
      }
    } else {
      sc.flavors = default_flavors();
    }
    std::sort(sc.flavors.begin(), sc.flavors.end(),
              [](const Flavor& a, const Flavor& b) { return a.flavor_id < b.flavor_id; });
    for (std::size_t i = 1; i < sc.flavors.size(); ++i)
      if (sc.flavors[i].flavor_id == sc.flavors[i - 1].flavor_id)
        throw ConfigError("duplicate flavor_id " +
                          std::to_string(sc.flavors[i].flavor_id));

    if (ini.has_section("images")) {
      for (const auto& [name, val] : ini.section("images")) {
        auto parts = IniFile::split(val, ',');
        MachineImage img;
        img.name = name;
        img.image_id = parts.at(0);
        if (parts.size() > 1)
          for (const auto& lib : IniFile::split(parts[1], ';'))
            img.software_manifest.insert(lib);
        sc.images.push_back(img);
      }
    } else {
      sc.images.push_back({"img-default", "default-image", {}});
    }
    return sc;
  }

  static CloudScenario parse_file(const std::string& path) {
    return parse(IniFile::parse_file(path));
  }
};

// ---------------------------------------------------------------------------
// Object storage (Swift stand-in). Optionally persisted as one JSON file so
// CLI invocations can share state across processes.

class ObjectStore {
 public:
  explicit ObjectStore(SimEngine& engine, std::string backing_path = "")
      : engine_(engine), backing_path_(std::move(backing_path)) {
    if (!backing_path_.empty()) load();
  }

  CloudFileRecord put(const std::string& container, const std::string& keyname,
                      const std::string& bytes,
                      const std::map<std::string, std::string>& metadata = {}) {
    auto key = std::make_pair(container, keyname);
    auto it = objects_.find(key);
    double now = engine_.now();
    if (it == objects_.end()) {
      Object obj;
      obj.bytes = bytes;
      obj.record = {container, keyname, md5_hex(bytes), metadata, now, now};
      it = objects_.emplace(key, std::move(obj)).first;
    } else {
      it->second.bytes = bytes;
      it->second.record.md5 = md5_hex(bytes);
      it->second.record.metadata = metadata;
      it->second.record.modified = now;
    }
    persist();
    return it->second.record;
  }

  std::pair<std::string, CloudFileRecord> get(const std::string& container,
                                              const std::string& keyname) const {
    auto it = objects_.find({container, keyname});
    if (it == objects_.end())
      throw UnknownObject("no object " + container + "/" + keyname);
    return {it->second.bytes, it->second.record};
  }

  bool exists(const std::string& container, const std::string& keyname) const {
    return objects_.count({container, keyname}) > 0;
  }

  std::vector<CloudFileRecord> list(const std::string& container,
                                    const std::string& prefix = "") const {
    std::vector<CloudFileRecord> out;
    for (const auto& [key, obj] : objects_)
      if (key.first == container && key.second.rfind(prefix, 0) == 0)
        out.push_back(obj.record);
    return out;
  }

 private:
  struct Object {
    std::string bytes;
    CloudFileRecord record;
  };

  void persist() {
    if (backing_path_.empty()) return;
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [key, obj] : objects_) {
      nlohmann::json meta = nlohmann::json::object();
      for (const auto& [k, v] : obj.record.metadata) meta[k] = v;
      arr.push_back({{"container", key.first},
                     {"keyname", key.second},
                     {"bytes", base64_encode(obj.bytes)},
                     {"metadata", meta},
                     {"created", obj.record.created},
                     {"modified", obj.record.modified}});
    }
    std::ofstream out(backing_path_, std::ios::trunc);
    out << arr.dump();
  }

  void load() {
    std::ifstream in(backing_path_);
    if (!in) return;
    nlohmann::json arr;
    try {
      in >> arr;
    } catch (const nlohmann::json::exception&) {
      return;
    }
    for (const auto& j : arr) {
      Object obj;
      obj.bytes = base64_decode(j.at("bytes").get<std::string>());
      obj.record.container = j.at("container").get<std::string>();
      obj.record.keyname = j.at("keyname").get<std::string>();
      obj.record.md5 = md5_hex(obj.bytes);
      obj.record.created = j.at("created").get<double>();
      obj.record.modified = j.at("modified").get<double>();
      for (const auto& [k, v] : j.at("metadata").items())
        obj.record.metadata[k] = v.get<std::string>();
      objects_[{obj.record.container, obj.record.keyname}] = std::move(obj);
    }
  }

  SimEngine& engine_;
  std::string backing_path_;
  std::map<std::pair<std::string, std::string>, Object> objects_;
};

// ---------------------------------------------------------------------------
// The simulated IaaS compute layer. One logical state machine; list_vms
// hands out value snapshots.

class Cloud {
 public:
  Cloud(SimEngine& engine, CloudScenario scenario)
      : engine_(engine),
        scenario_(std::move(scenario)),
        pool_(scenario_.ip_cidr),
        storage_(engine, scenario_.object_store_path) {}

  const CloudScenario& scenario() const { return scenario_; }
  Lifecycle lifecycle() const { return scenario_.lifecycle; }
  ObjectStore& storage() { return storage_; }
  const ObjectStore& storage() const { return storage_; }

  const Flavor& flavor_by_name(const std::string& name) const {
    for (const auto& f : scenario_.flavors)
      if (f.name == name) return f;
    throw UnknownFlavor("no flavor named " + name);
  }

  const Flavor& flavor_by_id(int id) const {
    for (const auto& f : scenario_.flavors)
      if (f.flavor_id == id) return f;
    throw UnknownFlavor("no flavor with id " + std::to_string(id));
  }

  const std::vector<Flavor>& flavors() const { return scenario_.flavors; }

  const MachineImage& image_by_name(const std::string& name) const {
    for (const auto& i : scenario_.images)
      if (i.name == name) return i;
    throw UnknownImage("no image named " + name);
  }

  const MachineImage& image_by_id(const std::string& id) const {
    for (const auto& i : scenario_.images)
      if (i.image_id == id) return i;
    throw UnknownImage("no image with id " + id);
  }

  VirtualMachine provision(const std::string& flavor_name,
                           const std::string& image_name,
                           const std::string& nodename) {
    const Flavor& flavor = flavor_by_name(flavor_name);
    const MachineImage& image = image_by_name(image_name);
    for (const auto& [id, vm] : vms_)
      if (vm.state == VmState::RUNNING && vm.nodename == nodename)
        throw NameInUse("nodename " + nodename + " already RUNNING");
    std::string ip = pool_.allocate();

    VirtualMachine vm;
    vm.vm_id = "vm-" + std::to_string(++vm_counter_);
    vm.nodename = nodename;
    vm.ip = ip;
    vm.flavor = flavor;
    vm.image = image;
    vm.cpu_spec = scenario_.mips.next();
    vm.state = VmState::RUNNING;
    vm.created_at = std::max(engine_.now(), last_created_at_);
    last_created_at_ = vm.created_at;
    vms_[vm.vm_id] = vm;
    return vm;
  }

  void destroy(const std::string& vm_id) {
    auto it = vms_.find(vm_id);
    if (it == vms_.end()) throw UnknownVm("no VM " + vm_id);
    if (it->second.state == VmState::DESTROYED)
      throw AlreadyDestroyed("VM " + vm_id + " already destroyed");
    pool_.release(it->second.ip);
    it->second.state = VmState::DESTROYED;
  }

  /// Point-in-time snapshot of all RUNNING VMs (value copies).
  std::vector<VirtualMachine> list_vms() const {
    std::vector<VirtualMachine> out;
    for (const auto& [id, vm] : vms_)
      if (vm.state == VmState::RUNNING) out.push_back(vm);
    std::sort(out.begin(), out.end(),
              [](const VirtualMachine& a, const VirtualMachine& b) {
                return a.created_at != b.created_at ? a.created_at < b.created_at
                                                    : a.vm_id < b.vm_id;
              });
    return out;
  }

  /// Every VM ever created, destroyed ones included (the nova-style DB
  /// view). Sorted like list_vms().
  std::vector<VirtualMachine> list_all_vms() const {
    std::vector<VirtualMachine> out;
    for (const auto& [id, vm] : vms_) out.push_back(vm);
    std::sort(out.begin(), out.end(),
              [](const VirtualMachine& a, const VirtualMachine& b) {
                return a.created_at != b.created_at ? a.created_at < b.created_at
                                                    : a.vm_id < b.vm_id;
              });
    return out;
  }

  std::optional<VirtualMachine> find_running_by_ip(const std::string& ip) const {
    for (const auto& [id, vm] : vms_)
      if (vm.state == VmState::RUNNING && vm.ip == ip) return vm;
    return std::nullopt;
  }

  std::optional<VirtualMachine> find_vm(const std::string& vm_id) const {
    auto it = vms_.find(vm_id);
    if (it == vms_.end()) return std::nullopt;
    return it->second;
  }

  bool is_running(const std::string& vm_id) const {
    auto it = vms_.find(vm_id);
    return it != vms_.end() && it->second.state == VmState::RUNNING;
  }

  /// Uniform scaling of every RUNNING VM's benchmark, plus future
  /// provisions. Drives the MIPS-scaling experiments.
  void scale_mips(double k) {
    for (auto& [id, vm] : vms_) {
      vm.cpu_spec.mips = long(double(vm.cpu_spec.mips) * k);
      vm.cpu_spec.kflops = long(double(vm.cpu_spec.kflops) * k);
    }
    scenario_.mips.scale *= k;
  }

 private:
  SimEngine& engine_;
  CloudScenario scenario_;
  IpPool pool_;
  ObjectStore storage_;
  std::map<std::string, VirtualMachine> vms_;
  std::uint64_t vm_counter_ = 0;
  double last_created_at_ = 0.0;
};

}  // namespace recap
