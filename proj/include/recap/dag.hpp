#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "recap/errors.hpp"
#include "recap/ini.hpp"

namespace recap {

struct ObjectRef {
  std::string container;
  std::string keyname;
  bool operator<(const ObjectRef& o) const {
    return container != o.container ? container < o.container : keyname < o.keyname;
  }
  bool operator==(const ObjectRef& o) const = default;
};

/// One workflow job. Exactly one of length_mi / fixed_duration_s is set:
/// compute jobs cost length_mi instructions, sleep jobs run for a fixed
/// virtual duration regardless of CPU.
struct JobSpec {
  std::string name;
  std::optional<double> length_mi;
  std::optional<double> fixed_duration_s;
  int ram_req_mb = 0;
  int max_parallelism = 1;
  std::vector<ObjectRef> inputs;
  std::vector<ObjectRef> outputs;
  std::vector<std::string> args;
};

struct WorkflowDAG {
  std::vector<JobSpec> jobs;
  std::vector<std::pair<std::string, std::string>> edges;  // (parent, child)

  const JobSpec* find(const std::string& name) const {
    for (const auto& j : jobs)
      if (j.name == name) return &j;
    return nullptr;
  }

  std::vector<std::string> parents_of(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& [p, c] : edges)
      if (c == name) out.push_back(p);
    return out;
  }

  std::vector<std::string> children_of(const std::string& name) const {
    std::vector<std::string> out;
    for (const auto& [p, c] : edges)
      if (p == name) out.push_back(c);
    return out;
  }

  /// Validates names, edges, and acyclicity; returns a topological order
  /// stable with respect to declaration order.
  std::vector<std::string> validate() const {
    std::set<std::string> names;
    for (const auto& j : jobs) {
      if (!names.insert(j.name).second)
        throw DagFormatError("duplicate job name " + j.name);
      if (j.length_mi.has_value() == j.fixed_duration_s.has_value())
        throw DagFormatError("job " + j.name +
                             " must set exactly one of mi= / sleep=");
      if (j.max_parallelism < 1)
        throw DagFormatError("job " + j.name + " parallelism must be >= 1");
      if ((j.length_mi && *j.length_mi < 0) ||
          (j.fixed_duration_s && *j.fixed_duration_s < 0))
        throw DagFormatError("job " + j.name + " duration must be nonnegative");
    }
    std::map<std::string, int> indegree;
    for (const auto& j : jobs) indegree[j.name] = 0;
    for (const auto& [p, c] : edges) {
      if (!names.count(p) || !names.count(c))
        throw DagFormatError("edge references unknown job: " + p + " -> " + c);
      if (p == c) throw CyclicDag("self edge on " + p);
      ++indegree[c];
    }
    // Kahn's algorithm in declaration order.
    std::vector<std::string> order;
    std::vector<std::string> ready;
    for (const auto& j : jobs)
      if (indegree[j.name] == 0) ready.push_back(j.name);
    while (!ready.empty()) {
      std::string n = ready.front();
      ready.erase(ready.begin());
      order.push_back(n);
      for (const auto& j : jobs) {
        bool child = false;
        for (const auto& [p, c] : edges)
          if (p == n && c == j.name) child = true;
        if (child && --indegree[j.name] == 0) ready.push_back(j.name);
      }
    }
    if (order.size() != jobs.size()) throw CyclicDag("workflow DAG has a cycle");
    return order;
  }

  /// Inputs consumed by the workflow but produced by no job in it.
  std::vector<ObjectRef> primary_inputs() const {
    std::set<ObjectRef> produced;
    for (const auto& j : jobs)
      for (const auto& o : j.outputs) produced.insert(o);
    std::set<ObjectRef> out;
    for (const auto& j : jobs)
      for (const auto& i : j.inputs)
        if (!produced.count(i)) out.insert(i);
    return {out.begin(), out.end()};
  }
};

/// Serialize back into the text format; inverse of parse_dag up to
/// whitespace and comments.
inline std::string dag_to_text(const WorkflowDAG& dag) {
  std::ostringstream out;
  auto num = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };
  for (const auto& j : dag.jobs) {
    out << "job " << j.name;
    if (j.length_mi) out << " mi=" << num(*j.length_mi);
    if (j.fixed_duration_s) out << " sleep=" << num(*j.fixed_duration_s);
    if (j.ram_req_mb) out << " ram=" << j.ram_req_mb;
    if (j.max_parallelism != 1) out << " par=" << j.max_parallelism;
    for (const auto& i : j.inputs) out << " in=" << i.container << ":" << i.keyname;
    for (const auto& o : j.outputs) out << " out=" << o.container << ":" << o.keyname;
    for (const auto& a : j.args) out << " arg=" << a;
    out << "\n";
  }
  for (const auto& [p, c] : dag.edges) out << "edge " << p << " " << c << "\n";
  return out.str();
}

/// Text DAG format (the DAX stand-in):
///   job <name> mi=<minstr>|sleep=<secs> [ram=<mb>] [par=<n>]
///       [in=container:key]... [out=container:key]... [arg=<token>]...
///   edge <parent> <child>
inline WorkflowDAG parse_dag(const std::string& text) {
  WorkflowDAG dag;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto object_ref = [](const std::string& v, int ln) {
    auto colon = v.find(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == v.size())
      throw DagFormatError("expected container:key at line " + std::to_string(ln));
    return ObjectRef{v.substr(0, colon), v.substr(colon + 1)};
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = IniFile::trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::istringstream tok(s);
    std::string kind;
    tok >> kind;
    if (kind == "job") {
      JobSpec job;
      if (!(tok >> job.name))
        throw DagFormatError("job without a name at line " + std::to_string(lineno));
      std::string field;
      while (tok >> field) {
        auto eq = field.find('=');
        if (eq == std::string::npos)
          throw DagFormatError("expected key=value at line " + std::to_string(lineno));
        std::string key = field.substr(0, eq), val = field.substr(eq + 1);
        if (key == "mi") job.length_mi = std::stod(val);
        else if (key == "sleep") job.fixed_duration_s = std::stod(val);
        else if (key == "ram") job.ram_req_mb = std::stoi(val);
        else if (key == "par") job.max_parallelism = std::stoi(val);
        else if (key == "in") job.inputs.push_back(object_ref(val, lineno));
        else if (key == "out") job.outputs.push_back(object_ref(val, lineno));
        else if (key == "arg") job.args.push_back(val);
        else
          throw DagFormatError("unknown job field '" + key + "' at line " +
                               std::to_string(lineno));
      }
      dag.jobs.push_back(std::move(job));
    } else if (kind == "edge") {
      std::string p, c;
      if (!(tok >> p >> c))
        throw DagFormatError("edge needs parent and child at line " +
                             std::to_string(lineno));
      dag.edges.emplace_back(p, c);
    } else {
      throw DagFormatError("unknown directive '" + kind + "' at line " +
                           std::to_string(lineno));
    }
  }
  dag.validate();
  return dag;
}

}  // namespace recap
