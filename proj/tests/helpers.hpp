// Shared test oracles and generators. Everything here is deliberately
// independent of the library's decision paths: the glob oracle is an NFA,
// the replay oracle judges straight off perms_of without compiled tables,
// and the temporal oracle is an offline pairwise scan.
#pragma once

#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "claw/compile.hpp"
#include "claw/model.hpp"
#include "claw/monitor.hpp"
#include "claw/validate.hpp"

namespace clawtest {

using namespace claw;

// ---- glob oracle: NFA over pattern positions -------------------------------

inline bool nfa_glob_match(std::string_view pattern, std::string_view value) {
  std::set<std::size_t> states = {0};
  auto close = [&](std::set<std::size_t>& s) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t p : std::set<std::size_t>(s)) {
        if (p < pattern.size() && pattern[p] == '*' && s.insert(p + 1).second)
          changed = true;
      }
    }
  };
  close(states);
  for (char c : value) {
    std::set<std::size_t> next;
    for (std::size_t p : states) {
      if (p >= pattern.size()) continue;
      if (pattern[p] == '*') next.insert(p);  // star consumes c and stays
      else if (pattern[p] == c) next.insert(p + 1);
    }
    close(next);
    states = std::move(next);
    if (states.empty()) return false;
  }
  return states.count(pattern.size()) > 0;
}

// ---- scope-hierarchy oracle -------------------------------------------------

struct HierarchyFailure {
  std::string subject;
  Scope lower;

  auto operator<=>(const HierarchyFailure&) const = default;
};

inline std::set<HierarchyFailure> hierarchy_oracle(const SecurityModel& m) {
  std::set<HierarchyFailure> out;
  auto perms = [&](const std::string& name, Scope s) {
    PermSet set;
    for (const auto& grant : m.grants)
      if (grant.pattern == name && grant.scope == s) set |= grant.perms;
    return set;
  };
  auto check = [&](const std::string& subject, PermSet sandbox, PermSet agent,
                   PermSet monitor) {
    for (Permission p : kAllPermissions) {
      if (sandbox.contains(p) && !agent.contains(p)) {
        out.insert({subject, Scope::Sandbox});
        break;
      }
    }
    for (Permission p : kAllPermissions) {
      if (agent.contains(p) && !monitor.contains(p)) {
        out.insert({subject, Scope::Agent});
        break;
      }
    }
  };
  for (const auto& pattern : m.patterns)
    check(pattern.name, perms(pattern.name, Scope::Sandbox),
          perms(pattern.name, Scope::Agent), perms(pattern.name, Scope::Monitor));
  check("defaults", m.defaults_for(Scope::Sandbox),
        m.defaults_for(Scope::Agent), m.defaults_for(Scope::Monitor));
  return out;
}

// ---- model-level replay oracle ---------------------------------------------

// Per-event sub-operation as the oracle sees it; used by the temporal scan.
struct OracleSubOp {
  std::string label;
  const EntityPattern* pattern = nullptr;  // nullptr: unmatched
  std::string identity;
  bool pid_based = false;
  int64_t pid = 0;
};

struct OracleVerdict {
  VerdictKind verdict = VerdictKind::Error;
  std::vector<OracleSubOp> subops;
};

// Straight model-level interpreter: resolve entities, read perms_of-style
// permissions, check the mapping-table requirement for each syscall. No
// compiled tables involved.
class ReplayOracle {
 public:
  explicit ReplayOracle(const SecurityModel& model) : model_(model) {}

  std::vector<OracleVerdict> run(const Trace& trace) {
    std::vector<OracleVerdict> out;
    for (const auto& item : trace.items) {
      if (const auto* directive = std::get_if<ScopeDirective>(&item)) {
        procs_[directive->pid].scope = directive->scope;
        continue;
      }
      out.push_back(judge(std::get<TraceEvent>(item)));
    }
    return out;
  }

 private:
  struct Fd {
    std::string identity;
    const EntityPattern* pattern = nullptr;
    bool is_socket = false;
    bool connected = false;
    bool append_mode = false;
    bool procfs = false;
    int64_t procfs_pid = 0;
  };
  struct Proc {
    Scope scope = Scope::Agent;
    std::map<int64_t, Fd> fds;
  };

  const SecurityModel& model_;
  std::map<int64_t, Proc> procs_;

  static std::optional<int64_t> procfs_pid(std::string_view path) {
    if (path.rfind("/proc/", 0) != 0) return std::nullopt;
    std::string_view rest = path.substr(6);
    std::size_t i = 0;
    while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
    if (i == 0 || (i != rest.size() && rest[i] != '/')) return std::nullopt;
    int64_t pid = 0;
    for (std::size_t k = 0; k < i; ++k) pid = pid * 10 + (rest[k] - '0');
    return pid;
  }

  const EntityPattern* resolve_path(const std::string& path) const {
    ConcreteAttrs attrs = {{"path", AttributeValue(path)}};
    for (const auto& pattern : model_.patterns) {
      if (pattern.kind != EntityKind::File &&
          pattern.kind != EntityKind::Directory &&
          pattern.kind != EntityKind::Device)
        continue;
      bool ok = true;
      for (const auto& matcher : pattern.attrs)
        if (matcher.key == "path" && !matcher.accepts(attrs[0].second))
          ok = false;
      if (ok) return &pattern;
    }
    return nullptr;
  }

  const EntityPattern* resolve_proc(int64_t pid,
                                    std::optional<Scope> scope) const {
    ConcreteAttrs attrs = {{"pid", AttributeValue(pid)},
                           {"scope", AttributeValue(std::string(
                                         scope ? to_string(*scope)
                                               : "unknown"))}};
    return resolve(EntityKind::Process, attrs, model_);
  }

  PermSet perms_of_pattern(const EntityPattern* pattern, Scope scope) const {
    if (pattern == nullptr) return model_.defaults_for(scope);
    return model_.pattern_perms(*pattern, scope);
  }

  // kind admission: matched patterns must have a kind the operation governs
  static bool kind_ok(const EntityPattern* pattern,
                      std::initializer_list<EntityKind> kinds) {
    if (pattern == nullptr) return true;  // defaults element is kind-agnostic
    for (EntityKind kind : kinds)
      if (pattern->kind == kind) return true;
    return false;
  }

  OracleVerdict judge(const TraceEvent& ev) {
    OracleVerdict out;
    auto proc_it = procs_.find(ev.pid);
    if (proc_it == procs_.end()) return out;  // Error
    Proc& proc = proc_it->second;
    Scope scope = proc.scope;

    auto allow = [&] { out.verdict = VerdictKind::Allow; };
    auto deny = [&] { out.verdict = VerdictKind::Deny; };

    auto path_subop = [&](const std::string& label, const std::string& path)
        -> OracleSubOp {
      if (auto pid = procfs_pid(path)) {
        std::optional<Scope> target_scope;
        if (auto it = procs_.find(*pid); it != procs_.end())
          target_scope = it->second.scope;
        return {"procfs", resolve_proc(*pid, target_scope), path, true, *pid};
      }
      return {label, resolve_path(path), path, false, 0};
    };
    auto fd_subop = [&](const std::string& label, const Fd& fd) -> OracleSubOp {
      if (fd.procfs) {
        std::optional<Scope> target_scope;
        if (auto it = procs_.find(fd.procfs_pid); it != procs_.end())
          target_scope = it->second.scope;
        return {"procfs", resolve_proc(fd.procfs_pid, target_scope),
                fd.identity, true, fd.procfs_pid};
      }
      return {label, fd.pattern, fd.identity, false, 0};
    };
    auto has = [&](const OracleSubOp& op, Permission perm) {
      return perms_of_pattern(op.pattern, scope).contains(perm);
    };

    const std::string& name = ev.syscall;
    auto fd_of = [&](std::size_t idx) -> Fd* {
      auto it = proc.fds.find(std::stoll(ev.args[idx]));
      return it == proc.fds.end() ? nullptr : &it->second;
    };

    if (name == "open") {
      const std::string& path = ev.args[0];
      const std::string& flags = ev.args[1];
      bool ok = true;
      if (auto pid = procfs_pid(path)) {
        OracleSubOp op = path_subop("procfs", path);
        out.subops.push_back(op);
        ok = has(op, Permission::Visible);
        (void)pid;
      } else {
        const EntityPattern* pattern = resolve_path(path);
        PermSet perms = perms_of_pattern(pattern, scope);
        bool file_like = kind_ok(pattern, {EntityKind::File, EntityKind::Device,
                                           EntityKind::Directory});
        for (char flag : {'R', 'W', 'A', 'C'}) {
          if (flags.find(flag) == std::string::npos) continue;
          std::string label = std::string("open(") + flag + ")";
          out.subops.push_back({label, pattern, path, false, 0});
          bool flag_ok = false;
          switch (flag) {
            case 'R':
              flag_ok = perms.contains(Permission::Read) &&
                        kind_ok(pattern, {EntityKind::File, EntityKind::Device,
                                          EntityKind::Directory});
              break;
            case 'W':
            case 'C':
              flag_ok = perms.contains(Permission::Write) &&
                        kind_ok(pattern, {EntityKind::File, EntityKind::Device});
              break;
            case 'A':
              flag_ok = perms.contains(Permission::Append) &&
                        kind_ok(pattern, {EntityKind::File, EntityKind::Device});
              break;
          }
          ok = ok && flag_ok && file_like;
        }
      }
      if (ok) {
        allow();
        Fd fd;
        fd.identity = path;
        fd.pattern = resolve_path(path);
        fd.append_mode = flags.find('A') != std::string::npos;
        if (auto pid = procfs_pid(path)) {
          fd.procfs = true;
          fd.procfs_pid = *pid;
          fd.pattern = nullptr;
          fd.append_mode = false;
        }
        proc.fds[*ev.ret] = fd;
      } else {
        deny();
      }
      return out;
    }
    if (name == "close") {
      Fd* fd = fd_of(0);
      if (fd == nullptr) return out;
      allow();
      proc.fds.erase(std::stoll(ev.args[0]));
      return out;
    }
    if (name == "dup") {
      Fd* fd = fd_of(0);
      if (fd == nullptr) return out;
      allow();
      proc.fds[*ev.ret] = *fd;
      return out;
    }
    if (name == "read" || name == "pread" || name == "readv") {
      Fd* fd = fd_of(0);
      if (fd == nullptr) return out;
      OracleSubOp op = fd_subop(name, *fd);
      out.subops.push_back(op);
      bool ok = fd->procfs
                    ? has(op, Permission::Visible)
                    : (has(op, Permission::Read) &&
                       kind_ok(fd->pattern, {EntityKind::File}) &&
                       !fd->is_socket);
      ok ? allow() : deny();
      return out;
    }
    if (name == "write" || name == "pwrite" || name == "writev") {
      Fd* fd = fd_of(0);
      if (fd == nullptr) return out;
      OracleSubOp op = fd_subop(name, *fd);
      out.subops.push_back(op);
      bool ok;
      if (fd->procfs) {
        ok = has(op, Permission::Visible);
      } else if (fd->is_socket || !kind_ok(fd->pattern, {EntityKind::File})) {
        ok = false;
      } else if (fd->append_mode) {
        ok = has(op, Permission::Write) || has(op, Permission::Append);
      } else {
        ok = has(op, Permission::Write);
      }
      ok ? allow() : deny();
      return out;
    }
    if (name == "mmap") {
      Fd* fd = fd_of(0);
      if (fd == nullptr) return out;
      bool ok = true;
      if (fd->procfs) {
        OracleSubOp op = fd_subop("procfs", *fd);
        out.subops.push_back(op);
        ok = has(op, Permission::Visible);
      } else {
        if (ev.args[1].find('R') != std::string::npos) {
          OracleSubOp op = fd_subop("mmap(R)", *fd);
          out.subops.push_back(op);
          ok = ok && has(op, Permission::Read) &&
               kind_ok(fd->pattern, {EntityKind::File}) && !fd->is_socket;
        }
        if (ev.args[1].find('W') != std::string::npos) {
          OracleSubOp op = fd_subop("mmap(W)", *fd);
          out.subops.push_back(op);
          ok = ok && has(op, Permission::Write) &&
               kind_ok(fd->pattern, {EntityKind::File}) && !fd->is_socket;
        }
      }
      ok ? allow() : deny();
      return out;
    }
    if (name == "sendfile") {
      Fd* out_fd = fd_of(0);
      if (out_fd == nullptr) return out;
      Fd* in_fd = fd_of(1);
      if (in_fd == nullptr) return out;
      if (out_fd->is_socket && !out_fd->connected) return out;
      OracleSubOp out_op = fd_subop("sendfile(out)", *out_fd);
      OracleSubOp in_op = fd_subop("sendfile(in)", *in_fd);
      out.subops.push_back(out_op);
      out.subops.push_back(in_op);
      bool ok_out =
          out_fd->procfs
              ? has(out_op, Permission::Visible)
              : (has(out_op, Permission::Write) &&
                 kind_ok(out_fd->pattern,
                         {EntityKind::File, EntityKind::Socket}));
      bool ok_in = in_fd->procfs
                       ? has(in_op, Permission::Visible)
                       : (has(in_op, Permission::Read) &&
                          kind_ok(in_fd->pattern, {EntityKind::File}) &&
                          !in_fd->is_socket);
      (ok_out && ok_in) ? allow() : deny();
      return out;
    }
    if (name == "lseek") {
      Fd* fd = fd_of(0);
      if (fd == nullptr) return out;
      OracleSubOp op = fd_subop("lseek", *fd);
      out.subops.push_back(op);
      bool ok;
      if (fd->procfs) {
        ok = has(op, Permission::Visible);
      } else {
        ok = !fd->append_mode && has(op, Permission::Append) &&
             kind_ok(fd->pattern, {EntityKind::File}) && !fd->is_socket;
      }
      ok ? allow() : deny();
      return out;
    }
    if (name == "getdents") {
      Fd* fd = fd_of(0);
      if (fd == nullptr) return out;
      OracleSubOp op = fd_subop("getdents", *fd);
      out.subops.push_back(op);
      bool ok = fd->procfs ? has(op, Permission::Visible)
                           : (has(op, Permission::Read) &&
                              kind_ok(fd->pattern, {EntityKind::Directory}) &&
                              !fd->is_socket);
      ok ? allow() : deny();
      return out;
    }
    if (name == "mkdir" || name == "creat" || name == "rmdir" ||
        name == "unlink") {
      OracleSubOp op = path_subop(name, ev.args[0]);
      out.subops.push_back(op);
      bool ok;
      if (op.label == "procfs") {
        ok = has(op, Permission::Visible);
      } else {
        bool create_ok = has(op, Permission::Write) ||
                         ((name == "mkdir" || name == "creat") &&
                          has(op, Permission::Append));
        ok = create_ok && kind_ok(op.pattern, {EntityKind::Directory});
      }
      if (ok) {
        allow();
        if (name == "creat") {
          Fd fd;
          fd.identity = ev.args[0];
          fd.pattern = resolve_path(ev.args[0]);
          if (auto pid = procfs_pid(ev.args[0])) {
            fd.procfs = true;
            fd.procfs_pid = *pid;
            fd.pattern = nullptr;
          }
          proc.fds[*ev.ret] = fd;
        }
      } else {
        deny();
      }
      return out;
    }
    if (name == "socket") {
      allow();
      Fd fd;
      fd.is_socket = true;
      proc.fds[*ev.ret] = fd;
      return out;
    }
    if (name == "connect") {
      Fd* fd = fd_of(0);
      if (fd == nullptr || !fd->is_socket) return out;
      allow();
      fd->identity = ev.args[1];
      fd->connected = true;
      ConcreteAttrs attrs = {{"addr", AttributeValue(ev.args[1])}};
      fd->pattern = resolve(EntityKind::Socket, attrs, model_);
      return out;
    }
    if (name == "sendto" || name == "sendmsg" || name == "recvfrom" ||
        name == "recvmsg") {
      Fd* fd = fd_of(0);
      if (fd == nullptr || !fd->is_socket || !fd->connected) return out;
      OracleSubOp op = fd_subop(name, *fd);
      out.subops.push_back(op);
      bool sending = name == "sendto" || name == "sendmsg";
      bool ok = has(op, sending ? Permission::Write : Permission::Read) &&
                kind_ok(fd->pattern, {EntityKind::Socket});
      ok ? allow() : deny();
      return out;
    }
    if (name == "execve") {
      OracleSubOp op = path_subop("execve", ev.args[0]);
      out.subops.push_back(op);
      bool ok;
      if (op.label == "procfs") {
        ok = has(op, Permission::Visible);
      } else {
        ok = kind_ok(op.pattern, {EntityKind::File}) &&
             !has(op, Permission::NoExecute);
      }
      ok ? allow() : deny();
      return out;
    }
    if (name == "fork" || name == "clone") {
      const EntityPattern* pattern = resolve_proc(ev.pid, scope);
      OracleSubOp op{name, pattern, "pid:" + std::to_string(ev.pid), true,
                     ev.pid};
      out.subops.push_back(op);
      if (!has(op, Permission::NoExecute)) {
        allow();
        procs_[*ev.ret] = proc;  // copy fds + scope
      } else {
        deny();
      }
      return out;
    }
    if (name == "stat") {
      OracleSubOp op = path_subop("stat", ev.args[0]);
      out.subops.push_back(op);
      has(op, Permission::Visible) ? allow() : deny();
      return out;
    }
    if (name == "fstat") {
      Fd* fd = fd_of(0);
      if (fd == nullptr) return out;
      OracleSubOp op = fd_subop("fstat", *fd);
      out.subops.push_back(op);
      has(op, Permission::Visible) ? allow() : deny();
      return out;
    }
    if (name == "ioctl") {
      Fd* fd = fd_of(0);
      if (fd == nullptr) return out;
      OracleSubOp op = fd_subop("ioctl", *fd);
      out.subops.push_back(op);
      bool ok = fd->procfs ? has(op, Permission::Visible)
                           : (has(op, Permission::Write) &&
                              kind_ok(fd->pattern, {EntityKind::Device}) &&
                              !fd->is_socket);
      ok ? allow() : deny();
      return out;
    }
    if (name == "ipc") {
      int64_t target = std::stoll(ev.args[1]);
      std::optional<Scope> target_scope;
      if (auto it = procs_.find(target); it != procs_.end())
        target_scope = it->second.scope;
      const EntityPattern* pattern = resolve_proc(target, target_scope);
      OracleSubOp op{ev.args[0], pattern, "pid:" + std::to_string(target),
                     true, target};
      out.subops.push_back(op);
      has(op, Permission::Write) ? allow() : deny();
      return out;
    }
    return out;  // Error: unhandled
  }
};

// ---- temporal pairwise-scan oracle ------------------------------------------

struct TemporalScan {
  std::set<std::pair<uint64_t, uint64_t>> violations;  // (trigger, body)
  std::set<uint64_t> unfulfilled;                      // trigger seqs
};

// Offline scan over the oracle's per-event sub-ops: trigger at t pairs with
// every allowed body at t' > t.
inline TemporalScan temporal_oracle(const SecurityModel& model,
                                    const TemporalRule& rule,
                                    const Trace& trace) {
  ReplayOracle oracle(model);
  std::vector<OracleVerdict> verdicts = oracle.run(trace);

  // gather events in order with their scope at judgment time
  struct Judged {
    uint64_t seq;
    Scope scope;
    const OracleVerdict* verdict;
  };
  std::vector<Judged> events;
  {
    std::map<int64_t, Scope> scopes;
    std::size_t vi = 0;
    std::map<int64_t, Scope> child_scopes;
    for (const auto& item : trace.items) {
      if (const auto* directive = std::get_if<ScopeDirective>(&item)) {
        scopes[directive->pid] = directive->scope;
        continue;
      }
      const auto& ev = std::get<TraceEvent>(item);
      auto it = scopes.find(ev.pid);
      Scope scope = it == scopes.end() ? Scope::Monitor : it->second;
      events.push_back({ev.seq, scope, &verdicts[vi]});
      if ((ev.syscall == "fork" || ev.syscall == "clone") &&
          verdicts[vi].verdict == VerdictKind::Allow && ev.ret)
        scopes[*ev.ret] = scope;
      ++vi;
    }
    (void)child_scopes;
  }

  auto ops_for_matcher = [&](const EventMatcher& m) {
    EntityKind kind = EntityKind::File;
    if (const auto* ref = std::get_if<PatternRef>(&m.target)) {
      const EntityPattern* pattern = model.find_pattern(ref->name);
      if (pattern != nullptr) kind = pattern->kind;
    } else {
      kind = std::get<AttrTarget>(m.target).kind;
    }
    return syscalls_for(kind, action_permission(m.action));
  };

  auto subop_matches = [&](const EventMatcher& m, Scope scope,
                           const OracleVerdict& v) {
    if (m.scope != scope || v.verdict != VerdictKind::Allow) return false;
    std::vector<std::string> ops = ops_for_matcher(m);
    for (const auto& subop : v.subops) {
      bool op_hit = false;
      for (const auto& op : ops) op_hit |= (op == subop.label);
      if (!op_hit) continue;
      if (const auto* ref = std::get_if<PatternRef>(&m.target)) {
        if (subop.pattern != nullptr && subop.pattern->name == ref->name)
          return true;
        continue;
      }
      const auto& structural = std::get<AttrTarget>(m.target);
      ConcreteAttrs attrs;
      if (subop.pid_based)
        attrs.push_back({"pid", AttributeValue(subop.pid)});
      else if (subop.label == "sendto" || subop.label == "sendmsg" ||
               subop.label == "recvfrom" || subop.label == "recvmsg" ||
               (subop.pattern != nullptr &&
                subop.pattern->kind == EntityKind::Socket))
        attrs.push_back({"addr", AttributeValue(subop.identity)});
      else
        attrs.push_back({"path", AttributeValue(subop.identity)});
      if (subop.pattern != nullptr) {
        bool ok = true;
        std::vector<AttributeMatcher> residual;
        for (const auto& matcher : structural.attrs) {
          const AttributeValue* concrete = nullptr;
          for (const auto& [key, value] : attrs)
            if (key == matcher.key) concrete = &value;
          if (concrete != nullptr) {
            if (!matcher.accepts(*concrete)) ok = false;
          } else {
            residual.push_back(matcher);
          }
        }
        if (ok && guard_admits(structural.kind, residual, *subop.pattern))
          return true;
        continue;
      }
      std::string_view primary = "path";
      if (structural.kind == EntityKind::Socket) primary = "addr";
      if (structural.kind == EntityKind::Process) primary = "pid";
      bool primary_present = false;
      for (const auto& [key, value] : attrs) primary_present |= key == primary;
      if (!primary_present) continue;
      bool ok = true;
      for (const auto& matcher : structural.attrs) {
        for (const auto& [key, value] : attrs)
          if (key == matcher.key && !matcher.accepts(value)) ok = false;
      }
      if (ok) return true;
    }
    return false;
  };

  std::vector<uint64_t> triggers;
  std::vector<uint64_t> bodies;
  for (const auto& judged : events) {
    if (subop_matches(rule.trigger, judged.scope, *judged.verdict))
      triggers.push_back(judged.seq);
    if (subop_matches(rule.body, judged.scope, *judged.verdict))
      bodies.push_back(judged.seq);
  }

  TemporalScan scan;
  if (rule.modality == TemporalModality::AlwaysForbid) {
    for (uint64_t t : triggers)
      for (uint64_t b : bodies)
        if (b > t) scan.violations.insert({t, b});
  } else {
    for (uint64_t t : triggers) {
      bool fulfilled = false;
      for (uint64_t b : bodies) fulfilled |= (b > t);
      if (!fulfilled) scan.unfulfilled.insert(t);
    }
  }
  return scan;
}

// ---- random generators ------------------------------------------------------

using Rng = std::mt19937;

inline int rand_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline bool rand_chance(Rng& rng, double p) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

template <typename T>
const T& rand_pick(Rng& rng, const std::vector<T>& pool) {
  return pool[static_cast<std::size_t>(rand_int(rng, 0, int(pool.size()) - 1))];
}

inline std::string rand_path_glob(Rng& rng) {
  static const std::vector<std::string> pool = {
      "/data/*",      "/secure/*",   "/tmp/*",        "/var/log/*",
      "/opt/tool.sh", "/data/a/*",   "/secure/key",   "/dev/*",
      "*",            "/data/*.log", "/proc/self",    "/home/agent/*"};
  return rand_pick(rng, pool);
}

inline std::string rand_concrete_path(Rng& rng) {
  static const std::vector<std::string> pool = {
      "/data/file.txt", "/data/a/b.txt",  "/secure/key",  "/secure/sub/cert",
      "/tmp/x",         "/var/log/a.log", "/opt/tool.sh", "/dev/cam0",
      "/etc/passwd",    "/home/agent/n",  "/data/x.log"};
  return rand_pick(rng, pool);
}

inline std::string rand_addr_glob(Rng& rng) {
  static const std::vector<std::string> pool = {
      "*", "evil.example:*", "*:443", "10.0.0.*", "api.internal:8080"};
  return rand_pick(rng, pool);
}

inline std::string rand_concrete_addr(Rng& rng) {
  static const std::vector<std::string> pool = {
      "evil.example:443", "api.internal:8080", "10.0.0.7:53",
      "cdn.example:443", "localhost:9"};
  return rand_pick(rng, pool);
}

inline PermSet rand_perm_set(Rng& rng) {
  PermSet out;
  for (Permission p : kAllPermissions)
    if (rand_chance(rng, 0.35)) out.insert(p);
  return out;
}

inline Scope rand_scope(Rng& rng) {
  return kAllScopes[static_cast<std::size_t>(rand_int(rng, 0, 2))];
}

struct ModelGenOptions {
  int max_patterns = 6;
  int max_grants = 10;
  bool with_policies = false;
  bool with_temporals = false;
};

inline SecurityModel random_model(Rng& rng, const ModelGenOptions& opts = {}) {
  SecurityModel model;
  int n_patterns = rand_int(rng, 1, opts.max_patterns);
  for (int i = 0; i < n_patterns; ++i) {
    EntityPattern pattern;
    pattern.name = "P" + std::to_string(i);
    pattern.kind = kAllKinds[static_cast<std::size_t>(rand_int(rng, 0, 4))];
    switch (pattern.kind) {
      case EntityKind::File:
      case EntityKind::Directory:
      case EntityKind::Device:
        pattern.attrs.push_back({"path", GlobPattern{rand_path_glob(rng)}});
        break;
      case EntityKind::Socket:
        pattern.attrs.push_back({"addr", GlobPattern{rand_addr_glob(rng)}});
        break;
      case EntityKind::Process:
        if (rand_chance(rng, 0.5)) {
          int lo = rand_int(rng, 1, 150);
          pattern.attrs.push_back(
              {"pid", IntRange{lo, lo + rand_int(rng, 0, 100)}});
        } else {
          pattern.attrs.push_back(
              {"scope", GlobPattern{std::string(
                            to_string(rand_scope(rng)))}});
        }
        break;
    }
    if (pattern.kind == EntityKind::File && rand_chance(rng, 0.25))
      pattern.attrs.push_back({"credential", BoolExact{true}});
    if ((pattern.kind == EntityKind::File ||
         pattern.kind == EntityKind::Directory) &&
        rand_chance(rng, 0.3))
      pattern.attrs.push_back({"sensitive", BoolExact{true}});
    pattern.declaration_index = model.patterns.size();
    model.patterns.push_back(std::move(pattern));
  }
  int n_grants = rand_int(rng, 0, opts.max_grants);
  for (int i = 0; i < n_grants; ++i) {
    Grant grant;
    grant.scope = rand_scope(rng);
    grant.pattern = model.patterns[static_cast<std::size_t>(
                                       rand_int(rng, 0, n_patterns - 1))]
                        .name;
    grant.perms = rand_perm_set(rng);
    if (grant.perms.empty()) grant.perms.insert(Permission::Visible);
    model.grants.push_back(std::move(grant));
  }
  for (Scope scope : kAllScopes)
    if (rand_chance(rng, 0.4))
      model.defaults[static_cast<std::size_t>(scope)] = rand_perm_set(rng);

  if (opts.with_policies) {
    int id = 0;
    if (rand_chance(rng, 0.7))
      model.policies.push_back(
          {"pol" + std::to_string(id++), BuiltinPolicy::ScopeHierarchy});
    if (rand_chance(rng, 0.4))
      model.policies.push_back(
          {"pol" + std::to_string(id++), BuiltinPolicy::NoExecAgent});
    if (rand_chance(rng, 0.4))
      model.policies.push_back(
          {"pol" + std::to_string(id++), BuiltinPolicy::CredentialVisibility});
    if (rand_chance(rng, 0.6)) {
      StaticFormula formula;
      formula.var = "e";
      if (rand_chance(rng, 0.4))
        formula.kind_guard =
            kAllKinds[static_cast<std::size_t>(rand_int(rng, 0, 4))];
      if (rand_chance(rng, 0.8)) {
        // primary key must fit the kind guard when one is present
        EntityKind key_kind = formula.kind_guard.value_or(EntityKind::File);
        if (key_kind == EntityKind::Socket)
          formula.guard.push_back({"addr", GlobPattern{rand_addr_glob(rng)}});
        else if (key_kind == EntityKind::Process)
          formula.guard.push_back({"pid", IntRange{1, rand_int(rng, 2, 300)}});
        else
          formula.guard.push_back({"path", GlobPattern{rand_path_glob(rng)}});
      }
      if (rand_chance(rng, 0.2))
        formula.guard.push_back({"sensitive", BoolExact{true}});
      if (!formula.kind_guard && formula.guard.empty())
        formula.guard.push_back({"path", GlobPattern{rand_path_glob(rng)}});
      formula.constraint.scope = rand_scope(rng);
      formula.constraint.relation = static_cast<Relation>(rand_int(rng, 0, 3));
      formula.constraint.perms = rand_perm_set(rng);
      model.policies.push_back({"pol" + std::to_string(id++), formula});
    }
    if (opts.with_temporals && rand_chance(rng, 0.6)) {
      TemporalRule rule;
      auto random_event = [&] {
        EventMatcher event;
        event.scope = rand_scope(rng);
        event.action =
            static_cast<EventAction>(rand_int(rng, 0, 4));
        if (rand_chance(rng, 0.7)) {
          event.target = PatternRef{
              model.patterns[static_cast<std::size_t>(
                                 rand_int(rng, 0, n_patterns - 1))]
                  .name};
        } else {
          AttrTarget target;
          target.kind =
              kAllKinds[static_cast<std::size_t>(rand_int(rng, 0, 4))];
          if (target.kind == EntityKind::Socket)
            target.attrs.push_back({"addr", GlobPattern{rand_addr_glob(rng)}});
          else if (target.kind != EntityKind::Process)
            target.attrs.push_back({"path", GlobPattern{rand_path_glob(rng)}});
          event.target = std::move(target);
        }
        return event;
      };
      rule.trigger = random_event();
      rule.modality = rand_chance(rng, 0.6)
                          ? TemporalModality::AlwaysForbid
                          : TemporalModality::EventuallyRequire;
      rule.body = random_event();
      model.policies.push_back({"pol" + std::to_string(id++), rule});
    }
  }
  return model;
}

// Random but well-formed traces: fds are opened before use often enough to
// exercise the allow paths, with occasional garbage fds for the error paths.
inline Trace random_trace(Rng& rng, int max_events) {
  Trace trace;
  uint64_t seq = 0;
  int64_t pid = 100;
  trace.items.push_back(ScopeDirective{pid, rand_scope(rng)});
  if (rand_chance(rng, 0.4))
    trace.items.push_back(ScopeDirective{101, rand_scope(rng)});
  std::vector<int64_t> open_fds;
  std::vector<int64_t> sockets;
  int64_t next_fd = 3;
  int events = rand_int(rng, 1, max_events);
  auto push = [&](std::string syscall, std::vector<std::string> args,
                  std::optional<int64_t> ret = std::nullopt) {
    TraceEvent event;
    event.seq = ++seq;
    event.pid = rand_chance(rng, 0.15) ? 101 : pid;
    event.syscall = std::move(syscall);
    event.args = std::move(args);
    event.ret = ret;
    trace.items.push_back(std::move(event));
  };
  for (int i = 0; i < events; ++i) {
    int choice = rand_int(rng, 0, 13);
    switch (choice) {
      case 0: {
        static const std::vector<std::string> flag_pool = {"R", "W", "A",
                                                           "R,W", "W,C", "A,R"};
        push("open", {rand_concrete_path(rng), rand_pick(rng, flag_pool)},
             next_fd);
        open_fds.push_back(next_fd++);
        break;
      }
      case 1:
        if (!open_fds.empty()) {
          push(rand_chance(rng, 0.5) ? "read" : "pread",
               {std::to_string(rand_pick(rng, open_fds)),
                std::to_string(rand_int(rng, 1, 4096))});
        } else {
          push("read", {"99", "16"});
        }
        break;
      case 2:
        if (!open_fds.empty()) {
          push(rand_chance(rng, 0.5) ? "write" : "pwrite",
               {std::to_string(rand_pick(rng, open_fds)),
                std::to_string(rand_int(rng, 1, 4096))});
        } else {
          push("write", {"98", "16"});
        }
        break;
      case 3:
        push("stat", {rand_concrete_path(rng)});
        break;
      case 4:
        push("execve", {rand_concrete_path(rng)});
        break;
      case 5: {
        push("socket", {}, next_fd);
        sockets.push_back(next_fd++);
        push("connect", {std::to_string(sockets.back()),
                         rand_concrete_addr(rng)});
        break;
      }
      case 6:
        if (!sockets.empty()) {
          push(rand_chance(rng, 0.7) ? "sendto" : "sendmsg",
               {std::to_string(rand_pick(rng, sockets)),
                std::to_string(rand_int(rng, 1, 2048))});
        } else {
          push("sendto", {"97", "128"});
        }
        break;
      case 7:
        if (!sockets.empty()) {
          push(rand_chance(rng, 0.7) ? "recvfrom" : "recvmsg",
               {std::to_string(rand_pick(rng, sockets)),
                std::to_string(rand_int(rng, 1, 2048))});
        } else {
          push("recvfrom", {"96", "128"});
        }
        break;
      case 8:
        push("mkdir", {rand_concrete_path(rng)});
        break;
      case 9:
        if (!open_fds.empty())
          push("mmap", {std::to_string(rand_pick(rng, open_fds)),
                        rand_chance(rng, 0.5) ? "R" : "RW"});
        break;
      case 10:
        if (!open_fds.empty())
          push("lseek", {std::to_string(rand_pick(rng, open_fds)),
                         std::to_string(rand_int(rng, 0, 1 << 20))});
        break;
      case 11:
        push("fork", {}, 200 + rand_int(rng, 0, 40));
        break;
      case 12:
        push("stat", {"/proc/" + std::to_string(rand_int(rng, 90, 110)) +
                      "/status"});
        break;
      case 13:
        if (open_fds.size() > 1 && !sockets.empty()) {
          push("sendfile", {std::to_string(rand_pick(rng, sockets)),
                            std::to_string(rand_pick(rng, open_fds)),
                            std::to_string(rand_int(rng, 1, 65536))});
        } else if (!open_fds.empty()) {
          push("fstat", {std::to_string(rand_pick(rng, open_fds))});
        } else {
          push("ipc", {"semop", std::to_string(rand_int(rng, 90, 110))});
        }
        break;
    }
  }
  return trace;
}

// ---- tiny S-expression well-formedness check --------------------------------

inline bool sexp_well_formed(std::string_view text) {
  int depth = 0;
  bool in_comment = false;
  for (char c : text) {
    if (in_comment) {
      if (c == '\n') in_comment = false;
      continue;
    }
    if (c == ';') {
      in_comment = true;
      continue;
    }
    if (c == '(') ++depth;
    if (c == ')') {
      --depth;
      if (depth < 0) return false;
    }
  }
  return depth == 0;
}

inline std::string render_trace(const Trace& trace) {
  std::ostringstream out;
  for (const auto& item : trace.items) {
    if (const auto* directive = std::get_if<ScopeDirective>(&item)) {
      out << "!scope " << directive->pid << ' ' << to_string(directive->scope)
          << '\n';
      continue;
    }
    const auto& event = std::get<TraceEvent>(item);
    out << event.seq << ' ' << event.pid << ' ' << event.syscall;
    for (const auto& arg : event.args) out << ' ' << arg;
    if (event.ret) out << " -> " << *event.ret;
    out << '\n';
  }
  return out.str();
}

}  // namespace clawtest
