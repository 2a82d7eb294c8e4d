#include "claw/monitor.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "claw/validate.hpp"

namespace claw {

std::string_view to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::Allow: return "ALLOW";
    case VerdictKind::Deny: return "DENY";
    case VerdictKind::Error: return "ERROR";
  }
  return "?";
}

const EventRecord* Report::find(uint64_t seq) const {
  for (const auto& event : events)
    if (event.seq == seq) return &event;
  return nullptr;
}

bool Report::flagged() const {
  return deny_count > 0 || !violations.empty() || !leaks.empty();
}

namespace {

bool is_read_label(std::string_view label) {
  return label == "read" || label == "pread" || label == "readv" ||
         label == "mmap(R)" || label == "sendfile(in)" || label == "recvfrom" ||
         label == "recvmsg" || label == "getdents";
}

struct FdBinding {
  std::string identity;
  std::string element = "default";
  const EntityPattern* pattern = nullptr;  // nullptr: defaults element
  bool is_socket = false;
  bool connected = false;
  bool append_mode = false;
  bool procfs = false;
  int64_t procfs_pid = 0;
};

struct ProcEntry {
  Scope scope = Scope::Agent;
  std::map<int64_t, FdBinding> fds;
};

// One permission lookup the handler needs; identity/attrs feed temporal
// matching and context tracking.
struct SubCheck {
  std::string label;  // sub-op label (open(A), mmap(R), ...)
  std::string key;    // dispatch key in the rule table
  std::string element;
  const EntityPattern* pattern = nullptr;
  std::string identity;
  ConcreteAttrs attrs;
  std::vector<Permission> acceptable;
  bool socket_side = false;  // this check touches a socket entity
};

std::optional<int64_t> procfs_pid(std::string_view path) {
  constexpr std::string_view prefix = "/proc/";
  if (path.substr(0, prefix.size()) != prefix) return std::nullopt;
  std::string_view rest = path.substr(prefix.size());
  std::size_t digits = 0;
  while (digits < rest.size() && rest[digits] >= '0' && rest[digits] <= '9')
    ++digits;
  if (digits == 0) return std::nullopt;
  if (digits != rest.size() && rest[digits] != '/') return std::nullopt;
  int64_t pid = 0;
  for (std::size_t i = 0; i < digits; ++i) pid = pid * 10 + (rest[i] - '0');
  return pid;
}

}  // namespace

struct MonitorState::Impl {
  const SecurityModel* model;
  std::array<RuleTable, 3> tables;
  std::vector<MonitorSpec> specs;

  struct SpecState {
    std::vector<uint64_t> trigger_seqs;               // AlwaysForbid
    std::vector<std::pair<uint64_t, bool>> obligations;  // EventuallyRequire
  };
  std::vector<SpecState> spec_states;

  std::map<int64_t, ProcEntry> procs;
  std::set<std::string> context;  // entity identities read by Agent scope
  std::set<std::string> leaked;
  std::vector<RuleUpdate> pending;  // sorted by at_seq, stable
  Report report;

  Impl(const SecurityModel& resolution, std::array<RuleTable, 3> t,
       std::vector<MonitorSpec> s)
      : model(&resolution), tables(std::move(t)), specs(std::move(s)) {
    spec_states.resize(specs.size());
  }

  const RuleTable& table_for(Scope scope) const {
    return tables[static_cast<std::size_t>(scope)];
  }

  uint64_t effective_version(Scope scope) const {
    uint64_t version = table_for(scope).version;
    for (const auto& update : pending)
      if (update.scope == scope) version = std::max(version, update.table.version);
    return version;
  }

  bool update_rules(Scope scope, RuleTable table, uint64_t at_seq) {
    if (table.version <= effective_version(scope)) return false;
    RuleUpdate update{at_seq, scope, std::move(table)};
    auto at = std::upper_bound(
        pending.begin(), pending.end(), update,
        [](const RuleUpdate& a, const RuleUpdate& b) { return a.at_seq < b.at_seq; });
    pending.insert(at, std::move(update));
    return true;
  }

  void apply_pending(uint64_t seq) {
    while (!pending.empty() && pending.front().at_seq <= seq) {
      RuleUpdate update = std::move(pending.front());
      pending.erase(pending.begin());
      tables[static_cast<std::size_t>(update.scope)] = std::move(update.table);
    }
  }

  // -- path/entity resolution ------------------------------------------

  void resolve_path(std::string_view path, SubCheck& check) const {
    check.identity = std::string(path);
    check.attrs = {{"path", AttributeValue(std::string(path))}};
    for (const auto& pattern : model->patterns) {
      if (pattern.kind != EntityKind::File &&
          pattern.kind != EntityKind::Directory &&
          pattern.kind != EntityKind::Device)
        continue;
      bool accepted = true;
      for (const auto& matcher : pattern.attrs) {
        if (matcher.key != "path") continue;  // classification flags skipped
        if (!matcher.accepts(check.attrs[0].second)) {
          accepted = false;
          break;
        }
      }
      if (accepted) {
        check.element = pattern.name;
        check.pattern = &pattern;
        return;
      }
    }
    check.element = "default";
  }

  // untracked target pids carry scope "unknown" so scope-keyed patterns
  // stay fail-closed instead of matching vacuously
  void resolve_process(int64_t pid, std::optional<Scope> scope,
                       SubCheck& check) const {
    check.identity = "pid:" + std::to_string(pid);
    check.attrs = {{"pid", AttributeValue(pid)},
                   {"scope", AttributeValue(std::string(
                                 scope ? to_string(*scope) : "unknown"))}};
    const EntityPattern* pattern =
        resolve(EntityKind::Process, check.attrs, *model);
    if (pattern != nullptr) {
      check.element = pattern->name;
      check.pattern = pattern;
    } else {
      check.element = "default";
    }
  }

  void bind_from_fd(const FdBinding& binding, SubCheck& check) const {
    check.element = binding.element;
    check.pattern = binding.pattern;
    check.identity = binding.identity;
    if (binding.is_socket) {
      check.attrs = {{"addr", AttributeValue(binding.identity)}};
      check.socket_side = true;
    } else {
      check.attrs = {{"path", AttributeValue(binding.identity)}};
    }
  }

  SubCheck procfs_check(int64_t target_pid) const {
    SubCheck check;
    check.label = "procfs";
    check.key = "procfs";
    check.acceptable = {Permission::Visible};
    std::optional<Scope> scope;
    auto proc = procs.find(target_pid);
    if (proc != procs.end()) scope = proc->second.scope;
    resolve_process(target_pid, scope, check);
    return check;
  }

  // -- decision ----------------------------------------------------------

  // First rule for (key, element) whose permission is acceptable decides;
  // no rule means implicit deny.
  void decide_check(const RuleTable& table, SubCheck& check,
                    CheckRecord& record) const {
    record.op = check.label;
    record.element = check.element;
    record.identity = check.identity;
    record.perm = check.acceptable.front();
    const std::vector<Rule>* rules = table.rules_for(check.key);
    if (rules != nullptr) {
      for (const Rule& rule : *rules) {
        if (rule.element != check.element) continue;
        bool acceptable = false;
        for (Permission p : check.acceptable) acceptable |= (p == rule.perm);
        if (!acceptable) continue;
        record.perm = rule.perm;
        record.satisfied = rule.allow;
        record.provenance = rule.provenance;
        return;
      }
    }
    record.satisfied = false;
    record.provenance = {"no matching rule"};
  }

  std::string check_failure_text(const CheckRecord& record) const {
    if (record.perm == Permission::NoExecute &&
        record.provenance != std::vector<std::string>{"no matching rule"})
      return "NoExec held on " + record.element;
    if (record.provenance == std::vector<std::string>{"no matching rule"})
      return "no " + std::string(to_string(record.perm)) + " rule for " +
             record.op + " on " + record.element;
    return record.op + " denied on " + record.element;
  }

  // -- temporal layer ------------------------------------------------------

  const AttributeValue* concrete_value(const SubCheck& check,
                                       std::string_view key) const {
    for (const auto& [name, value] : check.attrs)
      if (name == key) return &value;
    return nullptr;
  }

  bool target_matches(const EventTarget& target, const SubCheck& check) const {
    if (const auto* ref = std::get_if<PatternRef>(&target))
      return check.pattern != nullptr && check.pattern->name == ref->name;
    const auto& structural = std::get<AttrTarget>(target);
    if (check.pattern != nullptr) {
      // concrete event attributes win; remaining matchers fall back to
      // pattern-level coverage, same test the validator uses
      std::vector<AttributeMatcher> residual;
      for (const auto& matcher : structural.attrs) {
        if (const AttributeValue* value = concrete_value(check, matcher.key)) {
          if (!matcher.accepts(*value)) return false;
        } else {
          residual.push_back(matcher);
        }
      }
      return guard_admits(structural.kind, residual, *check.pattern);
    }
    // unmatched entity: the target kind's primary key must be present and
    // every matcher with a concrete counterpart must accept it
    std::string_view primary = "path";
    if (structural.kind == EntityKind::Socket) primary = "addr";
    if (structural.kind == EntityKind::Process) primary = "pid";
    if (concrete_value(check, primary) == nullptr) return false;
    for (const auto& matcher : structural.attrs) {
      const AttributeValue* value = concrete_value(check, matcher.key);
      if (value == nullptr) continue;
      if (!matcher.accepts(*value)) return false;
    }
    return true;
  }

  bool pred_matches(const MonitorSpec::Pred& pred, Scope scope,
                    const std::vector<SubCheck>& checks) const {
    if (pred.scope != scope) return false;
    for (const auto& check : checks) {
      bool op_hit = false;
      for (const auto& op : pred.ops) op_hit |= (op == check.label);
      if (!op_hit) continue;
      if (target_matches(pred.target, check)) return true;
    }
    return false;
  }

  void temporal_allowed(uint64_t seq, Scope scope,
                        const std::vector<SubCheck>& checks) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const MonitorSpec& spec = specs[i];
      SpecState& state = spec_states[i];
      // body first: a trigger pairs only with strictly later bodies
      if (pred_matches(spec.body, scope, checks)) {
        if (spec.modality == TemporalModality::AlwaysForbid) {
          for (uint64_t trigger_seq : state.trigger_seqs)
            if (trigger_seq < seq)
              report.violations.push_back({spec.name, trigger_seq, seq});
        } else {
          for (auto& [trigger_seq, fulfilled] : state.obligations)
            if (trigger_seq < seq) fulfilled = true;
        }
      }
      if (pred_matches(spec.trigger, scope, checks)) {
        if (spec.modality == TemporalModality::AlwaysForbid)
          state.trigger_seqs.push_back(seq);
        else
          state.obligations.push_back({seq, false});
      }
    }
  }

  void temporal_denied(uint64_t seq, Scope scope,
                       const std::vector<SubCheck>& checks) {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      const MonitorSpec& spec = specs[i];
      if (spec.modality != TemporalModality::AlwaysForbid) continue;
      SpecState& state = spec_states[i];
      if (state.trigger_seqs.empty()) continue;
      if (!pred_matches(spec.body, scope, checks)) continue;
      uint64_t first_trigger = 0;
      bool found = false;
      for (uint64_t trigger_seq : state.trigger_seqs) {
        if (trigger_seq < seq) {
          first_trigger = trigger_seq;
          found = true;
          break;
        }
      }
      if (found) report.warnings.push_back({spec.name, first_trigger, seq});
    }
  }

  void context_and_leaks(uint64_t seq, Scope scope,
                         const std::vector<SubCheck>& checks) {
    if (scope != Scope::Agent) return;
    for (const auto& check : checks) {
      if (is_read_label(check.label) && !check.identity.empty())
        context.insert(check.identity);
    }
    for (const auto& check : checks) {
      bool socket_write = check.label == "sendto" || check.label == "sendmsg" ||
                          (check.label == "sendfile(out)" && check.socket_side);
      if (!socket_write) continue;
      for (const auto& identity : context) {
        if (leaked.count(identity) != 0) continue;
        leaked.insert(identity);
        report.leaks.push_back({seq, identity});
      }
      break;
    }
  }

  // -- event processing ---------------------------------------------------

  int64_t arg_int(const TraceEvent& event, std::size_t index) const {
    return std::stoll(event.args[index]);
  }

  void step_event(const TraceEvent& event) {
    apply_pending(event.seq);

    EventRecord rec;
    rec.seq = event.seq;
    rec.pid = event.pid;
    rec.syscall = event.syscall;
    {
      std::string text;
      for (const auto& arg : event.args) {
        if (!text.empty()) text += ' ';
        text += arg;
      }
      if (event.ret) {
        if (!text.empty()) text += ' ';
        text += "-> " + std::to_string(*event.ret);
      }
      rec.args_text = text;
    }

    auto finish_error = [&](std::string reason) {
      rec.verdict = VerdictKind::Error;
      rec.detail = std::move(reason);
      ++report.error_count;
      report.events.push_back(std::move(rec));
    };

    auto proc_it = procs.find(event.pid);
    if (proc_it == procs.end()) {
      finish_error("no scope known for pid " + std::to_string(event.pid));
      return;
    }
    ProcEntry& proc = proc_it->second;
    Scope scope = proc.scope;
    const RuleTable& table = table_for(scope);

    const std::string& name = event.syscall;
    std::vector<SubCheck> checks;
    bool forced_deny = false;
    std::string forced_deny_reason;

    auto fd_binding = [&](int64_t fd) -> FdBinding* {
      auto it = proc.fds.find(fd);
      return it == proc.fds.end() ? nullptr : &it->second;
    };

    auto push_path_check = [&](std::string label, std::string key,
                               const std::string& path,
                               std::vector<Permission> acceptable) {
      auto pid = procfs_pid(path);
      if (pid) {
        SubCheck check = procfs_check(*pid);
        check.identity = path;
        checks.push_back(std::move(check));
        return;
      }
      SubCheck check;
      check.label = std::move(label);
      check.key = std::move(key);
      check.acceptable = std::move(acceptable);
      resolve_path(path, check);
      checks.push_back(std::move(check));
    };

    auto push_fd_check = [&](std::string label, std::string key,
                             const FdBinding& binding,
                             std::vector<Permission> acceptable) {
      if (binding.procfs) {
        SubCheck check = procfs_check(binding.procfs_pid);
        check.identity = binding.identity;
        checks.push_back(std::move(check));
        return;
      }
      SubCheck check;
      check.label = std::move(label);
      check.key = std::move(key);
      check.acceptable = std::move(acceptable);
      bind_from_fd(binding, check);
      checks.push_back(std::move(check));
    };

    // file-class operations never apply to socket fds, matched or not
    auto socket_misuse = [&](const std::string& label,
                             const FdBinding& binding) {
      if (!binding.is_socket) return false;
      forced_deny = true;
      forced_deny_reason = label + " not mapped for socket fds";
      CheckRecord record;
      record.op = label;
      record.element = binding.element;
      record.identity = binding.identity;
      record.perm = Permission::Read;
      record.satisfied = false;
      record.provenance = {"socket fds carry no " + label + " mapping"};
      rec.checks.push_back(std::move(record));
      return true;
    };

    // handler body: resolve arguments, build checks, figure out the state
    // effect to apply on Allow
    enum class Effect {
      None,
      OpenFd,
      CloseFd,
      DupFd,
      CreatFd,
      SocketFd,
      Connect,
      Fork,
    };
    Effect effect = Effect::None;
    int64_t effect_fd = 0;
    FdBinding effect_binding;

    if (name == "open") {
      const std::string& path = event.args[0];
      const std::string& flags = event.args[1];
      bool append_flag = false;
      auto pid = procfs_pid(path);
      if (pid) {
        SubCheck check = procfs_check(*pid);
        check.identity = path;
        checks.push_back(std::move(check));
      } else {
        struct FlagOp {
          char flag;
          const char* label;
          Permission perm;
        };
        static const FlagOp kFlagOps[] = {
            {'R', "open(R)", Permission::Read},
            {'W', "open(W)", Permission::Write},
            {'A', "open(A)", Permission::Append},
            {'C', "open(C)", Permission::Write},
        };
        for (const auto& op : kFlagOps) {
          if (flags.find(op.flag) == std::string::npos) continue;
          push_path_check(op.label, "open", path, {op.perm});
          if (op.flag == 'A') append_flag = true;
        }
      }
      effect = Effect::OpenFd;
      effect_fd = *event.ret;
      effect_binding.identity = path;
      effect_binding.append_mode = append_flag;
      if (pid) {
        effect_binding.procfs = true;
        effect_binding.procfs_pid = *pid;
        effect_binding.element = checks.back().element;
        effect_binding.pattern = checks.back().pattern;
      } else if (!checks.empty()) {
        effect_binding.element = checks.front().element;
        effect_binding.pattern = checks.front().pattern;
      } else {
        SubCheck probe;
        resolve_path(path, probe);
        effect_binding.element = probe.element;
        effect_binding.pattern = probe.pattern;
      }
    } else if (name == "close") {
      int64_t fd = arg_int(event, 0);
      if (fd_binding(fd) == nullptr)
        return finish_error("unknown fd " + std::to_string(fd));
      effect = Effect::CloseFd;
      effect_fd = fd;
    } else if (name == "dup") {
      int64_t fd = arg_int(event, 0);
      FdBinding* binding = fd_binding(fd);
      if (binding == nullptr)
        return finish_error("unknown fd " + std::to_string(fd));
      effect = Effect::DupFd;
      effect_fd = *event.ret;
      effect_binding = *binding;
    } else if (name == "read" || name == "pread" || name == "readv") {
      FdBinding* binding = fd_binding(arg_int(event, 0));
      if (binding == nullptr)
        return finish_error("unknown fd " + event.args[0]);
      if (!socket_misuse(name, *binding))
        push_fd_check(name, name, *binding, {Permission::Read});
    } else if (name == "write" || name == "pwrite" || name == "writev") {
      FdBinding* binding = fd_binding(arg_int(event, 0));
      if (binding == nullptr)
        return finish_error("unknown fd " + event.args[0]);
      std::vector<Permission> acceptable = {Permission::Write};
      if (binding->append_mode)
        acceptable = {Permission::Write, Permission::Append};
      if (!socket_misuse(name, *binding))
        push_fd_check(name, name, *binding, std::move(acceptable));
    } else if (name == "mmap") {
      FdBinding* binding = fd_binding(arg_int(event, 0));
      if (binding == nullptr)
        return finish_error("unknown fd " + event.args[0]);
      const std::string& prot = event.args[1];
      if (!socket_misuse("mmap", *binding)) {
        if (prot.find('R') != std::string::npos)
          push_fd_check("mmap(R)", "mmap", *binding, {Permission::Read});
        if (prot.find('W') != std::string::npos)
          push_fd_check("mmap(W)", "mmap", *binding, {Permission::Write});
      }
    } else if (name == "sendfile") {
      FdBinding* out_binding = fd_binding(arg_int(event, 0));
      if (out_binding == nullptr)
        return finish_error("unknown out fd " + event.args[0]);
      FdBinding* in_binding = fd_binding(arg_int(event, 1));
      if (in_binding == nullptr)
        return finish_error("unknown in fd " + event.args[1]);
      if (out_binding->is_socket && !out_binding->connected)
        return finish_error("socket fd " + event.args[0] + " not connected");
      push_fd_check("sendfile(out)", "sendfile", *out_binding,
                    {Permission::Write});
      if (!socket_misuse("sendfile(in)", *in_binding))
        push_fd_check("sendfile(in)", "sendfile", *in_binding,
                      {Permission::Read});
    } else if (name == "lseek") {
      FdBinding* binding = fd_binding(arg_int(event, 0));
      if (binding == nullptr)
        return finish_error("unknown fd " + event.args[0]);
      if (socket_misuse("lseek", *binding)) {
      } else if (binding->append_mode) {
        forced_deny = true;
        forced_deny_reason = "lseek on append-mode fd";
        CheckRecord record;
        record.op = "lseek";
        record.element = binding->element;
        record.identity = binding->identity;
        record.perm = Permission::Append;
        record.satisfied = false;
        record.provenance = {"append-mode fd: seek forbidden"};
        rec.checks.push_back(std::move(record));
      } else {
        push_fd_check("lseek", "lseek", *binding, {Permission::Append});
      }
    } else if (name == "getdents") {
      FdBinding* binding = fd_binding(arg_int(event, 0));
      if (binding == nullptr)
        return finish_error("unknown fd " + event.args[0]);
      if (!socket_misuse("getdents", *binding))
        push_fd_check("getdents", "getdents", *binding, {Permission::Read});
    } else if (name == "mkdir" || name == "creat") {
      push_path_check(name, name, event.args[0],
                      {Permission::Write, Permission::Append});
      if (name == "creat") {
        effect = Effect::CreatFd;
        effect_fd = *event.ret;
        effect_binding.identity = event.args[0];
        if (auto pid = procfs_pid(event.args[0])) {
          effect_binding.procfs = true;
          effect_binding.procfs_pid = *pid;
        }
        effect_binding.element = checks.back().element;
        effect_binding.pattern = checks.back().pattern;
      }
    } else if (name == "rmdir" || name == "unlink") {
      push_path_check(name, name, event.args[0], {Permission::Write});
    } else if (name == "socket") {
      effect = Effect::SocketFd;
      effect_fd = *event.ret;
      effect_binding.is_socket = true;
      effect_binding.element = "default";
    } else if (name == "connect") {
      int64_t fd = arg_int(event, 0);
      FdBinding* binding = fd_binding(fd);
      if (binding == nullptr)
        return finish_error("unknown fd " + std::to_string(fd));
      if (!binding->is_socket)
        return finish_error("fd " + std::to_string(fd) + " is not a socket");
      effect = Effect::Connect;
      effect_fd = fd;
      effect_binding = *binding;
      effect_binding.identity = event.args[1];
      effect_binding.connected = true;
      ConcreteAttrs attrs = {{"addr", AttributeValue(event.args[1])}};
      const EntityPattern* pattern = resolve(EntityKind::Socket, attrs, *model);
      effect_binding.pattern = pattern;
      effect_binding.element = pattern != nullptr ? pattern->name : "default";
    } else if (name == "sendto" || name == "sendmsg" || name == "recvfrom" ||
               name == "recvmsg") {
      FdBinding* binding = fd_binding(arg_int(event, 0));
      if (binding == nullptr)
        return finish_error("unknown fd " + event.args[0]);
      if (!binding->is_socket)
        return finish_error("fd " + event.args[0] + " is not a socket");
      if (!binding->connected)
        return finish_error("socket fd " + event.args[0] + " not connected");
      bool sending = name == "sendto" || name == "sendmsg";
      push_fd_check(name, name, *binding,
                    {sending ? Permission::Write : Permission::Read});
    } else if (name == "execve") {
      push_path_check("execve", "execve", event.args[0],
                      {Permission::NoExecute});
    } else if (name == "fork" || name == "clone") {
      SubCheck check;
      check.label = name;
      check.key = name;
      check.acceptable = {Permission::NoExecute};
      resolve_process(event.pid, scope, check);
      checks.push_back(std::move(check));
      effect = Effect::Fork;
      effect_fd = *event.ret;  // child pid
    } else if (name == "stat") {
      push_path_check("stat", "stat", event.args[0], {Permission::Visible});
    } else if (name == "fstat") {
      FdBinding* binding = fd_binding(arg_int(event, 0));
      if (binding == nullptr)
        return finish_error("unknown fd " + event.args[0]);
      push_fd_check("fstat", "fstat", *binding, {Permission::Visible});
    } else if (name == "ioctl") {
      FdBinding* binding = fd_binding(arg_int(event, 0));
      if (binding == nullptr)
        return finish_error("unknown fd " + event.args[0]);
      if (!socket_misuse("ioctl", *binding))
        push_fd_check("ioctl", "ioctl", *binding, {Permission::Write});
    } else if (name == "ipc") {
      const std::string& op = event.args[0];
      int64_t target = arg_int(event, 1);
      SubCheck check;
      check.label = op;
      check.key = op;
      check.acceptable = {Permission::Write};
      std::optional<Scope> target_scope;
      auto target_it = procs.find(target);
      if (target_it != procs.end()) target_scope = target_it->second.scope;
      resolve_process(target, target_scope, check);
      checks.push_back(std::move(check));
    } else {
      return finish_error("unhandled syscall '" + name + "'");
    }

    // decide
    bool allowed = !forced_deny;
    std::string deny_detail = forced_deny_reason;
    for (auto& check : checks) {
      CheckRecord record;
      decide_check(table, check, record);
      if (!record.satisfied && allowed) {
        allowed = false;
        deny_detail = check_failure_text(record);
      }
      rec.checks.push_back(std::move(record));
    }

    if (allowed) {
      rec.verdict = VerdictKind::Allow;
      ++report.allow_count;
      switch (effect) {
        case Effect::None: break;
        case Effect::OpenFd:
        case Effect::CreatFd:
        case Effect::DupFd:
        case Effect::SocketFd:
        case Effect::Connect:
          proc.fds[effect_fd] = effect_binding;
          break;
        case Effect::CloseFd:
          proc.fds.erase(effect_fd);
          break;
        case Effect::Fork: {
          ProcEntry child;
          child.scope = scope;
          child.fds = proc.fds;
          procs[effect_fd] = std::move(child);
          break;
        }
      }
      context_and_leaks(event.seq, scope, checks);
      temporal_allowed(event.seq, scope, checks);
    } else {
      rec.verdict = VerdictKind::Deny;
      rec.detail = deny_detail;
      ++report.deny_count;
      temporal_denied(event.seq, scope, checks);
    }
    report.events.push_back(std::move(rec));
  }

  void step(const TraceItem& item) {
    if (const auto* directive = std::get_if<ScopeDirective>(&item)) {
      procs[directive->pid].scope = directive->scope;
      return;
    }
    step_event(std::get<TraceEvent>(item));
  }

  Report finish() {
    for (std::size_t i = 0; i < specs.size(); ++i) {
      if (specs[i].modality != TemporalModality::EventuallyRequire) continue;
      for (const auto& [trigger_seq, fulfilled] : spec_states[i].obligations)
        if (!fulfilled)
          report.unfulfilled.push_back({specs[i].name, trigger_seq});
    }
    return std::move(report);
  }
};

MonitorState::MonitorState(const SecurityModel& resolution,
                           std::array<RuleTable, 3> tables,
                           std::vector<MonitorSpec> specs)
    : impl_(std::make_unique<Impl>(resolution, std::move(tables),
                                   std::move(specs))) {}

MonitorState::~MonitorState() = default;
MonitorState::MonitorState(MonitorState&&) noexcept = default;
MonitorState& MonitorState::operator=(MonitorState&&) noexcept = default;

bool MonitorState::update_rules(Scope scope, RuleTable table, uint64_t at_seq) {
  return impl_->update_rules(scope, std::move(table), at_seq);
}

void MonitorState::step(const TraceItem& item) { impl_->step(item); }

Report MonitorState::finish() { return impl_->finish(); }

Report replay(const SecurityModel& resolution,
              const std::array<RuleTable, 3>& tables,
              const std::vector<MonitorSpec>& specs, const Trace& trace,
              const std::vector<RuleUpdate>& schedule) {
  MonitorState state(resolution, tables, specs);
  for (const auto& update : schedule)
    state.update_rules(update.scope, update.table, update.at_seq);
  for (const auto& item : trace.items) state.step(item);
  return state.finish();
}

Report replay(const CompiledPolicy& compiled, const Trace& trace,
              const std::vector<RuleUpdate>& schedule) {
  return replay(compiled.resolution, compiled.tables, compiled.specs, trace,
                schedule);
}

// -- rendering -------------------------------------------------------------

namespace {

void render_event_line(std::ostringstream& out, const EventRecord& event) {
  out << event.seq << ' ' << to_string(event.verdict) << ' ' << event.syscall;
  if (!event.args_text.empty()) out << ' ' << event.args_text;
  if (!event.detail.empty()) out << ": " << event.detail;
}

}  // namespace

std::string Report::render() const {
  std::ostringstream out;
  for (const auto& event : events) {
    render_event_line(out, event);
    out << '\n';
  }
  for (const auto& violation : violations)
    out << "temporal violation: " << violation.rule << " trigger seq "
        << violation.trigger_seq << " violated at seq "
        << violation.violating_seq << '\n';
  for (const auto& warning : warnings)
    out << "warning: " << warning.rule << " body attempted (denied) at seq "
        << warning.body_seq << " after trigger seq " << warning.trigger_seq
        << '\n';
  for (const auto& obligation : unfulfilled)
    out << "unfulfilled obligation: " << obligation.rule
        << " triggered at seq " << obligation.trigger_seq << '\n';
  for (const auto& leak : leaks)
    out << "leak: " << leak.identity << " at seq " << leak.seq << '\n';
  out << "-- summary\n";
  out << "events " << events.size() << '\n';
  out << "allow " << allow_count << '\n';
  out << "deny " << deny_count << '\n';
  out << "error " << error_count << '\n';
  out << "temporal-violations " << violations.size() << '\n';
  out << "warnings " << warnings.size() << '\n';
  out << "unfulfilled-obligations " << unfulfilled.size() << '\n';
  out << "leaks " << leaks.size() << '\n';
  return out.str();
}

std::string Report::render_machine() const {
  std::ostringstream out;
  for (const auto& event : events) {
    out << "event ";
    render_event_line(out, event);
    out << '\n';
  }
  for (const auto& violation : violations)
    out << "temporal " << violation.rule << ' ' << violation.trigger_seq << ' '
        << violation.violating_seq << '\n';
  for (const auto& warning : warnings)
    out << "warning " << warning.rule << ' ' << warning.trigger_seq << ' '
        << warning.body_seq << '\n';
  for (const auto& obligation : unfulfilled)
    out << "obligation " << obligation.rule << ' ' << obligation.trigger_seq
        << '\n';
  for (const auto& leak : leaks)
    out << "leak " << leak.seq << ' ' << leak.identity << '\n';
  out << "summary events " << events.size() << '\n';
  out << "summary allow " << allow_count << '\n';
  out << "summary deny " << deny_count << '\n';
  out << "summary error " << error_count << '\n';
  out << "summary temporal-violations " << violations.size() << '\n';
  out << "summary warnings " << warnings.size() << '\n';
  out << "summary unfulfilled-obligations " << unfulfilled.size() << '\n';
  out << "summary leaks " << leaks.size() << '\n';
  return out.str();
}

std::optional<std::string> explain(const Report& report, uint64_t seq) {
  const EventRecord* event = report.find(seq);
  if (event == nullptr) return std::nullopt;
  std::ostringstream out;
  out << "seq " << event->seq << ": " << to_string(event->verdict) << ' '
      << event->syscall;
  if (!event->args_text.empty()) out << ' ' << event->args_text;
  out << '\n';
  if (event->verdict == VerdictKind::Error) {
    out << "  error: " << event->detail << '\n';
    return out.str();
  }
  for (const auto& check : event->checks) {
    out << "  check " << check.op << " on " << check.element;
    if (!check.identity.empty()) out << " (" << check.identity << ")";
    out << ": ";
    if (check.perm == Permission::NoExecute) {
      out << (check.satisfied ? "NoExec absent -> allow"
                              : "NoExec held -> deny");
    } else {
      out << to_string(check.perm)
          << (check.satisfied ? " held -> allow" : " missing -> deny");
    }
    out << '\n';
    out << "    provenance: ";
    bool first = true;
    for (const auto& item : check.provenance) {
      if (!first) out << "; ";
      out << item;
      first = false;
    }
    if (first) out << "(none)";
    out << '\n';
  }
  for (const auto& violation : report.violations) {
    if (violation.violating_seq == seq)
      out << "  temporal violation: " << violation.rule << " (trigger at seq "
          << violation.trigger_seq << ")\n";
    else if (violation.trigger_seq == seq)
      out << "  temporal trigger: " << violation.rule << " violated at seq "
          << violation.violating_seq << '\n';
  }
  for (const auto& leak : report.leaks)
    if (leak.seq == seq) out << "  leak: " << leak.identity << '\n';
  return out.str();
}

}  // namespace claw
