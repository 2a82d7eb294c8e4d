#include "claw/compile.hpp"

#include <algorithm>
#include <stdexcept>

namespace claw {

std::vector<std::string> syscalls_for(EntityKind kind, Permission perm) {
  switch (kind) {
    case EntityKind::File:
      switch (perm) {
        case Permission::Read:
          return {"read", "pread", "readv", "mmap(R)", "sendfile(in)"};
        case Permission::Write:
          return {"write", "pwrite", "writev", "mmap(W)", "sendfile(out)"};
        case Permission::Append: return {"lseek", "open(A)"};
        case Permission::NoExecute: return {"execve"};
        case Permission::Visible: return {"stat", "fstat"};
      }
      break;
    case EntityKind::Directory:
      switch (perm) {
        case Permission::Read: return {"getdents"};
        case Permission::Write: return {"mkdir", "rmdir", "creat", "unlink"};
        case Permission::Append: return {"mkdir", "creat"};  // create only
        case Permission::NoExecute: return {};
        case Permission::Visible: return {"stat", "fstat"};
      }
      break;
    case EntityKind::Process:
      switch (perm) {
        case Permission::Read: return {};
        case Permission::Write: return {"semget", "semop", "semctl"};
        case Permission::Append: return {};
        case Permission::NoExecute: return {"clone", "fork"};  // no fork
        case Permission::Visible: return {"stat", "fstat", "procfs"};
      }
      break;
    case EntityKind::Socket:
      switch (perm) {
        case Permission::Read: return {"recvfrom", "recvmsg"};
        case Permission::Write: return {"sendto", "sendmsg"};
        case Permission::Append: return {};
        case Permission::NoExecute: return {};
        case Permission::Visible: return {"stat", "fstat"};
      }
      break;
    case EntityKind::Device:
      switch (perm) {
        case Permission::Read: return {};
        case Permission::Write: return {"ioctl"};  // device dependent
        case Permission::Append: return {};
        case Permission::NoExecute: return {};
        case Permission::Visible: return {"stat", "fstat"};
      }
      break;
  }
  return {};
}

const std::vector<std::string>& table_vocabulary() {
  static const std::vector<std::string> vocab = {
      "open",    "close",   "dup",     "read",    "pread",   "readv",
      "write",   "pwrite",  "writev",  "mmap",    "sendfile", "lseek",
      "getdents", "mkdir",  "rmdir",   "creat",   "unlink",  "socket",
      "connect", "sendto",  "sendmsg", "recvfrom", "recvmsg", "execve",
      "fork",    "clone",   "stat",    "fstat",   "ioctl",   "ipc",
      "semget",  "semop",   "semctl",  "procfs"};
  return vocab;
}

const std::vector<Rule>* RuleTable::rules_for(std::string_view syscall) const {
  for (const auto& [name, rules] : dispatch)
    if (name == syscall) return &rules;
  return nullptr;
}

std::size_t RuleTable::rule_count() const {
  std::size_t n = 0;
  for (const auto& [name, rules] : dispatch) n += rules.size();
  return n;
}

bool RuleTable::same_rules(const RuleTable& other) const {
  return scope == other.scope && dispatch == other.dispatch;
}

bool CompiledPolicy::same_content(const CompiledPolicy& other) const {
  if (!(resolution.patterns == other.resolution.patterns)) return false;
  for (std::size_t i = 0; i < tables.size(); ++i)
    if (!tables[i].same_rules(other.tables[i])) return false;
  return specs == other.specs;
}

namespace {

constexpr uint8_t kind_bit(EntityKind kind) {
  return static_cast<uint8_t>(1u << static_cast<uint8_t>(kind));
}

constexpr uint8_t kFileK = kind_bit(EntityKind::File);
constexpr uint8_t kDirK = kind_bit(EntityKind::Directory);
constexpr uint8_t kProcK = kind_bit(EntityKind::Process);
constexpr uint8_t kSockK = kind_bit(EntityKind::Socket);
constexpr uint8_t kDevK = kind_bit(EntityKind::Device);
constexpr uint8_t kAnyK = kFileK | kDirK | kProcK | kSockK | kDevK;

// Positive capability rules emitted per element, in this order. The defaults
// element is kind-agnostic and matches every row.
struct CapEntry {
  const char* syscall;
  uint8_t kinds;
  Permission perm;
};

// Append rows on write-class syscalls cover append-mode fds; open rows cover
// the corresponding open flag.
const CapEntry kCapEntries[] = {
    {"open", kFileK | kDevK, Permission::Read},
    {"open", kDirK, Permission::Read},  // open a directory for listing
    {"open", kFileK | kDevK, Permission::Write},
    {"open", kFileK | kDevK, Permission::Append},
    {"read", kFileK, Permission::Read},
    {"pread", kFileK, Permission::Read},
    {"readv", kFileK, Permission::Read},
    {"write", kFileK, Permission::Write},
    {"write", kFileK, Permission::Append},
    {"pwrite", kFileK, Permission::Write},
    {"pwrite", kFileK, Permission::Append},
    {"writev", kFileK, Permission::Write},
    {"writev", kFileK, Permission::Append},
    {"mmap", kFileK, Permission::Read},
    {"mmap", kFileK, Permission::Write},
    {"sendfile", kFileK, Permission::Read},
    {"sendfile", kFileK | kSockK, Permission::Write},
    {"lseek", kFileK, Permission::Append},
    {"getdents", kDirK, Permission::Read},
    {"mkdir", kDirK, Permission::Write},
    {"mkdir", kDirK, Permission::Append},
    {"rmdir", kDirK, Permission::Write},
    {"creat", kDirK, Permission::Write},
    {"creat", kDirK, Permission::Append},
    {"unlink", kDirK, Permission::Write},
    {"sendto", kSockK, Permission::Write},
    {"sendmsg", kSockK, Permission::Write},
    {"recvfrom", kSockK, Permission::Read},
    {"recvmsg", kSockK, Permission::Read},
    {"ioctl", kDevK, Permission::Write},
    {"semget", kProcK, Permission::Write},
    {"semop", kProcK, Permission::Write},
    {"semctl", kProcK, Permission::Write},
    {"procfs", kProcK, Permission::Visible},
    {"stat", kAnyK, Permission::Visible},
    {"fstat", kAnyK, Permission::Visible},
};

// exec-family rules are decided per element: deny when NoExec held.
struct ExecEntry {
  const char* syscall;
  uint8_t kinds;
};

const ExecEntry kExecEntries[] = {
    {"execve", kFileK},
    {"fork", kProcK},
    {"clone", kProcK},
};

struct Element {
  std::string name;        // pattern name or "default"
  uint8_t kinds;           // pattern kind bit, or kAnyK for defaults
  const EntityPattern* pattern;  // nullptr for defaults
};

std::vector<Element> enumerate_elements(const SecurityModel& model) {
  std::vector<Element> out;
  for (const auto& pattern : model.patterns)
    out.push_back({pattern.name, kind_bit(pattern.kind), &pattern});
  out.push_back({"default", kAnyK, nullptr});
  return out;
}

std::vector<std::string> provenance_for(const SecurityModel& model,
                                        const Element& element, Scope scope,
                                        Permission perm) {
  if (element.pattern == nullptr)
    return {"default " + std::string(to_string(scope))};
  std::vector<std::string> out;
  for (const auto& grant : model.grants) {
    if (grant.scope != scope || grant.pattern != element.name) continue;
    if (!grant.perms.contains(perm)) continue;
    std::string descriptor = "grant " + std::string(to_string(scope)) +
                             " on " + element.name;
    if (out.empty() || out.back() != descriptor)
      out.push_back(std::move(descriptor));
  }
  return out;
}

}  // namespace

std::array<RuleTable, 3> compile_tables(const SecurityModel& model) {
  std::array<RuleTable, 3> tables;
  std::vector<Element> elements = enumerate_elements(model);
  for (Scope scope : kAllScopes) {
    RuleTable& table = tables[static_cast<std::size_t>(scope)];
    table.scope = scope;
    table.version = 1;
    for (const auto& name : table_vocabulary()) table.dispatch.push_back({name, {}});
    auto append = [&](Rule rule) {
      for (auto& [name, rules] : table.dispatch) {
        if (name == rule.syscall) {
          rules.push_back(std::move(rule));
          return;
        }
      }
    };
    for (const auto& element : elements) {
      PermSet perms = element.pattern == nullptr
                          ? model.defaults_for(scope)
                          : model.pattern_perms(*element.pattern, scope);
      for (const auto& entry : kCapEntries) {
        if ((entry.kinds & element.kinds) == 0) continue;
        if (!perms.contains(entry.perm)) continue;
        Rule rule;
        rule.syscall = entry.syscall;
        rule.element = element.name;
        rule.perm = entry.perm;
        rule.allow = true;
        rule.provenance = provenance_for(model, element, scope, entry.perm);
        if (rule.provenance.empty())
          rule.provenance = {"default " + std::string(to_string(scope))};
        // skip duplicates from overlapping kind rows (defaults element)
        const std::vector<Rule>* existing = table.rules_for(rule.syscall);
        bool duplicate = false;
        for (const Rule& have : *existing) {
          if (have.element == rule.element && have.perm == rule.perm) {
            duplicate = true;
            break;
          }
        }
        if (!duplicate) append(std::move(rule));
      }
      for (const auto& entry : kExecEntries) {
        if ((entry.kinds & element.kinds) == 0) continue;
        bool held = perms.contains(Permission::NoExecute);
        Rule rule;
        rule.syscall = entry.syscall;
        rule.element = element.name;
        rule.perm = Permission::NoExecute;
        rule.allow = !held;
        if (held) {
          rule.provenance =
              provenance_for(model, element, scope, Permission::NoExecute);
          if (rule.provenance.empty())
            rule.provenance = {"default " + std::string(to_string(scope))};
        } else {
          rule.provenance = {"NoExec absent for " + element.name + " in " +
                             std::string(to_string(scope))};
        }
        append(std::move(rule));
      }
    }
  }
  return tables;
}

namespace {

EntityKind target_kind(const EventTarget& target, const SecurityModel& model,
                       const std::string& rule_name) {
  if (const auto* ref = std::get_if<PatternRef>(&target)) {
    const EntityPattern* pattern = model.find_pattern(ref->name);
    if (pattern == nullptr)
      throw std::invalid_argument("temporal rule '" + rule_name +
                                  "' references unknown pattern '" +
                                  ref->name + "'");
    return pattern->kind;
  }
  return std::get<AttrTarget>(target).kind;
}

MonitorSpec::Pred compile_pred(const EventMatcher& event,
                               const SecurityModel& model,
                               const std::string& rule_name) {
  MonitorSpec::Pred pred;
  pred.scope = event.scope;
  pred.target = event.target;
  EntityKind kind = target_kind(event.target, model, rule_name);
  pred.ops = syscalls_for(kind, action_permission(event.action));
  std::sort(pred.ops.begin(), pred.ops.end());
  return pred;
}

}  // namespace

MonitorSpec compile_temporal(const TemporalRule& rule,
                             const SecurityModel& model, std::string name) {
  MonitorSpec spec;
  spec.name = std::move(name);
  spec.trigger = compile_pred(rule.trigger, model, spec.name);
  spec.modality = rule.modality;
  spec.body = compile_pred(rule.body, model, spec.name);
  return spec;
}

CompiledPolicy compile(const SecurityModel& model) {
  CompiledPolicy out;
  out.resolution.patterns = model.patterns;
  out.tables = compile_tables(model);
  for (const auto& policy : model.policies) {
    const auto* rule = std::get_if<TemporalRule>(&policy.body);
    if (rule == nullptr) continue;
    out.specs.push_back(compile_temporal(*rule, model, policy.name));
  }
  return out;
}

}  // namespace claw
