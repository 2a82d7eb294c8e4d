#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "claw/model.hpp"

namespace claw {

// Sub-operation labels used for mapping cells and monitor specs; argument-
// dependent syscalls carry a qualifier, e.g. mmap(R), sendfile(in), open(A).
// procfs is the pseudo-op for /proc/<pid>/ accesses.

// The mapping cell for one (kind, permission): which sub-operations the
// permission governs. Cells the mapping leaves blank yield an empty set.
std::vector<std::string> syscalls_for(EntityKind kind, Permission perm);

// One compiled decision: the rule applies to events of `syscall` whose
// argument resolves to `element` ("default" for unmatched entities).
// execve/fork/clone rules invert: deny when NoExec is held, allow otherwise.
struct Rule {
  std::string syscall;  // dispatch key (base syscall name or "procfs")
  std::string element;  // pattern name or "default"
  Permission perm = Permission::Read;
  bool allow = true;
  std::vector<std::string> provenance;  // contributing grants/defaults

  bool operator==(const Rule&) const = default;
};

// Per-scope dispatch: every syscall in the vocabulary has an entry; an empty
// entry means implicit deny. Immutable snapshot; hot update replaces the
// whole table (version strictly increases).
struct RuleTable {
  Scope scope = Scope::Sandbox;
  std::vector<std::pair<std::string, std::vector<Rule>>> dispatch;
  uint64_t version = 1;

  const std::vector<Rule>* rules_for(std::string_view syscall) const;
  std::size_t rule_count() const;
  bool same_rules(const RuleTable& other) const;  // ignores version
};

// Compiled temporal rule: trigger/body as (scope, sub-op set, target).
struct MonitorSpec {
  struct Pred {
    Scope scope = Scope::Agent;
    std::vector<std::string> ops;  // sub-op labels, sorted
    EventTarget target;

    bool operator==(const Pred&) const = default;
  };

  std::string name;
  Pred trigger;
  TemporalModality modality = TemporalModality::AlwaysForbid;
  Pred body;

  bool operator==(const MonitorSpec&) const = default;
};

// Self-contained compilation output: pattern declarations travel with the
// tables so a table file alone can drive a replay.
struct CompiledPolicy {
  SecurityModel resolution;  // patterns only (no grants/defaults/policies)
  std::array<RuleTable, 3> tables;
  std::vector<MonitorSpec> specs;

  const RuleTable& table_for(Scope scope) const {
    return tables[static_cast<std::size_t>(scope)];
  }
  RuleTable& table_for(Scope scope) {
    return tables[static_cast<std::size_t>(scope)];
  }
  bool same_content(const CompiledPolicy& other) const;
};

// The dispatch vocabulary, in export order.
const std::vector<std::string>& table_vocabulary();

std::array<RuleTable, 3> compile_tables(const SecurityModel& model);

// Throws std::invalid_argument when the rule names an undeclared pattern.
MonitorSpec compile_temporal(const TemporalRule& rule,
                             const SecurityModel& model, std::string name);

// Tables for all scopes plus monitor specs for every temporal policy.
CompiledPolicy compile(const SecurityModel& model);

// clawtable v1: `clawtable v1` header, entity declarations, one `scope <S>`
// section per scope with one rule per line
// `<syscall> <pattern|default> <perm> <allow|deny> # provenance`,
// then monitorspec lines. Byte-stable for equal inputs.
std::string export_tables(const CompiledPolicy& compiled);

struct TableImportError {
  std::size_t line = 0;
  std::string message;
};

struct TableImportResult {
  CompiledPolicy compiled;
  std::vector<TableImportError> errors;

  bool ok() const { return errors.empty(); }
};

TableImportResult import_tables(std::string_view text);

}  // namespace claw
