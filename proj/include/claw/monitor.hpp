#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "claw/compile.hpp"
#include "claw/model.hpp"

namespace claw {

// One syscall invocation; seq is the temporal argument t, strictly
// increasing within a trace.
struct TraceEvent {
  uint64_t seq = 0;
  int64_t pid = 0;
  std::string syscall;
  std::vector<std::string> args;
  std::optional<int64_t> ret;
};

struct ScopeDirective {
  int64_t pid = 0;
  Scope scope = Scope::Agent;
};

using TraceItem = std::variant<TraceEvent, ScopeDirective>;

struct Trace {
  std::vector<TraceItem> items;

  std::size_t event_count() const;
};

struct TraceError {
  std::size_t line = 0;
  std::string message;
};

struct TraceParseResult {
  Trace trace;
  std::vector<TraceError> errors;

  bool ok() const { return errors.empty(); }
};

// Lines: `# comment`, `!scope <pid> <Scope>`, or
// `<seq> <pid> <syscall> <args...> [-> <ret>]`.
TraceParseResult parse_trace(std::string_view text);

enum class VerdictKind { Allow, Deny, Error };

std::string_view to_string(VerdictKind kind);

// One permission check the event's handler performed, kept for explain().
struct CheckRecord {
  std::string op;        // sub-op label, e.g. open(A), sendfile(in)
  std::string element;   // pattern name or "default"
  std::string identity;  // concrete path / addr / pid
  Permission perm = Permission::Read;
  bool satisfied = false;
  std::vector<std::string> provenance;
};

struct EventRecord {
  uint64_t seq = 0;
  int64_t pid = 0;
  std::string syscall;
  std::string args_text;
  VerdictKind verdict = VerdictKind::Error;
  std::string detail;  // deny/error reason; empty for plain allows
  std::vector<CheckRecord> checks;
};

struct TemporalViolation {
  std::string rule;
  uint64_t trigger_seq = 0;
  uint64_t violating_seq = 0;
};

// Body event matched but was denied by static rules: reported as a warning,
// not a violation.
struct AttemptWarning {
  std::string rule;
  uint64_t trigger_seq = 0;
  uint64_t body_seq = 0;
};

struct ObligationRecord {
  std::string rule;
  uint64_t trigger_seq = 0;
};

struct LeakEvent {
  uint64_t seq = 0;
  std::string identity;
};

struct Report {
  std::vector<EventRecord> events;
  std::vector<TemporalViolation> violations;
  std::vector<AttemptWarning> warnings;
  std::vector<ObligationRecord> unfulfilled;  // pending at end of trace
  std::vector<LeakEvent> leaks;

  std::size_t allow_count = 0;
  std::size_t deny_count = 0;
  std::size_t error_count = 0;

  const EventRecord* find(uint64_t seq) const;
  bool flagged() const;  // any deny, temporal violation, or leak

  std::string render() const;
  std::string render_machine() const;
};

// Replays events in seq order against the live tables: resolves fds and
// paths to entities, dispatches to the syscall handler in the caller's
// scope table, tracks context/leaks and temporal rules. Denied events leave
// monitor state untouched.
class MonitorState {
 public:
  MonitorState(const SecurityModel& resolution,
               std::array<RuleTable, 3> tables,
               std::vector<MonitorSpec> specs);
  ~MonitorState();
  MonitorState(MonitorState&&) noexcept;
  MonitorState& operator=(MonitorState&&) noexcept;

  // Events with seq < at_seq keep the old table; seq >= at_seq see the new
  // one. Rejected (returns false) unless the version strictly increases.
  bool update_rules(Scope scope, RuleTable table, uint64_t at_seq);

  void step(const TraceItem& item);

  // End-of-trace: emits unfulfilled obligations and returns the report.
  Report finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct RuleUpdate {
  uint64_t at_seq = 0;
  Scope scope = Scope::Sandbox;
  RuleTable table;
};

Report replay(const SecurityModel& resolution,
              const std::array<RuleTable, 3>& tables,
              const std::vector<MonitorSpec>& specs, const Trace& trace,
              const std::vector<RuleUpdate>& schedule = {});

Report replay(const CompiledPolicy& compiled, const Trace& trace,
              const std::vector<RuleUpdate>& schedule = {});

// Human-readable provenance chain for the event at seq: verdict, the checks
// with their rules and grant/policy provenance, and trigger info for
// temporal violations. nullopt when seq is not in the report.
std::optional<std::string> explain(const Report& report, uint64_t seq);

}  // namespace claw
