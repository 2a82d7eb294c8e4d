#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace claw {

// Trust domains, ordered Sandbox < Agent < Monitor.
enum class Scope : uint8_t { Sandbox = 0, Agent = 1, Monitor = 2 };

constexpr std::array<Scope, 3> kAllScopes = {Scope::Sandbox, Scope::Agent,
                                             Scope::Monitor};

std::string_view to_string(Scope scope);
std::optional<Scope> scope_from_string(std::string_view text);

// NoExecute is restrictive: holding it forbids exec/fork. More trusted
// scopes hold supersets, including the restrictive members.
enum class Permission : uint8_t {
  Read = 0,
  Write = 1,
  Append = 2,
  NoExecute = 3,
  Visible = 4,
};

constexpr std::array<Permission, 5> kAllPermissions = {
    Permission::Read, Permission::Write, Permission::Append,
    Permission::NoExecute, Permission::Visible};

std::string_view to_string(Permission perm);  // surface keyword, e.g. "NoExec"
std::optional<Permission> permission_from_string(std::string_view text);

// Small set over the five permissions. Empty means no capability at all.
class PermSet {
 public:
  constexpr PermSet() = default;
  constexpr PermSet(std::initializer_list<Permission> perms) {
    for (Permission p : perms) insert(p);
  }

  constexpr bool contains(Permission p) const {
    return (bits_ & bit(p)) != 0;
  }
  constexpr void insert(Permission p) { bits_ |= bit(p); }
  constexpr void erase(Permission p) { bits_ &= static_cast<uint8_t>(~bit(p)); }

  constexpr bool empty() const { return bits_ == 0; }
  std::size_t size() const;

  constexpr bool subset_of(PermSet other) const {
    return (bits_ & ~other.bits_) == 0;
  }
  constexpr PermSet operator|(PermSet other) const {
    return PermSet(static_cast<uint8_t>(bits_ | other.bits_));
  }
  constexpr PermSet operator&(PermSet other) const {
    return PermSet(static_cast<uint8_t>(bits_ & other.bits_));
  }
  constexpr PermSet& operator|=(PermSet other) {
    bits_ |= other.bits_;
    return *this;
  }

  constexpr bool operator==(const PermSet&) const = default;

  // Comma-joined canonical form: "Read,Write"; "-" for the empty set.
  std::string to_string() const;

 private:
  explicit constexpr PermSet(uint8_t bits) : bits_(bits) {}
  static constexpr uint8_t bit(Permission p) {
    return static_cast<uint8_t>(1u << static_cast<uint8_t>(p));
  }
  uint8_t bits_ = 0;
};

enum class EntityKind : uint8_t { File, Directory, Process, Socket, Device };

constexpr std::array<EntityKind, 5> kAllKinds = {
    EntityKind::File, EntityKind::Directory, EntityKind::Process,
    EntityKind::Socket, EntityKind::Device};

std::string_view to_string(EntityKind kind);  // surface keyword: file/dir/...
std::optional<EntityKind> kind_from_string(std::string_view text);

// `*` matches any character sequence including path separators; matching is
// case-sensitive and anchored at both ends. Total over all inputs.
bool glob_match(std::string_view pattern, std::string_view value);

struct GlobPattern {
  std::string pattern;
  bool operator==(const GlobPattern&) const = default;
};
struct IntExact {
  int64_t value = 0;
  bool operator==(const IntExact&) const = default;
};
struct IntRange {
  int64_t lo = 0;
  int64_t hi = 0;
  bool operator==(const IntRange&) const = default;
};
struct BoolExact {
  bool value = false;
  bool operator==(const BoolExact&) const = default;
};

using MatcherValue = std::variant<GlobPattern, IntExact, IntRange, BoolExact>;
using AttributeValue = std::variant<std::string, int64_t, bool>;

struct AttributeMatcher {
  std::string key;
  MatcherValue matcher;

  // Total: a value of the wrong type is simply not accepted.
  bool accepts(const AttributeValue& value) const;

  bool operator==(const AttributeMatcher&) const = default;
};

// Concrete attributes of a runtime object, e.g. {path: "/secure/key"}.
using ConcreteAttrs = std::vector<std::pair<std::string, AttributeValue>>;

struct EntityPattern {
  std::string name;
  EntityKind kind = EntityKind::File;
  std::vector<AttributeMatcher> attrs;  // conjunction
  std::size_t declaration_index = 0;

  const AttributeMatcher* find_attr(std::string_view key) const;
  // True when the pattern carries `key: true` (credential/sensitive flags).
  bool flag(std::string_view key) const;

  bool operator==(const EntityPattern&) const = default;
};

struct Grant {
  Scope scope = Scope::Sandbox;
  std::string pattern;
  PermSet perms;

  bool operator==(const Grant&) const = default;
};

// ---- policy layer -----------------------------------------------------

enum class BuiltinPolicy : uint8_t {
  ScopeHierarchy,
  NoExecAgent,
  CredentialVisibility,
};

std::string_view to_string(BuiltinPolicy builtin);
std::optional<BuiltinPolicy> builtin_from_string(std::string_view text);

enum class Relation : uint8_t { Equals, SubsetOf, Contains, Excludes };

std::string_view to_string(Relation rel);  // "==", "<=", "contains", "excludes"

struct PermConstraint {
  Scope scope = Scope::Agent;
  Relation relation = Relation::Equals;
  PermSet perms;

  bool operator==(const PermConstraint&) const = default;
};

// forall <var> : <guard> => perms(<var>, <scope>) <rel> <perms>
// Quantifies over declared patterns plus the synthetic defaults element.
struct StaticFormula {
  std::string var;
  std::optional<EntityKind> kind_guard;
  std::vector<AttributeMatcher> guard;
  PermConstraint constraint;

  bool operator==(const StaticFormula&) const = default;
};

enum class EventAction : uint8_t { Reads, Writes, Appends, Execs, Stats };

std::string_view to_string(EventAction action);
std::optional<EventAction> action_from_string(std::string_view text);

Permission action_permission(EventAction action);

struct PatternRef {
  std::string name;
  bool operator==(const PatternRef&) const = default;
};
struct AttrTarget {
  EntityKind kind = EntityKind::File;
  std::vector<AttributeMatcher> attrs;
  bool operator==(const AttrTarget&) const = default;
};
using EventTarget = std::variant<PatternRef, AttrTarget>;

struct EventMatcher {
  Scope scope = Scope::Agent;
  EventAction action = EventAction::Reads;
  EventTarget target;

  bool operator==(const EventMatcher&) const = default;
};

enum class TemporalModality : uint8_t { AlwaysForbid, EventuallyRequire };

// AlwaysForbid: trigger at t forbids the body at every seq > t.
// EventuallyRequire: trigger at t obliges the body at some seq > t.
struct TemporalRule {
  EventMatcher trigger;
  TemporalModality modality = TemporalModality::AlwaysForbid;
  EventMatcher body;

  bool operator==(const TemporalRule&) const = default;
};

struct Policy {
  std::string name;
  std::variant<BuiltinPolicy, StaticFormula, TemporalRule> body;

  bool operator==(const Policy&) const = default;
};

// The agent system: entity patterns, grants and per-scope defaults, plus the
// proposition set (policies). Immutable after construction; all operations
// over it are pure.
struct SecurityModel {
  std::vector<EntityPattern> patterns;
  std::vector<Grant> grants;
  std::array<PermSet, 3> defaults{};  // indexed by Scope
  std::vector<Policy> policies;

  const EntityPattern* find_pattern(std::string_view name) const;

  PermSet defaults_for(Scope scope) const {
    return defaults[static_cast<std::size_t>(scope)];
  }

  // Union of the pattern's grants in the scope; empty when nothing granted.
  PermSet pattern_perms(const EntityPattern& pattern, Scope scope) const;
  PermSet pattern_perms(std::string_view pattern_name, Scope scope) const;

  bool operator==(const SecurityModel&) const = default;
};

// First declared pattern of the kind whose matchers all accept the concrete
// attributes; matchers keyed on attributes the caller did not supply are
// treated as satisfied (classification flags like credential/sensitive).
// nullptr means no match.
const EntityPattern* resolve(EntityKind kind, const ConcreteAttrs& attrs,
                             const SecurityModel& model);

// P(e, s): grants of the resolved pattern, or defaults[scope] when unmatched.
PermSet perms_of(EntityKind kind, const ConcreteAttrs& attrs, Scope scope,
                 const SecurityModel& model);

// Attribute vocabulary check: path for file/dir/dev, addr for socket,
// pid/scope for proc, credential/sensitive everywhere.
bool attribute_key_allowed(EntityKind kind, std::string_view key);

}  // namespace claw
