// claw: validate security policies, compile them into per-scope syscall rule
// tables, and enforce them by replaying syscall traces.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "claw/compile.hpp"
#include "claw/model.hpp"
#include "claw/monitor.hpp"
#include "claw/parse.hpp"
#include "claw/validate.hpp"

namespace {

constexpr int kExitClean = 0;
constexpr int kExitFindings = 1;
constexpr int kExitUsage = 2;

bool read_file(const std::string& path, std::string& out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  out = buffer.str();
  return true;
}

bool write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return false;
  out << content;
  return out.good();
}

bool looks_like_table(const std::string& content) {
  return content.rfind("clawtable v1", 0) == 0;
}

int load_policy(const std::string& path, claw::SecurityModel& model) {
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << "error: cannot read " << path << "\n";
    return kExitUsage;
  }
  claw::ParseResult parsed = claw::parse(text);
  if (!parsed.ok()) {
    for (const auto& error : parsed.errors)
      std::cerr << path << ": " << error.to_string() << "\n";
    return kExitUsage;
  }
  model = std::move(parsed.model);
  return kExitClean;
}

// Accepts either a policy file (compiled on the fly) or a clawtable file.
int load_compiled(const std::string& path, claw::CompiledPolicy& compiled) {
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << "error: cannot read " << path << "\n";
    return kExitUsage;
  }
  if (looks_like_table(text)) {
    claw::TableImportResult imported = claw::import_tables(text);
    if (!imported.ok()) {
      for (const auto& error : imported.errors)
        std::cerr << path << ": line " << error.line << ": " << error.message
                  << "\n";
      return kExitUsage;
    }
    compiled = std::move(imported.compiled);
    return kExitClean;
  }
  claw::ParseResult parsed = claw::parse(text);
  if (!parsed.ok()) {
    for (const auto& error : parsed.errors)
      std::cerr << path << ": " << error.to_string() << "\n";
    return kExitUsage;
  }
  compiled = claw::compile(parsed.model);
  return kExitClean;
}

int load_trace(const std::string& path, claw::Trace& trace) {
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << "error: cannot read " << path << "\n";
    return kExitUsage;
  }
  claw::TraceParseResult parsed = claw::parse_trace(text);
  if (!parsed.ok()) {
    for (const auto& error : parsed.errors)
      std::cerr << path << ": line " << error.line << ": " << error.message
                << "\n";
    return kExitUsage;
  }
  trace = std::move(parsed.trace);
  return kExitClean;
}

void print_validation(const claw::ValidationReport& report) {
  for (const auto& violation : report.violations)
    std::cout << "violation " << violation.to_string() << "\n";
  for (const auto& leak : report.leaks)
    std::cout << "leak " << leak.to_string() << "\n";
  std::cout << report.violations.size() << " violations, "
            << report.leaks.size() << " leak findings ("
            << report.unguarded_leaks() << " unguarded)\n";
}

int cmd_validate(const std::string& policy_path, const std::string& smtlib_out) {
  claw::SecurityModel model;
  if (int status = load_policy(policy_path, model); status != kExitClean)
    return status;
  claw::ValidationReport report = claw::validate(model);
  print_validation(report);
  if (!smtlib_out.empty()) {
    if (!write_file(smtlib_out, claw::emit_smtlib(model))) {
      std::cerr << "error: cannot write " << smtlib_out << "\n";
      return kExitUsage;
    }
    std::cout << "smtlib written to " << smtlib_out << "\n";
  }
  return report.clean() ? kExitClean : kExitFindings;
}

int cmd_compile(const std::string& policy_path, const std::string& out_path,
                bool force) {
  claw::SecurityModel model;
  if (int status = load_policy(policy_path, model); status != kExitClean)
    return status;
  claw::ValidationReport report = claw::validate(model);
  if (!report.clean()) {
    print_validation(report);
    if (!force) {
      std::cerr << "refusing to compile a violating policy (use --force)\n";
      return kExitFindings;
    }
  }
  claw::CompiledPolicy compiled = claw::compile(model);
  std::string text = claw::export_tables(compiled);
  if (!report.clean()) {
    std::string banner = "# WARNING: compiled with --force; ";
    banner += std::to_string(report.violations.size());
    banner += " violation(s) and ";
    banner += std::to_string(report.unguarded_leaks());
    banner += " unguarded leak(s) ignored\n";
    // banner goes after the header line so the format stays recognizable
    std::size_t eol = text.find('\n');
    text.insert(eol + 1, banner);
  }
  if (!write_file(out_path, text)) {
    std::cerr << "error: cannot write " << out_path << "\n";
    return kExitUsage;
  }
  std::cout << "tables written to " << out_path << "\n";
  return kExitClean;
}

bool parse_update_flag(const std::string& value, claw::RuleUpdate& base,
                       std::vector<claw::RuleUpdate>& updates,
                       const claw::CompiledPolicy& current) {
  std::size_t colon = value.find(':');
  if (colon == std::string::npos) return false;
  uint64_t at_seq = 0;
  try {
    at_seq = std::stoull(value.substr(0, colon));
  } catch (...) {
    return false;
  }
  std::string path = value.substr(colon + 1);
  std::string text;
  if (!read_file(path, text)) return false;
  claw::TableImportResult imported = claw::import_tables(text);
  if (!imported.ok()) return false;
  for (claw::Scope scope : claw::kAllScopes) {
    claw::RuleUpdate update = base;
    update.at_seq = at_seq;
    update.scope = scope;
    update.table = imported.compiled.table_for(scope);
    // imported tables start at version 1; bump past the live table
    update.table.version = current.table_for(scope).version + 1 +
                           static_cast<uint64_t>(updates.size());
    updates.push_back(std::move(update));
  }
  return true;
}

int cmd_replay(const std::string& policy_path, const std::string& trace_path,
               const std::vector<std::string>& update_flags, bool machine) {
  claw::CompiledPolicy compiled;
  if (int status = load_compiled(policy_path, compiled); status != kExitClean)
    return status;
  claw::Trace trace;
  if (int status = load_trace(trace_path, trace); status != kExitClean)
    return status;
  std::vector<claw::RuleUpdate> updates;
  claw::RuleUpdate base;
  for (const auto& flag : update_flags) {
    if (!parse_update_flag(flag, base, updates, compiled)) {
      std::cerr << "error: bad --update '" << flag
                << "' (expected SEQ:TABLEFILE)\n";
      return kExitUsage;
    }
  }
  claw::Report report = claw::replay(compiled, trace, updates);
  std::cout << (machine ? report.render_machine() : report.render());
  return report.flagged() ? kExitFindings : kExitClean;
}

int cmd_explain(const std::string& policy_path, const std::string& trace_path,
                uint64_t seq) {
  claw::CompiledPolicy compiled;
  if (int status = load_compiled(policy_path, compiled); status != kExitClean)
    return status;
  claw::Trace trace;
  if (int status = load_trace(trace_path, trace); status != kExitClean)
    return status;
  claw::Report report = claw::replay(compiled, trace);
  std::optional<std::string> chain = claw::explain(report, seq);
  if (!chain) {
    std::cerr << "error: no event with seq " << seq << "\n";
    return kExitUsage;
  }
  std::cout << *chain;
  return kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"claw: security-policy toolchain for agent confinement"};
  app.require_subcommand(1);

  std::string policy_path;
  std::string trace_path;
  std::string out_path;
  std::string smtlib_out;
  std::vector<std::string> update_flags;
  uint64_t seq = 0;
  bool force = false;
  bool machine = false;

  CLI::App* validate =
      app.add_subcommand("validate", "check a policy against its rules");
  validate->add_option("policy", policy_path, "policy file (.claw)")
      ->required();
  validate->add_option("--smtlib", smtlib_out,
                       "also write an SMT-LIB2 script for cross-checking");

  CLI::App* compile =
      app.add_subcommand("compile", "compile a policy into rule tables");
  compile->add_option("policy", policy_path, "policy file (.claw)")
      ->required();
  compile->add_option("output", out_path, "output table file")->required();
  compile->add_flag("--force", force, "compile even when validation fails");

  CLI::App* replay =
      app.add_subcommand("replay", "replay a syscall trace against a policy");
  replay->add_option("policy", policy_path, "policy or table file")
      ->required();
  replay->add_option("trace", trace_path, "trace file (.trace)")->required();
  replay->add_option("--update", update_flags,
                     "hot rule update, SEQ:TABLEFILE");
  replay->add_flag("--machine", machine, "machine-readable report");

  CLI::App* explain =
      app.add_subcommand("explain", "explain one verdict of a replay");
  explain->add_option("policy", policy_path, "policy or table file")
      ->required();
  explain->add_option("trace", trace_path, "trace file (.trace)")->required();
  explain->add_option("seq", seq, "event sequence number")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitClean : kExitUsage;
  }

  if (validate->parsed()) return cmd_validate(policy_path, smtlib_out);
  if (compile->parsed()) return cmd_compile(policy_path, out_path, force);
  if (replay->parsed())
    return cmd_replay(policy_path, trace_path, update_flags, machine);
  if (explain->parsed()) return cmd_explain(policy_path, trace_path, seq);
  return kExitUsage;
}
