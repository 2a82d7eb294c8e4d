#include <sstream>

#include "claw/monitor.hpp"

namespace claw {

std::size_t Trace::event_count() const {
  std::size_t n = 0;
  for (const auto& item : items)
    if (std::holds_alternative<TraceEvent>(item)) ++n;
  return n;
}

namespace {

enum class Arg { Int, Text, Flags, Prot, IpcOp };

struct EventSpec {
  const char* name;
  std::vector<Arg> args;
  bool ret_required;
};

const EventSpec kEventSpecs[] = {
    {"open", {Arg::Text, Arg::Flags}, true},
    {"close", {Arg::Int}, false},
    {"dup", {Arg::Int}, true},
    {"read", {Arg::Int, Arg::Int}, false},
    {"write", {Arg::Int, Arg::Int}, false},
    {"pread", {Arg::Int, Arg::Int}, false},
    {"pwrite", {Arg::Int, Arg::Int}, false},
    {"readv", {Arg::Int, Arg::Int}, false},
    {"writev", {Arg::Int, Arg::Int}, false},
    {"mmap", {Arg::Int, Arg::Prot}, false},
    {"sendfile", {Arg::Int, Arg::Int, Arg::Int}, false},
    {"lseek", {Arg::Int, Arg::Int}, false},
    {"getdents", {Arg::Int}, false},
    {"mkdir", {Arg::Text}, false},
    {"rmdir", {Arg::Text}, false},
    {"creat", {Arg::Text}, true},
    {"unlink", {Arg::Text}, false},
    {"socket", {}, true},
    {"connect", {Arg::Int, Arg::Text}, false},
    {"sendto", {Arg::Int, Arg::Int}, false},
    {"sendmsg", {Arg::Int, Arg::Int}, false},
    {"recvfrom", {Arg::Int, Arg::Int}, false},
    {"recvmsg", {Arg::Int, Arg::Int}, false},
    {"execve", {Arg::Text}, false},
    {"fork", {}, true},
    {"clone", {}, true},
    {"stat", {Arg::Text}, false},
    {"fstat", {Arg::Int}, false},
    {"ioctl", {Arg::Int, Arg::Text}, false},
    {"ipc", {Arg::IpcOp, Arg::Int}, false},
};

const EventSpec* find_spec(std::string_view name) {
  for (const auto& spec : kEventSpecs)
    if (name == spec.name) return &spec;
  return nullptr;
}

bool parse_int64(std::string_view text, int64_t& out) {
  if (text.empty()) return false;
  std::size_t start = text[0] == '-' ? 1 : 0;
  if (start == text.size()) return false;
  for (std::size_t i = start; i < text.size(); ++i)
    if (text[i] < '0' || text[i] > '9') return false;
  try {
    out = std::stoll(std::string(text));
  } catch (...) {
    return false;
  }
  return true;
}

bool valid_flags(std::string_view text) {
  if (text.empty()) return false;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    std::string_view flag = comma == std::string_view::npos
                                ? text.substr(start)
                                : text.substr(start, comma - start);
    if (flag != "R" && flag != "W" && flag != "A" && flag != "C") return false;
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return true;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.emplace_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

TraceParseResult parse_trace(std::string_view text) {
  TraceParseResult result;
  uint64_t last_seq = 0;
  bool any_event = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    std::string_view line = end == std::string_view::npos
                                ? text.substr(pos)
                                : text.substr(pos, end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    while (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos) continue;
    if (line[first] == '#') continue;

    std::vector<std::string> tokens = split_ws(line);
    auto fail = [&](std::string message) {
      result.errors.push_back({line_no, std::move(message)});
    };

    if (tokens[0] == "!scope") {
      if (tokens.size() != 3) {
        fail("scope directive needs: !scope <pid> <Scope>");
        continue;
      }
      int64_t pid = 0;
      if (!parse_int64(tokens[1], pid)) {
        fail("bad pid '" + tokens[1] + "'");
        continue;
      }
      auto scope = scope_from_string(tokens[2]);
      if (!scope) {
        fail("unknown scope '" + tokens[2] + "'");
        continue;
      }
      result.trace.items.push_back(ScopeDirective{pid, *scope});
      continue;
    }

    // <seq> <pid> <syscall> <args...> [-> <ret>]
    if (tokens.size() < 3) {
      fail("event line needs: <seq> <pid> <syscall> ...");
      continue;
    }
    TraceEvent event;
    int64_t seq = 0;
    if (!parse_int64(tokens[0], seq) || seq < 0) {
      fail("bad sequence number '" + tokens[0] + "'");
      continue;
    }
    event.seq = static_cast<uint64_t>(seq);
    if (any_event && event.seq <= last_seq) {
      std::ostringstream msg;
      msg << "sequence " << event.seq << " not greater than " << last_seq;
      fail(msg.str());
      continue;
    }
    if (!parse_int64(tokens[1], event.pid)) {
      fail("bad pid '" + tokens[1] + "'");
      continue;
    }
    event.syscall = tokens[2];
    const EventSpec* spec = find_spec(event.syscall);
    if (spec == nullptr) {
      fail("unknown syscall '" + event.syscall + "'");
      continue;
    }

    std::size_t arrow = tokens.size();
    for (std::size_t i = 3; i < tokens.size(); ++i) {
      if (tokens[i] == "->") {
        arrow = i;
        break;
      }
    }
    std::vector<std::string> args(tokens.begin() + 3, tokens.begin() + arrow);
    if (arrow < tokens.size()) {
      if (arrow + 2 != tokens.size()) {
        fail("expected a single return value after '->'");
        continue;
      }
      int64_t ret = 0;
      if (!parse_int64(tokens[arrow + 1], ret)) {
        fail("bad return value '" + tokens[arrow + 1] + "'");
        continue;
      }
      event.ret = ret;
    }

    if (args.size() != spec->args.size()) {
      std::ostringstream msg;
      msg << event.syscall << " takes " << spec->args.size()
          << " argument(s), got " << args.size();
      fail(msg.str());
      continue;
    }
    bool args_ok = true;
    for (std::size_t i = 0; i < args.size() && args_ok; ++i) {
      switch (spec->args[i]) {
        case Arg::Int: {
          int64_t value = 0;
          if (!parse_int64(args[i], value)) {
            fail("argument " + std::to_string(i + 1) + " of " + event.syscall +
                 " must be an integer, got '" + args[i] + "'");
            args_ok = false;
          }
          break;
        }
        case Arg::Flags:
          if (!valid_flags(args[i])) {
            fail("bad open flags '" + args[i] + "' (subset of R,W,A,C)");
            args_ok = false;
          }
          break;
        case Arg::Prot:
          if (args[i] != "R" && args[i] != "W" && args[i] != "RW") {
            fail("bad mmap protection '" + args[i] + "' (R, W, or RW)");
            args_ok = false;
          }
          break;
        case Arg::IpcOp:
          if (args[i] != "semget" && args[i] != "semop" &&
              args[i] != "semctl") {
            fail("bad ipc op '" + args[i] + "'");
            args_ok = false;
          }
          break;
        case Arg::Text:
          break;
      }
    }
    if (!args_ok) continue;
    if (spec->ret_required && !event.ret) {
      fail(event.syscall + " requires a return value ('-> N')");
      continue;
    }
    event.args = std::move(args);
    last_seq = event.seq;
    any_event = true;
    result.trace.items.push_back(std::move(event));
  }
  return result;
}

}  // namespace claw
