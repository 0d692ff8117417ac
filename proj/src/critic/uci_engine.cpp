#include "chessrl/critic/uci_engine.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>
#include <thread>

#include "chessrl/chess/notation.hpp"
#include "chessrl/errors.hpp"

namespace chessrl::critic {
namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string errno_text(int err) { return std::strerror(err); }

}  // namespace

std::vector<std::string> split_command(const std::string& cmd) {
  std::istringstream in(cmd);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

bool parse_info_score(const std::string& line, EngineEval& out) {
  std::istringstream in(line);
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(t);
  if (tok.empty() || tok[0] != "info") return false;
  bool found = false;
  EngineEval eval;
  for (std::size_t i = 1; i < tok.size(); ++i) {
    if (tok[i] == "multipv" && i + 1 < tok.size() && tok[i + 1] != "1") return false;
    if (tok[i] == "lowerbound" || tok[i] == "upperbound") return false;
    if (tok[i] == "score" && i + 2 < tok.size()) {
      if (tok[i + 1] != "cp" && tok[i + 1] != "mate") return false;
      eval.is_mate = tok[i + 1] == "mate";
      try {
        std::size_t used = 0;
        eval.value = std::stoi(tok[i + 2], &used);
        if (used != tok[i + 2].size()) return false;
      } catch (const std::exception&) {
        return false;
      }
      found = true;
      i += 2;
    }
    // Everything after "string" or "pv" is free text or moves.
    if (tok[i] == "string" || tok[i] == "pv") break;
  }
  if (found) out = eval;
  return found;
}

int mover_cp(const EngineEval& e) {
  if (!e.is_mate) return -e.value;
  if (e.value > 0) return -mate_cp(e.value);
  if (e.value < 0) return mate_cp(-e.value);
  return mate_cp(1);
}

struct UciEngineCritic::Process {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string buf;

  ~Process() { terminate(); }

  void send(const std::string& line) {
    const std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(to_child, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError("write to engine failed: " + errno_text(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  /// False on deadline. Throws ProtocolError when the engine closes stdout.
  bool read_line(std::string& line, Clock::time_point deadline) {
    for (;;) {
      const auto nl = buf.find('\n');
      if (nl != std::string::npos) {
        line = buf.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        buf.erase(0, nl + 1);
        return true;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
      if (left <= 0) return false;
      pollfd pfd{from_child, POLLIN, 0};
      const int r = ::poll(&pfd, 1, static_cast<int>(left));
      if (r < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError("poll failed: " + errno_text(errno));
      }
      if (r == 0) return false;
      char chunk[4096];
      const ssize_t n = ::read(from_child, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw ProtocolError("read from engine failed: " + errno_text(errno));
      }
      if (n == 0) throw ProtocolError("engine closed its output");
      buf.append(chunk, static_cast<std::size_t>(n));
    }
  }

  /// Reads until a line equal to `token` (or starting with it, for
  /// `bestmove`). Each line is passed to `on_line`.
  template <typename F>
  bool expect(const std::string& token, Clock::time_point deadline, F&& on_line) {
    std::string line;
    while (read_line(line, deadline)) {
      on_line(line);
      if (line == token || line.rfind(token + " ", 0) == 0) return true;
    }
    return false;
  }

  void terminate() {
    if (pid <= 0) return;
    try {
      send("quit");
    } catch (const Error&) {
    }
    if (to_child >= 0) ::close(to_child);
    if (from_child >= 0) ::close(from_child);
    to_child = from_child = -1;
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid, &status, WNOHANG) == pid) {
        pid = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(4));
    }
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    pid = -1;
  }
};

UciEngineCritic::UciEngineCritic(UciOptions opts) : opts_(std::move(opts)) {
  if (opts_.command.empty()) throw EngineSpawnError("empty engine command");
  ignore_sigpipe();
  std::lock_guard lock(mu_);
  start();
}

UciEngineCritic::~UciEngineCritic() { stop(); }

int UciEngineCritic::restarts() const {
  std::lock_guard lock(mu_);
  return restarts_;
}

void UciEngineCritic::start() const {
  int in[2], out[2], status[2];
  if (::pipe2(in, O_CLOEXEC) != 0 || ::pipe2(out, O_CLOEXEC) != 0 || ::pipe2(status, O_CLOEXEC) != 0)
    throw EngineSpawnError("pipe: " + errno_text(errno));

  std::vector<char*> argv;
  for (const auto& a : opts_.command) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) throw EngineSpawnError("fork: " + errno_text(errno));
  if (pid == 0) {
    ::dup2(in[0], STDIN_FILENO);
    ::dup2(out[1], STDOUT_FILENO);
    ::execvp(argv[0], argv.data());
    const int err = errno;
    [[maybe_unused]] auto n = ::write(status[1], &err, sizeof err);
    ::_exit(127);
  }
  ::close(in[0]);
  ::close(out[1]);
  ::close(status[1]);

  auto proc = std::make_unique<Process>();
  proc->pid = pid;
  proc->to_child = in[1];
  proc->from_child = out[0];

  int child_errno = 0;
  ssize_t n;
  do {
    n = ::read(status[0], &child_errno, sizeof child_errno);
  } while (n < 0 && errno == EINTR);
  ::close(status[0]);
  if (n > 0) {
    proc->terminate();
    throw EngineSpawnError("cannot execute '" + opts_.command[0] + "': " + errno_text(child_errno));
  }

  auto ignore = [](const std::string&) {};
  const auto deadline = Clock::now() + std::chrono::milliseconds(opts_.handshake_ms);
  try {
    proc->send("uci");
    if (!proc->expect("uciok", deadline, ignore)) throw EngineTimeout("no uciok within handshake deadline");
    proc->send("setoption name Threads value 1");
    proc->send("isready");
    if (!proc->expect("readyok", deadline, ignore)) throw EngineTimeout("no readyok within handshake deadline");
  } catch (const Error&) {
    proc->terminate();
    throw;
  }
  proc_ = std::move(proc);
}

void UciEngineCritic::stop() const { proc_.reset(); }

EngineEval UciEngineCritic::evaluate(const chess::Position& pos) const {
  std::lock_guard lock(mu_);
  if (!proc_) {
    start();
    ++restarts_;
  }
  auto ignore = [](const std::string&) {};
  const auto deadline = Clock::now() + std::chrono::milliseconds(opts_.handshake_ms + opts_.movetime_ms + opts_.grace_ms);
  bool have = false;
  EngineEval eval;
  try {
    // A fresh game per query clears the engine's hash so repeats agree.
    proc_->send("ucinewgame");
    proc_->send("isready");
    if (!proc_->expect("readyok", deadline, ignore)) throw EngineTimeout("no readyok before query");
    proc_->send("position fen " + chess::to_fen(pos));
    proc_->send("go movetime " + std::to_string(opts_.movetime_ms));
    const bool done = proc_->expect("bestmove", deadline, [&](const std::string& line) {
      EngineEval e;
      if (parse_info_score(line, e)) {
        eval = e;
        have = true;
      }
    });
    if (!done) throw EngineTimeout("no bestmove within " + std::to_string(opts_.movetime_ms + opts_.grace_ms) + " ms");
  } catch (const Error&) {
    stop();
    throw;
  }
  if (!have) throw ProtocolError("engine sent bestmove without a score");
  return eval;
}

CriticScore UciEngineCritic::score(const chess::Position& pos, const chess::Move& mv) const {
  require_legal(pos, mv);
  const auto succ = pos.play_unchecked(mv);
  int cp;
  if (chess::generate_legal(succ).empty())
    cp = succ.in_check() ? mate_cp(1) : 0;
  else
    cp = mover_cp(evaluate(succ));
  return {win_probability(cp), id(), static_cast<std::uint64_t>(opts_.movetime_ms)};
}

UciEnginePool::UciEnginePool(const UciOptions& opts, int size, std::chrono::milliseconds acquire_timeout)
    : acquire_timeout_(acquire_timeout) {
  for (int i = 0; i < std::max(size, 1); ++i) handles_.push_back(std::make_unique<UciEngineCritic>(opts));
  busy_.assign(handles_.size(), false);
}

CriticScore UciEnginePool::score(const chess::Position& pos, const chess::Move& mv) const {
  std::size_t slot = 0;
  {
    std::unique_lock lock(mu_);
    auto free_slot = [&] {
      for (std::size_t i = 0; i < busy_.size(); ++i)
        if (!busy_[i]) {
          slot = i;
          return true;
        }
      return false;
    };
    if (!cv_.wait_for(lock, acquire_timeout_, free_slot)) throw EngineTimeout("no free engine handle");
    busy_[slot] = true;
  }
  struct Release {
    const UciEnginePool* pool;
    std::size_t slot;
    ~Release() {
      {
        std::lock_guard lock(pool->mu_);
        pool->busy_[slot] = false;
      }
      pool->cv_.notify_one();
    }
  } release{this, slot};
  return handles_[slot]->score(pos, mv);
}

}  // namespace chessrl::critic
