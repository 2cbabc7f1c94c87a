#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <ostream>

#include "drowsy/errors.hpp"
#include "drowsy/events.hpp"
#include "drowsy/pipeline.hpp"

extern char** environ;

namespace drowsy {

bool AlertPolicy::triggers(EventKind kind) const {
  return action != AlertAction::none && std::find(on_kinds.begin(), on_kinds.end(), kind) != on_kinds.end();
}

void AlertPolicy::validate() const {
  if (action == AlertAction::exec && command.empty()) {
    throw ConfigError("exec alert needs a non-empty command");
  }
}

AlertPolicy AlertPolicy::parse(std::string_view text) {
  AlertPolicy p;
  if (text == "bell") {
    p.action = AlertAction::bell;
  } else if (text == "none") {
    p.action = AlertAction::none;
  } else if (text.starts_with("exec:")) {
    p.action = AlertAction::exec;
    p.command = std::string(text.substr(5));
  } else {
    throw ConfigError("unknown alert \"" + std::string(text) + "\" (expected bell, exec:CMD or none)");
  }
  p.validate();
  return p;
}

Alarm::Alarm(AlertPolicy policy, std::ostream* bell_out) : policy_(std::move(policy)), bell_out_(bell_out) {
  policy_.validate();
  if (policy_.action == AlertAction::exec) {
    // A command that never reads its input must not kill the engine.
    ::signal(SIGPIPE, SIG_IGN);
  }
}

Alarm::~Alarm() { wait_all(); }

bool Alarm::maybe_fire(const EyeEvent& event) {
  if (!policy_.triggers(event.kind)) return false;
  ++fired_;
  switch (policy_.action) {
    case AlertAction::bell:
      if (bell_out_) {
        *bell_out_ << '\a' << std::flush;
      }
      break;
    case AlertAction::exec:
      reap(false);
      spawn(event);
      break;
    case AlertAction::none:
      break;
  }
  return true;
}

void Alarm::spawn(const EyeEvent& event) {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    throw Error(std::string("alarm pipe: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[0], STDIN_FILENO);
  const char* argv[] = {"/bin/sh", "-c", policy_.command.c_str(), nullptr};
  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, const_cast<char* const*>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(fds[0]);
  if (rc != 0) {
    ::close(fds[1]);
    throw Error(std::string("alarm spawn: ") + std::strerror(rc));
  }
  children_.push_back(pid);
  std::string line = event_to_json(event);
  line += '\n';
  // The record is far below PIPE_BUF, so this write does not block.
  [[maybe_unused]] const ssize_t n = ::write(fds[1], line.data(), line.size());
  ::close(fds[1]);
}

void Alarm::reap(bool block) {
  std::erase_if(children_, [block](pid_t pid) {
    int status = 0;
    pid_t r;
    do {
      r = ::waitpid(pid, &status, block ? 0 : WNOHANG);
    } while (r < 0 && errno == EINTR);
    return r != 0;
  });
}

void Alarm::wait_all() { reap(true); }

}  // namespace drowsy
