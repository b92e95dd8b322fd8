#include "forbes/child_process.hpp"

#include <csignal>
#include <cstring>
#include <sstream>

#include <errno.h>
#include <sys/wait.h>
#include <unistd.h>

#include "forbes/errors.hpp"

namespace forbes {

std::vector<std::string> split_command(const std::string& command) {
  std::vector<std::string> parts;
  std::istringstream is(command);
  std::string tok;
  while (is >> tok) parts.push_back(tok);
  return parts;
}

ChildProcess::ChildProcess(const std::vector<std::string>& argv) {
  if (argv.empty()) throw ConfigError("empty child command");

  // A dead child turns writes into EPIPE instead of SIGPIPE.
  ::signal(SIGPIPE, SIG_IGN);

  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0) throw IoError("pipe failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw IoError("pipe failed");
  }

  pid_ = ::fork();
  if (pid_ < 0) throw IoError("fork failed");

  if (pid_ == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    std::vector<char*> cargv;
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    ::execvp(cargv[0], cargv.data());
    ::_exit(127);
  }

  ::close(to_child[0]);
  ::close(from_child[1]);
  to_child_ = to_child[1];
  from_child_ = from_child[0];
}

ChildProcess::~ChildProcess() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

void ChildProcess::write_exact(const void* data, size_t len) {
  const char* p = static_cast<const char*>(data);
  while (len > 0) {
    const ssize_t n = ::write(to_child_, p, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("write to child failed: ") + std::strerror(errno));
    }
    p += n;
    len -= static_cast<size_t>(n);
  }
}

void ChildProcess::read_exact(void* data, size_t len) {
  char* p = static_cast<char*>(data);
  while (len > 0) {
    const ssize_t n = ::read(from_child_, p, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("read from child failed: ") + std::strerror(errno));
    }
    if (n == 0) throw ProtocolError("child closed the stream mid-message");
    p += n;
    len -= static_cast<size_t>(n);
  }
}

std::string ChildProcess::read_line(size_t max_len) {
  std::string line;
  char ch = 0;
  while (line.size() < max_len) {
    read_exact(&ch, 1);
    if (ch == '\n') return line;
    line.push_back(ch);
  }
  throw ProtocolError("child reply line too long");
}

}  // namespace forbes
