#pragma once

#include <cstddef>
#include <string>
#include <sys/types.h>
#include <vector>

namespace forbes {

// A child process with its stdin/stdout wired to pipes. Writes and reads
// are all-or-nothing; short I/O surfaces as ProtocolError.
class ChildProcess {
 public:
  explicit ChildProcess(const std::vector<std::string>& argv);
  ~ChildProcess();

  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;

  void write_exact(const void* data, size_t len);
  void read_exact(void* data, size_t len);

  // Reads bytes up to and including '\n' (dropped), bounded by max_len.
  std::string read_line(size_t max_len = 256);

 private:
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
};

std::vector<std::string> split_command(const std::string& command);

}  // namespace forbes
