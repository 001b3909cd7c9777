#include "acctune/subprocess.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <thread>

#include "acctune/errors.hpp"

namespace acctune {

CommandResult run_command(const std::string& command, double timeout_s,
                          const std::filesystem::path& log_path) {
  int log_fd = ::open(log_path.c_str(), O_CREAT | O_WRONLY | O_APPEND, 0644);
  if (log_fd < 0) throw Error("cannot open log file: " + log_path.string());

  auto start = std::chrono::steady_clock::now();
  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(log_fd);
    throw Error("fork failed");
  }
  if (pid == 0) {
    // Child: own process group so a timeout can kill the whole pipeline.
    ::setpgid(0, 0);
    ::dup2(log_fd, STDOUT_FILENO);
    ::dup2(log_fd, STDERR_FILENO);
    ::close(log_fd);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  ::close(log_fd);

  CommandResult result;
  int status = 0;
  bool deadline_set = timeout_s > 0.0;
  auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(deadline_set ? timeout_s : 0.0));
  while (true) {
    pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0) throw Error("waitpid failed");
    if (deadline_set && std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!result.timed_out && WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
    result.not_found = result.exit_code == 127;
  }
  return result;
}

std::string expand_template(std::string_view tmpl,
                            const std::vector<std::pair<std::string_view, std::string>>& subs) {
  std::string out(tmpl);
  for (const auto& [key, value] : subs) {
    std::string token = "{" + std::string(key) + "}";
    std::size_t pos = 0;
    while ((pos = out.find(token, pos)) != std::string::npos) {
      out.replace(pos, token.size(), value);
      pos += value.size();
    }
  }
  return out;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

}  // namespace acctune
