#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <thread>

#include <nlohmann/json.hpp>

#include "partprompt/errors.hpp"
#include "partprompt/io.hpp"
#include "partprompt/segmenter.hpp"

namespace partprompt {

namespace fs = std::filesystem;

namespace {

constexpr const char* kRequestFile = "request.json";
constexpr const char* kFeatureFile = "features.npy";
constexpr const char* kResponseFile = "response.pgm";
constexpr const char* kLogFile = "sidecar.log";

fs::path workspace_parent(const SidecarOptions& options) {
  if (options.workspace_root) return *options.workspace_root;
  if (const char* env = std::getenv("PARTPROMPT_TMPDIR"); env && *env) return env;
  return fs::temp_directory_path();
}

fs::path make_workspace(const SidecarOptions& options) {
  const fs::path parent = workspace_parent(options);
  std::error_code ec;
  fs::create_directories(parent, ec);
  std::string pattern = (parent / "partprompt-XXXXXX").string();
  if (::mkdtemp(pattern.data()) == nullptr) {
    throw Error(ErrorKind::IoError, "cannot create sidecar workspace under '" + parent.string() + "': " +
                                        std::strerror(errno));
  }
  return pattern;
}

std::string tail_of(const fs::path& log) {
  std::error_code ec;
  if (!fs::exists(log, ec)) return {};
  std::string text = io::read_file(log);
  constexpr std::size_t kMax = 4096;
  if (text.size() > kMax) text = "..." + text.substr(text.size() - kMax);
  return text;
}

enum class RunStatus { Exited, TimedOut };

struct RunResult {
  RunStatus status = RunStatus::Exited;
  int exit_code = 0;
};

// fork/exec `/bin/sh -c "<command> request.json"` inside `workspace`, with
// stdout+stderr redirected to the log. The child leads its own process group
// so a timeout kills everything it spawned.
RunResult run_command(const std::string& command, const fs::path& workspace, std::chrono::milliseconds timeout) {
  const std::string script = command + " " + kRequestFile;
  const std::string dir = workspace.string();
  const std::string log = (workspace / kLogFile).string();
  const char* argv[] = {"/bin/sh", "-c", script.c_str(), nullptr};

  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorKind::SidecarFailure, std::string("fork failed: ") + std::strerror(errno));
  if (pid == 0) {
    ::setpgid(0, 0);
    if (::chdir(dir.c_str()) != 0) ::_exit(127);
    const int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd >= 0) {
      ::dup2(fd, STDOUT_FILENO);
      ::dup2(fd, STDERR_FILENO);
      ::close(fd);
    }
    ::execv("/bin/sh", const_cast<char* const*>(argv));
    ::_exit(127);
  }
  ::setpgid(pid, pid);

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto pause = std::chrono::milliseconds(1);
  while (true) {
    int status = 0;
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) {
      RunResult r;
      r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
      return r;
    }
    if (done < 0 && errno != EINTR) throw Error(ErrorKind::SidecarFailure, std::string("waitpid: ") + std::strerror(errno));
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      return {RunStatus::TimedOut, -1};
    }
    std::this_thread::sleep_for(pause);
    pause = std::min(pause * 2, std::chrono::milliseconds(20));
  }
}

}  // namespace

std::string sidecar_request_json(const SegmentRequest& request) {
  if (!request.target) throw Error(ErrorKind::InvalidArgument, "segment request without target features");
  const FeatureMap& t = *request.target;
  nlohmann::ordered_json j;
  j["feature_map"] = kFeatureFile;
  if (request.image) {
    j["image"] = request.image->string();
  } else {
    j["image"] = nullptr;
  }
  j["image_size"] = {t.image_height(), t.image_width()};
  j["grid_size"] = {t.height(), t.width()};
  j["prompts"] = nlohmann::ordered_json::parse(prompts_to_json(request.prompts));
  j["respond_to"] = kResponseFile;
  return j.dump(2) + "\n";
}

SegmentResponse external_segment(const SegmentRequest& request, const SidecarOptions& options) {
  if (options.command.empty()) throw Error(ErrorKind::InvalidArgument, "sidecar command is empty");
  const std::string payload = sidecar_request_json(request);
  const fs::path ws = make_workspace(options);
  io::write_file(ws / kRequestFile, payload);
  io::write_feature_map(*request.target, ws / kFeatureFile);

  const auto run = run_command(options.command, ws, options.timeout);
  const std::string diagnostics = tail_of(ws / kLogFile);
  const std::string where = " (workspace " + ws.string() + ")";
  if (run.status == RunStatus::TimedOut) {
    throw Error(ErrorKind::Timeout, "sidecar exceeded " + std::to_string(options.timeout.count()) + " ms" + where +
                                        (diagnostics.empty() ? "" : "\n" + diagnostics));
  }
  if (run.exit_code != 0) {
    throw Error(ErrorKind::SidecarFailure, "sidecar exited with code " + std::to_string(run.exit_code) + where +
                                               (diagnostics.empty() ? "" : "\n" + diagnostics));
  }

  std::error_code ec;
  if (!fs::exists(ws / kResponseFile, ec)) {
    throw Error(ErrorKind::ProtocolError, "sidecar wrote no response mask" + where);
  }
  BinaryMask mask = [&] {
    try {
      return io::read_mask(ws / kResponseFile);
    } catch (const Error& e) {
      throw Error(ErrorKind::ProtocolError, std::string("malformed response mask: ") + e.what() + where);
    }
  }();
  if (mask.height() != request.target->height() || mask.width() != request.target->width()) {
    throw Error(ErrorKind::ProtocolError, "response mask is " + std::to_string(mask.height()) + "x" +
                                              std::to_string(mask.width()) + ", expected grid " +
                                              std::to_string(request.target->height()) + "x" +
                                              std::to_string(request.target->width()) + where);
  }
  fs::remove_all(ws, ec);
  return {std::move(mask), "ok", diagnostics};
}

}  // namespace partprompt
