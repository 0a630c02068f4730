#include "sdnet/pipeline/workdir.hpp"

#include <fcntl.h>
#include <unistd.h>

namespace sdnet::pipeline {

WorkDirLock::WorkDirLock(const std::filesystem::path& workdir) {
  std::filesystem::create_directories(workdir);
  lock_path_ = workdir / ".sdnet.lock";
  const int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw ConfigError("work dir is locked by another invocation (" + lock_path_.string() +
                      " exists); remove the stale lock if no process is running");
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto written = ::write(fd, pid.data(), pid.size());
  ::close(fd);
  owned_ = true;
}

WorkDirLock::~WorkDirLock() {
  if (owned_) {
    std::error_code ec;
    std::filesystem::remove(lock_path_, ec);
  }
}

void write_error_record(const std::filesystem::path& workdir, const std::string& subcommand,
                        const std::string& type, const std::string& message) {
  std::error_code ec;
  std::filesystem::create_directories(workdir, ec);
  if (ec) return;
  util::json j{{"schema_version", kSchemaVersion},
               {"subcommand", subcommand},
               {"type", type},
               {"message", message}};
  try {
    util::write_json(workdir / "error.json", j);
  } catch (...) {
    // stderr already carries the message; the record is best effort.
  }
}

}  // namespace sdnet::pipeline
