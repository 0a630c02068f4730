#pragma once

#include <filesystem>

#include "sdnet/common.hpp"
#include "sdnet/util/jsonio.hpp"

namespace sdnet::pipeline {

/// One CLI invocation owns the work directory for its lifetime:
/// an exclusive lock file, removed on destruction.
class WorkDirLock {
 public:
  explicit WorkDirLock(const std::filesystem::path& workdir);
  ~WorkDirLock();
  WorkDirLock(const WorkDirLock&) = delete;
  WorkDirLock& operator=(const WorkDirLock&) = delete;

 private:
  std::filesystem::path lock_path_;
  bool owned_ = false;
};

/// Machine-readable failure record (workdir/error.json).
void write_error_record(const std::filesystem::path& workdir, const std::string& subcommand,
                        const std::string& type, const std::string& message);

}  // namespace sdnet::pipeline
