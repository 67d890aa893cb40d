#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace focusforge {

/// Collects output files in temporaries next to their destinations and moves
/// them into place together on commit(). Uncommitted temporaries are removed on
/// destruction, so a failed job leaves no partial primary output behind.
class StagedOutputs {
 public:
  StagedOutputs() = default;
  StagedOutputs(const StagedOutputs&) = delete;
  StagedOutputs& operator=(const StagedOutputs&) = delete;
  ~StagedOutputs();

  void stage(const std::filesystem::path& dest, const std::string& bytes);
  void commit();
  std::vector<std::filesystem::path> destinations() const;

 private:
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> files_;  // (temp, dest)
  bool committed_ = false;
};

/// Writes a single file through a temporary and rename.
void write_file_atomic(const std::filesystem::path& dest, const std::string& bytes);

std::string read_file(const std::filesystem::path& path);

/// `path` with its extension replaced by `.meta.json`.
std::filesystem::path sidecar_path(const std::filesystem::path& path);

}  // namespace focusforge
