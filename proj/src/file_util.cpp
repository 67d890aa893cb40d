#include "focusforge/file_util.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace focusforge {

namespace fs = std::filesystem;

namespace {
void write_raw(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), std::streamsize(bytes.size()));
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}
}  // namespace

StagedOutputs::~StagedOutputs() {
  if (committed_) return;
  std::error_code ec;
  for (const auto& [tmp, dest] : files_) fs::remove(tmp, ec);
}

void StagedOutputs::stage(const fs::path& dest, const std::string& bytes) {
  if (committed_) throw std::logic_error("StagedOutputs already committed");
  if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
  fs::path tmp = dest;
  tmp += ".tmp";
  write_raw(tmp, bytes);
  files_.emplace_back(tmp, dest);
}

void StagedOutputs::commit() {
  for (const auto& [tmp, dest] : files_) fs::rename(tmp, dest);
  committed_ = true;
}

std::vector<fs::path> StagedOutputs::destinations() const {
  std::vector<fs::path> out;
  for (const auto& f : files_) out.push_back(f.second);
  return out;
}

void write_file_atomic(const fs::path& dest, const std::string& bytes) {
  StagedOutputs staged;
  staged.stage(dest, bytes);
  staged.commit();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path sidecar_path(const fs::path& path) {
  fs::path p = path;
  p.replace_extension(".meta.json");
  return p;
}

}  // namespace focusforge
