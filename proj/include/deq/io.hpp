#ifndef DEQ_IO_HPP
#define DEQ_IO_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace deq {

// Shortest-exact formatting is locale-independent and reruns byte-identically.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

struct ManifestEntry {
  std::string path;  // relative to the run directory
  std::size_t bytes = 0;
  std::string hash;  // fnv1a64 of the content
};

// Collects files written during a run and serializes them as JSON, with a
// status field so aborted runs leave a partial-results manifest behind.
class RunManifest {
 public:
  explicit RunManifest(std::string run_dir) : run_dir_(std::move(run_dir)) {}

  // Writes content under the run dir and records it.
  void emit(const std::string& relative_path, const std::string& content);
  void finalize(const std::string& status, const std::string& note = "");

  const std::string& run_dir() const { return run_dir_; }
  const std::vector<ManifestEntry>& entries() const { return entries_; }

 private:
  std::string run_dir_;
  std::vector<ManifestEntry> entries_;
};

}  // namespace deq

#endif  // DEQ_IO_HPP
