#include "deq/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace deq {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

void write_text_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::filesystem::create_directories(p.parent_path());
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(std::string_view bytes) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string(buf);
}

void RunManifest::emit(const std::string& relative_path,
                       const std::string& content) {
  write_text_file(run_dir_ + "/" + relative_path, content);
  entries_.push_back({relative_path, content.size(), fnv1a64_hex(content)});
}

void RunManifest::finalize(const std::string& status, const std::string& note) {
  nlohmann::ordered_json j;
  j["status"] = status;
  if (!note.empty()) j["note"] = note;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const ManifestEntry& e : entries_) {
    files.push_back({{"path", e.path}, {"bytes", e.bytes}, {"fnv1a64", e.hash}});
  }
  j["files"] = files;
  write_text_file(run_dir_ + "/manifest.json", j.dump(2) + "\n");
}

}  // namespace deq
