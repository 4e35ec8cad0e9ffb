#include "roomlm/manifest.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "text_util.hpp"

namespace roomlm {

std::string digest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return "fnv1a64:" + detail::hex64(detail::fnv1a64(ss.str()));
}

std::string digest_string(std::string_view text) { return detail::hex64(detail::fnv1a64(text)); }

std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    long long v = 0;
    if (detail::parse_int(epoch, v)) t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void RunManifest::add_input(const std::filesystem::path& path) { input_digests[path.string()] = digest_file(path); }

void RunManifest::write(const std::filesystem::path& path) const {
  nlohmann::json doc = {{"command", command},   {"flags", flags},
                        {"inputs", input_digests}, {"backend", backend},
                        {"template", template_version}, {"timestamp", timestamp.empty() ? utc_timestamp() : timestamp},
                        {"outputs", outputs}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

}  // namespace roomlm
