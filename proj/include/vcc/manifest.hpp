#pragma once

// Dataset manifest: UTF-8 text, one `label<TAB>path` entry per line. Blank
// lines and lines starting with '#' are skipped. Relative paths resolve
// against the manifest's directory.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vcc/error.hpp"

namespace vcc {

struct ManifestEntry {
  std::string label;
  std::filesystem::path path;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  // Distinct labels, sorted.
  std::vector<std::string> classes() const {
    std::set<std::string> labels;
    for (const auto& e : entries) labels.insert(e.label);
    return {labels.begin(), labels.end()};
  }
};

// Labels appear verbatim in prediction listings, so they are restricted to
// [A-Za-z0-9_]+.
inline bool valid_label(std::string_view label) {
  return !label.empty() && std::all_of(label.begin(), label.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

inline Manifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir = {}) {
  Manifest manifest;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    const std::string where = "manifest line " + std::to_string(line_no) + ": ";
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) fail(ErrorCode::BadManifest, where + "expected label<TAB>path");
    std::string label(line.substr(0, tab));
    std::string path(line.substr(tab + 1));
    if (!valid_label(label)) fail(ErrorCode::BadManifest, where + "label must match [A-Za-z0-9_]+");
    if (path.empty()) fail(ErrorCode::BadManifest, where + "empty path");
    std::filesystem::path resolved = std::filesystem::path(path);
    if (resolved.is_relative() && !base_dir.empty()) resolved = base_dir / resolved;
    resolved = resolved.lexically_normal();
    if (!seen.insert(resolved.string()).second) fail(ErrorCode::BadManifest, where + "duplicate path " + path);
    manifest.entries.push_back({std::move(label), std::move(resolved)});
  }
  if (manifest.entries.empty()) fail(ErrorCode::BadManifest, "manifest has no entries");
  return manifest;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open manifest " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_manifest(text, path.parent_path());
}

inline std::string format_manifest(const Manifest& manifest) {
  std::string out;
  for (const auto& e : manifest.entries) out += e.label + "\t" + e.path.generic_string() + "\n";
  return out;
}

}  // namespace vcc
