#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hf {

inline constexpr int kSchemaVersion = 1;

// shortest exact decimal is not stable across printf impls at %g defaults;
// 17 significant digits round-trips any double
std::string format_g17(double v);

std::string hash_hex(std::uint64_t h);

// "key = value" sidecar records
void write_meta(const std::string& path,
                const std::vector<std::pair<std::string, std::string>>& fields);

void ensure_dir(const std::string& path);

std::string read_text_file(const std::string& path);

}  // namespace hf
