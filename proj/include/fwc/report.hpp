#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

#include "fwc/eval.hpp"
#include "fwc/mm_driver.hpp"

namespace fwc {

inline constexpr const char* kVersion = "0.1.0";

// git's blob id: sha1("blob <size>\0" + content), lowercase hex.
std::string blob_hash(std::string_view content);
std::string file_blob_hash(const std::filesystem::path& path);

nlohmann::json to_json(const MMConfig& config);
nlohmann::json to_json(const RunReport& report, bool include_timing = true);
nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const Disparity& disparity);

// Pretty-printed with a trailing newline.
void write_json(const nlohmann::json& value, const std::filesystem::path& path);

}  // namespace fwc
