#pragma once

#include "json.hpp"

#include <string>

namespace pesin::cli {

using Json = nlohmann::ordered_json;

// parse errors carry "line L, column C"; schema errors name the field path
Json load_config(const std::string& path);
Json parse_config(const std::string& text);
// throws InputError on the first schema violation
void validate_config(const Json& cfg);

struct RunResult {
  int exit_code = 0;  // 0 all assertions passed, 1 input/internal error, 2 premise or assertion failure
  Json report;        // what goes to report.json; deterministic
  Json meta;          // timings and timestamps
};

// writes report.json, meta.json and the CSV files into out_dir
RunResult analyze(const Json& cfg, const std::string& out_dir, int workers = 1);

// rate fit along the configured orbit
Json fit(const Json& cfg);

}  // namespace pesin::cli
