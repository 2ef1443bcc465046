#pragma once

// Internal helpers shared by the record/report readers and writers.

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "sempref/errors.hpp"
#include "sempref/records.hpp"

namespace sempref::jsonl_util {

using ojson = nlohmann::ordered_json;

// Calls fn(parsed_object, line_number) for every non-empty line. Parse
// failures and non-object lines throw ValidationError with file:line.
void for_each_record(const std::filesystem::path& file,
                     const std::function<void(const ojson&, std::size_t)>& fn);

// Opens for writing, truncating. Throws StageError on failure.
std::ofstream open_for_write(const std::filesystem::path& file);

[[noreturn]] void fail_at(const std::filesystem::path& file, std::size_t line,
                          const std::string& message);

// Typed field access with file:line context on error.
std::string require_string(const ojson& rec, const char* key,
                           const std::filesystem::path& file, std::size_t line);
double require_number(const ojson& rec, const char* key,
                      const std::filesystem::path& file, std::size_t line);
std::string require_base64(const ojson& value, const std::filesystem::path& file,
                           std::size_t line, const char* key);

ojson outcome_to_json(const Outcome& outcome);
Outcome outcome_from_json(const ojson& value, const std::filesystem::path& file,
                          std::size_t line);

} // namespace sempref::jsonl_util
