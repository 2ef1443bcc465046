#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "sempref/records.hpp"

namespace sempref::jsonl {

// Line-delimited JSON record files, one record per line, UTF-8. Byte
// payloads (test inputs, oracle outputs, captured outputs) are base64
// inside the records so files stay line-safe. Writers emit a fixed field
// order and records sorted by primary key, so identical records always
// produce byte-identical files.

std::vector<Problem> load_problems(const std::filesystem::path& file);
std::vector<Candidate> load_candidates(const std::filesystem::path& file);
std::vector<ExecutionTrace> load_traces(const std::filesystem::path& file);
std::vector<PreferencePair> load_pairs(const std::filesystem::path& file);

// Loads both files and validates record invariants plus referential
// integrity. Throws ValidationError with file/line context.
Dataset load_dataset(const std::filesystem::path& problems_file,
                     const std::filesystem::path& candidates_file);

void save_problems(std::span<const Problem> records, const std::filesystem::path& file);
void save_candidates(std::span<const Candidate> records, const std::filesystem::path& file);
void save_traces(std::span<const ExecutionTrace> records, const std::filesystem::path& file);
void save_pairs(std::span<const PreferencePair> records, const std::filesystem::path& file);

} // namespace sempref::jsonl
