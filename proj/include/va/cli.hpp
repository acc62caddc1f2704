#pragma once

#include <filesystem>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace va {

inline constexpr const char *kToolVersion = "0.1.0";

// Runs the command-line tool on `args` (program name excluded). Returns 0 on
// success, 1 on validation errors or bad usage, 2 on I/O and network errors.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path &path);
std::string sha256_hex(const std::string &bytes);

struct PipelineStage {
    std::string name;
    std::string command;
    std::vector<std::string> args;
    std::vector<std::string> depends_on;
};

struct PipelineConfig {
    std::vector<PipelineStage> stages;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;

    // JSON: {"seed": 1, "threads": 1, "stages": [{"name", "command", "args", "depends_on"}]}
    static PipelineConfig from_json(const std::string &text);
    // Dependency order; declaration order breaks ties. Throws ConfigError on
    // duplicate names, unknown dependencies and cycles.
    std::vector<std::size_t> order() const;
};

} // namespace va
