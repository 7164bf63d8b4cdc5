#pragma once

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace okit {

struct RunFlags {
    unsigned depth_cap = 8;
    bool allow_unknown = false;
};

// scenario-level hard errors; all carry the offending line number
struct ScenarioError : std::runtime_error {
    int line;
    ScenarioError(int l, const std::string& m) : std::runtime_error(m), line(l) {}
};
struct ParseError : ScenarioError {
    ParseError(int l, const std::string& expected) : ScenarioError(l, expected) {}
};
struct UnknownId : ScenarioError {
    UnknownId(int l, const std::string& m) : ScenarioError(l, m) {}
};
struct CommandError : ScenarioError {
    CommandError(int l, const std::string& m) : ScenarioError(l, m) {}
};

struct CommandResult {
    std::string command;            // the command line as written
    std::string outcome;            // pass | fail | unknown
    nlohmann::ordered_json details;
};

struct ScenarioReport {
    std::string path;
    std::vector<CommandResult> commands;
    int passed = 0, failed = 0, unknown = 0;

    bool ok(bool allow_unknown) const {
        return failed == 0 && (allow_unknown || unknown == 0);
    }
    std::string human() const;
    nlohmann::ordered_json machine() const;
};

// parses and executes one scenario file; commands run in file order against
// the registry of declarations made so far
ScenarioReport run_scenario(const std::string& path, const RunFlags& flags);

}  // namespace okit
