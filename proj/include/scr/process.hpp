#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace scr::process {

struct Command {
    std::vector<std::string> argv;
    std::filesystem::path cwd;
    std::chrono::milliseconds timeout{0};  // 0 = no limit
    std::map<std::string, std::string> env;  // added to the inherited environment
};

struct Result {
    int exit_code = -1;
    std::string out;
    std::string err;
    bool timed_out = false;

    bool ok() const { return exit_code == 0 && !timed_out; }
};

class Runner {
public:
    virtual ~Runner() = default;
    virtual Result run(const Command& cmd) = 0;
};

// fork/exec runner. No shell is involved: argv is passed verbatim.
class SubprocessRunner final : public Runner {
public:
    Result run(const Command& cmd) override;
};

// Process-wide count of fork() calls made by SubprocessRunner.
std::uint64_t launch_count();

// Shared default runner instance.
Runner& default_runner();

}  // namespace scr::process
