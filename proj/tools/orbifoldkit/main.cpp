#include "scenario.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <fstream>
#include <iostream>
#include <thread>

int main(int argc, char** argv) {
    CLI::App app{"orbifoldkit: exact kernel for reduced 1-d orbifold atlases, charted maps and "
                 "their germ groupoids"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "parse scenario files and run their commands");
    std::vector<std::string> paths;
    std::string json_out;
    unsigned jobs = 1, depth_cap = 8;
    bool allow_unknown = false;
    run->add_option("scenario", paths, "scenario file(s)")->required();
    run->add_option("--json-out", json_out, "write a machine-readable report to this file");
    run->add_option("--jobs", jobs, "run scenarios in parallel")->default_val(1);
    run->add_option("--depth-cap", depth_cap, "word-length cap for arrow saturation searches")
        ->default_val(8);
    run->add_flag("--allow-unknown", allow_unknown,
                  "unknown outcomes do not fail the run");

    CLI11_PARSE(app, argc, argv);

    okit::RunFlags flags;
    flags.depth_cap = depth_cap;
    flags.allow_unknown = allow_unknown;

    struct Slot {
        okit::ScenarioReport report;
        bool errored = false;
        int error_line = 0;
        std::string error_msg;
    };
    std::vector<Slot> slots(paths.size());

    auto work = [&](size_t i) {
        try {
            slots[i].report = okit::run_scenario(paths[i], flags);
        } catch (const okit::ParseError& e) {
            slots[i] = {{}, true, e.line, std::string("parse error: ") + e.what()};
        } catch (const okit::UnknownId& e) {
            slots[i] = {{}, true, e.line, std::string("unknown id: ") + e.what()};
        } catch (const okit::CommandError& e) {
            slots[i] = {{}, true, e.line, std::string("command error: ") + e.what()};
        } catch (const std::exception& e) {
            slots[i] = {{}, true, 0, std::string("error: ") + e.what()};
        }
    };

    if (jobs <= 1 || paths.size() <= 1) {
        for (size_t i = 0; i < paths.size(); ++i) work(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        size_t n = std::min<size_t>(jobs, paths.size());
        for (size_t t = 0; t < n; ++t)
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < paths.size(); i = next.fetch_add(1))
                    work(i);
            });
        for (auto& t : pool) t.join();
    }

    bool any_error = false, any_fail = false;
    nlohmann::ordered_json scenarios = nlohmann::ordered_json::array();
    for (size_t i = 0; i < paths.size(); ++i) {
        if (slots[i].errored) {
            any_error = true;
            std::cerr << paths[i] << ":" << slots[i].error_line << ": " << slots[i].error_msg
                      << "\n";
            nlohmann::ordered_json j;
            j["path"] = paths[i];
            j["error"] = {{"line", slots[i].error_line}, {"message", slots[i].error_msg}};
            scenarios.push_back(std::move(j));
            continue;
        }
        std::cout << slots[i].report.human();
        if (!slots[i].report.ok(allow_unknown)) any_fail = true;
        scenarios.push_back(slots[i].report.machine());
    }

    if (!json_out.empty()) {
        nlohmann::ordered_json top;
        top["scenarios"] = std::move(scenarios);
        std::ofstream f(json_out);
        f << top.dump(2) << "\n";
        if (!f) {
            std::cerr << "cannot write '" << json_out << "'\n";
            return 2;
        }
    }
    return any_error ? 2 : any_fail ? 1 : 0;
}
