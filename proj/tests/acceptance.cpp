// Runs the default verification twice and prints one line per acceptance
// criterion. Criterion 10 compares the data files of both runs byte for byte.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "sfhn/harness/commands.hpp"

namespace fs = std::filesystem;
using namespace sfhn::harness;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string bound_text(const nlohmann::json& v, const char* missing) {
    if (v.is_null()) return missing;
    std::ostringstream s;
    s << v.get<double>();
    return s.str();
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path config_path = argc > 1 ? fs::path(argv[1]) : fs::path(SFHN_DEFAULT_VERIFY_CONFIG);
    const fs::path root = fs::temp_directory_path() / "sfhn_acceptance";
    fs::remove_all(root);
    const ExperimentConfig config = load_config(config_path);

    const fs::path first = root / "run1", second = root / "run2";
    cmd_verify(config, {first, 1});
    cmd_verify(config, {second, 2});

    const nlohmann::json report = nlohmann::json::parse(slurp(first / "verify_report.json"));
    bool all = true;
    std::map<int, bool> seen;
    for (const auto& suite : report["suites"]) {
        const int c = suite["criterion"].get<int>();
        bool ok = true;
        std::ostringstream line;
        for (const auto& check : suite["checks"]) {
            ok = ok && check["passed"].get<bool>();
            line << "  " << check["metric"].get<std::string>() << "=" << check["value"].get<double>() << " in ["
                 << bound_text(check["lower"], "-inf") << ", " << bound_text(check["upper"], "inf") << "]";
        }
        seen[c] = ok;
        all = all && ok;
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c << " " << suite["name"].get<std::string>()
                  << line.str() << "\n";
    }
    for (int c = 1; c <= 9; ++c) {
        if (!seen.count(c)) {
            std::cout << "FAIL criterion " << c << " not run\n";
            all = false;
        }
    }

    std::size_t compared = 0, differing = 0;
    for (const auto& e : fs::directory_iterator(first)) {
        const std::string name = e.path().filename().string();
        if (name == "manifest.json") continue;
        ++compared;
        if (!fs::exists(second / name) || slurp(e.path()) != slurp(second / name)) {
            ++differing;
            std::cout << "  differs: " << name << "\n";
        }
    }
    std::size_t second_count = 0;
    for (const auto& e : fs::directory_iterator(second)) second_count += e.path().filename() != "manifest.json";
    const bool same = differing == 0 && compared == second_count && compared > 0;
    all = all && same;
    std::cout << (same ? "PASS" : "FAIL") << " criterion 10 determinism  data_files=" << compared
              << " differing=" << differing << " (runs with 1 and 2 threads)\n";
    std::cout << (all ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL") << "\n";
    return all ? 0 : 1;
}
