// Regenerates the bundled demo CSVs under data/. Run from the repo root:
//   ./build/tools/gen-fixtures data
#include "deepgb/model_io.hpp"
#include "deepgb/synthetic.hpp"

#include <cstdio>
#include <filesystem>
#include <string>

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "data";
    std::filesystem::create_directories(dir);
    for (const auto& ts : deepgb::synthetic::bundled_suite()) {
        const std::string path = dir + "/" + ts.name + ".csv";
        deepgb::atomic_write(path, deepgb::synthetic::to_long_csv(ts));
        std::printf("wrote %s (%zu rows)\n", path.c_str(), ts.size());
    }
    return 0;
}
