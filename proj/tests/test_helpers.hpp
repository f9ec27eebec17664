#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <string>

namespace test_helpers {

// Unique scratch directory, removed on scope exit.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& label) {
        static std::atomic<int> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("taskinduct_" + label + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

}  // namespace test_helpers
