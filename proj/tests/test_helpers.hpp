#pragma once

#include "volclass/random.hpp"
#include "volclass/volume.hpp"

#include <filesystem>
#include <functional>
#include <string>
#include <unistd.h>

namespace testing {

inline volclass::Volume make_volume(volclass::Dims dims,
                                    const std::function<double(std::size_t, std::size_t, std::size_t)>& f,
                                    volclass::Spacing spacing = {1.0, 1.0, 1.0}) {
    volclass::VolumeMeta meta;
    meta.dims = dims;
    meta.voxel_type = volclass::VoxelType::F32;
    meta.spacing = spacing;
    std::vector<double> v;
    v.reserve(meta.voxel_count());
    for (std::size_t z = 0; z < dims[2]; ++z)
        for (std::size_t y = 0; y < dims[1]; ++y)
            for (std::size_t x = 0; x < dims[0]; ++x) v.push_back(f(x, y, z));
    return volclass::Volume(meta, std::move(v));
}

inline volclass::Volume random_volume(volclass::Dims dims, std::uint64_t seed) {
    volclass::Rng rng(seed);
    return make_volume(dims, [&](std::size_t, std::size_t, std::size_t) { return rng.uniform(-100.0, 100.0); });
}

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("volclass_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::filesystem::path path_;
};

} // namespace testing
