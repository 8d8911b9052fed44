#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace volclass {

enum class VoxelType { U8, U16, S16, F32 };
enum class Endian { Little, Big };

std::size_t bytes_per_voxel(VoxelType type);
std::string_view to_string(VoxelType type);
std::string_view to_string(Endian endian);
/// Accepts u8/u16/s16/f32 (also uint8, uint16, int16, float32). Throws BadMeta.
VoxelType parse_voxel_type(std::string_view text);
Endian parse_endian(std::string_view text);

using Dims = std::array<std::size_t, 3>;
using Spacing = std::array<double, 3>;

struct VolumeMeta {
    Dims dims{0, 0, 0};
    VoxelType voxel_type = VoxelType::U8;
    Endian endian = Endian::Little;
    Spacing spacing{1.0, 1.0, 1.0};

    std::size_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
    std::size_t byte_size() const { return voxel_count() * bytes_per_voxel(voxel_type); }
    /// Throws BadMeta on a zero dimension or non-positive spacing.
    void validate() const;

    friend bool operator==(const VolumeMeta&, const VolumeMeta&) = default;
};

/// Sidecar descriptor with every key optional, so that command-line
/// overrides can be layered on top of a file before resolving.
struct PartialMeta {
    std::optional<Dims> dims;
    std::optional<VoxelType> voxel_type;
    std::optional<Endian> endian;
    std::optional<Spacing> spacing;

    /// Fields set in `overrides` win.
    PartialMeta merged_with(const PartialMeta& overrides) const;
    /// Missing dims or type is BadMeta; endian defaults to little, spacing to 1.
    VolumeMeta resolve() const;
};

// Sidecar format: one `key = value` per line, keys dims/type/endian/spacing,
// vector values separated by commas or whitespace, '#' starts a comment.
PartialMeta parse_sidecar(std::istream& in);
PartialMeta read_sidecar(const std::filesystem::path& path);
void write_sidecar(const std::filesystem::path& path, const VolumeMeta& meta);
std::string format_sidecar(const VolumeMeta& meta);
/// `<data>.meta`
std::filesystem::path sidecar_path(const std::filesystem::path& data_path);

Dims parse_dims(std::string_view text);
Spacing parse_spacing(std::string_view text);

/// Immutable scalar grid, x-fastest ordering, values widened to double.
class Volume {
public:
    /// Throws SizeMismatch if the voxel count disagrees with meta, NonFinite
    /// if any value is NaN or infinite.
    Volume(VolumeMeta meta, std::vector<double> voxels);

    const VolumeMeta& meta() const { return meta_; }
    const Dims& dims() const { return meta_.dims; }
    std::span<const double> voxels() const { return voxels_; }
    std::size_t size() const { return voxels_.size(); }

    std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return x + meta_.dims[0] * (y + meta_.dims[1] * z);
    }
    double at(std::size_t x, std::size_t y, std::size_t z) const { return voxels_[index(x, y, z)]; }

private:
    VolumeMeta meta_;
    std::vector<double> voxels_;
};

Volume load_volume(const std::filesystem::path& data_path, const VolumeMeta& meta);
/// Decodes an in-memory byte buffer; load_volume is this plus file I/O.
Volume decode_volume(std::span<const unsigned char> bytes, const VolumeMeta& meta);
/// Encodes voxels with meta.voxel_type/endian. Values are rounded and
/// clamped for integer types.
std::vector<unsigned char> encode_volume(const Volume& volume, const VolumeMeta& meta);
/// Writes the raw file and its sidecar.
void save_volume(const std::filesystem::path& data_path, const Volume& volume, VoxelType type,
                 Endian endian = Endian::Little);

/// (min, max) over all voxels.
std::pair<double, double> intensity_range(const Volume& volume);

} // namespace volclass
