#include "volclass/volume.hpp"

#include "volclass/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace volclass {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_list(std::string_view text) {
    std::string normalized(text);
    std::replace(normalized.begin(), normalized.end(), ',', ' ');
    std::replace(normalized.begin(), normalized.end(), 'x', ' ');
    std::istringstream in(normalized);
    return {std::istream_iterator<std::string>(in), std::istream_iterator<std::string>()};
}

std::uint32_t read_uint(const unsigned char* p, std::size_t width, Endian endian) {
    std::uint32_t v = 0;
    for (std::size_t i = 0; i < width; ++i) {
        const std::size_t shift = endian == Endian::Little ? 8 * i : 8 * (width - 1 - i);
        v |= static_cast<std::uint32_t>(p[i]) << shift;
    }
    return v;
}

void write_uint(unsigned char* p, std::uint32_t v, std::size_t width, Endian endian) {
    for (std::size_t i = 0; i < width; ++i) {
        const std::size_t shift = endian == Endian::Little ? 8 * i : 8 * (width - 1 - i);
        p[i] = static_cast<unsigned char>((v >> shift) & 0xFFu);
    }
}

} // namespace

std::size_t bytes_per_voxel(VoxelType type) {
    switch (type) {
    case VoxelType::U8: return 1;
    case VoxelType::U16: return 2;
    case VoxelType::S16: return 2;
    case VoxelType::F32: return 4;
    }
    throw Error(Errc::BadMeta, "unknown voxel type");
}

std::string_view to_string(VoxelType type) {
    switch (type) {
    case VoxelType::U8: return "u8";
    case VoxelType::U16: return "u16";
    case VoxelType::S16: return "s16";
    case VoxelType::F32: return "f32";
    }
    return "?";
}

std::string_view to_string(Endian endian) { return endian == Endian::Little ? "little" : "big"; }

VoxelType parse_voxel_type(std::string_view text) {
    const std::string t = lower(trim(text));
    if (t == "u8" || t == "uint8") return VoxelType::U8;
    if (t == "u16" || t == "uint16") return VoxelType::U16;
    if (t == "s16" || t == "i16" || t == "int16") return VoxelType::S16;
    if (t == "f32" || t == "float" || t == "float32") return VoxelType::F32;
    throw Error(Errc::BadMeta, "unknown voxel type '" + t + "'");
}

Endian parse_endian(std::string_view text) {
    const std::string t = lower(trim(text));
    if (t == "little" || t == "le") return Endian::Little;
    if (t == "big" || t == "be") return Endian::Big;
    throw Error(Errc::BadMeta, "unknown endianness '" + t + "'");
}

Dims parse_dims(std::string_view text) {
    const auto parts = split_list(text);
    if (parts.size() != 3) throw Error(Errc::BadMeta, "dims needs three values, got '" + std::string(text) + "'");
    Dims d{};
    for (std::size_t i = 0; i < 3; ++i) {
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(parts[i], &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != parts[i].size() || v <= 0)
            throw Error(Errc::BadMeta, "dims must be positive integers, got '" + std::string(text) + "'");
        d[i] = static_cast<std::size_t>(v);
    }
    return d;
}

Spacing parse_spacing(std::string_view text) {
    const auto parts = split_list(text);
    if (parts.size() != 3) throw Error(Errc::BadMeta, "spacing needs three values, got '" + std::string(text) + "'");
    Spacing s{};
    for (std::size_t i = 0; i < 3; ++i) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(parts[i], &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != parts[i].size() || !(v > 0) || !std::isfinite(v))
            throw Error(Errc::BadMeta, "spacing must be positive, got '" + std::string(text) + "'");
        s[i] = v;
    }
    return s;
}

void VolumeMeta::validate() const {
    for (std::size_t d : dims)
        if (d == 0) throw Error(Errc::BadMeta, "zero dimension");
    for (double s : spacing)
        if (!(s > 0) || !std::isfinite(s)) throw Error(Errc::BadMeta, "spacing must be positive");
}

PartialMeta PartialMeta::merged_with(const PartialMeta& overrides) const {
    PartialMeta out = *this;
    if (overrides.dims) out.dims = overrides.dims;
    if (overrides.voxel_type) out.voxel_type = overrides.voxel_type;
    if (overrides.endian) out.endian = overrides.endian;
    if (overrides.spacing) out.spacing = overrides.spacing;
    return out;
}

VolumeMeta PartialMeta::resolve() const {
    if (!dims) throw Error(Errc::BadMeta, "missing dims");
    if (!voxel_type) throw Error(Errc::BadMeta, "missing voxel type");
    VolumeMeta meta;
    meta.dims = *dims;
    meta.voxel_type = *voxel_type;
    meta.endian = endian.value_or(Endian::Little);
    meta.spacing = spacing.value_or(Spacing{1.0, 1.0, 1.0});
    meta.validate();
    return meta;
}

PartialMeta parse_sidecar(std::istream& in) {
    PartialMeta meta;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string content = trim(line);
        if (content.empty()) continue;
        auto sep = content.find('=');
        if (sep == std::string::npos) sep = content.find(':');
        if (sep == std::string::npos)
            throw Error(Errc::BadMeta, "line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = lower(trim(std::string_view(content).substr(0, sep)));
        const std::string value = trim(std::string_view(content).substr(sep + 1));
        if (key == "dims")
            meta.dims = parse_dims(value);
        else if (key == "type")
            meta.voxel_type = parse_voxel_type(value);
        else if (key == "endian")
            meta.endian = parse_endian(value);
        else if (key == "spacing")
            meta.spacing = parse_spacing(value);
        else
            throw Error(Errc::BadMeta, "line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    return meta;
}

PartialMeta read_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
    return parse_sidecar(in);
}

std::string format_sidecar(const VolumeMeta& meta) {
    std::ostringstream out;
    out.precision(17);
    out << "dims = " << meta.dims[0] << ' ' << meta.dims[1] << ' ' << meta.dims[2] << '\n'
        << "type = " << to_string(meta.voxel_type) << '\n'
        << "endian = " << to_string(meta.endian) << '\n'
        << "spacing = " << meta.spacing[0] << ' ' << meta.spacing[1] << ' ' << meta.spacing[2] << '\n';
    return out.str();
}

void write_sidecar(const std::filesystem::path& path, const VolumeMeta& meta) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
    out << format_sidecar(meta);
    if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

std::filesystem::path sidecar_path(const std::filesystem::path& data_path) {
    std::filesystem::path p = data_path;
    p += ".meta";
    return p;
}

Volume::Volume(VolumeMeta meta, std::vector<double> voxels) : meta_(meta), voxels_(std::move(voxels)) {
    meta_.validate();
    if (voxels_.size() != meta_.voxel_count())
        throw Error(Errc::SizeMismatch, "expected " + std::to_string(meta_.voxel_count()) + " voxels, got " +
                                            std::to_string(voxels_.size()));
    for (double v : voxels_)
        if (!std::isfinite(v)) throw Error(Errc::NonFinite, "volume contains a non-finite voxel");
}

Volume decode_volume(std::span<const unsigned char> bytes, const VolumeMeta& meta) {
    meta.validate();
    if (bytes.size() != meta.byte_size())
        throw Error(Errc::SizeMismatch, "expected " + std::to_string(meta.byte_size()) + " bytes, got " +
                                            std::to_string(bytes.size()));
    const std::size_t width = bytes_per_voxel(meta.voxel_type);
    std::vector<double> voxels(meta.voxel_count());
    for (std::size_t i = 0; i < voxels.size(); ++i) {
        const unsigned char* p = bytes.data() + i * width;
        switch (meta.voxel_type) {
        case VoxelType::U8: voxels[i] = p[0]; break;
        case VoxelType::U16: voxels[i] = static_cast<std::uint16_t>(read_uint(p, 2, meta.endian)); break;
        case VoxelType::S16:
            voxels[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(read_uint(p, 2, meta.endian)));
            break;
        case VoxelType::F32: voxels[i] = std::bit_cast<float>(read_uint(p, 4, meta.endian)); break;
        }
    }
    return Volume(meta, std::move(voxels));
}

Volume load_volume(const std::filesystem::path& data_path, const VolumeMeta& meta) {
    meta.validate();
    std::ifstream in(data_path, std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, "cannot open " + data_path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(Errc::IoFailure, "read failed for " + data_path.string());
    return decode_volume(bytes, meta);
}

std::vector<unsigned char> encode_volume(const Volume& volume, const VolumeMeta& meta) {
    const std::size_t width = bytes_per_voxel(meta.voxel_type);
    std::vector<unsigned char> bytes(volume.size() * width);
    const auto voxels = volume.voxels();
    for (std::size_t i = 0; i < voxels.size(); ++i) {
        unsigned char* p = bytes.data() + i * width;
        const double v = voxels[i];
        switch (meta.voxel_type) {
        case VoxelType::U8: p[0] = static_cast<unsigned char>(std::clamp(std::round(v), 0.0, 255.0)); break;
        case VoxelType::U16:
            write_uint(p, static_cast<std::uint16_t>(std::clamp(std::round(v), 0.0, 65535.0)), 2, meta.endian);
            break;
        case VoxelType::S16: {
            const auto s = static_cast<std::int16_t>(std::clamp(std::round(v), -32768.0, 32767.0));
            write_uint(p, static_cast<std::uint16_t>(s), 2, meta.endian);
            break;
        }
        case VoxelType::F32: write_uint(p, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4, meta.endian); break;
        }
    }
    return bytes;
}

void save_volume(const std::filesystem::path& data_path, const Volume& volume, VoxelType type, Endian endian) {
    VolumeMeta meta = volume.meta();
    meta.voxel_type = type;
    meta.endian = endian;
    const auto bytes = encode_volume(volume, meta);
    std::ofstream out(data_path, std::ios::binary);
    if (!out) throw Error(Errc::IoFailure, "cannot write " + data_path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::IoFailure, "write failed for " + data_path.string());
    write_sidecar(sidecar_path(data_path), meta);
}

std::pair<double, double> intensity_range(const Volume& volume) {
    const auto [lo, hi] = std::minmax_element(volume.voxels().begin(), volume.voxels().end());
    return {*lo, *hi};
}

} // namespace volclass
