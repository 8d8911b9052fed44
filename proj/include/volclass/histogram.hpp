#pragma once

#include "volclass/volume.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace volclass {

inline constexpr std::size_t kDefaultBins = 256;
inline constexpr unsigned kDefaultReduction = 3;

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Joint intensity / gradient-magnitude histogram.
///
/// Row index is the gradient-magnitude bin, column index is the intensity
/// bin, both starting at the low end. The raw integer counts are kept next
/// to the normalized values so that rebinning stays exact.
class Histogram2D {
public:
    /// Builds the normalized values from counts via log(1+c)/log(1+c_max).
    /// Throws BadBins unless `bins` is a power of two and counts has bins² cells.
    Histogram2D(std::size_t bins, std::vector<std::uint64_t> counts, double intensity_lo, double intensity_hi,
                double gmag_max);

    std::size_t size() const { return bins_; }
    float value(std::size_t row, std::size_t col) const { return values_[row * bins_ + col]; }
    std::uint64_t count(std::size_t row, std::size_t col) const { return counts_[row * bins_ + col]; }
    std::span<const float> values() const { return values_; }
    std::span<const std::uint64_t> counts() const { return counts_; }
    std::uint64_t total_count() const;

    double intensity_lo() const { return intensity_lo_; }
    double intensity_hi() const { return intensity_hi_; }
    double gmag_max() const { return gmag_max_; }

private:
    std::size_t bins_;
    std::vector<std::uint64_t> counts_;
    std::vector<float> values_;
    double intensity_lo_;
    double intensity_hi_;
    double gmag_max_;
};

/// Per-voxel ‖∇f‖ using central differences over 2·spacing inside the grid
/// and one-sided differences over spacing on the faces. Axes of extent 1
/// contribute nothing.
std::vector<double> gradient_magnitude_field(const Volume& volume);

/// Maps v in [lo, hi] to 0..bins-1. Values on an internal edge go to the upper
/// bin, hi lands in bins-1 and a degenerate range maps everything to 0.
std::size_t bin_index(double v, double lo, double hi, std::size_t bins);

/// Throws BadBins unless bins is a power of two in [8, 256].
Histogram2D compute_histogram(const Volume& volume, std::size_t bins = kDefaultBins);

/// Sums 2^factor × 2^factor blocks of counts and re-normalizes.
/// Throws BadFactor when 2^factor exceeds the histogram size.
Histogram2D downscale(const Histogram2D& h, unsigned factor);

/// Row-major values, length size()².
std::vector<float> flatten(const Histogram2D& h);

/// Binary PGM (P5), pixel = round(255·value), gradient axis increasing upward.
void write_pgm(const Histogram2D& h, std::ostream& out);
void export_image(const Histogram2D& h, const std::filesystem::path& path);

/// `row,col,count` lines after a header line.
void write_counts_csv(const Histogram2D& h, std::ostream& out);
void export_counts_csv(const Histogram2D& h, const std::filesystem::path& path);

} // namespace volclass
