#include "volclass/histogram.hpp"

#include "volclass/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <string>

namespace volclass {

Histogram2D::Histogram2D(std::size_t bins, std::vector<std::uint64_t> counts, double intensity_lo,
                         double intensity_hi, double gmag_max)
    : bins_(bins), counts_(std::move(counts)), intensity_lo_(intensity_lo), intensity_hi_(intensity_hi),
      gmag_max_(gmag_max) {
    if (!is_power_of_two(bins_)) throw Error(Errc::BadBins, "bins must be a power of two, got " + std::to_string(bins_));
    if (counts_.size() != bins_ * bins_)
        throw Error(Errc::BadBins, "count grid does not match " + std::to_string(bins_) + "x" + std::to_string(bins_));

    const std::uint64_t c_max = *std::max_element(counts_.begin(), counts_.end());
    values_.assign(counts_.size(), 0.0f);
    if (c_max == 0) return;
    const double denom = std::log1p(static_cast<double>(c_max));
    for (std::size_t i = 0; i < counts_.size(); ++i) {
        if (counts_[i] == c_max)
            values_[i] = 1.0f;
        else if (counts_[i] != 0)
            values_[i] = static_cast<float>(std::log1p(static_cast<double>(counts_[i])) / denom);
    }
}

std::uint64_t Histogram2D::total_count() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::vector<double> gradient_magnitude_field(const Volume& volume) {
    const auto& d = volume.dims();
    const auto& s = volume.meta().spacing;
    const auto f = volume.voxels();
    const std::size_t stride[3] = {1, d[0], d[0] * d[1]};

    std::vector<double> out(volume.size());
    for (std::size_t z = 0; z < d[2]; ++z) {
        for (std::size_t y = 0; y < d[1]; ++y) {
            for (std::size_t x = 0; x < d[0]; ++x) {
                const std::size_t idx = volume.index(x, y, z);
                const std::size_t pos[3] = {x, y, z};
                double sum = 0.0;
                for (int a = 0; a < 3; ++a) {
                    const std::size_t n = d[a];
                    if (n < 2) continue;
                    double g;
                    if (pos[a] == 0)
                        g = (f[idx + stride[a]] - f[idx]) / s[a];
                    else if (pos[a] == n - 1)
                        g = (f[idx] - f[idx - stride[a]]) / s[a];
                    else
                        g = (f[idx + stride[a]] - f[idx - stride[a]]) / (2.0 * s[a]);
                    sum += g * g;
                }
                out[idx] = std::sqrt(sum);
            }
        }
    }
    return out;
}

std::size_t bin_index(double v, double lo, double hi, std::size_t bins) {
    if (!(hi > lo)) return 0;
    const double t = (v - lo) * static_cast<double>(bins) / (hi - lo);
    if (!(t > 0)) return 0;
    const auto b = static_cast<std::size_t>(std::floor(t));
    return std::min(b, bins - 1);
}

Histogram2D compute_histogram(const Volume& volume, std::size_t bins) {
    if (!is_power_of_two(bins) || bins < 8 || bins > 256)
        throw Error(Errc::BadBins, "bins must be a power of two in [8, 256], got " + std::to_string(bins));

    const auto [lo, hi] = intensity_range(volume);
    const auto gmag = gradient_magnitude_field(volume);
    const double gmax = *std::max_element(gmag.begin(), gmag.end());
    const auto f = volume.voxels();

    std::vector<std::uint64_t> counts(bins * bins, 0);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const std::size_t col = bin_index(f[i], lo, hi, bins);
        const std::size_t row = bin_index(gmag[i], 0.0, gmax, bins);
        ++counts[row * bins + col];
    }
    return Histogram2D(bins, std::move(counts), lo, hi, gmax);
}

Histogram2D downscale(const Histogram2D& h, unsigned factor) {
    if (factor >= 31 || (std::size_t{1} << factor) > h.size())
        throw Error(Errc::BadFactor, "reduction factor " + std::to_string(factor) + " too large for " +
                                         std::to_string(h.size()) + "x" + std::to_string(h.size()) + " histogram");
    if (factor == 0) return h;

    const std::size_t block = std::size_t{1} << factor;
    const std::size_t in = h.size();
    const std::size_t out = in / block;
    std::vector<std::uint64_t> counts(out * out, 0);
    for (std::size_t r = 0; r < in; ++r)
        for (std::size_t c = 0; c < in; ++c) counts[(r / block) * out + c / block] += h.count(r, c);
    return Histogram2D(out, std::move(counts), h.intensity_lo(), h.intensity_hi(), h.gmag_max());
}

std::vector<float> flatten(const Histogram2D& h) { return {h.values().begin(), h.values().end()}; }

void write_pgm(const Histogram2D& h, std::ostream& out) {
    const std::size_t n = h.size();
    out << "P5\n" << n << ' ' << n << "\n255\n";
    std::string row(n, '\0');
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t hist_row = n - 1 - i;
        for (std::size_t c = 0; c < n; ++c)
            row[c] = static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * h.value(hist_row, c))));
        out.write(row.data(), static_cast<std::streamsize>(n));
    }
}

void export_image(const Histogram2D& h, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
    write_pgm(h, out);
    if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

void write_counts_csv(const Histogram2D& h, std::ostream& out) {
    out << "row,col,count\n";
    for (std::size_t r = 0; r < h.size(); ++r)
        for (std::size_t c = 0; c < h.size(); ++c) out << r << ',' << c << ',' << h.count(r, c) << '\n';
}

void export_counts_csv(const Histogram2D& h, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
    write_counts_csv(h, out);
    if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

} // namespace volclass
