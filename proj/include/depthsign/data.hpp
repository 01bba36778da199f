#ifndef DEPTHSIGN_DATA_HPP
#define DEPTHSIGN_DATA_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "depthsign/errors.hpp"
#include "depthsign/matrix.hpp"
#include "depthsign/rng.hpp"

namespace depthsign {

/// One grayscale depth frame. Pixels are stored normalized to [0, 1];
/// the on-disk representation is 8-bit (0..255).
struct DepthImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> pixels; // row-major, width * height entries
    std::size_t label = 0;
    std::size_t subject = 0;
};

struct Dataset {
    std::vector<DepthImage> images;
    std::size_t class_count = 0;
    std::vector<std::string> class_names;
};

/// Disjoint index partitions over one dataset.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

inline double normalize_byte(std::uint8_t v) { return static_cast<double>(v) / 255.0; }

inline std::uint8_t denormalize_pixel(double v) {
    const double scaled = v * 255.0;
    const long r = std::lround(std::clamp(scaled, 0.0, 255.0));
    return static_cast<std::uint8_t>(r);
}

// -- PGM (P5) ---------------------------------------------------------------

namespace detail {
inline int pgm_next_token(std::istream& in, std::string& token) {
    token.clear();
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') { // comment runs to end of line
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            if (!token.empty()) return 0;
        } else {
            token.push_back(static_cast<char>(ch));
        }
        ch = in.get();
    }
    return token.empty() ? EOF : 0;
}
} // namespace detail

/// Read a binary 8-bit PGM (P5, maxval 255) and normalize pixels to [0, 1].
inline DepthImage read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image file: " + path.string());

    std::string tok;
    auto next = [&](const char* what) {
        if (detail::pgm_next_token(in, tok) == EOF)
            throw FormatError(path.string() + ": truncated PGM header (" + what + ")");
        return tok;
    };
    if (next("magic") != "P5")
        throw FormatError(path.string() + ": not a binary PGM (P5) file");
    unsigned long width = 0, height = 0, maxval = 0;
    try {
        width = std::stoul(next("width"));
        height = std::stoul(next("height"));
        maxval = std::stoul(next("maxval"));
    } catch (const std::exception&) {
        throw FormatError(path.string() + ": malformed PGM header");
    }
    if (maxval != 255)
        throw FormatError(path.string() + ": unsupported maxval " + std::to_string(maxval));
    if (width == 0 || height == 0)
        throw FormatError(path.string() + ": empty raster");

    std::vector<std::uint8_t> raw(width * height);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
        throw FormatError(path.string() + ": truncated raster");

    DepthImage img;
    img.width = width;
    img.height = height;
    img.pixels.resize(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = normalize_byte(raw[i]);
    return img;
}

/// Write normalized pixels as a binary PGM (P5, maxval 255).
inline void write_pgm(const std::filesystem::path& path, std::size_t width,
                      std::size_t height, std::span<const double> pixels) {
    if (pixels.size() != width * height)
        throw ShapeError("write_pgm: pixel count does not match " +
                         std::to_string(width) + "x" + std::to_string(height));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write image file: " + path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    std::vector<std::uint8_t> raw(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) raw[i] = denormalize_pixel(pixels[i]);
    out.write(reinterpret_cast<const char*>(raw.data()),
              static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("failed writing image file: " + path.string());
}

// -- Manifest ---------------------------------------------------------------
//
// One record per line: relative_path<TAB>label<TAB>subject. Lines starting
// with '#' are comments; the optional directive `#classes: a,b,c` (or
// `#classes: 5`) declares class names or a bare class count. Without the
// directive the class count is one above the largest label seen.

namespace detail {
inline std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}
} // namespace detail

inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest: " + manifest_path.string());
    const std::filesystem::path base = manifest_path.parent_path();

    Dataset ds;
    bool declared_classes = false;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string trimmed = detail::trim(line);
        if (trimmed.empty()) continue;
        if (trimmed.front() == '#') {
            const std::string directive = "#classes:";
            if (trimmed.rfind(directive, 0) == 0) {
                const std::string body = detail::trim(trimmed.substr(directive.size()));
                if (body.find(',') == std::string::npos && !body.empty() &&
                    body.find_first_not_of("0123456789") == std::string::npos) {
                    ds.class_count = std::stoul(body);
                    ds.class_names.clear();
                    for (std::size_t i = 0; i < ds.class_count; ++i)
                        ds.class_names.push_back("g" + std::to_string(i));
                } else {
                    ds.class_names.clear();
                    for (const auto& name : detail::split_on(body, ','))
                        ds.class_names.push_back(detail::trim(name));
                    ds.class_count = ds.class_names.size();
                }
                declared_classes = true;
            }
            continue;
        }

        const auto fields = detail::split_on(line, '\t');
        if (fields.size() != 3)
            throw FormatError(manifest_path.string() + ":" + std::to_string(line_no) +
                              ": expected path<TAB>label<TAB>subject");
        DepthImage img = read_pgm(base / fields[0]);
        try {
            img.label = std::stoul(detail::trim(fields[1]));
            img.subject = std::stoul(detail::trim(fields[2]));
        } catch (const std::exception&) {
            throw FormatError(manifest_path.string() + ":" + std::to_string(line_no) +
                              ": label and subject must be non-negative integers");
        }
        if (!ds.images.empty() &&
            (img.width != ds.images.front().width || img.height != ds.images.front().height))
            throw FormatError(manifest_path.string() + ":" + std::to_string(line_no) +
                              ": image dimensions " + std::to_string(img.width) + "x" +
                              std::to_string(img.height) + " differ from first image");
        ds.images.push_back(std::move(img));
    }

    if (!declared_classes) {
        std::size_t max_label = 0;
        for (const auto& img : ds.images) max_label = std::max(max_label, img.label);
        ds.class_count = ds.images.empty() ? 0 : max_label + 1;
        for (std::size_t i = 0; i < ds.class_count; ++i)
            ds.class_names.push_back("g" + std::to_string(i));
    }
    for (const auto& img : ds.images)
        if (img.label >= ds.class_count)
            throw FormatError(manifest_path.string() + ": label " +
                              std::to_string(img.label) + " exceeds declared class count " +
                              std::to_string(ds.class_count));
    return ds;
}

/// Write a manifest for the given (path, label, subject) records.
struct ManifestRecord {
    std::string relative_path;
    std::size_t label = 0;
    std::size_t subject = 0;
};

inline void save_manifest(const std::filesystem::path& path,
                          const std::vector<std::string>& class_names,
                          const std::vector<ManifestRecord>& records) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << "#classes:";
    for (std::size_t i = 0; i < class_names.size(); ++i)
        out << (i ? "," : " ") << class_names[i];
    out << "\n";
    for (const auto& rec : records)
        out << rec.relative_path << "\t" << rec.label << "\t" << rec.subject << "\n";
    if (!out) throw IoError("failed writing manifest: " + path.string());
}

// -- Splitting --------------------------------------------------------------

/// Stratified split of the given dataset indices. Per class the allocation
/// follows the largest-remainder rule, so each partition size is within one
/// of the exact fraction. Deterministic for a given stream.
inline Split split_dataset(const Dataset& ds, std::span<const std::size_t> indices,
                           std::array<double, 3> fractions, RngState& rng) {
    double frac_sum = 0.0;
    for (double f : fractions) {
        if (f < 0.0)
            throw ParameterError("split_dataset: fractions must be non-negative");
        frac_sum += f;
    }
    if (std::fabs(frac_sum - 1.0) > 1e-9)
        throw ParameterError("split_dataset: fractions sum to " + std::to_string(frac_sum) +
                             ", expected 1");

    std::vector<std::vector<std::size_t>> by_class(ds.class_count);
    for (std::size_t idx : indices) {
        if (idx >= ds.images.size())
            throw ParameterError("split_dataset: index " + std::to_string(idx) +
                                 " out of range");
        by_class[ds.images[idx].label].push_back(idx);
    }

    Split split;
    std::array<std::vector<std::size_t>*, 3> parts = {&split.train, &split.validation,
                                                      &split.test};
    for (auto& members : by_class) {
        if (members.empty()) continue;
        shuffle(members, rng);
        const std::size_t n = members.size();
        std::array<std::size_t, 3> alloc{};
        std::array<double, 3> remainder{};
        std::size_t assigned = 0;
        for (std::size_t p = 0; p < 3; ++p) {
            const double exact = fractions[p] * static_cast<double>(n);
            alloc[p] = static_cast<std::size_t>(std::floor(exact));
            remainder[p] = exact - std::floor(exact);
            assigned += alloc[p];
        }
        while (assigned < n) {
            std::size_t best = 0;
            for (std::size_t p = 1; p < 3; ++p)
                if (remainder[p] > remainder[best]) best = p;
            ++alloc[best];
            remainder[best] = -1.0;
            ++assigned;
        }
        std::size_t cursor = 0;
        for (std::size_t p = 0; p < 3; ++p)
            for (std::size_t k = 0; k < alloc[p]; ++k)
                parts[p]->push_back(members[cursor++]);
    }
    for (auto* part : parts) std::sort(part->begin(), part->end());
    return split;
}

inline Split split_dataset(const Dataset& ds, std::array<double, 3> fractions,
                           RngState& rng) {
    std::vector<std::size_t> all(ds.images.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return split_dataset(ds, all, fractions, rng);
}

// -- Encoding helpers ---------------------------------------------------------

/// class_count x n matrix with a single 1 per column at the label's row.
inline Matrix one_hot(std::span<const std::size_t> labels, std::size_t class_count) {
    Matrix t(class_count, labels.size());
    for (std::size_t c = 0; c < labels.size(); ++c) {
        if (labels[c] >= class_count)
            throw ParameterError("one_hot: label " + std::to_string(labels[c]) +
                                 " out of range for " + std::to_string(class_count) +
                                 " classes");
        t(labels[c], c) = 1.0;
    }
    return t;
}

/// Flatten the selected images into a pixel-count x n column batch.
inline Matrix to_columns(const Dataset& ds, std::span<const std::size_t> indices) {
    if (indices.empty()) return Matrix();
    const std::size_t dim = ds.images[indices[0]].width * ds.images[indices[0]].height;
    Matrix x(dim, indices.size());
    for (std::size_t c = 0; c < indices.size(); ++c) {
        const auto& img = ds.images[indices[c]];
        if (img.pixels.size() != dim)
            throw ShapeError("to_columns: inconsistent image sizes in dataset");
        for (std::size_t r = 0; r < dim; ++r) x(r, c) = img.pixels[r];
    }
    return x;
}

inline std::vector<std::size_t> labels_at(const Dataset& ds,
                                          std::span<const std::size_t> indices) {
    std::vector<std::size_t> out;
    out.reserve(indices.size());
    for (std::size_t idx : indices) out.push_back(ds.images[idx].label);
    return out;
}

/// Sorted list of distinct subject ids present in the dataset.
inline std::vector<std::size_t> subject_ids(const Dataset& ds) {
    std::vector<std::size_t> ids;
    for (const auto& img : ds.images) ids.push_back(img.subject);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

inline std::vector<std::size_t> indices_of_subject(const Dataset& ds, std::size_t subject) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < ds.images.size(); ++i)
        if (ds.images[i].subject == subject) out.push_back(i);
    return out;
}

// -- Synthetic corpus ---------------------------------------------------------

/// Noise-free base pattern for one class: an oriented bar through the centre
/// plus a blob, both keyed by the class index, over a dim background.
inline std::vector<double> synth_pattern(std::size_t class_index, std::size_t class_count,
                                         std::size_t side) {
    const double pi = 3.14159265358979323846;
    const double c = (static_cast<double>(side) - 1.0) / 2.0;
    const double theta = pi * static_cast<double>(class_index) /
                         static_cast<double>(std::max<std::size_t>(class_count, 1));
    const double ux = std::cos(theta), uy = std::sin(theta);
    const double phi = 2.0 * pi * static_cast<double>(class_index) /
                           static_cast<double>(std::max<std::size_t>(class_count, 1)) +
                       pi / (2.0 * static_cast<double>(std::max<std::size_t>(class_count, 1)));
    const double radius = 0.30 * static_cast<double>(side);
    const double bx = c + radius * std::cos(phi);
    const double by = c + radius * std::sin(phi);
    const double sigma_bar = static_cast<double>(side) / 12.0;
    const double sigma_blob = static_cast<double>(side) / 10.0;

    std::vector<double> pixels(side * side);
    for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
            const double dx = static_cast<double>(x) - c;
            const double dy = static_cast<double>(y) - c;
            const double bar_dist = dx * uy - dy * ux;
            const double bar = std::exp(-(bar_dist * bar_dist) / (2.0 * sigma_bar * sigma_bar));
            const double gx = static_cast<double>(x) - bx;
            const double gy = static_cast<double>(y) - by;
            const double blob = std::exp(-(gx * gx + gy * gy) / (2.0 * sigma_blob * sigma_blob));
            pixels[y * side + x] =
                std::clamp(0.15 + 0.55 * bar + 0.65 * blob, 0.0, 1.0);
        }
    }
    return pixels;
}

/// Balanced synthetic gesture corpus: per_class images for each class, each
/// the class pattern plus uniform noise in [-noise, noise], clamped to [0, 1].
inline Dataset synth_gestures(std::size_t class_count, std::size_t per_class,
                              std::size_t side, double noise, RngState& rng) {
    if (side < 4)
        throw ParameterError("synth_gestures: side must be at least 4, got " +
                             std::to_string(side));
    if (class_count == 0)
        throw ParameterError("synth_gestures: class_count must be positive");
    if (noise < 0.0)
        throw ParameterError("synth_gestures: noise must be non-negative");

    Dataset ds;
    ds.class_count = class_count;
    for (std::size_t k = 0; k < class_count; ++k)
        ds.class_names.push_back("g" + std::to_string(k));
    ds.images.reserve(class_count * per_class);
    for (std::size_t k = 0; k < class_count; ++k) {
        const std::vector<double> base = synth_pattern(k, class_count, side);
        for (std::size_t i = 0; i < per_class; ++i) {
            DepthImage img;
            img.width = side;
            img.height = side;
            img.label = k;
            img.subject = 0;
            img.pixels.resize(base.size());
            for (std::size_t p = 0; p < base.size(); ++p) {
                const double jitter = noise > 0.0 ? rng.next_double(-noise, noise) : 0.0;
                img.pixels[p] = std::clamp(base[p] + jitter, 0.0, 1.0);
            }
            ds.images.push_back(std::move(img));
        }
    }
    return ds;
}

} // namespace depthsign

#endif // DEPTHSIGN_DATA_HPP
