#ifndef DEPTHSIGN_IO_HPP
#define DEPTHSIGN_IO_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "depthsign/autoencoder.hpp"
#include "depthsign/classifier.hpp"
#include "depthsign/errors.hpp"
#include "depthsign/matrix.hpp"
#include "depthsign/stack.hpp"

namespace depthsign {

// Binary containers share one layout: 4 magic bytes, a u32 format version,
// type-specific u64 dimensions, then the parameter matrices as little-endian
// IEEE-754 doubles in declared field order, row-major.

namespace detail {

constexpr std::uint32_t kFormatVersion = 1;

inline std::uint64_t byteswap64(std::uint64_t v) {
    return __builtin_bswap64(v);
}

inline std::uint64_t to_little64(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) return byteswap64(v);
    return v;
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
    std::uint32_t le = v;
    if constexpr (std::endian::native == std::endian::big) le = __builtin_bswap32(v);
    out.write(reinterpret_cast<const char*>(&le), 4);
}

inline void write_u64(std::ostream& out, std::uint64_t v) {
    const std::uint64_t le = to_little64(v);
    out.write(reinterpret_cast<const char*>(&le), 8);
}

inline void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

inline std::uint32_t read_u32(std::istream& in, const std::string& what) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    if (!in) throw FormatError(what + ": truncated file");
    if constexpr (std::endian::native == std::endian::big) v = __builtin_bswap32(v);
    return v;
}

inline std::uint64_t read_u64(std::istream& in, const std::string& what) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    if (!in) throw FormatError(what + ": truncated file");
    return to_little64(v);
}

inline double read_f64(std::istream& in, const std::string& what) {
    const std::uint64_t bits = read_u64(in, what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
    for (double v : m.data()) write_f64(out, v);
}

inline Matrix read_matrix(std::istream& in, std::size_t rows, std::size_t cols,
                          const std::string& what) {
    Matrix m(rows, cols);
    for (double& v : m.data()) v = read_f64(in, what);
    return m;
}

inline void write_magic(std::ostream& out, const char magic[5]) { out.write(magic, 4); }

inline void check_magic(std::istream& in, const char magic[5], const std::string& path) {
    char got[4] = {};
    in.read(got, 4);
    if (!in || std::memcmp(got, magic, 4) != 0)
        throw FormatError(path + ": not a " + std::string(magic, 4) + " file");
}

inline void check_version(std::istream& in, const std::string& path) {
    const std::uint32_t version = read_u32(in, path);
    if (version != kFormatVersion)
        throw FormatError(path + ": unsupported format version " + std::to_string(version));
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path.string());
    return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path.string());
    return in;
}

} // namespace detail

// -- Autoencoder container (`DSAE`) -------------------------------------------

inline void save_autoencoder(const std::filesystem::path& path,
                             const AutoencoderParams& p) {
    auto out = detail::open_out(path);
    detail::write_magic(out, "DSAE");
    detail::write_u32(out, detail::kFormatVersion);
    detail::write_u64(out, p.input_size());
    detail::write_u64(out, p.hidden_size());
    detail::write_matrix(out, p.enc_weight);
    detail::write_matrix(out, p.enc_bias);
    detail::write_matrix(out, p.dec_weight);
    detail::write_matrix(out, p.dec_bias);
    if (!out) throw IoError("failed writing file: " + path.string());
}

inline AutoencoderParams load_autoencoder(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const std::string name = path.string();
    detail::check_magic(in, "DSAE", name);
    detail::check_version(in, name);
    const std::size_t input = detail::read_u64(in, name);
    const std::size_t hidden = detail::read_u64(in, name);
    AutoencoderParams p;
    p.enc_weight = detail::read_matrix(in, hidden, input, name);
    p.enc_bias = detail::read_matrix(in, hidden, 1, name);
    p.dec_weight = detail::read_matrix(in, input, hidden, name);
    p.dec_bias = detail::read_matrix(in, input, 1, name);
    return p;
}

// Human-readable equivalent of the DSAE container. Values are printed with 17
// significant digits, so parsing them back reproduces the doubles exactly.

namespace detail {
inline void write_matrix_text(std::ostream& out, const char* name, const Matrix& m) {
    out << name << " " << m.rows() << " " << m.cols() << "\n";
    char buf[32];
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
            out << (c ? " " : "") << buf;
        }
        out << "\n";
    }
}

inline Matrix read_matrix_text(std::istream& in, const std::string& expected,
                               const std::string& path) {
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols) || name != expected)
        throw FormatError(path + ": expected section " + expected);
    Matrix m(rows, cols);
    for (double& v : m.data())
        if (!(in >> v)) throw FormatError(path + ": truncated section " + expected);
    return m;
}
} // namespace detail

inline void save_autoencoder_text(const std::filesystem::path& path,
                                  const AutoencoderParams& p) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write file: " + path.string());
    out << "dsae " << detail::kFormatVersion << "\n";
    out << "input " << p.input_size() << "\n";
    out << "hidden " << p.hidden_size() << "\n";
    detail::write_matrix_text(out, "enc_weight", p.enc_weight);
    detail::write_matrix_text(out, "enc_bias", p.enc_bias);
    detail::write_matrix_text(out, "dec_weight", p.dec_weight);
    detail::write_matrix_text(out, "dec_bias", p.dec_bias);
    if (!out) throw IoError("failed writing file: " + path.string());
}

inline AutoencoderParams load_autoencoder_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path.string());
    const std::string name = path.string();
    std::string tag;
    std::uint32_t version = 0;
    if (!(in >> tag >> version) || tag != "dsae")
        throw FormatError(name + ": not a dsae text file");
    if (version != detail::kFormatVersion)
        throw FormatError(name + ": unsupported format version " + std::to_string(version));
    std::size_t input = 0, hidden = 0;
    if (!(in >> tag >> input) || tag != "input")
        throw FormatError(name + ": expected input size");
    if (!(in >> tag >> hidden) || tag != "hidden")
        throw FormatError(name + ": expected hidden size");
    AutoencoderParams p;
    p.enc_weight = detail::read_matrix_text(in, "enc_weight", name);
    p.enc_bias = detail::read_matrix_text(in, "enc_bias", name);
    p.dec_weight = detail::read_matrix_text(in, "dec_weight", name);
    p.dec_bias = detail::read_matrix_text(in, "dec_bias", name);
    if (p.enc_weight.rows() != hidden || p.enc_weight.cols() != input)
        throw FormatError(name + ": section shapes disagree with declared sizes");
    return p;
}

// -- Softmax container (`DSSM`) ------------------------------------------------

inline void save_softmax(const std::filesystem::path& path, const SoftmaxParams& p) {
    auto out = detail::open_out(path);
    detail::write_magic(out, "DSSM");
    detail::write_u32(out, detail::kFormatVersion);
    detail::write_u64(out, p.class_count());
    detail::write_u64(out, p.feature_count());
    detail::write_matrix(out, p.weight);
    detail::write_matrix(out, p.bias);
    if (!out) throw IoError("failed writing file: " + path.string());
}

inline SoftmaxParams load_softmax(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const std::string name = path.string();
    detail::check_magic(in, "DSSM", name);
    detail::check_version(in, name);
    const std::size_t classes = detail::read_u64(in, name);
    const std::size_t features = detail::read_u64(in, name);
    SoftmaxParams p;
    p.weight = detail::read_matrix(in, classes, features, name);
    p.bias = detail::read_matrix(in, classes, 1, name);
    return p;
}

// -- Network bundle (`DSNW`) -----------------------------------------------------
//
// Embeds every encoder layer and the head, the layer dimension chain, and a
// snapshot of the configuration text the network was trained with.

inline void save_network(const std::filesystem::path& path, const StackedNetwork& net,
                         const std::string& config_snapshot) {
    validate_network(net);
    auto out = detail::open_out(path);
    detail::write_magic(out, "DSNW");
    detail::write_u32(out, detail::kFormatVersion);
    detail::write_u64(out, net.encoders.size());
    for (std::size_t dim : net.layer_dims) detail::write_u64(out, dim);
    for (const auto& enc : net.encoders) {
        detail::write_matrix(out, enc.weight);
        detail::write_matrix(out, enc.bias);
    }
    detail::write_matrix(out, net.head.weight);
    detail::write_matrix(out, net.head.bias);
    detail::write_u64(out, config_snapshot.size());
    out.write(config_snapshot.data(), static_cast<std::streamsize>(config_snapshot.size()));
    if (!out) throw IoError("failed writing file: " + path.string());
}

struct NetworkBundle {
    StackedNetwork net;
    std::string config_snapshot;
};

inline NetworkBundle load_network(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const std::string name = path.string();
    detail::check_magic(in, "DSNW", name);
    detail::check_version(in, name);
    const std::size_t n_encoders = detail::read_u64(in, name);
    if (n_encoders > 64) throw FormatError(name + ": implausible encoder count");

    NetworkBundle bundle;
    bundle.net.layer_dims.resize(n_encoders + 2);
    for (auto& dim : bundle.net.layer_dims) dim = detail::read_u64(in, name);
    bundle.net.encoders.resize(n_encoders);
    for (std::size_t i = 0; i < n_encoders; ++i) {
        bundle.net.encoders[i].weight = detail::read_matrix(
            in, bundle.net.layer_dims[i + 1], bundle.net.layer_dims[i], name);
        bundle.net.encoders[i].bias =
            detail::read_matrix(in, bundle.net.layer_dims[i + 1], 1, name);
    }
    const std::size_t classes = bundle.net.layer_dims.back();
    const std::size_t features = bundle.net.layer_dims[bundle.net.layer_dims.size() - 2];
    bundle.net.head.weight = detail::read_matrix(in, classes, features, name);
    bundle.net.head.bias = detail::read_matrix(in, classes, 1, name);
    const std::size_t snapshot_len = detail::read_u64(in, name);
    bundle.config_snapshot.resize(snapshot_len);
    in.read(bundle.config_snapshot.data(), static_cast<std::streamsize>(snapshot_len));
    if (!in) throw FormatError(name + ": truncated config snapshot");
    validate_network(bundle.net);
    return bundle;
}

} // namespace depthsign

#endif // DEPTHSIGN_IO_HPP
