#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace featforge {

// Dense row-major feature matrix. Storage is f32; anything that accumulates
// (fits, scores, norms) works in f64 and stores the result back.
struct FeatureMatrix {
    std::string set_name;
    std::vector<std::string> column_labels;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> values;  // rows * cols, row-major

    FeatureMatrix() = default;
    FeatureMatrix(std::string name, std::size_t r, std::size_t c)
        : set_name(std::move(name)), rows(r), cols(c), values(r * c, 0.0f) {
        column_labels.resize(c);
    }

    float& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    float at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::span<float> row(std::size_t r) { return {values.data() + r * cols, cols}; }
    std::span<const float> row(std::size_t r) const {
        return {values.data() + r * cols, cols};
    }
};

// Column-wise concatenation; labels are prefixed with their source set name.
inline FeatureMatrix concatenate(const std::vector<const FeatureMatrix*>& parts) {
    if (parts.empty()) throw std::invalid_argument("concatenate: no inputs");
    const std::size_t rows = parts[0]->rows;
    std::size_t cols = 0;
    std::string name;
    for (const auto* p : parts) {
        if (p->rows != rows)
            throw std::invalid_argument("concatenate: row-count mismatch between '" +
                                        parts[0]->set_name + "' and '" + p->set_name + "'");
        cols += p->cols;
        if (!name.empty()) name += "+";
        name += p->set_name;
    }
    FeatureMatrix out(name, rows, cols);
    out.column_labels.clear();
    out.column_labels.reserve(cols);
    for (const auto* p : parts)
        for (const auto& lbl : p->column_labels)
            out.column_labels.push_back(p->set_name + ":" + lbl);
    for (std::size_t r = 0; r < rows; ++r) {
        std::size_t off = 0;
        for (const auto* p : parts) {
            std::memcpy(out.values.data() + r * cols + off,
                        p->values.data() + r * p->cols, p->cols * sizeof(float));
            off += p->cols;
        }
    }
    return out;
}

inline FeatureMatrix concatenate(const std::vector<FeatureMatrix>& parts) {
    std::vector<const FeatureMatrix*> ptrs;
    ptrs.reserve(parts.size());
    for (const auto& p : parts) ptrs.push_back(&p);
    return concatenate(ptrs);
}

// Per-column (x-min)/(max-min) with min/max taken from fit_rows only.
// Constant columns map to 0; non-fit rows are clamped into [0,1].
inline FeatureMatrix minmax_scale(const FeatureMatrix& m,
                                  std::span<const std::size_t> fit_rows) {
    if (fit_rows.empty()) throw std::invalid_argument("minmax_scale: empty fit rows");
    std::vector<double> lo(m.cols, 0.0), hi(m.cols, 0.0);
    for (std::size_t c = 0; c < m.cols; ++c) {
        lo[c] = hi[c] = m.at(fit_rows[0], c);
    }
    for (std::size_t r : fit_rows) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            const double v = m.at(r, c);
            if (v < lo[c]) lo[c] = v;
            if (v > hi[c]) hi[c] = v;
        }
    }
    FeatureMatrix out = m;
    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            const double span = hi[c] - lo[c];
            double v = span > 0.0 ? (m.at(r, c) - lo[c]) / span : 0.0;
            if (v < 0.0) v = 0.0;
            if (v > 1.0) v = 1.0;
            out.at(r, c) = static_cast<float>(v);
        }
    }
    return out;
}

inline FeatureMatrix minmax_scale(const FeatureMatrix& m) {
    std::vector<std::size_t> all(m.rows);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return minmax_scale(m, all);
}

// --- FMAT binary format -----------------------------------------------
// magic "FMAT", version u8=1, u32 LE rows, u32 LE cols, rows*cols f32 LE.
// Column labels and provenance go into the JSON sidecar, not this file.

namespace detail {
inline void put_u32le(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xFF),
                          static_cast<unsigned char>((v >> 8) & 0xFF),
                          static_cast<unsigned char>((v >> 16) & 0xFF),
                          static_cast<unsigned char>((v >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(b), 4);
}
inline std::uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
}
}  // namespace detail

inline void save_fmat(const FeatureMatrix& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write("FMAT", 4);
    const unsigned char version = 1;
    os.write(reinterpret_cast<const char*>(&version), 1);
    detail::put_u32le(os, static_cast<std::uint32_t>(m.rows));
    detail::put_u32le(os, static_cast<std::uint32_t>(m.cols));
    static_assert(sizeof(float) == 4);
    // assumes little-endian host, as does the loader
    os.write(reinterpret_cast<const char*>(m.values.data()),
             static_cast<std::streamsize>(m.values.size() * sizeof(float)));
    if (!os) throw std::runtime_error("write failed: " + path);
}

inline FeatureMatrix load_fmat(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FMAT", 4) != 0)
        throw std::runtime_error("bad FMAT magic in " + path);
    unsigned char version = 0;
    is.read(reinterpret_cast<char*>(&version), 1);
    if (version != 1) throw std::runtime_error("unsupported FMAT version in " + path);
    FeatureMatrix m;
    m.rows = detail::get_u32le(is);
    m.cols = detail::get_u32le(is);
    m.values.resize(m.rows * m.cols);
    m.column_labels.resize(m.cols);
    is.read(reinterpret_cast<char*>(m.values.data()),
            static_cast<std::streamsize>(m.values.size() * sizeof(float)));
    if (!is) throw std::runtime_error("truncated FMAT file: " + path);
    return m;
}

}  // namespace featforge
