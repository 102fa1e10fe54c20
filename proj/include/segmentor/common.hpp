#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace seg {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

// Bad or inconsistent input data (files, manifests, shapes).
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values or other numeric breakdowns.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Row-major matrix of doubles. Models here are tiny; no views, no striding.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }
    std::span<double> row_span(std::size_t r) { return {row(r), cols_}; }
    std::span<const double> row_span(std::size_t r) const { return {row(r), cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

inline Matrix reverse_rows(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r)
        std::memcpy(out.row(r), m.row(m.rows() - 1 - r), m.cols() * sizeof(double));
    return out;
}

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const Matrix& m) { return all_finite(std::span<const double>(m.data())); }

// ---------------------------------------------------------------------------
// Randomness. std:: distributions are implementation-defined, so fixed
// transforms over mt19937_64 keep every seeded run reproducible.

inline double uniform01(std::mt19937_64& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0, 1)
}

// uniform in [-r, r)
inline double uniform_sym(std::mt19937_64& g, double r) {
    return (2.0 * uniform01(g) - 1.0) * r;
}

// standard normal, Box-Muller
inline double gaussian(std::mt19937_64& g) {
    double u1 = 1.0 - uniform01(g);  // (0, 1]
    double u2 = uniform01(g);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline std::size_t uniform_index(std::mt19937_64& g, std::size_t n) {
    return static_cast<std::size_t>(g() % n);
}

template <typename T>
inline void shuffle_indices(std::vector<T>& v, std::mt19937_64& g) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[uniform_index(g, i)]);
}

// ---------------------------------------------------------------------------
// Little-endian binary primitives shared by the file formats.
namespace io {

template <typename T>
inline void write_raw(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

inline void write_u16(std::ostream& os, std::uint16_t v) { write_raw(os, v); }
inline void write_u32(std::ostream& os, std::uint32_t v) { write_raw(os, v); }
inline void write_f64(std::ostream& os, double v) { write_raw(os, v); }

inline void write_f64_array(std::ostream& os, std::span<const double> v) {
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

template <typename T>
inline T read_raw(std::istream& is, const char* what) {
    T v{};
    if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw DataError(std::string("truncated input while reading ") + what);
    return v;
}

inline std::uint16_t read_u16(std::istream& is, const char* what) { return read_raw<std::uint16_t>(is, what); }
inline std::uint32_t read_u32(std::istream& is, const char* what) { return read_raw<std::uint32_t>(is, what); }
inline double read_f64(std::istream& is, const char* what) { return read_raw<double>(is, what); }

inline void read_f64_array(std::istream& is, std::span<double> v, const char* what) {
    if (!is.read(reinterpret_cast<char*>(v.data()),
                 static_cast<std::streamsize>(v.size() * sizeof(double))))
        throw DataError(std::string("truncated input while reading ") + what);
}

}  // namespace io

// ---------------------------------------------------------------------------
// key = value text blocks (config files, checkpoint metadata).
namespace detail {

inline std::string format_double(double v) {
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, p);
}

inline double parse_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("bad numeric value for " + key + ": " + s);
    }
}

inline std::size_t parse_size(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        auto v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw DataError("bad integer value for " + key + ": " + s);
    }
}

inline bool parse_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw DataError("bad boolean value for " + key + ": " + s);
}

inline std::map<std::string, std::string> parse_kv_lines(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError("expected key = value, got: " + line);
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t"));
            auto end = s.find_last_not_of(" \t");
            s.erase(end == std::string::npos ? 0 : end + 1);
            return s;
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

}  // namespace detail
}  // namespace seg
