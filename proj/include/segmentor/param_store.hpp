#pragma once

#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "segmentor/common.hpp"

namespace seg {

enum class ParamInit {
    Zero,
    GlorotUniform,  // uniform in [-r, r], r = sqrt(6 / (fan_in + fan_out))
    LstmBias,       // zeros, forget-gate slice [H, 2H) set to 1.0 (gate order i,f,g,o)
};

struct GroupSpec {
    std::string name;
    std::vector<std::size_t> dims;
    ParamInit init = ParamInit::GlorotUniform;
};

// Named flat arrays of doubles with fixed shapes. Shapes never change after
// creation; iteration order is insertion order (serialization depends on it).
class ParamStore {
public:
    struct Group {
        std::string name;
        std::vector<std::size_t> dims;
        std::vector<double> values;

        std::size_t size() const { return values.size(); }
    };

    Group& add(const std::string& name, std::vector<std::size_t> dims) {
        if (index_.count(name)) throw DataError("duplicate parameter group: " + name);
        std::size_t n = 1;
        for (std::size_t d : dims) {
            if (d == 0) throw DataError("zero dimension in parameter group: " + name);
            n *= d;
        }
        index_[name] = groups_.size();
        groups_.push_back(Group{name, std::move(dims), std::vector<double>(n, 0.0)});
        return groups_.back();
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    Group& at(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw DataError("unknown parameter group: " + name);
        return groups_[it->second];
    }
    const Group& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw DataError("unknown parameter group: " + name);
        return groups_[it->second];
    }

    std::vector<double>& values(const std::string& name) { return at(name).values; }
    const std::vector<double>& values(const std::string& name) const { return at(name).values; }

    std::vector<Group>& groups() { return groups_; }
    const std::vector<Group>& groups() const { return groups_; }

    std::size_t group_count() const { return groups_.size(); }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& g : groups_) n += g.size();
        return n;
    }

    bool same_shape(const ParamStore& o) const {
        if (groups_.size() != o.groups_.size()) return false;
        for (std::size_t i = 0; i < groups_.size(); ++i)
            if (groups_[i].name != o.groups_[i].name || groups_[i].dims != o.groups_[i].dims)
                return false;
        return true;
    }

    ParamStore zero_like() const {
        ParamStore out;
        for (const auto& g : groups_) out.add(g.name, g.dims);
        return out;
    }

    bool finite() const {
        for (const auto& g : groups_)
            if (!all_finite(g.values)) return false;
        return true;
    }

    bool operator==(const ParamStore& o) const {
        if (!same_shape(o)) return false;
        for (std::size_t i = 0; i < groups_.size(); ++i)
            if (groups_[i].values != o.groups_[i].values) return false;
        return true;
    }

private:
    std::vector<Group> groups_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Gradients mirror the parameter shapes exactly; one type serves both.
using GradientBundle = ParamStore;

// Deterministic initialization. Matrices are [fan_out x fan_in] row-major;
// rank-1 glorot groups are treated as fan_in = length, fan_out = 1.
inline ParamStore init_params(const std::vector<GroupSpec>& specs, std::uint64_t seed) {
    ParamStore store;
    std::mt19937_64 rng(seed);
    for (const auto& spec : specs) {
        auto& g = store.add(spec.name, spec.dims);
        switch (spec.init) {
            case ParamInit::Zero:
                break;
            case ParamInit::GlorotUniform: {
                std::size_t fan_out = spec.dims.size() >= 2 ? spec.dims[0] : 1;
                std::size_t fan_in = spec.dims.size() >= 2
                                         ? std::accumulate(spec.dims.begin() + 1, spec.dims.end(),
                                                           std::size_t{1}, std::multiplies<>())
                                         : spec.dims[0];
                double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
                for (double& v : g.values) v = uniform_sym(rng, r);
                break;
            }
            case ParamInit::LstmBias: {
                if (g.dims.size() != 1 || g.size() % 4 != 0)
                    throw DataError("LSTM bias group must be a flat vector of length 4H: " + spec.name);
                std::size_t H = g.size() / 4;
                for (std::size_t i = H; i < 2 * H; ++i) g.values[i] = 1.0;
                break;
            }
        }
    }
    return store;
}

// ---------------------------------------------------------------------------
// Checkpoint array stream: magic "SEGS", version u16, then per-group records
// (name length u16, name bytes, rank u8, dims u32, payload f64), all
// little-endian. A zero name length terminates the group list so trailing
// metadata can follow in the same file. Round-trips bit-exactly.

inline constexpr char kParamMagic[4] = {'S', 'E', 'G', 'S'};
inline constexpr std::uint16_t kParamFormatVersion = 1;

inline void save_params(std::ostream& os, const ParamStore& store) {
    os.write(kParamMagic, 4);
    io::write_u16(os, kParamFormatVersion);
    for (const auto& g : store.groups()) {
        io::write_u16(os, static_cast<std::uint16_t>(g.name.size()));
        os.write(g.name.data(), static_cast<std::streamsize>(g.name.size()));
        io::write_raw<std::uint8_t>(os, static_cast<std::uint8_t>(g.dims.size()));
        for (std::size_t d : g.dims) io::write_u32(os, static_cast<std::uint32_t>(d));
        io::write_f64_array(os, g.values);
    }
    io::write_u16(os, 0);  // end of groups
}

inline ParamStore load_params(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kParamMagic, 4) != 0)
        throw DataError("bad checkpoint magic");
    std::uint16_t version = io::read_u16(is, "checkpoint version");
    if (version != kParamFormatVersion)
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    ParamStore store;
    for (;;) {
        std::uint16_t name_len = io::read_u16(is, "group name length");
        if (name_len == 0) break;
        std::string name(name_len, '\0');
        if (!is.read(name.data(), name_len)) throw DataError("truncated group name");
        auto rank = io::read_raw<std::uint8_t>(is, "group rank");
        std::vector<std::size_t> dims(rank);
        for (auto& d : dims) d = io::read_u32(is, "group dims");
        auto& g = store.add(name, std::move(dims));
        io::read_f64_array(is, g.values, "group payload");
    }
    return store;
}

inline void save_params_file(const std::string& path, const ParamStore& store) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    save_params(os, store);
    if (!os) throw DataError("write failed: " + path);
}

inline ParamStore load_params_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open: " + path);
    return load_params(is);
}

}  // namespace seg
