#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "cmarl/error.hpp"
#include "cmarl/nn/tensor.hpp"

namespace cmarl::nn {

inline constexpr int kSubstrateVersion = 1;

// Text checkpoint. Values are C99 hex floats so a save/load round trip is
// bit-exact:
//
//   cmarl-checkpoint
//   substrate 1
//   seed 42
//   params 2
//   param gru.input_weight 2 59 192
//   0x1.8p-3 -0x1.2p-7 ...
//   ...
struct Checkpoint {
    int substrate_version = kSubstrateVersion;
    std::uint64_t seed = 0;
    std::map<std::string, Tensor> tensors;
    std::vector<std::string> order;
};

inline std::string format_hex(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double parse_hex(const std::string& s) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') throw FormatError("bad number in checkpoint: " + s);
    return v;
}

inline void write_checkpoint(std::ostream& os, const ParamSet& params, std::uint64_t seed) {
    os << "cmarl-checkpoint\n";
    os << "substrate " << kSubstrateVersion << "\n";
    os << "seed " << seed << "\n";
    os << "params " << params.size() << "\n";
    for (auto* p : params) {
        os << "param " << p->name << " 2 " << p->value.rows() << " " << p->value.cols() << "\n";
        for (Index i = 0; i < p->value.size(); ++i) {
            if (i) os << ' ';
            os << format_hex(p->value.data()[i]);
        }
        os << "\n";
    }
}

inline Checkpoint read_checkpoint(std::istream& is) {
    Checkpoint ck;
    std::string word;
    if (!(is >> word) || word != "cmarl-checkpoint") throw FormatError("not a checkpoint (bad magic)");
    if (!(is >> word >> ck.substrate_version) || word != "substrate") throw FormatError("checkpoint missing substrate");
    if (ck.substrate_version != kSubstrateVersion)
        throw FormatError("unsupported substrate version " + std::to_string(ck.substrate_version));
    if (!(is >> word >> ck.seed) || word != "seed") throw FormatError("checkpoint missing seed");
    std::size_t count = 0;
    if (!(is >> word >> count) || word != "params") throw FormatError("checkpoint missing param count");
    for (std::size_t k = 0; k < count; ++k) {
        std::string name;
        std::size_t rank = 0;
        if (!(is >> word >> name >> rank) || word != "param") throw FormatError("bad param header");
        Tensor t;
        t.shape.resize(rank);
        for (auto& d : t.shape)
            if (!(is >> d)) throw FormatError("bad shape for " + name);
        t.values.resize(Tensor::count(t.shape));
        for (auto& v : t.values) {
            if (!(is >> word)) throw FormatError("truncated values for " + name);
            v = parse_hex(word);
        }
        ck.order.push_back(name);
        ck.tensors.emplace(name, std::move(t));
    }
    return ck;
}

// Loads values into an existing set; every parameter must be present with
// a matching shape.
inline void apply_checkpoint(const Checkpoint& ck, const ParamSet& params) {
    for (auto* p : params) {
        auto it = ck.tensors.find(p->name);
        if (it == ck.tensors.end()) throw FormatError("checkpoint lacks parameter " + p->name);
        Matrix m = it->second.to_matrix();
        if (m.rows() != p->value.rows() || m.cols() != p->value.cols())
            throw FormatError("checkpoint shape mismatch for " + p->name);
        p->value = m;
    }
}

inline void save_checkpoint(const std::string& path, const ParamSet& params, std::uint64_t seed) {
    std::ofstream os(path);
    if (!os) throw FormatError("cannot write checkpoint " + path);
    write_checkpoint(os, params, seed);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw FormatError("cannot read checkpoint " + path);
    return read_checkpoint(is);
}

} // namespace cmarl::nn
