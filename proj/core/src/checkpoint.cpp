#include "lumen/nn/checkpoint.hpp"

#include <bit>
#include <fstream>

namespace lumen::nn {

namespace {

constexpr char kMagic[4] = {'L', 'P', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "LPCK IO assumes a little-endian host");

template <typename U>
void put(std::ofstream &out, U v) {
    out.write(reinterpret_cast<const char *>(&v), sizeof v);
}

template <typename U>
U get(std::ifstream &in, std::size_t &offset, const char *what) {
    U v{};
    in.read(reinterpret_cast<char *>(&v), sizeof v);
    if (static_cast<std::size_t>(in.gcount()) != sizeof v)
        throw FormatError(std::string("LPCK: truncated while reading ") + what, offset);
    offset += sizeof v;
    return v;
}

void write_tensor(std::ofstream &out, const RawTensor &t) {
    if (t.name.size() > 0xffff)
        throw std::invalid_argument("LPCK: tensor name too long: " + t.name);
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dtype));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
    for (int d : t.shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char *>(t.payload.data()),
              static_cast<std::streamsize>(t.payload.size()));
}

RawTensor read_tensor(std::ifstream &in, std::size_t &offset) {
    RawTensor t;
    auto name_len = get<std::uint16_t>(in, offset, "name length");
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    if (static_cast<std::size_t>(in.gcount()) != name_len)
        throw FormatError("LPCK: truncated tensor name", offset);
    offset += name_len;
    t.dtype = get<std::uint8_t>(in, offset, "dtype");
    if (t.dtype != 0 && t.dtype != 1)
        throw FormatError("LPCK: unknown dtype " + std::to_string(t.dtype) + " for '" +
                              t.name + "'",
                          offset - 1);
    auto rank = get<std::uint8_t>(in, offset, "rank");
    if (rank > 4)
        throw FormatError("LPCK: rank " + std::to_string(rank) + " exceeds 4", offset - 1);
    t.shape.resize(rank);
    for (auto &d : t.shape) {
        auto v = get<std::uint32_t>(in, offset, "dimension");
        if (v == 0 || v > 0x7fffffffu)
            throw FormatError("LPCK: bad dimension in '" + t.name + "'", offset - 4);
        d = static_cast<int>(v);
    }
    std::size_t bytes = t.count() * (t.dtype == 0 ? 4 : 8);
    t.payload.resize(bytes);
    in.read(reinterpret_cast<char *>(t.payload.data()), static_cast<std::streamsize>(bytes));
    if (static_cast<std::size_t>(in.gcount()) != bytes)
        throw FormatError("LPCK: truncated payload of '" + t.name + "'", offset);
    offset += bytes;
    return t;
}

}  // namespace

void write_checkpoint(const Checkpoint &ck, const std::string &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_checkpoint: cannot open " + path);
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.tensors.size()));
    bool opt = ck.has_optimizer || !ck.optimizer.empty();
    put<std::uint8_t>(out, opt ? 1 : 0);
    for (const auto &t : ck.tensors) write_tensor(out, t);
    if (opt) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(ck.optimizer.size()));
        for (const auto &t : ck.optimizer) write_tensor(out, t);
    }
    if (!out) throw std::runtime_error("write_checkpoint: write failed for " + path);
}

Checkpoint read_checkpoint(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("read_checkpoint: cannot open " + path, 0);
    std::size_t offset = 0;
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("LPCK: bad magic", 0);
    offset = 4;
    auto version = get<std::uint32_t>(in, offset, "version");
    if (version != kVersion)
        throw FormatError("LPCK: unsupported version " + std::to_string(version), 4);
    auto count = get<std::uint32_t>(in, offset, "tensor count");
    auto flags = get<std::uint8_t>(in, offset, "flags");

    Checkpoint ck;
    ck.has_optimizer = (flags & 1) != 0;
    ck.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) ck.tensors.push_back(read_tensor(in, offset));
    if (ck.has_optimizer) {
        auto opt_count = get<std::uint32_t>(in, offset, "optimizer count");
        ck.optimizer.reserve(opt_count);
        for (std::uint32_t i = 0; i < opt_count; ++i)
            ck.optimizer.push_back(read_tensor(in, offset));
    }
    return ck;
}

RawTensor pack_doubles(const std::string &name, const std::vector<double> &v) {
    RawTensor r;
    r.name = name;
    r.dtype = 1;
    r.shape = {static_cast<int>(v.size())};
    r.payload.resize(v.size() * 8);
    std::memcpy(r.payload.data(), v.data(), r.payload.size());
    return r;
}

std::vector<double> unpack_doubles(const RawTensor &r) {
    if (r.dtype != 1) throw ConfigError("checkpoint tensor '" + r.name + "' is not f64");
    std::vector<double> v(r.count());
    std::memcpy(v.data(), r.payload.data(), r.payload.size());
    return v;
}

}  // namespace lumen::nn
