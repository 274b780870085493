#include "gradforge/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace gradforge {

namespace {

constexpr char kMagic[4] = {'G', 'F', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_i32(std::ostream& os, std::int32_t v) { put_u32(os, static_cast<std::uint32_t>(v)); }

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

struct Reader {
    std::ifstream in;
    std::string path;

    void read(void* dst, std::size_t n) {
        in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (!in) throw IoError("checkpoint " + path + ": truncated or unreadable");
    }
    std::uint32_t u32() {
        unsigned char b[4];
        read(b, 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        unsigned char b[8];
        read(b, 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        std::uint32_t n = u32();
        if (n > (1u << 20)) throw IoError("checkpoint " + path + ": corrupt string length");
        std::string s(n, '\0');
        if (n > 0) read(s.data(), n);
        return s;
    }
};

void put_str(std::ostream& os, const std::string& s) {
    put_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void put_tensor(std::ostream& os, const Tensor& t) {
    put_u32(os, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put_i32(os, d);
    for (std::int64_t i = 0; i < t.size(); ++i) put_f64(os, t.at(i));
}

Tensor read_tensor(Reader& r) {
    const std::uint32_t ndims = r.u32();
    if (ndims > 8) throw IoError("checkpoint " + r.path + ": corrupt tensor rank");
    Shape shape;
    for (std::uint32_t i = 0; i < ndims; ++i) shape.push_back(r.i32());
    Tensor t = Tensor::zeros(shape);
    for (std::int64_t i = 0; i < t.size(); ++i) t.at(i) = r.f64();
    return t;
}

}  // namespace

void save_checkpoint(const std::string& path, const Network& net) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os.write(kMagic, 4);
    put_u32(os, kVersion);

    const ModelConfig& cfg = net.config();
    put_i32(os, cfg.input_hw);
    put_i32(os, cfg.input_channels);
    put_i32(os, cfg.num_classes);
    put_f64(os, cfg.width_scale);
    put_u64(os, cfg.seed);
    put_f64(os, cfg.dropout_rate);

    put_u32(os, static_cast<std::uint32_t>(net.layers().size()));
    for (const LayerSpec& l : net.layers()) {
        put_u32(os, static_cast<std::uint32_t>(l.kind));
        put_i32(os, l.out_channels);
        put_i32(os, l.stride);
        put_f64(os, l.rate);
    }
    put_u32(os, static_cast<std::uint32_t>(net.params().size()));
    for (const ConvParam& p : net.params()) {
        put_str(os, p.name);
        put_tensor(os, p.w);
        put_tensor(os, p.b);
    }
    if (!os) throw IoError("write failed for " + path);
}

Network load_checkpoint(const std::string& path) {
    Reader r;
    r.path = path;
    r.in.open(path, std::ios::binary);
    if (!r.in) throw IoError("cannot open checkpoint " + path);
    char magic[4];
    r.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw IoError(path + " is not a checkpoint file");
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw IoError("checkpoint " + path + ": unsupported version " + std::to_string(version));
    }

    ModelConfig cfg;
    cfg.input_hw = r.i32();
    cfg.input_channels = r.i32();
    cfg.num_classes = r.i32();
    cfg.width_scale = r.f64();
    cfg.seed = r.u64();
    cfg.dropout_rate = r.f64();

    const std::uint32_t n_layers = r.u32();
    if (n_layers > 1024) throw IoError("checkpoint " + path + ": corrupt layer count");
    std::vector<LayerSpec> layers;
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        LayerSpec l;
        l.kind = static_cast<LayerKind>(r.u32());
        l.out_channels = r.i32();
        l.stride = r.i32();
        l.rate = r.f64();
        layers.push_back(l);
    }
    const std::uint32_t n_params = r.u32();
    if (n_params > 1024) throw IoError("checkpoint " + path + ": corrupt param count");
    std::vector<ConvParam> params;
    for (std::uint32_t i = 0; i < n_params; ++i) {
        ConvParam p;
        p.name = r.str();
        p.w = read_tensor(r);
        p.b = read_tensor(r);
        params.push_back(std::move(p));
    }
    return Network(std::move(layers), cfg, std::move(params));
}

}  // namespace gradforge
