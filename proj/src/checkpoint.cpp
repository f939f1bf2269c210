#include "nafreach/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "nafreach/errors.hpp"

namespace nafreach {

namespace {

constexpr char kMagic[8] = {'N', 'A', 'F', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u8(std::string& b, std::uint8_t v) { b.push_back(static_cast<char>(v)); }

void put_u32(std::string& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& b, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& b, double v) { put_u64(b, std::bit_cast<std::uint64_t>(v)); }

struct Cursor {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw CheckpointError("truncated checkpoint");
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

void put_net(std::string& b, const MlpParams& net) {
    put_u8(b, net.hidden_activation == Activation::relu ? 0 : 1);
    put_u8(b, net.head == OutputHead::linear ? 0 : 1);
    put_f64(b, net.logistic_slope);
    put_u32(b, static_cast<std::uint32_t>(net.layers.size()));
    for (const Layer& l : net.layers) {
        put_u32(b, static_cast<std::uint32_t>(l.in));
        put_u32(b, static_cast<std::uint32_t>(l.out));
    }
    std::vector<double> flat(param_count(net));
    flatten_params(net, flat);
    put_u64(b, flat.size());
    for (double v : flat) put_f64(b, v);
}

MlpParams get_net(Cursor& c) {
    MlpParams net;
    net.hidden_activation = c.u8() == 0 ? Activation::relu : Activation::tanh;
    net.head = c.u8() == 0 ? OutputHead::linear : OutputHead::reduced_logistic;
    net.logistic_slope = c.f64();
    const std::uint32_t n_layers = c.u32();
    if (n_layers == 0 || n_layers > 64) throw CheckpointError("shape table mismatch");
    net.layers.resize(n_layers);
    for (Layer& l : net.layers) {
        l.in = static_cast<int>(c.u32());
        l.out = static_cast<int>(c.u32());
        if (l.in <= 0 || l.out <= 0 || l.in > 65536 || l.out > 65536)
            throw CheckpointError("shape table mismatch");
        l.w.assign(static_cast<std::size_t>(l.in) * l.out, 0.0);
        l.b.assign(l.out, 0.0);
    }
    const std::uint64_t n = c.u64();
    if (n != param_count(net)) throw CheckpointError("shape table mismatch");
    std::vector<double> flat(n);
    for (double& v : flat) v = c.f64();
    unflatten_params(net, flat);
    return net;
}

void put_opt(std::string& b, const OptimizerState& o) {
    put_u8(b, o.kind == OptimizerKind::adam ? 0 : 1);
    put_f64(b, o.learning_rate);
    put_f64(b, o.beta1);
    put_f64(b, o.beta2);
    put_f64(b, o.eps);
    put_u64(b, o.step);
    put_u64(b, o.m1.size());
    for (double v : o.m1) put_f64(b, v);
    put_u64(b, o.m2.size());
    for (double v : o.m2) put_f64(b, v);
}

OptimizerState get_opt(Cursor& c) {
    OptimizerState o;
    o.kind = c.u8() == 0 ? OptimizerKind::adam : OptimizerKind::sgd;
    o.learning_rate = c.f64();
    o.beta1 = c.f64();
    o.beta2 = c.f64();
    o.eps = c.f64();
    o.step = c.u64();
    o.m1.resize(c.u64());
    for (double& v : o.m1) v = c.f64();
    o.m2.resize(c.u64());
    for (double& v : o.m2) v = c.f64();
    return o;
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t fnv1a_f64(std::uint64_t h, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char le[8];
    for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    return fnv1a(h, le, 8);
}

} // namespace

std::uint64_t geometry_hash(const EnvGeometry& geom) {
    std::uint64_t h = 14695981039346656037ULL;
    const unsigned char kind = geom.kind == GeomKind::circle2d ? 0 : 1;
    h = fnv1a(h, &kind, 1);
    const unsigned char dim = static_cast<unsigned char>(geom.dim);
    h = fnv1a(h, &dim, 1);
    h = fnv1a_f64(h, geom.mass);
    for (const MuscleSpec& m : geom.muscles) {
        h = fnv1a_f64(h, m.anchor.x);
        h = fnv1a_f64(h, m.anchor.y);
        h = fnv1a_f64(h, m.anchor.z);
        h = fnv1a_f64(h, m.f_max);
        h = fnv1a_f64(h, m.l_opt);
        h = fnv1a_f64(h, m.f_pass_max);
        h = fnv1a_f64(h, m.flex);
        h = fnv1a_f64(h, m.damping);
    }
    return h;
}

void save_checkpoint(const std::string& path, const CheckpointData& data) {
    std::string b;
    b.append(kMagic, sizeof(kMagic));
    put_u32(b, kVersion);
    put_u32(b, static_cast<std::uint32_t>(data.env_kind.size()));
    b.append(data.env_kind);
    put_u64(b, data.geometry_hash);
    put_u32(b, static_cast<std::uint32_t>(data.params.action_dim));
    put_f64(b, data.params.gamma);
    put_u64(b, data.train_steps);
    put_net(b, data.params.theta_mu);
    put_net(b, data.params.theta_V);
    put_net(b, data.params.theta_V_target);
    put_net(b, data.params.theta_L);
    put_opt(b, data.opt.mu);
    put_opt(b, data.opt.V);
    put_opt(b, data.opt.L);

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("cannot write checkpoint: " + path);
        out.write(b.data(), static_cast<std::streamsize>(b.size()));
        if (!out) throw CheckpointError("cannot write checkpoint: " + path);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw CheckpointError("cannot write checkpoint: " + path);
}

CheckpointData load_checkpoint(const std::string& path,
                               std::optional<std::uint64_t> expect_geometry) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0)
        throw CheckpointError("not a checkpoint: " + path);

    Cursor c{buf, sizeof(kMagic)};
    const std::uint32_t version = c.u32();
    if (version != kVersion)
        throw CheckpointError("unsupported version " + std::to_string(version));

    CheckpointData d;
    d.env_kind = c.str();
    d.geometry_hash = c.u64();
    d.params.action_dim = static_cast<int>(c.u32());
    d.params.gamma = c.f64();
    d.train_steps = c.u64();
    d.params.theta_mu = get_net(c);
    d.params.theta_V = get_net(c);
    d.params.theta_V_target = get_net(c);
    d.params.theta_L = get_net(c);
    d.opt.mu = get_opt(c);
    d.opt.V = get_opt(c);
    d.opt.L = get_opt(c);
    if (c.pos != buf.size()) throw CheckpointError("trailing bytes after checkpoint payload");
    d.params.validate();

    if (expect_geometry && *expect_geometry != d.geometry_hash)
        throw CheckpointError("checkpoint geometry does not match the environment");
    return d;
}

} // namespace nafreach
